//! Engineered session features and labeled datasets.

mod aggregate;
mod dataset;
mod durations;
mod embedding;
mod history;

use std::collections::{BTreeSet, HashMap};

use chrono::{DateTime, FixedOffset, Timelike};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use aggregate::{aggregate_pageviews, top_categories, Aggregation, Fragment, AGG_PREFIX};
pub use dataset::{assemble_dataset, balance, Dataset, DatasetMeta, DATASET_VERSION};
pub use durations::item_durations;
pub use embedding::{embed_description, tokenize, EmbeddingTable, EMBEDDING_DIM};
pub use history::{click_buy_ratio, sessions_before_buy};

use crate::error::{Error, Result};
use crate::ingest::{EventType, Session, SessionStore};

const DAY_MS: u64 = 86_400_000;

/// Names of the scalar feature columns, in column order.
pub const SCALAR_FEATURES: [&str; 11] = [
    "duration_before_purchase",
    "click_buy_ratio",
    "median_sessions_before_buy",
    "price",
    "item_duration_total",
    "hour",
    "n_clicks",
    "avg_purchase_price",
    "views_24h",
    "views_week",
    "distinct_items",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFeatures {
    pub session_id: String,
    /// Seconds from the first event to the last retained non-buy event.
    pub duration_before_purchase: f64,
    pub click_buy_ratio: f64,
    pub median_sessions_before_buy: f64,
    pub desc_vector: Vec<f64>,
    /// Mean catalog price of the items clicked in the session.
    pub price: f64,
    /// Time the user has spent on this session's items across all sessions so far.
    pub item_duration_total: f64,
    pub hour: u32,
    pub n_clicks: usize,
    /// Mean price of the user's earlier purchases.
    pub avg_purchase_price: f64,
    pub views_24h: usize,
    pub views_week: usize,
    pub distinct_items: usize,
}

impl SessionFeatures {
    pub fn scalars(&self) -> [f64; 11] {
        [
            self.duration_before_purchase,
            self.click_buy_ratio,
            self.median_sessions_before_buy,
            self.price,
            self.item_duration_total,
            self.hour as f64,
            self.n_clicks as f64,
            self.avg_purchase_price,
            self.views_24h as f64,
            self.views_week as f64,
            self.distinct_items as f64,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FeatureConfig {
    /// Offset of the reporting timezone from UTC, used for `hour` and the
    /// semi-week split.
    pub utc_offset_secs: i32,
}

/// Median observed price per item over every basketview in the store. Buy
/// prices stay out: an item priced only by its purchase would mark the
/// buying session.
pub fn catalog_prices(store: &SessionStore) -> HashMap<String, f64> {
    let mut seen: HashMap<&str, Vec<f64>> = HashMap::new();
    for s in store.sessions() {
        for e in s.events.iter().filter(|e| e.event_type == EventType::Basketview) {
            if let Some(p) = e.price {
                seen.entry(e.item_id.as_str()).or_default().push(p);
            }
        }
    }
    seen.into_iter()
        .map(|(item, prices)| (item.to_string(), durations::median(&prices).expect("non-empty")))
        .collect()
}

fn session_description(session: &Session) -> String {
    let mut seen = BTreeSet::new();
    let mut parts = Vec::new();
    for e in session.clicks() {
        if let Some(d) = e.description.as_deref() {
            if seen.insert(e.item_id.as_str()) {
                parts.push(d);
            }
        }
    }
    parts.join(" ")
}

fn user_features(
    sessions: &[&Session],
    table: &EmbeddingTable,
    catalog: &HashMap<String, f64>,
    offset: FixedOffset,
) -> Vec<SessionFeatures> {
    let ratios = click_buy_ratio(sessions);
    let before_buy = sessions_before_buy(sessions);
    let per_session_durations: Vec<_> = sessions.iter().map(|s| item_durations(s)).collect();
    let mut view_times: Vec<u64> = sessions.iter().flat_map(|s| s.clicks().map(|e| e.timestamp)).collect();
    view_times.sort_unstable();

    let mut total_duration: HashMap<&str, f64> = HashMap::new();
    let mut purchase_prices: Vec<f64> = Vec::new();
    let mut out = Vec::with_capacity(sessions.len());
    for (k, s) in sessions.iter().enumerate() {
        for (item, d) in &per_session_durations[k] {
            *total_duration.entry(item.as_str()).or_default() += d;
        }
        let items: BTreeSet<&str> = s.clicks().map(|e| e.item_id.as_str()).collect();
        let reference = s.last_feature_timestamp().unwrap_or_else(|| s.first_timestamp());
        let first = s.first_timestamp();
        let known: Vec<f64> = items.iter().filter_map(|i| catalog.get(*i).copied()).collect();
        let views_since = |window: u64| {
            view_times.iter().filter(|&&t| t <= reference && t + window > reference).count()
        };
        let hour = DateTime::from_timestamp_millis(first as i64)
            .expect("timestamp within chrono range")
            .with_timezone(&offset)
            .hour();
        out.push(SessionFeatures {
            session_id: s.session_id.clone(),
            duration_before_purchase: reference.saturating_sub(first) as f64 / 1000.0,
            click_buy_ratio: ratios[k],
            median_sessions_before_buy: before_buy[k],
            desc_vector: embed_description(&session_description(s), table),
            price: mean(&known),
            item_duration_total: items.iter().map(|i| total_duration.get(i).copied().unwrap_or(0.0)).sum(),
            hour,
            n_clicks: s.clicks().count(),
            avg_purchase_price: mean(&purchase_prices),
            views_24h: views_since(DAY_MS),
            views_week: views_since(7 * DAY_MS),
            distinct_items: items.len(),
        });
        for e in s.events.iter().filter(|e| e.event_type == EventType::Buy) {
            if let Some(p) = e.price.or_else(|| catalog.get(&e.item_id).copied()) {
                purchase_prices.push(p);
            }
        }
    }
    out
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Features for every session, in store (session id) order.
pub fn session_features(
    store: &SessionStore,
    table: &EmbeddingTable,
    cfg: FeatureConfig,
) -> Result<Vec<SessionFeatures>> {
    let offset = FixedOffset::east_opt(cfg.utc_offset_secs)
        .ok_or_else(|| Error::invalid(format!("utc offset {}s out of range", cfg.utc_offset_secs)))?;
    let catalog = catalog_prices(store);
    let users: Vec<&str> = store.users().collect();
    let mut by_id: HashMap<String, SessionFeatures> = users
        .par_iter()
        .flat_map_iter(|u| user_features(&store.user_sessions(u), table, &catalog, offset))
        .map(|f| (f.session_id.clone(), f))
        .collect();
    Ok(store.sessions().map(|s| by_id.remove(&s.session_id).expect("every session featurized")).collect())
}

/// Scalar, description and pageview-aggregation columns for every session
/// of `store`, over its `category_count` most viewed categories.
pub fn build_dataset(
    store: &SessionStore,
    table: &EmbeddingTable,
    scheme: Aggregation,
    category_count: usize,
    cfg: FeatureConfig,
) -> Result<Dataset> {
    let features = session_features(store, table, cfg)?;
    let categories = top_categories(store, category_count)?;
    let fragment = aggregate_pageviews(store, &categories, scheme, cfg.utc_offset_secs)?;
    assemble_dataset(store, &features, &fragment, scheme, category_count)
}
