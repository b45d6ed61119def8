//! Category pageview counts per session row.
//!
//! A session's row counts the user's pageviews up to the session's reference
//! time (its last non-buy event), one column per category and time bucket.
//! `Weekly` keeps one bucket per category; `Semiweekly` splits each ISO week
//! into Monday–Wednesday and Thursday–Sunday.

use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::{DateTime, Datelike, FixedOffset};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{EventType, SessionStore};

/// Column-name prefix shared by every aggregation column.
pub const AGG_PREFIX: &str = "pv_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Weekly,
    Semiweekly,
}

impl Aggregation {
    pub fn buckets(self) -> usize {
        match self {
            Aggregation::Weekly => 1,
            Aggregation::Semiweekly => 2,
        }
    }

    fn bucket_tags(self) -> &'static [&'static str] {
        match self {
            Aggregation::Weekly => &["wk"],
            Aggregation::Semiweekly => &["sw1", "sw2"],
        }
    }
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weekly" => Ok(Aggregation::Weekly),
            "semiweekly" => Ok(Aggregation::Semiweekly),
            other => Err(Error::invalid(format!("unknown aggregation scheme {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    /// Session ids in store order.
    pub row_ids: Vec<String>,
    pub names: Vec<String>,
    pub values: Array2<f64>,
}

/// The `n` categories with the most pageviews, ties broken by id.
pub fn top_categories(store: &SessionStore, n: usize) -> Result<Vec<String>> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in store.sessions() {
        for e in s.clicks() {
            if let Some(c) = e.category_id.as_deref() {
                *counts.entry(c).or_default() += 1;
            }
        }
    }
    if counts.len() < n {
        return Err(Error::invalid(format!(
            "requested {n} categories but the store has only {} with pageviews",
            counts.len()
        )));
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Ok(ranked.into_iter().take(n).map(|(c, _)| c.to_string()).collect())
}

fn time_bucket(scheme: Aggregation, ts_ms: u64, offset: FixedOffset) -> usize {
    match scheme {
        Aggregation::Weekly => 0,
        Aggregation::Semiweekly => {
            let dt = DateTime::from_timestamp_millis(ts_ms as i64)
                .expect("timestamp within chrono range")
                .with_timezone(&offset);
            if dt.weekday().number_from_monday() <= 3 {
                0
            } else {
                1
            }
        }
    }
}

pub fn aggregate_pageviews(
    store: &SessionStore,
    categories: &[String],
    scheme: Aggregation,
    utc_offset_secs: i32,
) -> Result<Fragment> {
    if categories.is_empty() {
        return Err(Error::invalid("category list is empty"));
    }
    let offset = FixedOffset::east_opt(utc_offset_secs)
        .ok_or_else(|| Error::invalid(format!("utc offset {utc_offset_secs}s out of range")))?;
    let known: HashSet<&str> =
        store.sessions().flat_map(|s| s.events.iter()).filter_map(|e| e.category_id.as_deref()).collect();
    let mut column_of: HashMap<&str, usize> = HashMap::with_capacity(categories.len());
    for (i, c) in categories.iter().enumerate() {
        if !known.contains(c.as_str()) {
            return Err(Error::UnknownCategory(c.clone()));
        }
        if column_of.insert(c.as_str(), i).is_some() {
            return Err(Error::invalid(format!("category {c:?} listed twice")));
        }
    }

    let nb = scheme.buckets();
    let names: Vec<String> = scheme
        .bucket_tags()
        .iter()
        .flat_map(|tag| categories.iter().map(move |c| format!("{AGG_PREFIX}{tag}:{c}")))
        .collect();
    let mut values = Array2::<f64>::zeros((store.len(), categories.len() * nb));
    let mut row_of: HashMap<&str, usize> = HashMap::with_capacity(store.len());
    let row_ids: Vec<String> = store.sessions().map(|s| s.session_id.clone()).collect();
    for (i, id) in row_ids.iter().enumerate() {
        row_of.insert(id.as_str(), i);
    }

    for user in store.users() {
        let sessions = store.user_sessions(user);
        // (timestamp, column) for every included pageview of the user
        let mut views: Vec<(u64, usize)> = sessions
            .iter()
            .flat_map(|s| s.clicks())
            .filter_map(|e| {
                debug_assert_eq!(e.event_type, EventType::Pageview);
                let cat = column_of.get(e.category_id.as_deref()?)?;
                Some((e.timestamp, time_bucket(scheme, e.timestamp, offset) * categories.len() + cat))
            })
            .collect();
        views.sort_unstable();
        for s in &sessions {
            let Some(reference) = s.last_feature_timestamp() else { continue };
            let row = row_of[s.session_id.as_str()];
            for &(_, col) in views.iter().take_while(|(t, _)| *t <= reference) {
                values[[row, col]] += 1.0;
            }
        }
    }
    Ok(Fragment { row_ids, names, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{sessionize, RawEvent};

    const DAY: u64 = 86_400_000;
    // 2024-01-01 was a Monday.
    const MONDAY: u64 = 1_704_067_200_000;

    fn pv(sid: &str, ts: u64, cat: &str) -> RawEvent {
        RawEvent {
            user_id: "u".into(),
            session_id: sid.into(),
            timestamp: ts,
            event_type: EventType::Pageview,
            item_id: format!("item-{cat}"),
            category_id: Some(cat.into()),
            price: None,
            description: None,
        }
    }

    /// Weekday from days since the epoch; 1970-01-01 was a Thursday.
    fn oracle_monday_based(ts: u64) -> u64 {
        (ts / DAY + 3) % 7
    }

    #[test]
    fn weekly_counts() {
        let events = vec![pv("s", MONDAY, "c"), pv("s", MONDAY + DAY, "c"), pv("s", MONDAY + 4 * DAY, "c")];
        let store = sessionize(&events);
        let f = aggregate_pageviews(&store, &["c".into()], Aggregation::Weekly, 0).unwrap();
        assert_eq!(f.values.shape(), &[1, 1]);
        assert_eq!(f.values[[0, 0]], 3.0);
        assert_eq!(f.names, vec!["pv_wk:c"]);
    }

    #[test]
    fn semiweekly_matches_calendar_oracle() {
        let times = [MONDAY, MONDAY + DAY + 5_000, MONDAY + 4 * DAY];
        let events: Vec<RawEvent> = times.iter().map(|&t| pv("s", t, "c")).collect();
        let store = sessionize(&events);
        let f = aggregate_pageviews(&store, &["c".into()], Aggregation::Semiweekly, 0).unwrap();
        let mut expect = [0.0; 2];
        for t in times {
            expect[usize::from(oracle_monday_based(t) >= 3)] += 1.0;
        }
        assert_eq!(expect, [2.0, 1.0]);
        assert_eq!(f.values.row(0).to_vec(), expect.to_vec());
    }

    #[test]
    fn semiweekly_oracle_over_many_days() {
        let times: Vec<u64> = (0..40).map(|k| 1_000 + k * (DAY / 3 + 7_777)).collect();
        let events: Vec<RawEvent> = times.iter().map(|&t| pv("s", t, "c")).collect();
        let store = sessionize(&events);
        let f = aggregate_pageviews(&store, &["c".into()], Aggregation::Semiweekly, 0).unwrap();
        let late = times.iter().filter(|&&t| oracle_monday_based(t) >= 3).count() as f64;
        assert_eq!(f.values[[0, 1]], late);
        assert_eq!(f.values[[0, 0]], times.len() as f64 - late);
    }

    #[test]
    fn zero_events_give_zero_rows() {
        let mut other_user = pv("b", MONDAY + 1, "x");
        other_user.user_id = "v".into();
        let store = sessionize(&[pv("a", MONDAY, "c"), other_user]);
        let f = aggregate_pageviews(&store, &["c".into()], Aggregation::Semiweekly, 0).unwrap();
        assert_eq!(f.row_ids, vec!["a", "b"]);
        assert_eq!(f.values.row(1).to_vec(), vec![0.0, 0.0]);
        let empty = aggregate_pageviews(&SessionStore::default(), &["c".into()], Aggregation::Weekly, 0);
        assert!(matches!(empty, Err(Error::UnknownCategory(_))));
    }

    #[test]
    fn unknown_category_errors() {
        let store = sessionize(&[pv("s", MONDAY, "c")]);
        let r = aggregate_pageviews(&store, &["nope".into()], Aggregation::Weekly, 0);
        assert!(matches!(r, Err(Error::UnknownCategory(c)) if c == "nope"));
        assert!(aggregate_pageviews(&store, &[], Aggregation::Weekly, 0).is_err());
    }

    #[test]
    fn history_counts_up_to_reference_and_conserves() {
        let events = vec![
            pv("a", MONDAY, "c"),
            pv("a", MONDAY + 10, "d"),
            pv("b", MONDAY + 2 * DAY, "c"),
            pv("b", MONDAY + 2 * DAY + 1, "x"),
        ];
        let store = sessionize(&events);
        let cats = vec!["c".to_string(), "d".to_string()];
        let f = aggregate_pageviews(&store, &cats, Aggregation::Semiweekly, 0).unwrap();
        // session a sees its own two views; b sees a's two plus its own c view
        let sums: Vec<f64> = f.values.rows().into_iter().map(|r| r.sum()).collect();
        assert_eq!(sums, vec![2.0, 3.0]);
        assert_eq!(f.row_ids, vec!["a", "b"]);
    }

    #[test]
    fn top_categories_ranked() {
        let events = vec![pv("s", 1, "b"), pv("s", 2, "a"), pv("s", 3, "b"), pv("s", 4, "c")];
        let store = sessionize(&events);
        assert_eq!(top_categories(&store, 2).unwrap(), vec!["b", "a"]);
        assert!(top_categories(&store, 4).is_err());
    }
}
