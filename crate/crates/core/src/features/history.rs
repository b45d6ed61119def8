//! Per-user history features. Every value for session `k` looks only at the
//! user's sessions `0..k` (start-time order), never at the session itself.

use std::collections::{BTreeSet, HashMap};

use crate::ingest::{EventType, Session};

use super::durations::median;

/// Click-to-buy ratio per session.
///
/// For each distinct item clicked in session `k` the ratio is the user's
/// earlier buys of the item over earlier clicks on it (0 when never clicked
/// before, capped at 1); the session value is the mean over those items.
pub fn click_buy_ratio(user_sessions: &[&Session]) -> Vec<f64> {
    let mut clicks: HashMap<&str, u64> = HashMap::new();
    let mut buys: HashMap<&str, u64> = HashMap::new();
    let mut out = Vec::with_capacity(user_sessions.len());
    for s in user_sessions {
        let items: BTreeSet<&str> = s.clicks().map(|e| e.item_id.as_str()).collect();
        let ratio = if items.is_empty() {
            0.0
        } else {
            let sum: f64 = items
                .iter()
                .map(|item| match clicks.get(item) {
                    Some(&c) if c > 0 => (buys.get(item).copied().unwrap_or(0) as f64 / c as f64).min(1.0),
                    _ => 0.0,
                })
                .sum();
            sum / items.len() as f64
        };
        out.push(ratio);
        for e in &s.events {
            match e.event_type {
                EventType::Pageview => *clicks.entry(e.item_id.as_str()).or_default() += 1,
                EventType::Buy => *buys.entry(e.item_id.as_str()).or_default() += 1,
                _ => {}
            }
        }
    }
    out
}

/// Median number of sessions preceding each earlier purchase.
///
/// Each earlier buy session contributes the count of sessions since the
/// previous buy (or since the user's first session). Users with no earlier
/// buys get 0.
pub fn sessions_before_buy(user_sessions: &[&Session]) -> Vec<f64> {
    let mut gaps: Vec<f64> = Vec::new();
    let mut since_last = 0usize;
    let mut out = Vec::with_capacity(user_sessions.len());
    for s in user_sessions {
        out.push(median(&gaps).unwrap_or(0.0));
        if s.is_buy() {
            gaps.push(since_last as f64);
            since_last = 0;
        } else {
            since_last += 1;
        }
    }
    out
}
