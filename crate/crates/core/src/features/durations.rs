use std::collections::BTreeMap;

use crate::ingest::Session;

/// Dwell time per item, in seconds.
///
/// A click lasts until the next click. The last click has no successor and
/// gets the median of the session's other click durations (0 for a lone
/// click). An item's duration is the sum over the clicks that show it.
pub fn item_durations(session: &Session) -> BTreeMap<String, f64> {
    let clicks: Vec<_> = session.clicks().collect();
    let mut out = BTreeMap::new();
    if clicks.is_empty() {
        return out;
    }
    let mut durations: Vec<f64> = clicks
        .windows(2)
        .map(|w| (w[1].timestamp - w[0].timestamp) as f64 / 1000.0)
        .collect();
    durations.push(median(&durations).unwrap_or(0.0));
    for (click, d) in clicks.iter().zip(durations) {
        *out.entry(click.item_id.clone()).or_insert(0.0) += d;
    }
    out
}

pub(crate) fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { (v[mid - 1] + v[mid]) / 2.0 })
}
