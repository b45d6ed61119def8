//! Clickstream ingestion: JSON Lines events into labeled, time-ordered sessions.
//!
//! The pipeline is `parse_events` → `sessionize` → `filter_min_clicks` →
//! `exclude_prediction_window`. Ad events are dropped at sessionization and
//! buy sessions lose every non-buy event inside the prediction horizon, so
//! the remaining clicks carry no information from the purchase day itself.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MS_PER_HOUR: u64 = 3_600_000;
pub const STORE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventType {
    Pageview,
    Basketview,
    Buy,
    Adclick,
    Adview,
}

impl EventType {
    pub const ALL: [EventType; 5] = [
        EventType::Pageview,
        EventType::Basketview,
        EventType::Buy,
        EventType::Adclick,
        EventType::Adview,
    ];

    pub fn is_ad(self) -> bool {
        matches!(self, EventType::Adclick | EventType::Adview)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventType::Pageview => "pageview",
            EventType::Basketview => "basketview",
            EventType::Buy => "buy",
            EventType::Adclick => "adclick",
            EventType::Adview => "adview",
        }
    }
}

/// One logged interaction. Timestamps are UTC milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEvent {
    pub user_id: String,
    pub session_id: String,
    pub timestamp: u64,
    pub event_type: EventType,
    pub item_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl RawEvent {
    fn validate(&self) -> std::result::Result<(), String> {
        if let Some(p) = self.price {
            if !matches!(self.event_type, EventType::Buy | EventType::Basketview) {
                return Err(format!("price given for {} event", self.event_type.as_str()));
            }
            if !(p.is_finite() && p >= 0.0) {
                return Err(format!("price must be a nonnegative number, got {p}"));
            }
        }
        Ok(())
    }

    fn dedup_key(&self) -> (u64, EventType, &str) {
        (self.timestamp, self.event_type, self.item_id.as_str())
    }
}

/// A line of the input that could not be turned into an event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineError {
    /// 1-based line number.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedEvents {
    pub events: Vec<RawEvent>,
    pub errors: Vec<LineError>,
}

/// Parses JSON Lines. Blank lines are skipped; every other line either yields
/// an event or a [`LineError`]. Only a failing reader is fatal.
pub fn parse_events<R: BufRead>(input: R) -> Result<ParsedEvents> {
    let mut out = ParsedEvents::default();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match serde_json::from_str::<RawEvent>(trimmed) {
            Ok(ev) => match ev.validate() {
                Ok(()) => out.events.push(ev),
                Err(message) => out.errors.push(LineError { line: idx + 1, message }),
            },
            Err(e) => out.errors.push(LineError { line: idx + 1, message: e.to_string() }),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Buy,
    NonBuy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub user_id: String,
    /// Sorted ascending by timestamp; ties keep input order.
    pub events: Vec<RawEvent>,
    pub bought_items: BTreeSet<String>,
    pub label: Label,
}

impl Session {
    fn from_events(session_id: String, events: Vec<RawEvent>) -> Session {
        let user_id = events[0].user_id.clone();
        let bought_items: BTreeSet<String> = events
            .iter()
            .filter(|e| e.event_type == EventType::Buy)
            .map(|e| e.item_id.clone())
            .collect();
        let label = if bought_items.is_empty() { Label::NonBuy } else { Label::Buy };
        Session { session_id, user_id, events, bought_items, label }
    }

    pub fn is_buy(&self) -> bool {
        self.label == Label::Buy
    }

    pub fn first_timestamp(&self) -> u64 {
        self.events[0].timestamp
    }

    pub fn earliest_buy(&self) -> Option<u64> {
        self.events.iter().find(|e| e.event_type == EventType::Buy).map(|e| e.timestamp)
    }

    /// Pageview events, the clicks every feature is computed from.
    pub fn clicks(&self) -> impl Iterator<Item = &RawEvent> {
        self.events.iter().filter(|e| e.event_type == EventType::Pageview)
    }

    /// Timestamp of the last non-buy event, the reference point for
    /// windowed features.
    pub fn last_feature_timestamp(&self) -> Option<u64> {
        self.events.iter().rev().find(|e| e.event_type != EventType::Buy).map(|e| e.timestamp)
    }
}

/// Immutable after construction; `sessions` is ordered by session id and
/// `user_index` lists each user's sessions by start time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionStore {
    sessions: BTreeMap<String, Session>,
    user_index: BTreeMap<String, Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct StoreFile {
    version: u32,
    sessions: Vec<Session>,
}

impl SessionStore {
    pub fn from_sessions(sessions: impl IntoIterator<Item = Session>) -> SessionStore {
        let sessions: BTreeMap<String, Session> =
            sessions.into_iter().map(|s| (s.session_id.clone(), s)).collect();
        let mut user_index: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for s in sessions.values() {
            user_index.entry(s.user_id.clone()).or_default().push(s.session_id.clone());
        }
        for ids in user_index.values_mut() {
            ids.sort_by(|a, b| {
                let (sa, sb) = (&sessions[a], &sessions[b]);
                sa.first_timestamp().cmp(&sb.first_timestamp()).then_with(|| a.cmp(b))
            });
        }
        SessionStore { sessions, user_index }
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    pub fn get(&self, session_id: &str) -> Option<&Session> {
        self.sessions.get(session_id)
    }

    pub fn sessions(&self) -> impl Iterator<Item = &Session> {
        self.sessions.values()
    }

    pub fn users(&self) -> impl Iterator<Item = &str> {
        self.user_index.keys().map(String::as_str)
    }

    /// The user's sessions in start-time order.
    pub fn user_sessions(&self, user_id: &str) -> Vec<&Session> {
        self.user_index
            .get(user_id)
            .map(|ids| ids.iter().map(|id| &self.sessions[id]).collect())
            .unwrap_or_default()
    }

    pub fn n_users(&self) -> usize {
        self.user_index.len()
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        let file = StoreFile { version: STORE_VERSION, sessions: self.sessions.values().cloned().collect() };
        serde_json::to_writer(&mut w, &file)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<SessionStore> {
        let file: StoreFile = serde_json::from_reader(r)?;
        if file.version != STORE_VERSION {
            return Err(Error::SchemaVersion { expected: STORE_VERSION, found: file.version });
        }
        Ok(SessionStore::from_sessions(file.sessions))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_json(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<SessionStore> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        SessionStore::read_json(std::io::BufReader::new(f))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionizeCounts {
    pub ad_events: usize,
    pub duplicates: usize,
}

/// Groups events by session id, drops ad events and exact duplicates, and
/// sorts each session by timestamp (stable on input order).
pub fn sessionize(events: &[RawEvent]) -> SessionStore {
    sessionize_counted(events).0
}

pub fn sessionize_counted(events: &[RawEvent]) -> (SessionStore, SessionizeCounts) {
    let mut counts = SessionizeCounts::default();
    let mut groups: HashMap<&str, Vec<&RawEvent>> = HashMap::new();
    for ev in events {
        if ev.event_type.is_ad() {
            counts.ad_events += 1;
            continue;
        }
        groups.entry(ev.session_id.as_str()).or_default().push(ev);
    }
    let mut sessions = Vec::with_capacity(groups.len());
    for (sid, mut evs) in groups {
        evs.sort_by_key(|e| e.timestamp);
        let mut seen = HashSet::new();
        let mut kept = Vec::with_capacity(evs.len());
        for e in evs {
            if seen.insert(e.dedup_key()) {
                kept.push(e.clone());
            } else {
                counts.duplicates += 1;
                log::warn!(
                    "dropping duplicate {} event in session {sid} at {} for item {}",
                    e.event_type.as_str(),
                    e.timestamp,
                    e.item_id
                );
            }
        }
        sessions.push(Session::from_events(sid.to_string(), kept));
    }
    (SessionStore::from_sessions(sessions), counts)
}

/// Removes every session of users with fewer than `min_clicks` non-ad events
/// across the store.
pub fn filter_min_clicks(store: &SessionStore, min_clicks: usize) -> Result<SessionStore> {
    if min_clicks == 0 {
        return Err(Error::invalid("min_clicks must be at least 1"));
    }
    let mut totals: HashMap<&str, usize> = HashMap::new();
    for s in store.sessions() {
        *totals.entry(s.user_id.as_str()).or_default() += s.events.len();
    }
    Ok(SessionStore::from_sessions(
        store.sessions().filter(|s| totals[s.user_id.as_str()] >= min_clicks).cloned(),
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("buy session {session_id} has no feature events outside the prediction window")]
pub struct UnusableSession {
    pub session_id: String,
}

/// For a buy session with earliest buy at `t_b`, drops every non-buy event
/// with timestamp in `[t_b - horizon, ∞)`. Buy events stay as label
/// evidence. Non-buy sessions are returned unchanged.
pub fn exclude_prediction_window(
    session: &Session,
    horizon_ms: u64,
) -> std::result::Result<Session, UnusableSession> {
    let Some(t_buy) = session.earliest_buy() else {
        return Ok(session.clone());
    };
    let cutoff = t_buy.saturating_sub(horizon_ms);
    let events: Vec<RawEvent> = session
        .events
        .iter()
        .filter(|e| e.event_type == EventType::Buy || e.timestamp < cutoff)
        .cloned()
        .collect();
    if !events.iter().any(|e| e.event_type == EventType::Pageview) {
        return Err(UnusableSession { session_id: session.session_id.clone() });
    }
    Ok(Session { events, ..session.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestOptions {
    pub min_clicks: usize,
    pub horizon_ms: u64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions { min_clicks: 10, horizon_ms: 24 * MS_PER_HOUR }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub lines_parsed: usize,
    pub event_counts: BTreeMap<String, usize>,
    pub users_in_input: usize,
    pub dropped_lines: Vec<LineError>,
    pub duplicate_events: usize,
    pub sessions_before_filter: usize,
    pub users_removed_min_clicks: usize,
    pub sessions_removed_min_clicks: usize,
    pub unusable_buy_sessions: Vec<String>,
    pub sessions: usize,
    pub buy_sessions: usize,
    pub users: usize,
}

/// Full ingestion: parse, sessionize, drop light users, strip the prediction
/// window from buy sessions and discard the ones left empty.
pub fn ingest<R: BufRead>(input: R, opts: IngestOptions) -> Result<(SessionStore, IngestReport)> {
    let parsed = parse_events(input)?;
    let mut report = IngestReport {
        lines_parsed: parsed.events.len() + parsed.errors.len(),
        dropped_lines: parsed.errors,
        ..IngestReport::default()
    };
    for t in EventType::ALL {
        report.event_counts.insert(t.as_str().to_string(), 0);
    }
    let mut users = HashSet::new();
    for e in &parsed.events {
        *report.event_counts.get_mut(e.event_type.as_str()).expect("all types present") += 1;
        users.insert(e.user_id.as_str());
    }
    report.users_in_input = users.len();

    let (store, counts) = sessionize_counted(&parsed.events);
    report.duplicate_events = counts.duplicates;
    report.sessions_before_filter = store.len();
    let filtered = filter_min_clicks(&store, opts.min_clicks)?;
    report.users_removed_min_clicks = store.n_users() - filtered.n_users();
    report.sessions_removed_min_clicks = store.len() - filtered.len();

    let mut kept = Vec::with_capacity(filtered.len());
    for s in filtered.sessions() {
        match exclude_prediction_window(s, opts.horizon_ms) {
            Ok(s) => kept.push(s),
            Err(u) => report.unusable_buy_sessions.push(u.session_id),
        }
    }
    let out = SessionStore::from_sessions(kept);
    report.sessions = out.len();
    report.buy_sessions = out.sessions().filter(|s| s.is_buy()).count();
    report.users = out.n_users();
    Ok((out, report))
}
