//! Seeded clickstream corpora with a planted buy-intent signal.
//!
//! Each user has two latent interests `u1`, `u2` and each session a latent
//! dwell level `d`, all standard normal. Interests raise the number of
//! pageviews in two small groups of signal categories, dwell stretches the
//! gaps between clicks. A session's intent is
//!
//! ```text
//! p = sigmoid(β₀ + SCALE · signal · g)
//! g = (u1 + u2 + d) / √3                           linear
//! g = (LINEAR_WEIGHT · (u1 + u2 + d) / √3 + u1·u2) / √(LINEAR_WEIGHT² + 1)   nonlinear
//! ```
//!
//! with `β₀` solved so that the mean intent equals `buy_rate`. Buy sessions
//! end with a separate visit 25 to 60 hours after the last browsing click,
//! holding a few pageviews of the bought item and the buy itself. That visit
//! falls entirely inside the 24-hour exclusion window, so what survives
//! ingest is the browsing alone, which carries signal only through the
//! latents.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng as _;
use rand_distr::{Distribution, Exp, LogNormal, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::auc;
use crate::features::{EmbeddingTable, EMBEDDING_DIM};
use crate::ingest::{EventType, RawEvent, MS_PER_HOUR};
use crate::math::sigmoid;
use crate::rng;

/// Monday 2015-01-05 00:00 UTC.
pub const EPOCH_MS: u64 = 1_420_416_000_000;
const DAY_MS: u64 = 24 * MS_PER_HOUR;
const SCALE: f64 = 2.0;
const LINEAR_WEIGHT: f64 = 2.0;
/// Categories per signal group.
const GROUP: usize = 3;
/// Pageview log-rate gain per unit of interest.
const INTEREST_GAIN: f64 = 0.8;
/// Mean pageviews per signal group at zero interest.
const SIGNAL_RATE: f64 = 8.0;
/// Click-gap log-scale gain per unit of dwell.
const DWELL_GAIN: f64 = 0.8;
/// Least gap between the Bayes AUC and the best linear model on the latents
/// in the nonlinear regime at the default signal strength.
pub const NONLINEAR_MARGIN: f64 = 0.01;
const BASKET_PROB: f64 = 0.2;
const AD_PROB: f64 = 0.3;

const ADJECTIVES: &[&str] = &["classic", "compact", "durable", "elegant", "fresh", "handy", "light", "modern", "robust", "smart"];
const NOUNS: &[&str] = &["bundle", "edition", "kit", "model", "pack", "piece", "set", "unit"];
const FILLER: &[&str] = &["the", "with", "for", "and", "a"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub n_users: usize,
    pub sessions_per_user: usize,
    pub n_categories: usize,
    pub items_per_category: usize,
    pub buy_rate: f64,
    pub signal_strength: f64,
    pub nonlinear: bool,
    /// Span of each user's activity; sessions get equal slots within it.
    pub weeks: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_users: 1250,
            sessions_per_user: 4,
            n_categories: 257,
            items_per_category: 8,
            buy_rate: 0.03,
            signal_strength: 0.8,
            nonlinear: false,
            weeks: 4,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn slot_ms(&self) -> u64 {
        self.weeks as u64 * 7 * DAY_MS / self.sessions_per_user.max(1) as u64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.sessions_per_user == 0 || self.items_per_category == 0 {
            return Err(Error::invalid("users, sessions per user and items per category must be positive"));
        }
        if self.n_categories < 2 * GROUP + 1 {
            return Err(Error::invalid(format!("need at least {} categories", 2 * GROUP + 1)));
        }
        if !(self.buy_rate > 0.0 && self.buy_rate < 1.0) {
            return Err(Error::invalid(format!("buy rate {} outside (0, 1)", self.buy_rate)));
        }
        if !(0.0..=1.0).contains(&self.signal_strength) {
            return Err(Error::invalid(format!("signal strength {} outside [0, 1]", self.signal_strength)));
        }
        // browsing spans up to 3 days and the buy visit up to 60 h after it
        if self.slot_ms() < 6 * DAY_MS {
            return Err(Error::invalid(format!(
                "{} sessions do not fit in {} weeks; each needs 6 days",
                self.sessions_per_user, self.weeks
            )));
        }
        Ok(())
    }

    pub fn n_sessions(&self) -> usize {
        self.n_users * self.sessions_per_user
    }

    /// Category ids of the two signal groups.
    pub fn signal_categories(&self) -> [Vec<String>; 2] {
        // mid-popularity ranks, so the groups are not the head categories
        let a = (5..5 + GROUP).map(category_id).collect();
        let b = (5 + GROUP..5 + 2 * GROUP).map(category_id).collect();
        [a, b]
    }
}

pub fn category_id(c: usize) -> String {
    format!("c{c:04}")
}

fn category_word(c: usize) -> String {
    format!("cat{c:04}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub session_id: String,
    pub user_id: String,
    pub intent: f64,
    pub label: bool,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    /// Sorted by timestamp.
    pub events: Vec<RawEvent>,
    /// Sorted by session id.
    pub truth: Vec<TruthRecord>,
    pub embeddings: EmbeddingTable,
    pub intercept: f64,
}

struct Item {
    id: String,
    price: f64,
    description: String,
}

struct Catalog {
    items: Vec<Vec<Item>>,
    /// Cumulative background popularity, `1/√(rank+1)`.
    cumulative: Vec<f64>,
}

impl Catalog {
    fn new(cfg: &SynthConfig, rng: &mut rng::Rng) -> Catalog {
        let price = LogNormal::new(3.0, 0.6).expect("valid parameters");
        let items = (0..cfg.n_categories)
            .map(|c| {
                (0..cfg.items_per_category)
                    .map(|j| {
                        let adj = ADJECTIVES[rng.random_range(0..ADJECTIVES.len())];
                        let noun = NOUNS[rng.random_range(0..NOUNS.len())];
                        let filler = FILLER[rng.random_range(0..FILLER.len())];
                        Item {
                            id: format!("i{c:04}-{j:02}"),
                            price: (price.sample(rng) * 100.0_f64).round() / 100.0,
                            description: format!("{adj} {} {noun} {filler} {adj}", category_word(c)),
                        }
                    })
                    .collect()
            })
            .collect();
        let mut acc = 0.0;
        let cumulative = (0..cfg.n_categories)
            .map(|c| {
                acc += 1.0 / ((c + 1) as f64).sqrt();
                acc
            })
            .collect();
        Catalog { items, cumulative }
    }

    fn background_category(&self, rng: &mut rng::Rng) -> usize {
        let x = rng.random::<f64>() * self.cumulative.last().expect("categories exist");
        self.cumulative.partition_point(|&c| c <= x).min(self.cumulative.len() - 1)
    }

    fn item(&self, c: usize, rng: &mut rng::Rng) -> &Item {
        let pool = &self.items[c];
        &pool[rng.random_range(0..pool.len())]
    }
}

fn embeddings(cfg: &SynthConfig, rng: &mut rng::Rng) -> EmbeddingTable {
    let normal = Normal::new(0.0, 1.0 / (EMBEDDING_DIM as f64).sqrt()).expect("valid parameters");
    let mut table = EmbeddingTable::new(EMBEDDING_DIM);
    let words = (0..cfg.n_categories).map(category_word).chain(ADJECTIVES.iter().chain(NOUNS).map(|w| w.to_string()));
    for w in words {
        let v = (0..EMBEDDING_DIM).map(|_| normal.sample(rng)).collect();
        table.insert(&w, v).expect("dimension matches");
    }
    table
}

struct Latent {
    user: usize,
    u1: f64,
    u2: f64,
    activity: f64,
    dwell: f64,
}

fn planted(cfg: &SynthConfig, l: &Latent) -> f64 {
    let lin = (l.u1 + l.u2 + l.dwell) / 3f64.sqrt();
    if cfg.nonlinear {
        (LINEAR_WEIGHT * lin + l.u1 * l.u2) / (LINEAR_WEIGHT * LINEAR_WEIGHT + 1.0).sqrt()
    } else {
        lin
    }
}

fn draw_latents(cfg: &SynthConfig, rng: &mut rng::Rng) -> Vec<Latent> {
    let std_normal = Normal::new(0.0, 1.0).expect("valid parameters");
    let mut latents = Vec::with_capacity(cfg.n_sessions());
    for user in 0..cfg.n_users {
        let (u1, u2) = (std_normal.sample(rng), std_normal.sample(rng));
        let activity = 0.3 * std_normal.sample(rng);
        for _ in 0..cfg.sessions_per_user {
            latents.push(Latent { user, u1, u2, activity, dwell: std_normal.sample(rng) });
        }
    }
    latents
}

/// Intercept making the mean of `sigmoid(β₀ + g)` over `scores` equal `rate`.
fn solve_intercept(scores: &[f64], rate: f64) -> f64 {
    let mean_at = |b: f64| scores.iter().map(|g| sigmoid(b + g)).sum::<f64>() / scores.len() as f64;
    let (mut lo, mut hi) = (-50.0, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_at(mid) < rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

struct Emitter {
    events: Vec<(u64, usize, RawEvent)>,
    seq: usize,
}

impl Emitter {
    fn push(&mut self, user: &str, session: &str, ts: u64, kind: EventType, item: &Item, category: usize, price: bool) {
        let ev = RawEvent {
            user_id: user.to_string(),
            session_id: session.to_string(),
            timestamp: ts,
            event_type: kind,
            item_id: item.id.clone(),
            category_id: Some(category_id(category)),
            price: price.then_some(item.price),
            description: Some(item.description.clone()),
        };
        self.events.push((ts, self.seq, ev));
        self.seq += 1;
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let mut rng = rng::seeded(cfg.seed);
    let catalog = Catalog::new(cfg, &mut rng);
    let table = embeddings(cfg, &mut rng);
    let latents = draw_latents(cfg, &mut rng);
    let scores: Vec<f64> = latents.iter().map(|l| SCALE * cfg.signal_strength * planted(cfg, l)).collect();
    let intercept = solve_intercept(&scores, cfg.buy_rate);

    let groups: Vec<Vec<usize>> = vec![(5..5 + GROUP).collect(), (5 + GROUP..5 + 2 * GROUP).collect()];
    let mut out = Emitter { events: Vec::new(), seq: 0 };
    let mut truth = Vec::with_capacity(latents.len());
    for (k, (l, g)) in latents.iter().zip(&scores).enumerate() {
        let slot = k % cfg.sessions_per_user;
        let user = format!("u{:05}", l.user);
        let session = format!("s{:05}-{slot}", l.user);
        let intent = sigmoid(intercept + g);
        let label = rng.random::<f64>() < intent;
        truth.push(TruthRecord { session_id: session.clone(), user_id: user.clone(), intent, label });

        // pageview categories: signal groups by interest, the rest by popularity
        let mut cats = Vec::new();
        for (group, u) in groups.iter().zip([l.u1, l.u2]) {
            let n = Poisson::new(SIGNAL_RATE * (INTEREST_GAIN * u).exp()).expect("positive rate").sample(&mut rng) as usize;
            cats.extend((0..n).map(|_| group[rng.random_range(0..GROUP)]));
        }
        let n_bg = 4 + Poisson::new(6.0 * l.activity.exp()).expect("positive rate").sample(&mut rng) as usize;
        cats.extend((0..n_bg).map(|_| catalog.background_category(&mut rng)));
        // interleave signal and background clicks
        for i in (1..cats.len()).rev() {
            cats.swap(i, rng.random_range(0..=i));
        }

        let start = EPOCH_MS + slot as u64 * cfg.slot_ms() + rng.random_range(0..DAY_MS / 2) + rng.random_range(8..20) * MS_PER_HOUR;
        let gap = Exp::new(1.0 / (30.0 * (DWELL_GAIN * l.dwell).exp())).expect("positive rate");
        let mut t = start;
        let mut last_click = start;
        for &c in &cats {
            let item = catalog.item(c, &mut rng);
            out.push(&user, &session, t, EventType::Pageview, item, c, false);
            last_click = t;
            if rng.random::<f64>() < BASKET_PROB {
                out.push(&user, &session, t + 1000, EventType::Basketview, item, c, true);
            }
            if rng.random::<f64>() < AD_PROB / cats.len() as f64 {
                let ad = Item { id: format!("ad{}", rng.random_range(0..50)), price: 0.0, description: String::new() };
                let ev = RawEvent {
                    user_id: user.clone(),
                    session_id: session.clone(),
                    timestamp: t + 500,
                    event_type: EventType::Adview,
                    item_id: ad.id,
                    category_id: None,
                    price: None,
                    description: None,
                };
                out.events.push((t + 500, out.seq, ev));
                out.seq += 1;
            }
            t += 2000 + (gap.sample(&mut rng) * 1000.0) as u64;
        }
        if label {
            let mut t = last_click + rng.random_range(25 * MS_PER_HOUR..60 * MS_PER_HOUR);
            let c = if rng.random::<bool>() { cats[rng.random_range(0..cats.len())] } else { catalog.background_category(&mut rng) };
            let item = catalog.item(c, &mut rng);
            for _ in 0..rng.random_range(1..=3) {
                out.push(&user, &session, t, EventType::Pageview, item, c, false);
                t += rng.random_range(20_000..60_000);
            }
            out.push(&user, &session, t, EventType::Buy, item, c, true);
        }
    }
    out.events.sort_by_key(|e| (e.0, e.1));
    truth.sort_by(|a, b| a.session_id.cmp(&b.session_id));
    Ok(SynthCorpus { events: out.events.into_iter().map(|e| e.2).collect(), truth, embeddings: table, intercept })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusPaths {
    pub events: PathBuf,
    pub truth: PathBuf,
    pub embeddings: PathBuf,
    pub config: PathBuf,
}

impl CorpusPaths {
    pub fn in_dir(dir: &Path) -> CorpusPaths {
        CorpusPaths {
            events: dir.join("events.jsonl"),
            truth: dir.join("truth.jsonl"),
            embeddings: dir.join("embeddings.tsv"),
            config: dir.join("config.json"),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<std::fs::File>> {
    Ok(BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?))
}

fn write_lines<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = create(path)?;
    for r in rows {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes events, ground truth, embeddings and the config echo into `dir`.
pub fn write_corpus(corpus: &SynthCorpus, cfg: &SynthConfig, dir: &Path) -> Result<CorpusPaths> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = CorpusPaths::in_dir(dir);
    write_lines(&paths.events, &corpus.events)?;
    write_lines(&paths.truth, &corpus.truth)?;
    let mut w = create(&paths.embeddings)?;
    corpus.embeddings.write_tsv(&mut w)?;
    w.flush().map_err(|e| Error::io(&paths.embeddings, e))?;
    let echo = serde_json::json!({ "config": cfg, "intercept": corpus.intercept });
    std::fs::write(&paths.config, serde_json::to_string_pretty(&echo)? + "\n").map_err(|e| Error::io(&paths.config, e))?;
    Ok(paths)
}

pub fn read_truth(path: &Path) -> Result<Vec<TruthRecord>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::format(path.display().to_string(), format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

/// AUC of the true intents against the realized labels.
pub fn truth_auc(truth: &[TruthRecord]) -> Result<f64> {
    let scores: Vec<f64> = truth.iter().map(|t| t.intent).collect();
    let labels: Vec<bool> = truth.iter().map(|t| t.label).collect();
    auc(&scores, &labels)
}

pub fn bayes_optimal_auc(truth_path: &Path) -> Result<f64> {
    truth_auc(&read_truth(truth_path)?)
}

/// Intent per session id.
pub fn truth_index(truth: &[TruthRecord]) -> BTreeMap<&str, &TruthRecord> {
    truth.iter().map(|t| (t.session_id.as_str(), t)).collect()
}
