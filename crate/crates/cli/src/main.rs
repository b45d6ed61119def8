//! `clickbuy`: the purchase-prediction pipeline from the command line.
//!
//! Every subcommand writes its artifact plus `<artifact>.manifest.json`
//! recording flags, input and output digests, seed, version and run time.
//! Failures print a one-line JSON error report on stderr and exit nonzero;
//! see [`fail::code`].

mod fail;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use clickbuy_core::baseline::{ForestConfig, LogisticConfig, TreeConfig};
use clickbuy_core::eval::{cross_validate, holdout_evaluate, random_search, EvalReport, SearchSpace};
use clickbuy_core::features::{balance, build_dataset, Aggregation, Dataset, EmbeddingTable, FeatureConfig, EMBEDDING_DIM};
use clickbuy_core::ingest::{ingest, IngestOptions, MS_PER_HOUR};
use clickbuy_core::models::{ModelFile, ModelSpec};
use clickbuy_core::neural::Hyperparams;
use clickbuy_core::nmf::{reduce_dataset, NmfConfig};
use clickbuy_core::synth::{generate, write_corpus, SynthConfig};
use serde::Serialize;

use fail::{CliError, CliResult};
use manifest::{digests, manifest_path, RunManifest, TOOL_VERSION};

#[derive(Debug, Parser)]
#[command(name = "clickbuy", version, about = "Purchase-intent prediction from clickstream sessions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a JSON Lines event log into a filtered, labeled session store.
    Ingest(IngestArgs),
    /// Build a balanced feature dataset from a session store.
    Featurize(FeaturizeArgs),
    /// Replace pageview-aggregation columns by NMF weights.
    Reduce(ReduceArgs),
    /// Fit a model on a dataset.
    Train(TrainArgs),
    /// Cross-validate (or holdout-evaluate) a model's configuration on a dataset.
    Evaluate(EvaluateArgs),
    /// Random hyperparameter search for SdA or DBN networks.
    Search(SearchArgs),
    /// Generate a synthetic clickstream corpus with known buy intent.
    Synth(SynthArgs),
}

#[derive(Debug, Args, Serialize)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 10)]
    min_clicks: usize,
    #[arg(long, default_value_t = 24)]
    horizon_hours: u64,
    #[arg(long)]
    out: PathBuf,
    /// Ingest report; defaults to `<out>.report.json`.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Scheme {
    Weekly,
    Semiweekly,
}

impl From<Scheme> for Aggregation {
    fn from(s: Scheme) -> Aggregation {
        match s {
            Scheme::Weekly => Aggregation::Weekly,
            Scheme::Semiweekly => Aggregation::Semiweekly,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct FeaturizeArgs {
    #[arg(long)]
    store: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long, value_enum, default_value_t = Scheme::Weekly)]
    scheme: Scheme,
    /// Number of most viewed categories aggregated into columns.
    #[arg(long, default_value_t = 257)]
    categories: usize,
    #[arg(long)]
    balance_seed: u64,
    /// Reporting timezone offset from UTC, in seconds.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    utc_offset: i32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ReduceArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    rank: usize,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Family {
    Lr,
    Rf,
    Sda,
    Dbn,
}

#[derive(Debug, Args, Serialize)]
struct TrainArgs {
    #[arg(long, value_enum)]
    model: Family,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Random forest size.
    #[arg(long)]
    trees: Option<usize>,
    /// Features tried per split; defaults to ⌈√d⌉.
    #[arg(long)]
    mtry: Option<usize>,
    /// Logistic regression learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Training epochs (logistic regression, or networks over the `--hp` file).
    #[arg(long)]
    epochs: Option<usize>,
    /// L2 penalty (logistic regression, or networks over the `--hp` file).
    #[arg(long)]
    l2: Option<f64>,
    /// Hidden layer sizes, e.g. `300,150`; overrides the `--hp` file.
    #[arg(long, value_delimiter = ',')]
    layers: Option<Vec<usize>>,
    /// TOML file of network hyperparameters; unspecified keys keep defaults.
    #[arg(long)]
    hp: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct EvaluateArgs {
    /// Model file whose configuration is re-fitted on each fold.
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 10, conflicts_with = "holdout")]
    cv: usize,
    /// Use the 25% test split with 4-fold validation instead of k-fold CV.
    #[arg(long)]
    holdout: bool,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum NetFamily {
    Sda,
    Dbn,
}

#[derive(Debug, Args, Serialize)]
struct SearchArgs {
    #[arg(long, value_enum)]
    model: NetFamily,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 20)]
    budget: usize,
    #[arg(long)]
    seed: u64,
    /// Report with the best trial's evaluation and the full trial log.
    #[arg(long)]
    report: PathBuf,
    /// Also write the winning hyperparameters as a TOML file for `train --hp`.
    #[arg(long)]
    best_hp: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SynthArgs {
    #[arg(long)]
    users: usize,
    #[arg(long, default_value_t = 4)]
    sessions_per_user: usize,
    #[arg(long, default_value_t = 257)]
    categories: usize,
    #[arg(long, default_value_t = 8)]
    items_per_category: usize,
    #[arg(long, default_value_t = 0.03)]
    buy_rate: f64,
    #[arg(long, default_value_t = 0.8)]
    signal: f64,
    #[arg(long)]
    nonlinear: bool,
    #[arg(long, default_value_t = 4)]
    weeks: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

struct Run {
    command: &'static str,
    flags: serde_json::Value,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    started: Instant,
}

impl Run {
    fn new<A: Serialize>(command: &'static str, args: &A, seed: Option<u64>, inputs: &[&Path]) -> CliResult<Run> {
        for p in inputs {
            if !p.exists() {
                return Err(CliError::new(fail::code::IO, "io", format!("{}: no such file", p.display())));
            }
        }
        Ok(Run {
            command,
            flags: serde_json::to_value(args).map_err(CliError::internal)?,
            seed,
            inputs: inputs.iter().map(|p| p.to_path_buf()).collect(),
            started: Instant::now(),
        })
    }

    /// Writes the manifest for `outputs` next to `anchor`.
    fn finish(self, anchor: &Path, outputs: &[PathBuf]) -> CliResult<()> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            flags: self.flags,
            inputs: digests(&self.inputs)?,
            outputs: digests(outputs)?,
            seed: self.seed,
            tool_version: TOOL_VERSION,
            wall_clock_secs: self.started.elapsed().as_secs_f64(),
        };
        manifest.write(&manifest_path(anchor))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(CliError::internal)? + "\n";
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn cmd_ingest(a: IngestArgs) -> CliResult<()> {
    let run = Run::new("ingest", &a, None, &[&a.input])?;
    if a.min_clicks == 0 || a.horizon_hours == 0 {
        return Err(CliError::usage("--min-clicks and --horizon-hours must be positive"));
    }
    let f = std::fs::File::open(&a.input).map_err(|e| CliError::io(&a.input, e))?;
    let opts = IngestOptions { min_clicks: a.min_clicks, horizon_ms: a.horizon_hours * MS_PER_HOUR };
    let (store, report) = ingest(std::io::BufReader::new(f), opts)?;
    store.save(&a.out)?;
    let report_path = a.report.clone().unwrap_or_else(|| {
        let mut s = a.out.as_os_str().to_owned();
        s.push(".report.json");
        PathBuf::from(s)
    });
    write_json(&report_path, &report)?;
    log::info!("{} sessions from {} users; {} malformed lines", store.len(), store.n_users(), report.dropped_lines.len());
    run.finish(&a.out, &[a.out.clone(), report_path])
}

fn cmd_featurize(a: FeaturizeArgs) -> CliResult<()> {
    let run = Run::new("featurize", &a, Some(a.balance_seed), &[&a.store, &a.embeddings])?;
    let store = clickbuy_core::ingest::SessionStore::load(&a.store)?;
    let table = EmbeddingTable::load(&a.embeddings, EMBEDDING_DIM)?;
    let cfg = FeatureConfig { utc_offset_secs: a.utc_offset };
    let full = build_dataset(&store, &table, a.scheme.into(), a.categories, cfg)?;
    let data = balance(&full, a.balance_seed)?;
    data.save(&a.out)?;
    log::info!("{} rows x {} columns ({} positives)", data.n_rows(), data.n_cols(), data.positives());
    run.finish(&a.out, &[a.out.clone(), Dataset::sidecar_path(&a.out)])
}

fn cmd_reduce(a: ReduceArgs) -> CliResult<()> {
    let run = Run::new("reduce", &a, Some(a.seed), &[&a.input])?;
    let data = Dataset::load(&a.input)?;
    let cfg = NmfConfig { rank: a.rank, max_iters: a.max_iters, tol: a.tol, seed: a.seed };
    let (reduced, factors) = reduce_dataset(&data, &cfg)?;
    reduced.save(&a.out)?;
    let mut s = a.out.as_os_str().to_owned();
    s.push(".nmf.json");
    let factors_path = PathBuf::from(s);
    write_json(&factors_path, &factors)?;
    log::info!("NMF rank {} error {:.6} after {} iterations", a.rank, factors.final_error, factors.error_trace.len() - 1);
    run.finish(&a.out, &[a.out.clone(), Dataset::sidecar_path(&a.out), factors_path])
}

fn read_hyperparams(path: &Path) -> CliResult<Hyperparams> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::new(fail::code::FORMAT, "format", format!("{}: {e}", path.display())))
}

fn model_spec(a: &TrainArgs) -> CliResult<ModelSpec> {
    let net_only = a.hp.is_some() || a.layers.is_some();
    let baseline_only = a.trees.is_some() || a.mtry.is_some() || a.lr.is_some();
    match a.model {
        Family::Lr | Family::Rf if net_only => Err(CliError::usage("--hp and --layers apply to sda and dbn only")),
        Family::Sda | Family::Dbn if baseline_only => Err(CliError::usage("--trees, --mtry and --lr apply to lr and rf only")),
        Family::Rf if a.epochs.is_some() || a.l2.is_some() || a.lr.is_some() => {
            Err(CliError::usage("--lr, --epochs and --l2 do not apply to rf"))
        }
        Family::Lr if a.trees.is_some() || a.mtry.is_some() => Err(CliError::usage("--trees and --mtry apply to rf only")),
        Family::Lr => {
            let d = LogisticConfig::default();
            Ok(ModelSpec::Lr(LogisticConfig {
                learning_rate: a.lr.unwrap_or(d.learning_rate),
                epochs: a.epochs.unwrap_or(d.epochs),
                l2: a.l2.unwrap_or(d.l2),
                ..d
            }))
        }
        Family::Rf => {
            let d = ForestConfig::default();
            Ok(ModelSpec::Rf(ForestConfig {
                n_trees: a.trees.unwrap_or(d.n_trees),
                tree: TreeConfig { mtry: a.mtry, ..d.tree },
                ..d
            }))
        }
        Family::Sda | Family::Dbn => {
            let mut hp = match &a.hp {
                Some(p) => read_hyperparams(p)?,
                None => Hyperparams::default(),
            };
            if let Some(layers) = &a.layers {
                hp.hidden_units = layers.clone();
            }
            if let Some(e) = a.epochs {
                hp.epochs = e;
            }
            if let Some(l2) = a.l2 {
                hp.l2_weight_cost = l2;
            }
            hp.validate()?;
            Ok(if a.model == Family::Sda { ModelSpec::Sda(hp) } else { ModelSpec::Dbn(hp) })
        }
    }
}

fn cmd_train(a: TrainArgs) -> CliResult<()> {
    let mut inputs: Vec<&Path> = vec![&a.input];
    if let Some(hp) = &a.hp {
        inputs.push(hp);
    }
    let run = Run::new("train", &a, Some(a.seed), &inputs)?;
    let spec = model_spec(&a)?;
    let data = Dataset::load(&a.input)?;
    let file = ModelFile::fit(spec, &data, a.seed)?;
    file.save(&a.out)?;
    run.finish(&a.out, &[a.out.clone()])
}

fn dataset_label(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn cmd_evaluate(a: EvaluateArgs) -> CliResult<()> {
    let run = Run::new("evaluate", &a, Some(a.seed), &[&a.model, &a.input])?;
    let model = ModelFile::load(&a.model)?;
    let data = Dataset::load(&a.input)?;
    if data.feature_names != model.feature_names {
        return Err(CliError::new(fail::code::FORMAT, "format", "dataset features differ from the model's training features"));
    }
    let mut report: EvalReport = if a.holdout {
        holdout_evaluate(&model.spec, &data, a.seed)?
    } else {
        cross_validate(&model.spec, &data, a.cv, a.seed)?
    };
    report.dataset = dataset_label(&a.input);
    write_json(&a.report, &report)?;
    println!("{} AUC {:.4}", report.model, report.auc);
    run.finish(&a.report, &[a.report.clone()])
}

#[derive(Serialize)]
struct SearchReport {
    #[serde(flatten)]
    report: EvalReport,
    best_trial: usize,
    best: Hyperparams,
    trials: Vec<clickbuy_core::eval::Trial>,
}

fn cmd_search(a: SearchArgs) -> CliResult<()> {
    let run = Run::new("search", &a, Some(a.seed), &[&a.input])?;
    let data = Dataset::load(&a.input)?;
    let outcome = match a.model {
        NetFamily::Sda => random_search(&SearchSpace::sda(), a.budget, &data, a.seed, ModelSpec::Sda)?,
        NetFamily::Dbn => random_search(&SearchSpace::dbn(), a.budget, &data, a.seed, ModelSpec::Dbn)?,
    };
    let mut report = outcome.report;
    report.dataset = dataset_label(&a.input);
    println!("best trial {} validation AUC {:.4} test AUC {:.4}", outcome.best_trial, report.mean_validation_auc().unwrap_or(f64::NAN), report.auc);
    let out = SearchReport { report, best_trial: outcome.best_trial, best: outcome.best, trials: outcome.trials };
    write_json(&a.report, &out)?;
    let mut outputs = vec![a.report.clone()];
    if let Some(p) = &a.best_hp {
        let text = toml::to_string(&out.best).map_err(CliError::internal)?;
        std::fs::write(p, text).map_err(|e| CliError::io(p, e))?;
        outputs.push(p.clone());
    }
    run.finish(&a.report, &outputs)
}

fn cmd_synth(a: SynthArgs) -> CliResult<()> {
    let run = Run::new("synth", &a, Some(a.seed), &[])?;
    let cfg = SynthConfig {
        n_users: a.users,
        sessions_per_user: a.sessions_per_user,
        n_categories: a.categories,
        items_per_category: a.items_per_category,
        buy_rate: a.buy_rate,
        signal_strength: a.signal,
        nonlinear: a.nonlinear,
        weeks: a.weeks,
        seed: a.seed,
    };
    let corpus = generate(&cfg)?;
    let paths = write_corpus(&corpus, &cfg, &a.out)?;
    log::info!("{} events, {} sessions, {} buys", corpus.events.len(), corpus.truth.len(), corpus.truth.iter().filter(|t| t.label).count());
    run.finish(&a.out.join("corpus"), &[paths.events, paths.truth, paths.embeddings, paths.config])
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Featurize(a) => cmd_featurize(a),
        Command::Reduce(a) => cmd_reduce(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Search(a) => cmd_search(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::from(e.code as u8)
        }
    }
}
