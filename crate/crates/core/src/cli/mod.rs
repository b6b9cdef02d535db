//! The `leoids` command line: simulate → extract → train → eval → ids.
//!
//! Every command writes a JSON run manifest next to its outputs. The manifest
//! keeps the fully resolved argument list, so `leoids rerun <manifest>`
//! repeats a run exactly, including a seed that was drawn at random.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::schema::FEATURES_VANTAGE;
use crate::features::{build_dataset, class_names, normalize, AggregationScope, Dataset, ExtractConfig, NormalizationParams, SchemaKind};
use crate::harness::{evaluate, evaluate_hybrid, split, train, Metrics, Predictor, Samples, SplitSpec};
use crate::ids::{Alert, Detector, Mode, Replay, WindowConfig, WindowSummary, ALERT_HEADER};
use crate::neural::{Architecture, ModelConfig, ModelFile, OptimizerKind};
use crate::simcore::trace::{read_trace_file, read_vectors_file, write_trace_file, write_vectors_file};
use crate::simcore::{preset_runs, run_schedule, Preset, ScenarioConfig, Schedule};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "leoids", version, about = "LEO satellite network simulation and intrusion detection")]
pub struct Cli {
    /// Log level: error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    pub log: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the network simulator and write the packet trace and vector statistics.
    Simulate(SimulateArgs),
    /// Turn a trace into a labeled, normalized dataset.
    Extract(ExtractArgs),
    /// Train a classifier on an extracted dataset.
    Train(TrainArgs),
    /// Evaluate one model, or an MLP+GRU pair, on a dataset.
    Eval(EvalArgs),
    /// Replay a trace through the windowed detector.
    Ids(IdsArgs),
    /// Repeat the run recorded in a manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Scenario: 1 benign, 2 UDP flood, 3 rain, 4 jamming.
    #[arg(long)]
    pub scenario: Option<u8>,
    /// Simulated seconds; defaults to the scenario's dataset-1 interval.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Run every scenario back to back on one timeline (`dataset1` or `dataset2`).
    #[arg(long, conflicts_with_all = ["scenario", "config"])]
    pub preset: Option<String>,
    /// Multiplies every preset interval.
    #[arg(long, default_value_t = 1.0, requires = "preset")]
    pub time_scale: f64,
    /// `key = value` scenario file; flags win over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Extra `key=value` override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "sim")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// Required by schema 1.
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// Scenario timeline used for labels; defaults to `schedule.csv` beside the trace.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// 1: full-surveillance per-event rows, 2: satellite-vantage flow rows.
    #[arg(long, default_value_t = 1)]
    pub schema: u8,
    /// JSON extraction settings; flags win over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Analysis window in seconds (schema 2).
    #[arg(long)]
    pub window: Option<f64>,
    /// Aggregation scope of the schema-1 statistics: network or endpoints.
    #[arg(long)]
    pub scope: Option<String>,
    /// Seed of the train/validation/test split the scaling is fitted on.
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dataset CSV; normalization parameters go to `<stem>.norm.csv`.
    #[arg(long, default_value = "dataset.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// mlp, rnn, gru, lstm or cnn.
    #[arg(long, default_value = "mlp")]
    pub arch: String,
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    /// Model preset; defaults to `dataset<schema>-<arch>`.
    #[arg(long)]
    pub preset: Option<String>,
    /// JSON model configuration replacing the preset; flags win over it.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// sgd or adam.
    #[arg(long)]
    pub optimizer: Option<String>,
    #[arg(long)]
    pub sequence_length: Option<usize>,
    /// Normalization parameters stored in the model; defaults to the dataset's `.norm.csv`.
    #[arg(long)]
    pub normalization: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "model.bin")]
    pub out: PathBuf,
    /// Loss history CSV; defaults to `<stem>.history.csv`.
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Also draw the loss curves as SVG.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// GRU partner; makes `--model` the MLP of a hybrid.
    #[arg(long)]
    pub gru: Option<PathBuf>,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Evaluate on every row instead of the test part.
    #[arg(long)]
    pub all: bool,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "metrics.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct IdsArgs {
    /// Model, or the MLP of a hybrid when `--gru` is given.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub gru: Option<PathBuf>,
    #[arg(long)]
    pub trace: PathBuf,
    /// normal or safe.
    #[arg(long)]
    pub mode: Option<String>,
    /// Window length in seconds.
    #[arg(long)]
    pub period: Option<f64>,
    /// Reorder tolerance in seconds.
    #[arg(long)]
    pub slack: Option<f64>,
    /// JSON window configuration; flags win over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Replay speed relative to trace time; `inf` for as fast as possible.
    #[arg(long, default_value_t = f64::INFINITY)]
    pub speed: f64,
    /// Print one summary line per window to stderr.
    #[arg(long)]
    pub status: bool,
    /// Run ingestion and detection on the calling thread.
    #[arg(long)]
    pub single_thread: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "alerts.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RerunArgs {
    pub manifest: PathBuf,
}

/// Record of one command run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub seed: u64,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub tool_version: String,
    pub wall_clock_seconds: f64,
    /// Resolved arguments, program name excluded.
    pub args: Vec<String>,
}

impl RunManifest {
    /// Writes through a temporary file and a rename.
    pub fn write_atomic(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.tmp");
        {
            let mut w = BufWriter::new(File::create(&tmp)?);
            serde_json::to_writer_pretty(&mut w, self)?;
            w.write_all(b"\n")?;
            w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }
}

/// Manifest path for an output file: `<out>.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// `<dir>/<stem><suffix>` for an output file.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => Ok(std::fs::create_dir_all(p)?),
        _ => Ok(()),
    }
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::config(what, format!("no such file: {}", path.display())))
    }
}

fn path_arg(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn push_opt<T: ToString>(args: &mut Vec<String>, flag: &str, v: &Option<T>) {
    if let Some(v) = v {
        args.push(flag.into());
        args.push(v.to_string());
    }
}

fn push_path(args: &mut Vec<String>, flag: &str, v: &Option<PathBuf>) {
    push_opt(args, flag, &v.as_deref().map(path_arg));
}

struct Started {
    at: Instant,
}

impl Started {
    fn now() -> Self {
        Started { at: Instant::now() }
    }

    fn finish(
        self,
        command: &str,
        config_path: Option<&Path>,
        seed: u64,
        inputs: Vec<PathBuf>,
        outputs: Vec<PathBuf>,
        args: Vec<String>,
    ) -> RunManifest {
        RunManifest {
            command: command.into(),
            config_path: config_path.map(Path::to_path_buf),
            seed,
            inputs,
            outputs,
            tool_version: TOOL_VERSION.into(),
            wall_clock_seconds: self.at.elapsed().as_secs_f64(),
            args,
        }
    }
}

/// Whether a `key = value` config text sets `key`.
fn kv_has_key(text: &str, key: &str) -> bool {
    text.lines()
        .filter_map(|l| l.split('#').next()?.split_once('='))
        .any(|(k, _)| k.trim() == key)
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<RunManifest> {
    let started = Started::now();
    let runs = if let Some(name) = &a.preset {
        let seed = resolve_seed(a.seed);
        if !a.overrides.is_empty() || a.duration.is_some() {
            return Err(Error::config("preset", "--set and --duration do not combine with --preset"));
        }
        (seed, preset_runs(Preset::parse(name)?, seed, a.time_scale)?)
    } else {
        let mut config = match &a.config {
            Some(path) => {
                require_file(path, "config")?;
                let text = std::fs::read_to_string(path)?;
                let mut c = ScenarioConfig::from_kv_str(&text)?;
                if !kv_has_key(&text, "seed") && a.seed.is_none() {
                    c.seed = resolve_seed(None);
                }
                c
            }
            None => {
                let scenario = a.scenario.ok_or_else(|| Error::config("scenario", "give --scenario, --config or --preset"))?;
                let duration = match a.duration {
                    Some(d) => d,
                    None => Preset::Dataset1
                        .duration_of(scenario)
                        .ok_or_else(|| Error::config("scenario", format!("unknown scenario {scenario} (1-4)")))?,
                };
                ScenarioConfig::preset(scenario, duration, resolve_seed(a.seed))?
            }
        };
        if a.config.is_some() {
            if let Some(s) = a.scenario {
                if s != config.scenario {
                    let mut fresh = ScenarioConfig::preset(s, config.duration, config.seed)?;
                    std::mem::swap(&mut fresh, &mut config);
                }
            }
            if let Some(d) = a.duration {
                config.duration = d;
            }
        }
        if let Some(seed) = a.seed {
            config.seed = seed;
        }
        for o in &a.overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::config("set", format!("expected KEY=VALUE, got `{o}`")))?;
            config.apply(k.trim(), v.trim())?;
        }
        config.validate()?;
        (config.seed, vec![(0.0, config)])
    };
    let (seed, runs) = runs;

    log::info!("simulating {} scenario run(s)", runs.len());
    let (out, schedule) = run_schedule(&runs)?;
    std::fs::create_dir_all(&a.out)?;
    let trace = a.out.join("trace.csv");
    let vectors = a.out.join("vectors.csv");
    let sched = a.out.join("schedule.csv");
    write_trace_file(&trace, &out.trace)?;
    write_vectors_file(&vectors, &out.vectors)?;
    schedule.write_file(&sched)?;
    let mut outputs = vec![trace, vectors, sched];
    if let [(_, config)] = runs.as_slice() {
        let cfg = a.out.join("scenario.cfg");
        std::fs::write(&cfg, config.to_kv_string())?;
        outputs.push(cfg);
    }

    let mut args = vec!["simulate".to_string()];
    match &a.preset {
        Some(p) => {
            args.extend(["--preset".into(), p.clone(), "--time-scale".into(), a.time_scale.to_string()]);
        }
        None => {
            push_path(&mut args, "--config", &a.config);
            push_opt(&mut args, "--scenario", &a.scenario);
            push_opt(&mut args, "--duration", &a.duration);
            for o in &a.overrides {
                args.extend(["--set".into(), o.clone()]);
            }
        }
    }
    args.extend(["--seed".into(), seed.to_string(), "--out".into(), path_arg(&a.out)]);
    let inputs = a.config.iter().cloned().collect();
    let m = started.finish("simulate", a.config.as_deref(), seed, inputs, outputs, args);
    m.write_atomic(&a.out.join("manifest.json"))?;
    Ok(m)
}

/// Rows the scaling is fitted on: the train part of the seeded split, or
/// every row when the data has a single class.
fn fit_rows(ds: &Dataset, split_seed: u64) -> Result<Vec<Vec<f64>>> {
    let labels: Vec<usize> = ds.rows.iter().map(|r| r.label.index()).collect();
    let distinct = labels.iter().collect::<std::collections::BTreeSet<_>>().len();
    if distinct < 2 {
        log::warn!("dataset has a single class; normalization is fitted on every row");
        return Ok(ds.rows.iter().map(|r| r.features.clone()).collect());
    }
    let s = split(&labels, &SplitSpec::with_seed(split_seed))?;
    Ok(s.train.iter().map(|&i| ds.rows[i].features.clone()).collect())
}

pub fn cmd_extract(a: &ExtractArgs) -> Result<RunManifest> {
    let started = Started::now();
    let seed = resolve_seed(a.seed);
    let schema = SchemaKind::from_number(a.schema)?;
    let mut config = match &a.config {
        Some(p) => {
            require_file(p, "config")?;
            serde_json::from_reader(BufReader::new(File::open(p)?)).map_err(|e| Error::config("config", e.to_string()))?
        }
        None => ExtractConfig::default(),
    };
    if let Some(w) = a.window {
        config.window = w;
    }
    if let Some(s) = &a.scope {
        config.scope = s.parse::<AggregationScope>()?;
    }
    config.validate()?;

    require_file(&a.trace, "trace")?;
    let vectors_path = match (schema, &a.vectors) {
        (SchemaKind::FullSurveillance, None) => {
            return Err(Error::config("vectors", "schema 1 needs --vectors"));
        }
        (_, Some(v)) => {
            require_file(v, "vectors")?;
            Some(v.clone())
        }
        (_, None) => None,
    };
    let schedule_path = a.schedule.clone().unwrap_or_else(|| a.trace.with_file_name("schedule.csv"));
    require_file(&schedule_path, "schedule")?;

    let trace = read_trace_file(&a.trace)?;
    let vectors = match (&vectors_path, schema) {
        (Some(v), SchemaKind::FullSurveillance) => Some(read_vectors_file(v)?),
        _ => None,
    };
    let schedule = Schedule::read_file(&schedule_path)?;
    let sim_end = schedule.entries.iter().map(|e| e.end).fold(0.0, f64::max);
    let raw = build_dataset(schema, &trace, vectors.as_deref(), sim_end, &schedule, &config)?;
    if raw.is_empty() {
        return Err(Error::Data("extraction produced no rows".into()));
    }
    let params = NormalizationParams::fit(raw.feature_columns(), &fit_rows(&raw, a.split_seed)?)?;
    let (ds, params) = normalize(&raw, Some(&params))?;

    create_parent(&a.out)?;
    let norm = sibling(&a.out, ".norm.csv");
    ds.write_csv_file(&a.out)?;
    params.write_csv_file(&norm)?;
    log::info!("wrote {} rows to {}", ds.len(), a.out.display());

    let mut args = vec!["extract".to_string(), "--trace".into(), path_arg(&a.trace)];
    push_path(&mut args, "--vectors", &a.vectors);
    args.extend(["--schedule".into(), path_arg(&schedule_path), "--schema".into(), a.schema.to_string()]);
    push_path(&mut args, "--config", &a.config);
    push_opt(&mut args, "--window", &a.window);
    push_opt(&mut args, "--scope", &a.scope);
    args.extend([
        "--split-seed".into(),
        a.split_seed.to_string(),
        "--seed".into(),
        seed.to_string(),
        "--out".into(),
        path_arg(&a.out),
    ]);
    let mut inputs = vec![a.trace.clone(), schedule_path];
    inputs.extend(vectors_path);
    let m = started.finish("extract", a.config.as_deref(), seed, inputs, vec![a.out.clone(), norm], args);
    m.write_atomic(&manifest_path(&a.out))?;
    Ok(m)
}

fn parse_optimizer(s: &str) -> Result<OptimizerKind> {
    match s.to_ascii_lowercase().as_str() {
        "sgd" => Ok(OptimizerKind::Sgd),
        "adam" => Ok(OptimizerKind::Adam),
        _ => Err(Error::config("optimizer", format!("unknown optimizer `{s}` (sgd or adam)"))),
    }
}

fn model_config(a: &TrainArgs, schema: SchemaKind, seed: u64) -> Result<ModelConfig> {
    let mut c = match &a.config {
        Some(p) => {
            require_file(p, "config")?;
            serde_json::from_reader(BufReader::new(File::open(p)?)).map_err(|e| Error::config("config", e.to_string()))?
        }
        None => {
            let arch: Architecture = a.arch.parse()?;
            let name = a.preset.clone().unwrap_or_else(|| format!("dataset{}-{}", schema.number(), arch.name()));
            ModelConfig::preset(&name, a.classes)?
        }
    };
    if a.config.is_some() {
        c.output_classes = a.classes;
    }
    if let Some(v) = a.epochs {
        c.epochs = v;
    }
    if let Some(v) = a.batch_size {
        c.batch_size = v;
    }
    if let Some(v) = a.learning_rate {
        c.learning_rate = v;
    }
    if let Some(v) = &a.optimizer {
        c.optimizer = parse_optimizer(v)?;
    }
    if let Some(v) = a.sequence_length {
        c.sequence_length = v;
    }
    c.seed = seed;
    c.validate()?;
    Ok(c)
}

pub fn cmd_train(a: &TrainArgs) -> Result<RunManifest> {
    let started = Started::now();
    let seed = resolve_seed(a.seed);
    require_file(&a.dataset, "dataset")?;
    let ds = Dataset::read_csv_file(&a.dataset)?;
    let config = model_config(a, ds.schema, seed)?;
    let norm_path = match &a.normalization {
        Some(p) => {
            require_file(p, "normalization")?;
            Some(p.clone())
        }
        None => Some(sibling(&a.dataset, ".norm.csv")).filter(|p| p.is_file()),
    };
    let columns = config.select_columns(ds.feature_columns())?;
    let normalization = match &norm_path {
        Some(p) => Some(NormalizationParams::read_csv_file(p)?.select(&columns)?),
        None => {
            log::warn!("no normalization parameters found; the model will expect scaled inputs");
            None
        }
    };

    let samples = Samples::from_dataset(&ds, &config)?;
    let parts = split(&samples.y, &SplitSpec::with_seed(a.split_seed))?;
    let outcome = train(&config, &samples.subset(&parts.train), &samples.subset(&parts.validation))?;
    if let Some(best) = outcome.best_epoch {
        log::info!("keeping the epoch-{best} weights");
    }

    let file = ModelFile {
        model: outcome.model,
        feature_columns: columns.iter().map(|c| c.to_string()).collect(),
        normalization,
    };
    create_parent(&a.out)?;
    file.save(&a.out)?;
    let history = a.history.clone().unwrap_or_else(|| sibling(&a.out, ".history.csv"));
    outcome.history.write_csv_file(&history)?;
    let mut outputs = vec![a.out.clone(), history.clone()];
    if let Some(svg) = &a.plot {
        let title = format!("{} training and validation loss", config.architecture.name().to_uppercase());
        std::fs::write(svg, outcome.history.to_svg(&title))?;
        outputs.push(svg.clone());
    }

    let mut args = vec!["train".to_string(), "--dataset".into(), path_arg(&a.dataset)];
    args.extend(["--arch".into(), a.arch.clone(), "--classes".into(), a.classes.to_string()]);
    push_opt(&mut args, "--preset", &a.preset);
    push_path(&mut args, "--config", &a.config);
    push_opt(&mut args, "--epochs", &a.epochs);
    push_opt(&mut args, "--batch-size", &a.batch_size);
    push_opt(&mut args, "--learning-rate", &a.learning_rate);
    push_opt(&mut args, "--optimizer", &a.optimizer);
    push_opt(&mut args, "--sequence-length", &a.sequence_length);
    push_path(&mut args, "--normalization", &a.normalization);
    args.extend(["--split-seed".into(), a.split_seed.to_string(), "--seed".into(), seed.to_string()]);
    args.extend(["--out".into(), path_arg(&a.out), "--history".into(), path_arg(&history)]);
    push_path(&mut args, "--plot", &a.plot);
    let mut inputs = vec![a.dataset.clone()];
    inputs.extend(norm_path);
    let m = started.finish("train", a.config.as_deref(), seed, inputs, outputs, args);
    m.write_atomic(&manifest_path(&a.out))?;
    Ok(m)
}

fn load_model(path: &Path) -> Result<ModelFile> {
    require_file(path, "model")?;
    ModelFile::load(path)
}

/// Metrics of a model or hybrid on a dataset, as `eval` computes them.
pub fn eval_metrics(mlp: &ModelFile, gru: Option<&ModelFile>, ds: &Dataset, all: bool, split_seed: u64) -> Result<Metrics> {
    let samples = Samples::from_dataset(ds, &mlp.model.config)?;
    let test = if all {
        samples
    } else {
        let parts = split(&samples.y, &SplitSpec::with_seed(split_seed))?;
        samples.subset(&parts.test)
    };
    match gru {
        None => evaluate(&mlp.model, &test),
        Some(g) => evaluate_hybrid(&mlp.model, &g.model, &test),
    }
}

pub fn cmd_eval(a: &EvalArgs) -> Result<RunManifest> {
    let started = Started::now();
    let seed = resolve_seed(a.seed);
    let mlp = load_model(&a.model)?;
    let gru = a.gru.as_deref().map(load_model).transpose()?;
    require_file(&a.dataset, "dataset")?;
    let ds = Dataset::read_csv_file(&a.dataset)?;
    let metrics = eval_metrics(&mlp, gru.as_ref(), &ds, a.all, a.split_seed)?;
    let names = class_names(metrics.classes)?;
    create_parent(&a.out)?;
    metrics.write_csv_file(&a.out, &names)?;
    print!("{}", metrics.table(&names));

    let mut args = vec!["eval".to_string(), "--model".into(), path_arg(&a.model)];
    push_path(&mut args, "--gru", &a.gru);
    args.extend(["--dataset".into(), path_arg(&a.dataset)]);
    if a.all {
        args.push("--all".into());
    }
    args.extend(["--split-seed".into(), a.split_seed.to_string(), "--seed".into(), seed.to_string()]);
    args.extend(["--out".into(), path_arg(&a.out)]);
    let mut inputs = vec![a.model.clone(), a.dataset.clone()];
    inputs.extend(a.gru.clone());
    let m = started.finish("eval", None, seed, inputs, vec![a.out.clone()], args);
    m.write_atomic(&manifest_path(&a.out))?;
    Ok(m)
}

fn window_config(a: &IdsArgs) -> Result<WindowConfig> {
    let mut c: WindowConfig = match &a.config {
        Some(p) => {
            require_file(p, "config")?;
            serde_json::from_reader(BufReader::new(File::open(p)?)).map_err(|e| Error::config("config", e.to_string()))?
        }
        None => WindowConfig::default(),
    };
    if let Some(m) = &a.mode {
        c.mode = m.parse::<Mode>()?;
    }
    if let Some(p) = a.period {
        c.period = p;
    }
    if let Some(s) = a.slack {
        c.slack = s;
    }
    c.validate()?;
    Ok(c)
}

fn status_line(s: &WindowSummary, alerts: &[Alert]) {
    let g = s.global_fractions();
    eprintln!(
        "window {} [{}, {}) packets={} normal={:.3} flood={:.3} rain={:.3} jamming={:.3} alerts={}",
        s.index,
        s.start,
        s.end,
        s.packets,
        g[0],
        g[1],
        g[2],
        g[3],
        alerts.len()
    );
}

pub fn cmd_ids(a: &IdsArgs) -> Result<RunManifest> {
    let started = Started::now();
    let seed = resolve_seed(a.seed);
    let config = window_config(a)?;
    let mlp = load_model(&a.model)?;
    let predictor = match &a.gru {
        Some(g) => Predictor::Hybrid { mlp, gru: load_model(g)? },
        None => Predictor::Single(mlp),
    };
    if predictor.classes() == 4 {
        predictor.check_columns(&FEATURES_VANTAGE).map_err(|e| Error::config("model", e.to_string()))?;
    }
    let detector = Detector::new(config.clone(), predictor, ExtractConfig::default())?;
    require_file(&a.trace, "trace")?;
    let replay = Replay::new(BufReader::new(File::open(&a.trace)?), a.speed)?;

    let mut hook = status_line;
    let hook: Option<crate::ids::WindowHook<'_>> = if a.status { Some(&mut hook) } else { None };
    let report = if a.single_thread { detector.run(replay, hook)? } else { detector.run_threaded(replay, hook)? };
    if report.dropped > 0 {
        log::warn!("{} records arrived too late and were dropped", report.dropped);
    }

    create_parent(&a.out)?;
    let mut w = BufWriter::new(File::create(&a.out)?);
    writeln!(w, "{ALERT_HEADER}")?;
    for alert in &report.alerts {
        writeln!(w, "{alert}")?;
    }
    w.flush()?;
    log::info!("{} windows, {} alerts", report.windows.len(), report.alerts.len());

    let mut args = vec!["ids".to_string(), "--model".into(), path_arg(&a.model)];
    push_path(&mut args, "--gru", &a.gru);
    args.extend(["--trace".into(), path_arg(&a.trace)]);
    push_path(&mut args, "--config", &a.config);
    args.extend([
        "--mode".into(),
        config.mode.to_string().to_lowercase(),
        "--period".into(),
        config.period.to_string(),
        "--slack".into(),
        config.slack.to_string(),
        "--speed".into(),
        a.speed.to_string(),
    ]);
    if a.status {
        args.push("--status".into());
    }
    if a.single_thread {
        args.push("--single-thread".into());
    }
    args.extend(["--seed".into(), seed.to_string(), "--out".into(), path_arg(&a.out)]);
    let mut inputs = vec![a.model.clone()];
    inputs.extend(a.gru.clone());
    inputs.push(a.trace.clone());
    let m = started.finish("ids", a.config.as_deref(), seed, inputs, vec![a.out.clone()], args);
    m.write_atomic(&manifest_path(&a.out))?;
    Ok(m)
}

pub fn cmd_rerun(a: &RerunArgs) -> Result<RunManifest> {
    require_file(&a.manifest, "manifest")?;
    let m = RunManifest::read(&a.manifest)?;
    let argv = std::iter::once("leoids".to_string()).chain(m.args.iter().cloned());
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::config("manifest", e.to_string()))?;
    if matches!(cli.command, Command::Rerun(_)) {
        return Err(Error::config("manifest", "a manifest cannot rerun another manifest"));
    }
    run(&cli.command)
}

pub fn run(command: &Command) -> Result<RunManifest> {
    match command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Ids(a) => cmd_ids(a),
        Command::Rerun(a) => cmd_rerun(a),
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let _ = env_logger::Builder::new().parse_filters(&cli.log).format_timestamp(None).try_init();
    match run(&cli.command) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_names() {
        assert_eq!(manifest_path(Path::new("out/model.bin")), PathBuf::from("out/model.bin.manifest.json"));
        assert_eq!(sibling(Path::new("out/data.csv"), ".norm.csv"), PathBuf::from("out/data.norm.csv"));
    }

    #[test]
    fn seed_key_detection() {
        assert!(kv_has_key("scenario = 2\n seed = 4 # fixed\n", "seed"));
        assert!(!kv_has_key("scenario = 2\n# seed = 4\n", "seed"));
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(main_with_args(["leoids", "simulate", "--bogus"]), 2);
        assert_eq!(main_with_args(["leoids", "train", "--dataset", "/nonexistent/x.csv"]), 2);
    }

    #[test]
    fn optimizer_names() {
        assert_eq!(parse_optimizer("Adam").unwrap(), OptimizerKind::Adam);
        assert!(parse_optimizer("rmsprop").is_err());
    }
}
