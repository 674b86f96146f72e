//! Commands behind the `fairdispatch` binary: scenario generation, training, evaluation,
//! comparison against a reference method, and run reports.

use std::fmt;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use fairdispatch_core::baselines::{MdDispatcher, Method, RandomDispatcher};
use fairdispatch_core::episode::{run_episode, stream_seed, Environment, EpisodeOutcome, Stream};
use fairdispatch_core::habic::{evaluate_policy, train, Checkpoint, EpisodeLog, SelectionMode, TrainState, MATCHING_DIM, STATE_DIM};
use fairdispatch_core::human::{decreased_ratio, percentile_spread, MetricsReport};
use fairdispatch_core::io::{
    export_results, generate_scenario, parse_override, read_jsonl, read_region_waits, render_ratio_table,
    write_benchmark, write_ratio_table, write_region_waits, Config, Scenario,
};
use fairdispatch_core::Mlp;

pub const TRAIN_LOG: &str = "train_log.jsonl";
pub const TRAIN_WAITS: &str = "train_region_waits.csv";
pub const CHECKPOINT: &str = "checkpoint.json";
pub const RESULTS: &str = "results.jsonl";
pub const MANIFEST: &str = "manifest.json";
pub const BENCHMARK: &str = "benchmark.csv";
pub const RATIOS: &str = "ratios.csv";

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_RUNTIME: u8 = 4;

/// A failure raised by the command layer itself, tagged with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> anyhow::Error {
        CliError { code: EXIT_CONFIG, message: message.into() }.into()
    }

    fn data(message: impl Into<String>) -> anyhow::Error {
        CliError { code: EXIT_DATA, message: message.into() }.into()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

/// 2 for configuration errors, 3 for bad input data, 4 for anything else.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return e.code;
        }
        if let Some(e) = cause.downcast_ref::<fairdispatch_core::Error>() {
            return if e.is_config_error() {
                EXIT_CONFIG
            } else if e.is_data_error() {
                EXIT_DATA
            } else {
                EXIT_RUNTIME
            };
        }
    }
    EXIT_RUNTIME
}

/// The error chain joined with `: `, skipping causes already quoted by the message above them.
pub fn error_message(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !out.ends_with(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

#[derive(Debug, Parser)]
#[command(name = "fairdispatch", version = env!("FAIRDISPATCH_BUILD_ID"), about = "Fairness-aware ride-hailing dispatch experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config's `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Config override, repeatable; applied after the file and `FAIRDISPATCH_*` variables.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scenario directory.
    Generate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the constrained dispatcher on a scenario.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config's `episodes`.
        #[arg(long)]
        episodes: Option<usize>,
        /// Continue from a checkpoint; episode numbering carries on.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Evaluate a dispatch policy over seeded episodes.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// md, random, checkpoint or habic_unconstrained.
        #[arg(long)]
        policy: String,
        /// Trained checkpoint for the learned policies.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Overrides the config's `eval_episodes`.
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Decreased-ratio table of candidate evaluations against a reference (default: md).
    Compare {
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Evaluation results file, repeatable.
        #[arg(long = "candidate", required = true)]
        candidates: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a training or evaluation output directory.
    Report {
        #[arg(long)]
        run: PathBuf,
    },
}

/// Written when a command starts and rewritten when it ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub build_id: String,
    pub out_dir: PathBuf,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub status: String,
    pub exit_code: Option<u8>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming {}", tmp.display()))
}

impl RunManifest {
    fn start(command: &str, config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<Self> {
        let m = RunManifest {
            command: command.into(),
            config_path: config.map(Path::to_path_buf),
            seed,
            build_id: env!("FAIRDISPATCH_BUILD_ID").into(),
            out_dir: out.to_path_buf(),
            started_at: now(),
            finished_at: None,
            status: "running".into(),
            exit_code: None,
        };
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        m.save()?;
        Ok(m)
    }

    fn finish(mut self, outcome: &Result<String>) -> Result<()> {
        self.finished_at = Some(now());
        let code = outcome.as_ref().map_or_else(exit_code, |_| 0);
        self.status = if code == 0 { "ok".into() } else { "failed".into() };
        self.exit_code = Some(code);
        self.save()
    }

    fn save(&self) -> Result<()> {
        write_atomic(&self.out_dir.join(MANIFEST), serde_json::to_string_pretty(self)?.as_bytes())
    }
}

/// Parses the command line and runs it, returning the text to print.
pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Generate { common, out } => {
            let cfg = load_config(&common)?;
            with_manifest("generate", &common, Some(cfg.seed), &out, || {
                let paths = cmd_generate(&cfg, cfg.seed, &out)?;
                Ok(paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join("\n"))
            })
        }
        Command::Train { common, scenario, out, episodes, resume } => {
            let mut cfg = load_config(&common)?;
            if let Some(n) = episodes {
                cfg.episodes = n;
            }
            with_manifest("train", &common, Some(cfg.seed), &out, || {
                let s = cmd_train(&scenario, &cfg, cfg.seed, &out, resume.as_deref())?;
                Ok(s.to_string())
            })
        }
        Command::Evaluate { common, scenario, out, policy, checkpoint, episodes } => {
            let mut cfg = load_config(&common)?;
            if let Some(n) = episodes {
                cfg.eval_episodes = n;
            }
            with_manifest("evaluate", &common, Some(cfg.seed), &out, || {
                let spec = PolicySpec::parse(&policy, checkpoint.as_deref())?;
                let s = cmd_evaluate(&scenario, &cfg, &spec, cfg.eval_episodes, cfg.seed, &out)?;
                Ok(s.render())
            })
        }
        Command::Compare { reference, candidates, out } => match out {
            Some(dir) => {
                let common = Common { config: None, seed: None, sets: Vec::new() };
                with_manifest("compare", &common, None, &dir, || cmd_compare(reference.as_deref(), &candidates, Some(&dir)))
            }
            None => cmd_compare(reference.as_deref(), &candidates, None),
        },
        Command::Report { run } => cmd_report(&run),
    }
}

fn with_manifest(command: &str, common: &Common, seed: Option<u64>, out: &Path, body: impl FnOnce() -> Result<String>) -> Result<String> {
    let manifest = RunManifest::start(command, common.config.as_deref(), seed, out)?;
    let outcome = body();
    manifest.finish(&outcome)?;
    outcome
}

pub fn load_config(common: &Common) -> Result<Config> {
    if let Some(path) = &common.config {
        if !path.is_file() {
            return Err(CliError::config(format!("config file {} not found", path.display())));
        }
    }
    let mut overrides = common.sets.iter().map(|s| parse_override(s)).collect::<Result<Vec<_>, _>>()?;
    if let Some(seed) = common.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    Ok(Config::load(common.config.as_deref(), &overrides)?)
}

/// Writes the scenario files plus the fairness benchmark table into `out`.
pub fn cmd_generate(cfg: &Config, seed: u64, out: &Path) -> Result<Vec<PathBuf>> {
    let scenario = generate_scenario(cfg, seed)?;
    let mut paths = scenario.write(out)?;
    let env = scenario.environment(cfg)?;
    let bench = out.join(BENCHMARK);
    write_benchmark(&bench, &env.benchmark)?;
    paths.push(bench);
    Ok(paths)
}

pub fn read_checkpoint(path: &Path) -> Result<TrainState> {
    let text = fs::read_to_string(path).map_err(|e| fairdispatch_core::Error::io(path, e))?;
    let ck: Checkpoint = serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(TrainState::from_checkpoint(&ck)?)
}

pub fn load_environment(scenario_dir: &Path, cfg: &Config) -> Result<Environment> {
    let scenario = Scenario::read(scenario_dir)?;
    Ok(scenario.environment(cfg)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub episodes_run: usize,
    pub episodes_total: u64,
    pub lambda: f64,
    pub converged: bool,
    pub last: Option<EpisodeLog>,
}

impl fmt::Display for TrainSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "trained {} episodes ({} total), lambda {:.4}, ", self.episodes_run, self.episodes_total, self.lambda)?;
        f.write_str(if self.converged { "converged" } else { "not converged" })?;
        if let Some(l) = &self.last {
            write!(f, "\nlast episode: apwt {:.1} s, pf_inter {:.3}, pf_intra {:.3}, pvr {:.3}", l.apwt, l.pf_inter, l.pf_intra, l.pvr)?;
        }
        Ok(())
    }
}

/// Trains on the scenario, appending one JSON line per episode to the training log and the
/// per-region waits of every episode, then writes the final checkpoint.
pub fn cmd_train(scenario_dir: &Path, cfg: &Config, seed: u64, out: &Path, resume: Option<&Path>) -> Result<TrainSummary> {
    let env = load_environment(scenario_dir, cfg)?;
    let mut state = match resume {
        Some(path) => read_checkpoint(path)?,
        None => TrainState::new(cfg.train_config(), MATCHING_DIM, STATE_DIM, seed)?,
    };
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let log_path = out.join(TRAIN_LOG);
    let waits_path = out.join(TRAIN_WAITS);
    let appending = resume.is_some() && log_path.exists();
    let mut log = OpenOptions::new()
        .create(true)
        .write(true)
        .append(appending)
        .truncate(!appending)
        .open(&log_path)
        .with_context(|| format!("opening {}", log_path.display()))?;
    let mut waits = if appending && waits_path.exists() { read_region_waits(&waits_path)? } else { Vec::new() };
    let ck_path = out.join(CHECKPOINT);
    let log_wall = cfg.log_wall_ms;
    let mut started = std::time::Instant::now();
    let logs = train(&env, &mut state, cfg.episodes, seed, |report| {
        let mut line = report.log.clone();
        if log_wall {
            line.wall_ms = Some(started.elapsed().as_millis() as u64);
            started = std::time::Instant::now();
        }
        let mut text = serde_json::to_string(&line)?;
        text.push('\n');
        log.write_all(text.as_bytes()).map_err(|e| fairdispatch_core::Error::io(&log_path, e))?;
        waits.push((report.log.episode, report.region_waits.clone()));
        Ok(())
    })?;
    log.flush().with_context(|| format!("flushing {}", log_path.display()))?;
    write_region_waits(&waits_path, &waits)?;
    write_atomic(&ck_path, serde_json::to_string(&state.to_checkpoint())?.as_bytes())?;
    Ok(TrainSummary {
        episodes_run: logs.len(),
        episodes_total: state.episodes_done,
        lambda: state.lambda(),
        converged: state.converged,
        last: logs.last().cloned(),
    })
}

/// What to evaluate.
#[derive(Debug, Clone)]
pub enum PolicySpec {
    Md { exact_cap: Option<usize> },
    Random,
    Learned { method: Method, actor: Mlp, lambda: f64 },
}

impl PolicySpec {
    /// `md`, `random`, `checkpoint` or `habic_unconstrained`; the last two read `checkpoint`.
    pub fn parse(name: &str, checkpoint: Option<&Path>) -> Result<Self> {
        let learned = |want_unconstrained: bool| -> Result<Self> {
            let path = checkpoint.ok_or_else(|| CliError::config(format!("policy `{name}` needs --checkpoint")))?;
            let state = read_checkpoint(path)?;
            let unconstrained = !state.config.constrained;
            if want_unconstrained && !unconstrained {
                return Err(CliError::config(format!("{} was trained with the constraint on", path.display())));
            }
            let method = if unconstrained { Method::HabicUnconstrained } else { Method::Habic };
            Ok(PolicySpec::Learned { method, lambda: state.lambda(), actor: state.actor })
        };
        match name {
            "md" => Ok(PolicySpec::Md { exact_cap: None }),
            "random" => Ok(PolicySpec::Random),
            "checkpoint" | "habic" => learned(false),
            "habic_unconstrained" => learned(true),
            other => Err(CliError::config(format!(
                "unknown policy `{other}`; expected md, random, checkpoint or habic_unconstrained"
            ))),
        }
    }

    pub fn method(&self) -> Method {
        match self {
            PolicySpec::Md { .. } => Method::Md,
            PolicySpec::Random => Method::Random,
            PolicySpec::Learned { method, .. } => *method,
        }
    }
}

/// Runs episode `i` with seed `seed + i`; learned policies act greedily.
pub fn evaluate_episodes(env: &Environment, policy: &PolicySpec, cfg: &Config, episodes: usize, seed: u64) -> Result<Vec<EpisodeOutcome>> {
    (0..episodes as u64)
        .map(|i| {
            let s = seed.wrapping_add(i);
            let mut out = match policy {
                PolicySpec::Md { exact_cap } => {
                    let mut d = MdDispatcher { exact_cap: exact_cap.unwrap_or(cfg.assignment_exact_cap) };
                    run_episode(env, s, &mut d)?
                }
                PolicySpec::Random => run_episode(env, s, &mut RandomDispatcher::new(stream_seed(s, Stream::Policy)))?,
                PolicySpec::Learned { actor, .. } => evaluate_policy(env, actor, SelectionMode::Greedy, s)?,
            };
            if let PolicySpec::Learned { lambda, .. } = policy {
                out.metrics.lambda = *lambda;
            }
            Ok(out)
        })
        .collect()
}

/// Per-metric means or standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub apwt: f64,
    pub pf_inter: f64,
    pub pf_intra: f64,
    pub pvr: f64,
    pub mean_cost: f64,
    pub lambda: f64,
    pub dispatches: f64,
    pub expired: f64,
}

impl MetricSummary {
    fn of(m: &MetricsReport) -> Self {
        MetricSummary {
            apwt: m.apwt,
            pf_inter: m.pf_inter,
            pf_intra: m.pf_intra,
            pvr: m.pvr,
            mean_cost: m.mean_cost,
            lambda: m.lambda,
            dispatches: m.dispatches as f64,
            expired: m.expired as f64,
        }
    }

    fn fields(&self) -> [f64; 8] {
        [self.apwt, self.pf_inter, self.pf_intra, self.pvr, self.mean_cost, self.lambda, self.dispatches, self.expired]
    }

    fn from_fields(f: [f64; 8]) -> Self {
        MetricSummary {
            apwt: f[0],
            pf_inter: f[1],
            pf_intra: f[2],
            pvr: f[3],
            mean_cost: f[4],
            lambda: f[5],
            dispatches: f[6],
            expired: f[7],
        }
    }

    /// Mean and sample standard deviation (zero for a single episode).
    pub fn aggregate(reports: &[MetricsReport]) -> (Self, Self) {
        let n = reports.len() as f64;
        let rows: Vec<[f64; 8]> = reports.iter().map(|r| MetricSummary::of(r).fields()).collect();
        let mean: [f64; 8] = std::array::from_fn(|k| rows.iter().map(|r| r[k]).sum::<f64>() / n);
        let std: [f64; 8] = std::array::from_fn(|k| {
            if rows.len() < 2 {
                0.0
            } else {
                (rows.iter().map(|r| (r[k] - mean[k]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            }
        });
        (MetricSummary::from_fields(mean), MetricSummary::from_fields(std))
    }

    /// The means as a report for the decreased-ratio computation.
    pub fn as_report(&self) -> MetricsReport {
        MetricsReport {
            apwt: self.apwt,
            pf_inter: self.pf_inter,
            pf_intra: self.pf_intra,
            pvr: self.pvr,
            mean_cost: self.mean_cost,
            lambda: self.lambda,
            dispatches: self.dispatches.round() as usize,
            expired: self.expired.round() as usize,
        }
    }
}

/// One line of `results.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvalRecord {
    Episode {
        method: String,
        episode: u64,
        seed: u64,
        #[serde(flatten)]
        metrics: MetricsReport,
    },
    Aggregate {
        method: String,
        episodes: usize,
        mean: MetricSummary,
        std: MetricSummary,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub method: Method,
    pub episodes: Vec<MetricsReport>,
    pub mean: MetricSummary,
    pub std: MetricSummary,
}

impl EvalSummary {
    pub fn render(&self) -> String {
        let (m, s) = (&self.mean, &self.std);
        format!(
            "{} over {} episodes\n  apwt     {:10.2} ± {:.2} s\n  pf_inter {:10.4} ± {:.4}\n  pf_intra {:10.4} ± {:.4}\n  pvr      {:10.4} ± {:.4}",
            self.method,
            self.episodes.len(),
            m.apwt,
            s.apwt,
            m.pf_inter,
            s.pf_inter,
            m.pf_intra,
            s.pf_intra,
            m.pvr,
            s.pvr
        )
    }
}

/// Evaluates `policy` and writes `results.jsonl` (one line per episode plus an aggregate) and
/// `region_waits.csv`.
pub fn cmd_evaluate(scenario_dir: &Path, cfg: &Config, policy: &PolicySpec, episodes: usize, seed: u64, out: &Path) -> Result<EvalSummary> {
    if episodes == 0 {
        return Err(CliError::config("evaluation needs at least one episode"));
    }
    let env = load_environment(scenario_dir, cfg)?;
    let outcomes = evaluate_episodes(&env, policy, cfg, episodes, seed)?;
    let method = policy.method();
    let reports: Vec<MetricsReport> = outcomes.iter().map(|o| o.metrics.clone()).collect();
    let (mean, std) = MetricSummary::aggregate(&reports);
    let mut records: Vec<EvalRecord> = reports
        .iter()
        .enumerate()
        .map(|(i, m)| EvalRecord::Episode {
            method: method.to_string(),
            episode: i as u64,
            seed: seed.wrapping_add(i as u64),
            metrics: m.clone(),
        })
        .collect();
    records.push(EvalRecord::Aggregate { method: method.to_string(), episodes, mean, std });
    let waits: Vec<(u64, Vec<Option<f64>>)> =
        outcomes.into_iter().enumerate().map(|(i, o)| (i as u64, o.region_waits)).collect();
    export_results(out, &records, &waits)?;
    Ok(EvalSummary { method, episodes: reports, mean, std })
}

fn read_aggregate(path: &Path) -> Result<(String, MetricSummary)> {
    let records: Vec<EvalRecord> = read_jsonl(path)?;
    records
        .into_iter()
        .rev()
        .find_map(|r| match r {
            EvalRecord::Aggregate { method, mean, .. } => Some((method, mean)),
            EvalRecord::Episode { .. } => None,
        })
        .ok_or_else(|| CliError::data(format!("{} has no aggregate record", path.display())))
}

/// Decreased ratios of each candidate's mean metrics against the reference. Without an explicit
/// reference the candidate evaluated with `md` is used.
pub fn cmd_compare(reference: Option<&Path>, candidates: &[PathBuf], out: Option<&Path>) -> Result<String> {
    let cands = candidates.iter().map(|p| read_aggregate(p)).collect::<Result<Vec<_>>>()?;
    let reference = match reference {
        Some(p) => read_aggregate(p)?,
        None => cands
            .iter()
            .find(|(m, _)| m == Method::Md.name())
            .cloned()
            .ok_or_else(|| CliError::config("no --reference given and no md candidate to default to"))?,
    };
    let rows = cands
        .iter()
        .map(|(m, s)| Ok((m.clone(), decreased_ratio(&s.as_report(), &reference.1.as_report())?)))
        .collect::<Result<Vec<_>>>()?;
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write_ratio_table(&dir.join(RATIOS), &rows)?;
    }
    Ok(format!("reference: {}\n{}", reference.0, render_ratio_table(&rows)))
}

/// Mean of consecutive `window`-episode blocks; a trailing partial block is dropped.
pub fn block_means(values: &[f64], window: usize) -> Vec<f64> {
    values.chunks_exact(window.max(1)).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect()
}

/// Text summary of the training log, regional wait spread and evaluation aggregates in `dir`.
pub fn cmd_report(dir: &Path) -> Result<String> {
    let mut out = String::new();
    let log_path = dir.join(TRAIN_LOG);
    if log_path.exists() {
        let logs: Vec<EpisodeLog> = read_jsonl(&log_path)?;
        if let (Some(first), Some(last)) = (logs.first(), logs.last()) {
            let peak = logs.iter().map(|l| l.lambda).fold(0.0, f64::max);
            out.push_str(&format!(
                "training: {} episodes ({}..={}), {}\n  apwt {:.1} -> {:.1} s, pvr {:.3} -> {:.3}, lambda peak {:.3} final {:.3}\n",
                logs.len(),
                first.episode,
                last.episode,
                if last.converged { "converged" } else { "not converged" },
                first.apwt,
                last.apwt,
                first.pvr,
                last.pvr,
                peak,
                last.lambda
            ));
        }
        let waits_path = dir.join(TRAIN_WAITS);
        if waits_path.exists() {
            let spreads: Vec<f64> =
                read_region_waits(&waits_path)?.iter().filter_map(|(_, w)| percentile_spread(w, 0.1, 0.9)).collect();
            let blocks = block_means(&spreads, 10);
            if !blocks.is_empty() {
                let text: Vec<String> = blocks.iter().map(|b| format!("{b:.1}")).collect();
                out.push_str(&format!("  regional wait spread p90-p10 per 10 episodes: {} s\n", text.join(", ")));
            }
        }
    }
    let results_path = dir.join(RESULTS);
    if results_path.exists() {
        let (method, mean) = read_aggregate(&results_path)?;
        out.push_str(&format!(
            "evaluation ({method}): apwt {:.2} s, pf_inter {:.4}, pf_intra {:.4}, pvr {:.4}\n",
            mean.apwt, mean.pf_inter, mean.pf_intra, mean.pvr
        ));
    }
    if out.is_empty() {
        return Err(CliError::data(format!("{} holds neither {TRAIN_LOG} nor {RESULTS}", dir.display())));
    }
    Ok(out.trim_end().to_string())
}
