//! Command-line interface.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use minent_core::generator::{generate, read_bits, write_bits, GeneratorConfig, DEFAULT_BURN_IN_BITS};
use minent_core::monte_carlo::{mc_entropies, AvgMode, McConfig, WindowMode};
use minent_core::oracle::exact_report;
use minent_core::predictors::counting::{evaluate, fit_counting};
use minent_core::predictors::nist::{nist_predict, NistConfig, NistPredictor};
use minent_core::{AlphaShape, GbarParams, Strategy};
use serde::Serialize;

use crate::spec::{ExperimentSpec, Family};
use crate::sweep::{self, params_row, Row, RunContext};

#[derive(Debug, Parser)]
#[command(name = "minent", version, about = "Min-entropy of gbAR(p) binary sources")]
pub struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a bit sequence and write it with its JSON sidecar.
    Generate(GenerateArgs),
    /// Exact entropies from the transition law.
    Exact(ExactArgs),
    /// Monte Carlo entropies from simulated data.
    Mc(McArgs),
    /// Predictor estimates on bit files.
    Predict(PredictArgs),
    /// Run a sweep from a spec file or a built-in preset.
    Sweep(SweepArgs),
    /// Print a built-in preset.
    Preset {
        #[arg(long)]
        family: Family,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Model as JSON {"alpha": [...], "beta": b, "epsilon": e}, or @path.
    #[arg(long, conflicts_with_all = ["shape", "p", "mass", "signs"])]
    pub params: Option<String>,
    #[arg(long, default_value = "uniform")]
    pub shape: AlphaShape,
    #[arg(long)]
    pub p: Option<usize>,
    /// Total coefficient mass |alpha|; beta = 1 - mass.
    #[arg(long, default_value_t = 0.5)]
    pub mass: f64,
    /// Sign pattern, repeated up to length p (e.g. 1,-1).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub signs: Option<Vec<i8>>,
    /// P(noise bit = 1).
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
}

impl ModelArgs {
    pub fn resolve(&self) -> anyhow::Result<(GbarParams, Option<AlphaShape>)> {
        if let Some(src) = &self.params {
            let text = match src.strip_prefix('@') {
                Some(path) => std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?,
                None => src.clone(),
            };
            return Ok((GbarParams::from_json(&text)?, None));
        }
        let p = self.p.context("either --params or --p is required")?;
        let signs = self
            .signs
            .as_ref()
            .map(|s| s.iter().copied().cycle().take(p).collect::<Vec<_>>());
        if signs.as_ref().is_some_and(Vec::is_empty) {
            bail!("--signs must not be empty");
        }
        let params = GbarParams::from_shape(self.shape, p, self.mass, signs.as_deref(), self.epsilon)?;
        Ok((params, Some(self.shape)))
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub bits: usize,
    #[arg(long, default_value_t = DEFAULT_BURN_IN_BITS)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output bit file; the sidecar goes to <out>.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Future lengths; each estimate covers n + 1 bits.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// CSV destination (default stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = minent_core::monte_carlo::DEFAULT_NUM_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = minent_core::monte_carlo::DEFAULT_SAMPLE_BITS)]
    pub sample_bits: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use empirical conditional maxima for h_avg.
    #[arg(long)]
    pub empirical: bool,
    /// Count non-overlapping windows only.
    #[arg(long)]
    pub disjoint: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Training bit file (also the test file for next-bit predictors).
    #[arg(long)]
    pub train: PathBuf,
    /// Test bit file; without it the training file is split.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Training fraction when splitting a single file.
    #[arg(long, default_value_t = 0.8)]
    pub split: f64,
    /// Context length; defaults to the order recorded in the sidecar.
    #[arg(long)]
    pub p_model: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub target_bits: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "joint")]
    pub strategy: Vec<String>,
    /// Next-bit predictors to run on the test data.
    #[arg(long, value_delimiter = ',')]
    pub nist: Vec<NistPredictor>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, conflicts_with = "family", required_unless_present = "family")]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub family: Option<Family>,
    /// Output directory; overrides the spec.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sweep seed; overrides the spec.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .context("configuring worker pool")?;
    }
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Exact(a) => cmd_exact(&a),
        Command::Mc(a) => cmd_mc(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Sweep(a) => cmd_sweep(&a, cli.jobs).map(|_| ()),
        Command::Preset { family } => {
            println!("{}", family.preset_json().trim_end());
            Ok(())
        }
    }
}

pub fn cmd_generate(a: &GenerateArgs) -> anyhow::Result<()> {
    let (params, _) = a.model.resolve()?;
    let cfg = GeneratorConfig::new(params, a.bits, a.seed).with_burn_in(a.burn_in);
    let bits = generate(&cfg)?;
    write_bits(&a.out, &bits, Some(&cfg))?;
    Ok(())
}

fn emit(rows: &[Row], out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => sweep::write_csv_file(path, rows),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            sweep::write_csv(&mut lock, rows)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn shaped_row(family: &str, point: usize, params: &GbarParams, shape: Option<AlphaShape>, seed: u64) -> Row {
    let mut row = params_row(family, point, params, seed);
    if let Some(s) = shape {
        row.shape = s.as_str().into();
    }
    row
}

pub fn cmd_exact(a: &ExactArgs) -> anyhow::Result<()> {
    let (params, shape) = a.model.resolve()?;
    let rows: Vec<Row> = a
        .n
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let mut row = shaped_row("exact", i, &params, shape, 0);
            row.method = "exact".into();
            row.n = Some(n);
            match exact_report(&params, n) {
                Ok(r) => row.apply_entropy(&r),
                Err(e) => row.error = e.to_string(),
            }
            row.seal()
        })
        .collect();
    emit(&rows, a.out.as_deref())
}

pub fn cmd_mc(a: &McArgs) -> anyhow::Result<()> {
    let (params, shape) = a.model.resolve()?;
    let rows: Vec<Row> = a
        .n
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let mut row = shaped_row("mc", i, &params, shape, a.seed);
            row.method = "mc".into();
            row.n = Some(n);
            row.num_samples = Some(a.samples);
            row.sample_bits = Some(a.sample_bits);
            let mut cfg = McConfig::new(params.clone(), n, a.seed).with_size(a.samples, a.sample_bits);
            if a.empirical {
                cfg.avg_mode = AvgMode::Empirical;
            }
            if a.disjoint {
                cfg.window_mode = WindowMode::Disjoint;
            }
            match mc_entropies(&cfg) {
                Ok(r) => row.apply_entropy(&r),
                Err(e) => row.error = e.to_string(),
            }
            row.seal()
        })
        .collect();
    emit(&rows, a.out.as_deref())
}

fn parse_strategy(s: &str) -> anyhow::Result<Strategy> {
    match s {
        "joint" => Ok(Strategy::Joint),
        "greedy" => Ok(Strategy::Greedy),
        other => bail!("unknown strategy {other:?} (expected joint or greedy)"),
    }
}

pub fn cmd_predict(a: &PredictArgs) -> anyhow::Result<()> {
    let (first, cfg) = read_bits(&a.train)?;
    let (train, test) = match &a.test {
        Some(path) => (first, read_bits(path)?.0),
        None => {
            if !(0.0 < a.split && a.split < 1.0) {
                bail!("--split must be in (0, 1)");
            }
            let cut = (first.len() as f64 * a.split) as usize;
            (first.slice(0, cut), first.slice(cut, first.len()))
        }
    };
    let strategies: Vec<Strategy> = a.strategy.iter().map(|s| parse_strategy(s)).collect::<anyhow::Result<_>>()?;
    let p_model = a
        .p_model
        .or_else(|| cfg.as_ref().map(|c| c.params.p()))
        .context("--p-model is required when the bit file has no generator sidecar")?;
    let seed = cfg.as_ref().map_or(0, |c| c.seed);
    let template = |point: usize| -> Row {
        let mut row = match &cfg {
            Some(c) => params_row("predict", point, &c.params, seed),
            None => Row {
                family: "predict".into(),
                point,
                p: p_model,
                ..Row::default()
            },
        };
        row.train_bits = Some(train.len());
        row.test_bits = Some(test.len());
        row
    };

    let mut rows = Vec::new();
    for &k in &a.target_bits {
        let point = rows.len();
        match fit_counting(&train, p_model, k) {
            Ok(pred) => {
                for &s in &strategies {
                    let mut row = template(point);
                    row.method = "counting".into();
                    row.target_bits = Some(k);
                    match evaluate(&pred, &test, s) {
                        Ok(e) => row.apply_estimate(&e),
                        Err(e) => {
                            row.strategy = s.as_str().into();
                            row.error = e.to_string();
                        }
                    }
                    rows.push(row.seal());
                }
            }
            Err(e) => {
                let mut row = template(point);
                row.method = "counting".into();
                row.target_bits = Some(k);
                row.error = e.to_string();
                rows.push(row.seal());
            }
        }
    }
    let nist_cfg = NistConfig::default();
    for &which in &a.nist {
        let mut row = template(rows.len());
        row.method = "nist".into();
        row.target_bits = Some(1);
        row.predictor = which.as_str().into();
        match nist_predict(&test, which, &nist_cfg) {
            Ok(e) => row.apply_estimate(&e),
            Err(e) => row.error = e.to_string(),
        }
        rows.push(row.seal());
    }
    emit(&rows, a.out.as_deref())
}

#[derive(Debug, Serialize)]
struct RunMeta<'a> {
    family: &'a str,
    version: &'static str,
    started_unix: f64,
    finished_unix: f64,
    elapsed_secs: f64,
    host: String,
    jobs: usize,
    points: usize,
    rows: usize,
    failed_rows: usize,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn host_name() -> String {
    std::env::var("HOSTNAME")
        .ok()
        .or_else(|| std::fs::read_to_string("/etc/hostname").ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_default()
}

/// Paths written by a sweep.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub csv: PathBuf,
    pub spec: PathBuf,
    pub meta: PathBuf,
}

/// Runs a sweep and writes `<family>.csv`, the resolved `<family>.spec.json`
/// and `<family>.meta.json` (timing and host) into the output directory.
pub fn cmd_sweep(a: &SweepArgs, jobs: usize) -> anyhow::Result<SweepOutput> {
    let mut spec = match (&a.spec, a.family) {
        (Some(path), _) => ExperimentSpec::load(path)?,
        (None, Some(f)) => f.preset(),
        (None, None) => bail!("either --spec or --family is required"),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let dir = a
        .out
        .clone()
        .or_else(|| spec.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    spec.output_dir = None;
    run_spec(&spec, &dir, jobs)
}

pub fn run_spec(spec: &ExperimentSpec, dir: &Path, jobs: usize) -> anyhow::Result<SweepOutput> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let started = unix_now();
    let clock = Instant::now();
    let ctx = RunContext {
        artifact_dir: Some(dir.to_path_buf()),
    };
    let points = sweep::expand(spec).len();
    let rows = sweep::run_sweep(spec, &ctx);

    let out = SweepOutput {
        csv: dir.join(format!("{}.csv", spec.family)),
        spec: dir.join(format!("{}.spec.json", spec.family)),
        meta: dir.join(format!("{}.meta.json", spec.family)),
    };
    sweep::write_csv_file(&out.csv, &rows)?;
    std::fs::write(&out.spec, spec.to_json() + "\n")?;
    let meta = RunMeta {
        family: &spec.family,
        version: env!("CARGO_PKG_VERSION"),
        started_unix: started,
        finished_unix: unix_now(),
        elapsed_secs: clock.elapsed().as_secs_f64(),
        host: host_name(),
        jobs: if jobs == 0 { rayon::current_num_threads() } else { jobs },
        points,
        rows: rows.len(),
        failed_rows: rows.iter().filter(|r| !r.error.is_empty()).count(),
    };
    std::fs::write(&out.meta, serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(out)
}
