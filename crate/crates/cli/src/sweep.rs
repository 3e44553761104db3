//! Sweep expansion, point execution and the consolidated result table.

use std::path::{Path, PathBuf};

use anyhow::Context;
use minent_core::generator::{generate, GeneratorConfig};
use minent_core::monte_carlo::{mc_entropies, McConfig};
use minent_core::oracle::{exact_report, EntropyReport, MAX_EXACT_BITS, MAX_ORACLE_ORDER};
use minent_core::predictors::counting::{evaluate, fit_counting};
use minent_core::predictors::nist::{nist_predict, NistPredictor};
use minent_core::{AlphaShape, GbarParams, PredictorEstimate, Strategy};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::external;
use crate::spec::{ExperimentSpec, MethodKind};

/// One model of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPoint {
    pub shape: AlphaShape,
    pub p: usize,
    pub alpha_mass: f64,
    /// Sign pattern as written in the spec, if any.
    pub signs: Option<Vec<i8>>,
    pub epsilon: f64,
}

impl ModelPoint {
    pub fn params(&self) -> anyhow::Result<GbarParams> {
        let signs = self
            .signs
            .as_ref()
            .map(|pat| pat.iter().copied().cycle().take(self.p).collect::<Vec<_>>());
        GbarParams::from_shape(self.shape, self.p, self.alpha_mass, signs.as_deref(), self.epsilon)
            .with_context(|| format!("invalid model {self:?}"))
    }

    fn signs_label(&self) -> String {
        match &self.signs {
            None => String::new(),
            Some(s) => s.iter().map(|&x| if x < 0 { '-' } else { '+' }).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Exact { n: usize },
    Mc { n: usize },
    Counting { target_bits: usize },
    Nist { predictor: NistPredictor },
    External,
}

/// A unit of work; `index` fixes its position in the output.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub index: usize,
    pub model: ModelPoint,
    pub task: Task,
}

/// Expands the spec grid in a fixed order: model, then method, then the
/// method's own axis.
pub fn expand(spec: &ExperimentSpec) -> Vec<Point> {
    let g = &spec.models;
    let signs: Vec<Option<Vec<i8>>> = if g.signs.is_empty() {
        vec![None]
    } else {
        g.signs.iter().cloned().map(Some).collect()
    };
    let mut out = Vec::new();
    for &shape in &g.shapes {
        for &p in &g.p {
            for &alpha_mass in &g.alpha_mass {
                for s in &signs {
                    let model = ModelPoint {
                        shape,
                        p,
                        alpha_mass,
                        signs: s.clone(),
                        epsilon: g.epsilon,
                    };
                    for method in &spec.methods {
                        let tasks: Vec<Task> = match method {
                            MethodKind::Exact => spec.n.iter().map(|&n| Task::Exact { n }).collect(),
                            MethodKind::Mc => spec.n.iter().map(|&n| Task::Mc { n }).collect(),
                            MethodKind::Counting => spec
                                .target_bits
                                .iter()
                                .map(|&target_bits| Task::Counting { target_bits })
                                .collect(),
                            MethodKind::Nist => spec
                                .nist
                                .predictors
                                .iter()
                                .map(|&predictor| Task::Nist { predictor })
                                .collect(),
                            MethodKind::External => vec![Task::External],
                        };
                        for task in tasks {
                            out.push(Point {
                                index: out.len(),
                                model: model.clone(),
                                task,
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

/// One CSV record. Optional fields serialize as empty cells.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub family: String,
    pub point: usize,
    pub method: String,
    pub predictor: String,
    pub strategy: String,
    pub shape: String,
    pub p: usize,
    pub alpha_mass: f64,
    pub signs: String,
    /// JSON array of the model coefficients.
    pub alpha: String,
    pub beta: Option<f64>,
    pub epsilon: f64,
    pub n: Option<usize>,
    pub target_bits: Option<usize>,
    pub h_min: Option<f64>,
    pub h_avg: Option<f64>,
    pub h_worst: Option<f64>,
    pub h_avg_total: Option<f64>,
    pub h_limit: Option<f64>,
    pub h_limit_approx: Option<bool>,
    pub num_samples: Option<usize>,
    pub sample_bits: Option<usize>,
    pub train_bits: Option<usize>,
    pub test_bits: Option<usize>,
    pub p_acc: Option<f64>,
    pub n_evals: Option<u64>,
    pub h_per_bit: Option<f64>,
    pub ci_delta: Option<f64>,
    pub h_global: Option<f64>,
    pub h_local: Option<f64>,
    pub h_final: Option<f64>,
    pub unseen_contexts: Option<u64>,
    pub seed: u64,
    pub config_hash: String,
    pub artifact: String,
    pub error: String,
}

fn opt_str<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

impl Row {
    /// Canonical string of the fields that determine a row's result.
    pub fn canonical_config(&self) -> String {
        format!(
            "family={};method={};predictor={};strategy={};alpha={};beta={};epsilon={};n={};target_bits={};\
             num_samples={};sample_bits={};train_bits={};test_bits={};seed={}",
            self.family,
            self.method,
            self.predictor,
            self.strategy,
            self.alpha,
            opt_str(&self.beta),
            self.epsilon,
            opt_str(&self.n),
            opt_str(&self.target_bits),
            opt_str(&self.num_samples),
            opt_str(&self.sample_bits),
            opt_str(&self.train_bits),
            opt_str(&self.test_bits),
            self.seed,
        )
    }

    pub fn compute_hash(&self) -> String {
        config_hash(&self.canonical_config())
    }

    /// Sets `config_hash` from the recorded parameters.
    pub fn seal(mut self) -> Self {
        self.config_hash = self.compute_hash();
        self
    }

    pub fn apply_entropy(&mut self, r: &EntropyReport) {
        self.h_min = Some(r.h_min);
        self.h_avg = Some(r.h_avg);
        self.h_worst = Some(r.h_worst);
        self.h_avg_total = Some(r.h_avg_total);
        self.h_limit = r.h_limit;
        self.h_limit_approx = Some(r.h_limit_approx);
        self.unseen_contexts = Some(r.unseen_contexts as u64);
    }

    pub fn apply_estimate(&mut self, e: &PredictorEstimate) {
        self.predictor = e.name.clone();
        self.strategy = e.strategy.as_str().into();
        self.p_acc = Some(e.p_acc);
        self.n_evals = Some(e.n_evals);
        self.h_per_bit = Some(e.h_per_bit);
        self.ci_delta = e.ci_delta;
        self.h_global = e.h_global;
        self.h_local = e.h_local;
        self.h_final = Some(e.h_final);
        self.unseen_contexts = Some(e.unseen_contexts);
    }
}

/// Row skeleton for a model given directly as parameters.
pub fn params_row(family: &str, point: usize, params: &GbarParams, seed: u64) -> Row {
    Row {
        family: family.into(),
        point,
        p: params.p(),
        alpha_mass: params.alpha_mass(),
        alpha: serde_json::to_string(params.alpha()).expect("floats serialize"),
        beta: Some(params.beta()),
        epsilon: params.epsilon(),
        seed,
        ..Row::default()
    }
}

/// First 16 hex digits of SHA-256.
pub fn config_hash(canonical: &str) -> String {
    let digest = Sha256::digest(canonical.as_bytes());
    hex::encode(&digest[..8])
}

/// Seed of a point, derived from the sweep seed and the point's settings so
/// that adding axis values leaves existing points unchanged.
pub fn point_seed(base: u64, family: &str, model: &ModelPoint, task: &Task) -> u64 {
    let key = format!("{base}|{family}|{model:?}|{task:?}");
    let digest = Sha256::digest(key.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Runtime context shared by all points.
#[derive(Debug, Clone, Default)]
pub struct RunContext {
    /// Directory for per-point artifacts (external hook inputs and outputs).
    pub artifact_dir: Option<PathBuf>,
}

fn base_row(spec: &ExperimentSpec, pt: &Point, seed: u64) -> Row {
    Row {
        family: spec.family.clone(),
        point: pt.index,
        shape: pt.model.shape.as_str().into(),
        p: pt.model.p,
        alpha_mass: pt.model.alpha_mass,
        signs: pt.model.signs_label(),
        epsilon: pt.model.epsilon,
        seed,
        ..Row::default()
    }
}

/// Exact enumeration is feasible for this model and future length.
pub fn exact_feasible(p: usize, n: usize) -> bool {
    p <= MAX_ORACLE_ORDER && p + n + 1 <= MAX_EXACT_BITS
}

/// Runs one point. Failures become a single row with the error column set.
pub fn run_point(spec: &ExperimentSpec, pt: &Point, ctx: &RunContext) -> Vec<Row> {
    let seed = point_seed(spec.seed, &spec.family, &pt.model, &pt.task);
    let mut base = base_row(spec, pt, seed);
    match &pt.task {
        Task::Exact { n } | Task::Mc { n } => base.n = Some(*n),
        Task::Counting { target_bits } => {
            base.target_bits = Some(*target_bits);
            base.train_bits = Some(spec.counting.train_bits);
            base.test_bits = Some(spec.counting.test_bits);
        }
        Task::Nist { predictor } => {
            base.predictor = predictor.as_str().into();
            base.strategy = Strategy::NextBit.as_str().into();
            base.target_bits = Some(1);
            base.test_bits = Some(spec.nist.bits);
        }
        Task::External => {
            if let Some(hook) = &spec.external {
                base.test_bits = Some(hook.bits);
            }
        }
    }
    base.method = match &pt.task {
        Task::Exact { n } if !exact_feasible(pt.model.p, *n) => "mc".into(),
        Task::Exact { .. } => "exact".into(),
        Task::Mc { .. } => "mc".into(),
        Task::Counting { .. } => "counting".into(),
        Task::Nist { .. } => "nist".into(),
        Task::External => "external".into(),
    };
    if base.method == "mc" {
        base.num_samples = Some(spec.mc.num_samples);
        base.sample_bits = Some(spec.mc.sample_bits);
    }

    let params = match pt.model.params() {
        Ok(p) => p,
        Err(e) => {
            base.error = format!("{e:#}");
            return vec![base.seal()];
        }
    };
    base.alpha = serde_json::to_string(params.alpha()).expect("floats serialize");
    base.beta = Some(params.beta());

    match execute(spec, pt, &params, seed, &base, ctx) {
        Ok(rows) => rows.into_iter().map(Row::seal).collect(),
        Err(e) => {
            base.error = format!("{e:#}");
            vec![base.seal()]
        }
    }
}

fn execute(
    spec: &ExperimentSpec,
    pt: &Point,
    params: &GbarParams,
    seed: u64,
    base: &Row,
    ctx: &RunContext,
) -> anyhow::Result<Vec<Row>> {
    let mut row = base.clone();
    match &pt.task {
        Task::Exact { n } | Task::Mc { n } => {
            let report = if base.method == "exact" {
                exact_report(params, *n)?
            } else {
                let cfg = McConfig::new(params.clone(), *n, seed)
                    .with_size(spec.mc.num_samples, spec.mc.sample_bits);
                mc_entropies(&cfg)?
            };
            row.apply_entropy(&report);
            Ok(vec![row])
        }
        Task::Counting { target_bits } => {
            let c = &spec.counting;
            let p_model = c.p_model.unwrap_or(params.p());
            let train = generate(&GeneratorConfig::new(params.clone(), c.train_bits, seed))?;
            let test = generate(&GeneratorConfig::new(params.clone(), c.test_bits, seed.wrapping_add(1)))?;
            let pred = fit_counting(&train, p_model, *target_bits)?;
            c.strategies
                .iter()
                .map(|&s| {
                    let est = evaluate(&pred, &test, s)?;
                    let mut r = base.clone();
                    r.apply_estimate(&est);
                    Ok(r)
                })
                .collect()
        }
        Task::Nist { predictor } => {
            let stream = generate(&GeneratorConfig::new(params.clone(), spec.nist.bits, seed))?;
            let est = nist_predict(&stream, *predictor, &spec.nist.config)?;
            row.apply_estimate(&est);
            Ok(vec![row])
        }
        Task::External => {
            let hook = spec.external.as_ref().context("no external hook configured")?;
            let dir = ctx
                .artifact_dir
                .as_deref()
                .context("external hook needs an output directory")?;
            let stream = generate(&GeneratorConfig::new(params.clone(), hook.bits, seed))?;
            let stem = format!("{}_point{:04}", spec.family, pt.index);
            let out = external::run_hook(hook, &stream, dir, &stem)?;
            row.artifact = out.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(vec![row])
        }
    }
}

/// Runs every point of the spec on the current rayon pool and returns rows
/// ordered by point index.
pub fn run_sweep(spec: &ExperimentSpec, ctx: &RunContext) -> Vec<Row> {
    let points = expand(spec);
    let per_point: Vec<Vec<Row>> = points.par_iter().map(|pt| run_point(spec, pt, ctx)).collect();
    per_point.into_iter().flatten().collect()
}

/// Column names in output order.
pub fn header() -> Vec<&'static str> {
    vec![
        "family", "point", "method", "predictor", "strategy", "shape", "p", "alpha_mass", "signs", "alpha", "beta",
        "epsilon", "n", "target_bits", "h_min", "h_avg", "h_worst", "h_avg_total", "h_limit", "h_limit_approx",
        "num_samples", "sample_bits", "train_bits", "test_bits", "p_acc", "n_evals", "h_per_bit", "ci_delta",
        "h_global", "h_local", "h_final", "unseen_contexts", "seed", "config_hash", "artifact", "error",
    ]
}

/// Writes rows as RFC 4180 CSV. The header is written even with no rows.
pub fn write_csv<W: std::io::Write>(out: W, rows: &[Row]) -> anyhow::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header())?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(path: &Path, rows: &[Row]) -> anyhow::Result<()> {
    let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_csv(std::io::BufWriter::new(f), rows)
}

pub fn read_csv(path: &Path) -> anyhow::Result<Vec<Row>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    r.deserialize().map(|x| x.map_err(Into::into)).collect()
}
