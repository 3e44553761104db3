//! Empirical min-entropy from simulated gbAR(p) data.
//!
//! Counts of `(p + n + 1)`-bit windows are pooled over independent samples.
//! `h_min` uses the empirical law of the `n + 1` future bits. `h_avg` weights
//! the exact `max_f P(f | c)` by empirical context frequencies
//! ([`AvgMode::Hybrid`]) or uses the empirical conditional maxima as well
//! ([`AvgMode::Empirical`]).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{generate, GeneratorConfig, DEFAULT_BURN_IN_BITS};
use crate::oracle::{limit_from_oracle, min_entropy_limit, EntropyReport, MarkovOracle, Method, MAX_EXACT_BITS};
use crate::types::GbarParams;

pub const DEFAULT_NUM_SAMPLES: usize = 100;
/// 10^5 bytes.
pub const DEFAULT_SAMPLE_BITS: usize = 800_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AvgMode {
    #[default]
    Hybrid,
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    /// Stride-1 windows.
    #[default]
    Sliding,
    /// Non-overlapping blocks of `p + n + 1` bits.
    Disjoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub params: GbarParams,
    pub num_samples: usize,
    pub sample_bits: usize,
    pub n: usize,
    pub base_seed: u64,
    pub burn_in_bits: usize,
    pub avg_mode: AvgMode,
    pub window_mode: WindowMode,
}

impl McConfig {
    pub fn new(params: GbarParams, n: usize, base_seed: u64) -> Self {
        Self {
            params,
            num_samples: DEFAULT_NUM_SAMPLES,
            sample_bits: DEFAULT_SAMPLE_BITS,
            n,
            base_seed,
            burn_in_bits: DEFAULT_BURN_IN_BITS,
            avg_mode: AvgMode::Hybrid,
            window_mode: WindowMode::Sliding,
        }
    }

    pub fn with_size(mut self, num_samples: usize, sample_bits: usize) -> Self {
        self.num_samples = num_samples;
        self.sample_bits = sample_bits;
        self
    }

    /// Seed of sample `i`.
    pub fn sample_seed(&self, i: usize) -> u64 {
        self.base_seed.wrapping_add(i as u64)
    }
}

/// Pooled `(context, future)` window counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowCounts {
    pub p: usize,
    pub k: usize,
    pub counts: Vec<u64>,
}

impl WindowCounts {
    fn new(p: usize, k: usize) -> Self {
        Self {
            p,
            k,
            counts: vec![0; 1 << (p + k)],
        }
    }

    fn merge(mut self, other: WindowCounts) -> Self {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn future_counts(&self) -> Vec<u64> {
        let fmask = (1usize << self.k) - 1;
        let mut out = vec![0; 1 << self.k];
        for (w, &c) in self.counts.iter().enumerate() {
            out[w & fmask] += c;
        }
        out
    }

    pub fn context_counts(&self) -> Vec<u64> {
        self.counts
            .chunks(1 << self.k)
            .map(|row| row.iter().sum())
            .collect()
    }
}

fn count_sample(cfg: &McConfig, i: usize, into: &mut WindowCounts) -> Result<()> {
    let gen = GeneratorConfig::new(cfg.params.clone(), cfg.sample_bits, cfg.sample_seed(i))
        .with_burn_in(cfg.burn_in_bits);
    let seq = generate(&gen)?;
    let width = into.p + into.k;
    match cfg.window_mode {
        WindowMode::Sliding => {
            for w in seq.windows(width) {
                into.counts[w as usize] += 1;
            }
        }
        WindowMode::Disjoint => {
            for w in seq.windows(width).step_by(width) {
                into.counts[w as usize] += 1;
            }
        }
    }
    Ok(())
}

/// Generates and counts all samples of `cfg`.
pub fn mc_counts(cfg: &McConfig) -> Result<WindowCounts> {
    let p = cfg.params.p();
    let k = cfg.n + 1;
    if p + k > MAX_EXACT_BITS {
        return Err(Error::DimensionOverflow {
            bits: p + k,
            max: MAX_EXACT_BITS,
        });
    }
    if cfg.num_samples == 0 {
        return Err(Error::InvalidArgument("num_samples must be positive".into()));
    }
    if cfg.sample_bits < p + k {
        return Err(Error::TooShort {
            needed: p + k,
            got: cfg.sample_bits,
        });
    }
    (0..cfg.num_samples)
        .into_par_iter()
        .try_fold(
            || WindowCounts::new(p, k),
            |mut acc, i| {
                count_sample(cfg, i, &mut acc)?;
                Ok(acc)
            },
        )
        .try_reduce(|| WindowCounts::new(p, k), |a, b| Ok(a.merge(b)))
}

/// Monte Carlo entropy report for `cfg`.
pub fn mc_entropies(cfg: &McConfig) -> Result<EntropyReport> {
    let counts = mc_counts(cfg)?;
    let oracle = MarkovOracle::from_params(&cfg.params)?;
    let limit = if cfg.params.is_uniform_noise() && cfg.params.is_positive() {
        min_entropy_limit(&cfg.params)?
    } else {
        limit_from_oracle(&oracle)?
    };
    let mut report = entropies_from_counts(&counts, &oracle, cfg.avg_mode)?;
    report.h_limit = Some(limit.value);
    report.h_limit_approx = limit.approximate;
    Ok(report)
}

/// Entropies from pooled window counts; `oracle` supplies the exact
/// conditional maxima in hybrid mode.
pub fn entropies_from_counts(
    counts: &WindowCounts,
    oracle: &MarkovOracle,
    mode: AvgMode,
) -> Result<EntropyReport> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::Empty("no windows counted"));
    }
    let n = counts.k - 1;
    let k = counts.k as f64;
    let total_f = total as f64;

    let max_future = counts.future_counts().into_iter().max().unwrap_or(0);
    let h_min = -(max_future as f64 / total_f).log2() / k;

    let ctx = counts.context_counts();
    let unseen_contexts = ctx.iter().filter(|&&c| c == 0).count();

    let (guess, worst) = match mode {
        AvgMode::Hybrid => {
            let best = oracle.max_future_given_context(n)?;
            let guess: f64 = ctx
                .iter()
                .zip(&best)
                .map(|(&c, b)| c as f64 / total_f * b)
                .sum();
            let worst = ctx
                .iter()
                .zip(&best)
                .filter(|(&c, _)| c > 0)
                .map(|(_, &b)| b)
                .fold(0.0, f64::max);
            (guess, worst)
        }
        AvgMode::Empirical => {
            let mut hits = 0u64;
            let mut worst = 0.0f64;
            for (row, &c) in counts.counts.chunks(1 << counts.k).zip(&ctx) {
                let m = row.iter().copied().max().unwrap_or(0);
                hits += m;
                if c > 0 {
                    worst = worst.max(m as f64 / c as f64);
                }
            }
            (hits as f64 / total_f, worst)
        }
    };
    let h_avg_total = -guess.log2();

    Ok(EntropyReport {
        p: counts.p,
        n,
        h_min,
        h_avg: h_avg_total / k,
        h_worst: -worst.log2() / k,
        h_avg_total,
        h_limit: None,
        h_limit_approx: false,
        method: Method::Mc,
        unseen_contexts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::AlphaShape;

    #[test]
    fn noise_only_full_entropy() {
        let params = GbarParams::new(vec![0.0], 1.0, 0.5).unwrap();
        let cfg = McConfig::new(params, 3, 1).with_size(10, 400_000);
        let r = mc_entropies(&cfg).unwrap();
        assert!((r.h_min - 1.0).abs() < 0.01, "h_min {}", r.h_min);
        assert!((r.h_avg - 1.0).abs() < 1e-12);
        assert_eq!(r.method, Method::Mc);
        assert_eq!(r.unseen_contexts, 0);
    }

    #[test]
    fn point_to_point_average_matches_limit() {
        let params = GbarParams::from_shape(AlphaShape::PointToPoint, 4, 0.5, None, 0.5).unwrap();
        let cfg = McConfig::new(params, 4, 9).with_size(10, 800_000);
        let r = mc_entropies(&cfg).unwrap();
        assert!((r.h_avg - 0.4150).abs() < 0.005, "h_avg {}", r.h_avg);
        assert!((r.h_limit.unwrap() - 0.415_037_5).abs() < 1e-6);
    }

    #[test]
    fn disjoint_windows_count_fewer() {
        let params = GbarParams::new(vec![0.5], 0.5, 0.5).unwrap();
        let mut cfg = McConfig::new(params, 1, 3).with_size(2, 3000);
        cfg.burn_in_bits = 0;
        let sliding = mc_counts(&cfg).unwrap().total();
        cfg.window_mode = WindowMode::Disjoint;
        let disjoint = mc_counts(&cfg).unwrap().total();
        assert_eq!(sliding, 2 * (3000 - 2));
        assert_eq!(disjoint, 2 * 1000);
    }

    #[test]
    fn merge_is_order_independent() {
        let params = GbarParams::new(vec![0.3, -0.2], 0.5, 0.4).unwrap();
        let cfg = McConfig::new(params, 2, 77).with_size(4, 5000);
        let whole = mc_counts(&cfg).unwrap();
        let mut parts: Vec<WindowCounts> = (0..4)
            .map(|i| {
                let mut c = WindowCounts::new(2, 3);
                count_sample(&cfg, i, &mut c).unwrap();
                c
            })
            .collect();
        parts.reverse();
        let merged = parts.into_iter().reduce(WindowCounts::merge).unwrap();
        assert_eq!(merged, whole);
    }

    #[test]
    fn empirical_mode_close_to_hybrid() {
        let params = GbarParams::from_shape(AlphaShape::Uniform, 2, 0.5, None, 0.5).unwrap();
        let mut cfg = McConfig::new(params, 2, 5).with_size(5, 400_000);
        let hybrid = mc_entropies(&cfg).unwrap();
        cfg.avg_mode = AvgMode::Empirical;
        let empirical = mc_entropies(&cfg).unwrap();
        assert!((hybrid.h_avg - empirical.h_avg).abs() < 0.01);
        assert_eq!(hybrid.h_min, empirical.h_min);
    }

    #[test]
    fn rejects_oversized_tables() {
        let params = GbarParams::from_shape(AlphaShape::Uniform, 10, 0.5, None, 0.5).unwrap();
        let cfg = McConfig::new(params, 17, 0);
        assert!(matches!(mc_counts(&cfg), Err(Error::DimensionOverflow { .. })));
    }
}
