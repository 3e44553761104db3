//! Predictor-based min-entropy estimation.
//!
//! A predictor that guesses the next `k` bits correctly with probability
//! `P` certifies roughly `-log2(P) / k` bits of min-entropy per bit. The
//! [`counting`] predictor classifies over all `2^k` futures (joint decoding)
//! or rolls out next-bit argmaxes (greedy decoding); [`nist`] holds the four
//! next-bit predictors whose final estimate is the smaller of a global
//! (accuracy) and a local (longest run) bound.

pub mod counting;
pub mod nist;

use serde::{Deserialize, Serialize};

pub use counting::{evaluate, evaluate_with, fit_counting, CountingPredictor, EvalOptions, Prediction};
pub use nist::{nist_predict, NistConfig, NistPredictor};

/// z for a two-sided 95% Wald interval.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Joint,
    Greedy,
    NextBit,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Joint => "joint",
            Strategy::Greedy => "greedy",
            Strategy::NextBit => "next_bit",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictorEstimate {
    pub name: String,
    pub strategy: Strategy,
    pub p_acc: f64,
    pub n_evals: u64,
    pub target_bits: usize,
    /// `-log2(p_acc) / target_bits`; `+inf` when nothing was predicted right.
    pub h_per_bit: f64,
    /// Half-width of the 95% interval on `h_per_bit`; `None` when `p_acc = 0`.
    pub ci_delta: Option<f64>,
    pub h_global: Option<f64>,
    pub h_local: Option<f64>,
    pub h_final: f64,
    /// Evaluations whose context never appeared in training.
    pub unseen_contexts: u64,
}

impl PredictorEstimate {
    /// Estimate from `correct` hits out of `n_evals` predictions of
    /// `target_bits` bits each.
    pub fn from_accuracy(
        name: impl Into<String>,
        strategy: Strategy,
        correct: u64,
        n_evals: u64,
        target_bits: usize,
    ) -> Self {
        let p_acc = if n_evals == 0 { 0.0 } else { correct as f64 / n_evals as f64 };
        let h_per_bit = entropy_per_bit(p_acc, target_bits);
        Self {
            name: name.into(),
            strategy,
            p_acc,
            n_evals,
            target_bits,
            h_per_bit,
            ci_delta: wald_delta(p_acc, n_evals, target_bits, Z_95),
            h_global: None,
            h_local: None,
            h_final: h_per_bit,
            unseen_contexts: 0,
        }
    }

    /// `[h - delta, h + delta]`, or `None` when the interval is undefined.
    pub fn interval(&self) -> Option<(f64, f64)> {
        self.ci_delta.map(|d| (self.h_per_bit - d, self.h_per_bit + d))
    }

    pub fn covers(&self, h: f64) -> bool {
        self.interval().is_some_and(|(lo, hi)| lo <= h && h <= hi)
    }
}

/// `-log2(p_acc) / target_bits`, `+inf` for zero accuracy.
pub fn entropy_per_bit(p_acc: f64, target_bits: usize) -> f64 {
    if p_acc <= 0.0 {
        f64::INFINITY
    } else {
        -p_acc.log2() / target_bits as f64
    }
}

/// Wald half-width propagated through `-log2(P) / target_bits`:
/// `z / (target_bits ln 2) * sqrt((1/P - 1) / n_evals)`.
pub fn wald_delta(p_acc: f64, n_evals: u64, target_bits: usize, z: f64) -> Option<f64> {
    if p_acc <= 0.0 || n_evals == 0 {
        return None;
    }
    let spread = ((1.0 / p_acc - 1.0) / n_evals as f64).sqrt();
    Some(z / (target_bits as f64 * std::f64::consts::LN_2) * spread)
}
