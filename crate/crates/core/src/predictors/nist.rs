//! Next-bit predictors after SP 800-90B section 6.3 (binary alphabet).
//!
//! Each predictor walks the stream once, predicting every bit from the bits
//! before it. The global estimate uses the upper 99% bound on the accuracy;
//! the local estimate uses the longest run of correct predictions. Both are
//! floored at `1/2` and the final value is their minimum.
//!
//! Tie-breaking: MultiMCW takes the most recent bit when a window is
//! balanced; MultiMMC and LZ78Y take bit 1 when follower counts tie.
//! Scoreboard ties move the winner to the later sub-predictor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictors::{wald_delta, PredictorEstimate, Strategy, Z_95};
use crate::types::BitSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NistPredictor {
    MultiMcw,
    Lag,
    MultiMmc,
    Lz78y,
}

impl NistPredictor {
    pub const ALL: [NistPredictor; 4] = [
        NistPredictor::MultiMcw,
        NistPredictor::Lag,
        NistPredictor::MultiMmc,
        NistPredictor::Lz78y,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            NistPredictor::MultiMcw => "multimcw",
            NistPredictor::Lag => "lag",
            NistPredictor::MultiMmc => "multimmc",
            NistPredictor::Lz78y => "lz78y",
        }
    }
}

impl std::str::FromStr for NistPredictor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "multimcw" => Ok(NistPredictor::MultiMcw),
            "lag" => Ok(NistPredictor::Lag),
            "multimmc" => Ok(NistPredictor::MultiMmc),
            "lz78y" => Ok(NistPredictor::Lz78y),
            other => Err(Error::InvalidArgument(format!("unknown predictor {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NistConfig {
    pub mcw_windows: Vec<usize>,
    pub lag_depth: usize,
    pub mmc_max_order: usize,
    pub mmc_max_entries: usize,
    pub lz78y_max_depth: usize,
    pub lz78y_max_dictionary: usize,
    /// z of the upper bound on global accuracy.
    pub global_z: f64,
    /// Target probability for the longest-run bound.
    pub local_confidence: f64,
}

impl Default for NistConfig {
    fn default() -> Self {
        Self {
            mcw_windows: vec![63, 255, 1023, 4095],
            lag_depth: 128,
            mmc_max_order: 16,
            mmc_max_entries: 100_000,
            lz78y_max_depth: 16,
            lz78y_max_dictionary: 65_536,
            global_z: 2.576,
            local_confidence: 0.99,
        }
    }
}

/// Outcome of running a predictor over a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictionRecord {
    pub correct: u64,
    pub total: u64,
    pub longest_run: u64,
}

#[derive(Default)]
struct Tally {
    correct: u64,
    total: u64,
    run: u64,
    longest: u64,
}

impl Tally {
    #[inline]
    fn record(&mut self, hit: bool) {
        self.total += 1;
        if hit {
            self.correct += 1;
            self.run += 1;
            self.longest = self.longest.max(self.run);
        } else {
            self.run = 0;
        }
    }

    fn finish(self) -> PredictionRecord {
        PredictionRecord {
            correct: self.correct,
            total: self.total,
            longest_run: self.longest,
        }
    }
}

/// Scoreboard shared by the ensemble predictors.
struct Scoreboard {
    scores: Vec<u64>,
    winner: usize,
}

impl Scoreboard {
    fn new(size: usize) -> Self {
        Self {
            scores: vec![0; size],
            winner: 0,
        }
    }

    #[inline]
    fn credit(&mut self, j: usize) {
        self.scores[j] += 1;
        if self.scores[j] >= self.scores[self.winner] {
            self.winner = j;
        }
    }
}

fn run_multi_mcw(s: &BitSequence, cfg: &NistConfig) -> Result<PredictionRecord> {
    let windows = &cfg.mcw_windows;
    if windows.is_empty() || windows.windows(2).any(|w| w[0] >= w[1]) || windows[0] == 0 {
        return Err(Error::InvalidArgument("MultiMCW windows must be increasing and positive".into()));
    }
    let w1 = windows[0];
    if s.len() <= w1 {
        return Err(Error::TooShort { needed: w1 + 1, got: s.len() });
    }
    let mut ones = vec![0usize; windows.len()];
    let mut board = Scoreboard::new(windows.len());
    let mut tally = Tally::default();
    let mut frequent: Vec<Option<u8>> = vec![None; windows.len()];
    for i in 0..s.len() {
        // slide windows to cover s[i - w .. i)
        if i > 0 {
            let prev = s.get(i - 1) as usize;
            for (j, &w) in windows.iter().enumerate() {
                ones[j] += prev;
                if i > w {
                    ones[j] -= s.get(i - 1 - w) as usize;
                }
            }
        }
        if i < w1 {
            continue;
        }
        let bit = s.get(i);
        let last = s.get(i - 1);
        for (j, &w) in windows.iter().enumerate() {
            frequent[j] = (i >= w).then(|| {
                let zeros = w - ones[j];
                match ones[j].cmp(&zeros) {
                    std::cmp::Ordering::Greater => 1,
                    std::cmp::Ordering::Less => 0,
                    std::cmp::Ordering::Equal => last,
                }
            });
        }
        tally.record(frequent[board.winner] == Some(bit));
        for j in 0..windows.len() {
            if frequent[j] == Some(bit) {
                board.credit(j);
            }
        }
    }
    Ok(tally.finish())
}

fn run_lag(s: &BitSequence, cfg: &NistConfig) -> Result<PredictionRecord> {
    let depth = cfg.lag_depth;
    if depth == 0 {
        return Err(Error::InvalidArgument("lag depth must be positive".into()));
    }
    if s.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: s.len() });
    }
    let mut board = Scoreboard::new(depth);
    let mut tally = Tally::default();
    for i in 1..s.len() {
        let bit = s.get(i);
        // lag d is index d - 1; available when d <= i
        let available = depth.min(i);
        let predicted = (board.winner < available).then(|| s.get(i - 1 - board.winner));
        tally.record(predicted == Some(bit));
        for d in 0..available {
            if s.get(i - 1 - d) == bit {
                board.credit(d);
            }
        }
    }
    Ok(tally.finish())
}

/// Dense follower counts for binary contexts of one order.
struct ContextTable {
    counts: Vec<[u32; 2]>,
    entries: usize,
}

impl ContextTable {
    fn new(order: usize) -> Self {
        Self {
            counts: vec![[0; 2]; 1 << order],
            entries: 0,
        }
    }

    #[inline]
    fn present(&self, ctx: usize) -> bool {
        let [a, b] = self.counts[ctx];
        a + b > 0
    }

    #[inline]
    fn argmax(&self, ctx: usize) -> (u8, u32) {
        let [a, b] = self.counts[ctx];
        if b >= a {
            (1, b)
        } else {
            (0, a)
        }
    }
}

fn run_multi_mmc(s: &BitSequence, cfg: &NistConfig) -> Result<PredictionRecord> {
    let max_order = cfg.mmc_max_order;
    if max_order == 0 || max_order > 24 {
        return Err(Error::InvalidArgument("MultiMMC order must be in 1..=24".into()));
    }
    if s.len() < 3 {
        return Err(Error::TooShort { needed: 3, got: s.len() });
    }
    let mut tables: Vec<ContextTable> = (1..=max_order).map(ContextTable::new).collect();
    let mut board = Scoreboard::new(max_order);
    let mut tally = Tally::default();
    let mut sub: Vec<Option<u8>> = vec![None; max_order];
    // history register: bit 0 is the most recent bit
    let mut hist: u64 = u64::from(s.get(0)) << 1 | u64::from(s.get(1));
    for i in 2..s.len() {
        let bit = s.get(i);
        // learn: context of order d ending at s[i-2], follower s[i-1]
        let follower = (hist & 1) as usize;
        for d in 1..=max_order {
            if d + 1 > i {
                break;
            }
            let ctx = ((hist >> 1) & ((1 << d) - 1)) as usize;
            let table = &mut tables[d - 1];
            if table.present(ctx) {
                table.counts[ctx][follower] += 1;
            } else if table.entries < cfg.mmc_max_entries {
                table.counts[ctx][follower] = 1;
                table.entries += 1;
            }
        }
        // predict from contexts ending at s[i-1]
        for d in 1..=max_order {
            sub[d - 1] = None;
            if d > i {
                continue;
            }
            let ctx = (hist & ((1 << d) - 1)) as usize;
            let table = &tables[d - 1];
            if table.present(ctx) {
                sub[d - 1] = Some(table.argmax(ctx).0);
            }
        }
        tally.record(sub[board.winner] == Some(bit));
        for d in 0..max_order {
            if sub[d] == Some(bit) {
                board.credit(d);
            }
        }
        hist = (hist << 1) | u64::from(bit);
    }
    Ok(tally.finish())
}

fn run_lz78y(s: &BitSequence, cfg: &NistConfig) -> Result<PredictionRecord> {
    let depth = cfg.lz78y_max_depth;
    if depth == 0 || depth > 24 {
        return Err(Error::InvalidArgument("LZ78Y depth must be in 1..=24".into()));
    }
    if s.len() < depth + 2 {
        return Err(Error::TooShort { needed: depth + 2, got: s.len() });
    }
    let mut dict: Vec<ContextTable> = (1..=depth).map(ContextTable::new).collect();
    // entries exist with zero counts, so presence is tracked separately
    let mut present: Vec<Vec<bool>> = (1..=depth).map(|j| vec![false; 1 << j]).collect();
    let mut size = 0usize;
    let mut tally = Tally::default();
    let mut hist: u64 = 0;
    for i in 0..=depth {
        hist = (hist << 1) | u64::from(s.get(i));
    }
    for i in (depth + 1)..s.len() {
        let bit = s.get(i);
        let follower = (hist & 1) as usize;
        for j in (1..=depth).rev() {
            let ctx = ((hist >> 1) & ((1 << j) - 1)) as usize;
            if !present[j - 1][ctx] && size < cfg.lz78y_max_dictionary {
                present[j - 1][ctx] = true;
                size += 1;
            }
            if present[j - 1][ctx] {
                dict[j - 1].counts[ctx][follower] += 1;
            }
        }
        let mut prediction = None;
        let mut max_count = 0u32;
        for j in (1..=depth).rev() {
            let ctx = (hist & ((1 << j) - 1)) as usize;
            if present[j - 1][ctx] {
                let (y, c) = dict[j - 1].argmax(ctx);
                if c > max_count {
                    prediction = Some(y);
                    max_count = c;
                }
            }
        }
        tally.record(prediction == Some(bit));
        hist = (hist << 1) | u64::from(bit);
    }
    Ok(tally.finish())
}

/// Runs one predictor and returns its raw hit statistics.
pub fn run_predictor(stream: &BitSequence, which: NistPredictor, cfg: &NistConfig) -> Result<PredictionRecord> {
    match which {
        NistPredictor::MultiMcw => run_multi_mcw(stream, cfg),
        NistPredictor::Lag => run_lag(stream, cfg),
        NistPredictor::MultiMmc => run_multi_mmc(stream, cfg),
        NistPredictor::Lz78y => run_lz78y(stream, cfg),
    }
}

/// Upper confidence bound on the global accuracy.
pub fn global_bound(correct: u64, total: u64, z: f64) -> f64 {
    let n = total as f64;
    if correct == 0 {
        return 1.0 - 0.01f64.powf(1.0 / n);
    }
    let p = correct as f64 / n;
    (p + z * (p * (1.0 - p) / (n - 1.0)).sqrt()).min(1.0)
}

/// `ln` of the probability that `total` Bernoulli(`p`) trials contain no
/// run of `run` successes.
fn ln_no_run(p: f64, run: u64, total: u64) -> f64 {
    let q = 1.0 - p;
    let r = run as f64;
    let mut x: f64 = 1.0;
    for _ in 0..10 {
        x = 1.0 + q * p.powf(r) * x.powf(r + 1.0);
    }
    let num = 1.0 - p * x;
    let den = (r + 1.0 - r * x) * q;
    if num <= 0.0 || den <= 0.0 {
        return f64::NEG_INFINITY;
    }
    num.ln() - den.ln() - (total as f64 + 1.0) * x.ln()
}

/// Success probability at which observing a longest run of
/// `longest_run` is a `confidence`-level event.
pub fn local_bound(longest_run: u64, total: u64, confidence: f64) -> f64 {
    let run = longest_run + 1;
    let target = confidence.ln();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if ln_no_run(hi - 1e-15, run, total) >= target {
        return 1.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ln_no_run(mid, run, total) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    lo
}

/// Runs the named predictor over the stream and converts its accuracy into
/// global, local and final min-entropy estimates per bit.
pub fn nist_predict(stream: &BitSequence, which: NistPredictor, cfg: &NistConfig) -> Result<PredictorEstimate> {
    let rec = run_predictor(stream, which, cfg)?;
    Ok(estimate_from_record(which, &rec, cfg))
}

pub fn estimate_from_record(which: NistPredictor, rec: &PredictionRecord, cfg: &NistConfig) -> PredictorEstimate {
    let p_global = global_bound(rec.correct, rec.total, cfg.global_z);
    let p_local = local_bound(rec.longest_run, rec.total, cfg.local_confidence);
    let h_global = -p_global.max(0.5).log2();
    let h_local = -p_local.max(0.5).log2();
    let mut est = PredictorEstimate::from_accuracy(which.as_str(), Strategy::NextBit, rec.correct, rec.total, 1);
    est.ci_delta = wald_delta(est.p_acc, rec.total, 1, Z_95);
    est.h_global = Some(h_global);
    est.h_local = Some(h_local);
    est.h_final = h_global.min(h_local);
    est
}
