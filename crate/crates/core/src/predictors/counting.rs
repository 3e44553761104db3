//! Tabular multi-bit predictor.
//!
//! Training counts, for every `p_model`-bit context, how often each of the
//! `2^n` futures followed it, plus a next-bit table used by greedy rollout.
//! Joint decoding returns the most frequent future; greedy decoding appends
//! the most frequent next bit `n` times. Ties go to the lowest index (bit 0
//! for greedy). Contexts never seen in training predict future 0 and are
//! counted in [`PredictorEstimate::unseen_contexts`].

use crate::error::{Error, Result};
use crate::predictors::{PredictorEstimate, Strategy, Z_95};
use crate::types::{BitSequence, ContextIndex, FutureIndex, MAX_INDEX_WIDTH};

#[derive(Debug, Clone)]
pub struct CountingPredictor {
    p_model: usize,
    n: usize,
    /// Row-major `[context][future]` occurrence counts.
    counts: Vec<u32>,
    totals: Vec<u64>,
    /// `[context] -> [count of 0, count of 1]` for the next bit.
    next_bit: Vec<[u64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prediction {
    pub future: FutureIndex,
    /// The context (or a rollout state) had no training data.
    pub unseen: bool,
}

/// Counts every `(p_model + n)`-bit window of `train`.
pub fn fit_counting(train: &BitSequence, p_model: usize, n: usize) -> Result<CountingPredictor> {
    let mut pred = CountingPredictor::new(p_model, n)?;
    pred.update(train)?;
    Ok(pred)
}

impl CountingPredictor {
    pub fn new(p_model: usize, n: usize) -> Result<Self> {
        if p_model == 0 || n == 0 {
            return Err(Error::InvalidArgument("p_model and n must be positive".into()));
        }
        if p_model + n > MAX_INDEX_WIDTH {
            return Err(Error::WidthOverflow {
                width: p_model + n,
                max: MAX_INDEX_WIDTH,
            });
        }
        Ok(Self {
            p_model,
            n,
            counts: vec![0; 1 << (p_model + n)],
            totals: vec![0; 1 << p_model],
            next_bit: vec![[0; 2]; 1 << p_model],
        })
    }

    /// Adds the windows of `train` to the tables.
    pub fn update(&mut self, train: &BitSequence) -> Result<()> {
        if train.is_empty() {
            return Err(Error::Empty("training data"));
        }
        let width = self.p_model + self.n;
        if train.len() < width {
            return Err(Error::TooShort {
                needed: width,
                got: train.len(),
            });
        }
        for w in train.windows(width) {
            let w = w as usize;
            self.counts[w] += 1;
            self.totals[w >> self.n] += 1;
        }
        for w in train.windows(self.p_model + 1) {
            let w = w as usize;
            self.next_bit[w >> 1][w & 1] += 1;
        }
        Ok(())
    }

    pub fn p_model(&self) -> usize {
        self.p_model
    }

    pub fn target_bits(&self) -> usize {
        self.n
    }

    /// Future counts observed after `context`.
    pub fn row(&self, context: usize) -> &[u32] {
        let k = 1 << self.n;
        &self.counts[context * k..(context + 1) * k]
    }

    pub fn context_total(&self, context: usize) -> u64 {
        self.totals[context]
    }

    pub fn next_bit_counts(&self, context: usize) -> [u64; 2] {
        self.next_bit[context]
    }

    fn check_context(&self, context: ContextIndex) -> Result<usize> {
        if context.width() != self.p_model {
            return Err(Error::InvalidArgument(format!(
                "context width {} does not match predictor order {}",
                context.width(),
                self.p_model
            )));
        }
        Ok(context.value() as usize)
    }

    fn joint_raw(&self, context: usize) -> (u32, bool) {
        if self.totals[context] == 0 {
            return (0, true);
        }
        let mut best = 0usize;
        let row = self.row(context);
        for (f, &c) in row.iter().enumerate() {
            if c > row[best] {
                best = f;
            }
        }
        (best as u32, false)
    }

    fn greedy_raw(&self, context: usize) -> (u32, bool) {
        let mask = (1usize << self.p_model) - 1;
        let mut window = context;
        let mut future = 0u32;
        let mut unseen = false;
        for _ in 0..self.n {
            let [zeros, ones] = self.next_bit[window];
            unseen |= zeros + ones == 0;
            let x = usize::from(ones > zeros);
            window = ((window << 1) | x) & mask;
            future = (future << 1) | x as u32;
        }
        (future, unseen)
    }

    /// Most frequent future after `context`.
    pub fn predict_joint(&self, context: ContextIndex) -> Result<Prediction> {
        let (f, unseen) = self.joint_raw(self.check_context(context)?);
        Ok(Prediction {
            future: FutureIndex::new(f, self.n)?,
            unseen,
        })
    }

    /// Rollout of `n` next-bit argmaxes from `context`.
    pub fn predict_greedy(&self, context: ContextIndex) -> Result<Prediction> {
        let (f, unseen) = self.greedy_raw(self.check_context(context)?);
        Ok(Prediction {
            future: FutureIndex::new(f, self.n)?,
            unseen,
        })
    }

    /// Prediction for every context, as `(future, unseen)`.
    pub fn prediction_table(&self, strategy: Strategy) -> Result<Vec<(u32, bool)>> {
        let f = match strategy {
            Strategy::Joint => Self::joint_raw,
            Strategy::Greedy => Self::greedy_raw,
            Strategy::NextBit => {
                return Err(Error::InvalidArgument(
                    "the counting predictor decodes jointly or greedily".into(),
                ))
            }
        };
        Ok((0..1usize << self.p_model).map(|c| f(self, c)).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    /// Distance between consecutive evaluation windows. `None` uses
    /// non-overlapping windows of `p_model + n` bits.
    pub stride: Option<usize>,
    pub z: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { stride: None, z: Z_95 }
    }
}

/// Evaluates on non-overlapping windows of `test`.
pub fn evaluate(pred: &CountingPredictor, test: &BitSequence, strategy: Strategy) -> Result<PredictorEstimate> {
    evaluate_with(pred, test, strategy, &EvalOptions::default())
}

pub fn evaluate_with(
    pred: &CountingPredictor,
    test: &BitSequence,
    strategy: Strategy,
    opts: &EvalOptions,
) -> Result<PredictorEstimate> {
    let width = pred.p_model + pred.n;
    if test.len() < width {
        return Err(Error::TooShort {
            needed: width,
            got: test.len(),
        });
    }
    let stride = opts.stride.unwrap_or(width);
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be positive".into()));
    }
    let table = pred.prediction_table(strategy)?;
    let fmask = (1u64 << pred.n) - 1;
    let (mut correct, mut total, mut unseen) = (0u64, 0u64, 0u64);
    for w in test.windows(width).step_by(stride) {
        let (guess, blind) = table[(w >> pred.n) as usize];
        total += 1;
        correct += u64::from(u64::from(guess) == w & fmask);
        unseen += u64::from(blind);
    }
    let mut est = PredictorEstimate::from_accuracy(
        format!("counting_p{}", pred.p_model),
        strategy,
        correct,
        total,
        pred.n,
    );
    if opts.z != Z_95 {
        est.ci_delta = super::wald_delta(est.p_acc, total, pred.n, opts.z);
    }
    est.unseen_contexts = unseen;
    Ok(est)
}
