//! Exact min-entropy family for binary order-p Markov chains.
//!
//! A [`MarkovOracle`] holds `P(X_t = 1 | context)` for all `2^p` contexts and
//! the stationary context distribution. From these it computes, for a future
//! `(X_t, ..., X_{t+n})` of `k = n + 1` bits:
//!
//! * min-entropy: `-log2 max_f P(f)`, from the stationary window law;
//! * average min-entropy: `-log2 sum_c pi(c) max_f P(f | c)`;
//! * worst-case min-entropy: `-log2 max_c max_f P(f | c)`.
//!
//! `max_f P(f | c)` for every context comes from one backward max-product
//! pass over the shift-register state, so average and worst-case values cost
//! `O(k 2^p)`. All logarithms are base 2.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::generator::transition_table;
use crate::types::GbarParams;

/// Largest order accepted when solving for the stationary distribution.
pub const MAX_ORACLE_ORDER: usize = 20;
/// `p + n + 1` is capped at this many bits for exact enumeration.
pub const MAX_EXACT_BITS: usize = 27;

pub const STATIONARY_TOL: f64 = 1e-12;
pub const MAX_POWER_ITERATIONS: usize = 1_000_000;

/// Tolerance used when checking the structural properties of gbAR chains.
pub const STRUCTURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Mc,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Mc => "mc",
        }
    }
}

/// Entropy quantities for one `(p, n)` pair. Per-bit values divide by `n + 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    pub p: usize,
    pub n: usize,
    pub h_min: f64,
    pub h_avg: f64,
    pub h_worst: f64,
    /// Average min-entropy of the whole future, not divided by `n + 1`.
    pub h_avg_total: f64,
    pub h_limit: Option<f64>,
    /// `h_limit` is a large-n average min-entropy rather than a closed form.
    pub h_limit_approx: bool,
    pub method: Method,
    /// Contexts never observed (Monte Carlo only).
    pub unseen_contexts: usize,
}

/// Transition law and stationary context distribution of a binary chain.
#[derive(Debug, Clone)]
pub struct MarkovOracle {
    p: usize,
    /// `P(X_t = 1 | context)`.
    transition: Vec<f64>,
    stationary: Vec<f64>,
}

impl MarkovOracle {
    /// Builds the oracle of a gbAR(p) process.
    ///
    /// For uniform-noise parameters the per-lag marginals of the solved
    /// distribution are checked against 1/2.
    pub fn from_params(params: &GbarParams) -> Result<Self> {
        let oracle = Self::from_transition(params.p(), transition_table(params))?;
        if params.is_uniform_noise() {
            for lag in 0..oracle.p {
                let m: f64 = oracle
                    .stationary
                    .iter()
                    .enumerate()
                    .filter(|(c, _)| (c >> lag) & 1 == 1)
                    .map(|(_, w)| w)
                    .sum();
                if (m - 0.5).abs() > 1e-9 {
                    return Err(Error::InconsistentStationary(format!(
                        "lag {} has P(x=1) = {m}, expected 1/2",
                        lag + 1
                    )));
                }
            }
        }
        Ok(oracle)
    }

    /// Builds the oracle of an arbitrary binary order-p chain from its
    /// `P(X_t = 1 | context)` table.
    pub fn from_transition(p: usize, transition: Vec<f64>) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidArgument("order must be at least 1".into()));
        }
        if p > MAX_ORACLE_ORDER {
            return Err(Error::DimensionOverflow {
                bits: p,
                max: MAX_ORACLE_ORDER,
            });
        }
        if transition.len() != 1 << p {
            return Err(Error::InvalidArgument(format!(
                "transition table has {} entries, expected {}",
                transition.len(),
                1usize << p
            )));
        }
        if let Some(t) = transition.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::InvalidArgument(format!("transition probability {t}")));
        }
        check_irreducible(p, &transition)?;
        let stationary = power_iteration(p, &transition)?;
        Ok(Self {
            p,
            transition,
            stationary,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn transition(&self) -> &[f64] {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    #[inline]
    fn mask(&self) -> usize {
        (1 << self.p) - 1
    }

    /// `P(X_t = x | context)`.
    #[inline]
    pub fn prob(&self, context: usize, x: u8) -> f64 {
        let p1 = self.transition[context];
        if x == 1 {
            p1
        } else {
            1.0 - p1
        }
    }

    /// Largest one-step transition probability over all contexts and bits.
    pub fn max_transition(&self) -> f64 {
        self.transition
            .iter()
            .map(|&t| t.max(1.0 - t))
            .fold(0.0, f64::max)
    }

    fn check_bits(&self, n: usize) -> Result<()> {
        let bits = self.p + n + 1;
        if bits > MAX_EXACT_BITS {
            return Err(Error::DimensionOverflow {
                bits,
                max: MAX_EXACT_BITS,
            });
        }
        Ok(())
    }

    /// `max_f P(f | c)` over futures of `n + 1` bits, for every context `c`.
    pub fn max_future_given_context(&self, n: usize) -> Result<Vec<f64>> {
        self.check_bits(n)?;
        let mask = self.mask();
        let mut best = vec![1.0; 1 << self.p];
        let mut next = vec![0.0; 1 << self.p];
        for _ in 0..=n {
            for (c, slot) in next.iter_mut().enumerate() {
                let shifted = (c << 1) & mask;
                let p1 = self.transition[c];
                *slot = ((1.0 - p1) * best[shifted]).max(p1 * best[shifted | 1]);
            }
            std::mem::swap(&mut best, &mut next);
        }
        Ok(best)
    }

    /// Joint law of `(X_t, ..., X_{t+n})`, indexed as a [`FutureIndex`] value.
    ///
    /// Computed as `sum_c pi(c) P(f | c)`, so it shares its weights with
    /// [`guess_probability`](Self::guess_probability).
    ///
    /// [`FutureIndex`]: crate::types::FutureIndex
    pub fn future_distribution(&self, n: usize) -> Result<Vec<f64>> {
        self.check_bits(n)?;
        let k = n + 1;
        let mask = self.mask();
        // after min(k, p) steps the low bits of the context are the future
        let mut ctx = self.stationary.clone();
        let mut next = vec![0.0; ctx.len()];
        for _ in 0..k.min(self.p) {
            next.iter_mut().for_each(|v| *v = 0.0);
            for (c, &w) in ctx.iter().enumerate() {
                let d = (c << 1) & mask;
                let p1 = self.transition[c];
                next[d] += w * (1.0 - p1);
                next[d | 1] += w * p1;
            }
            std::mem::swap(&mut ctx, &mut next);
        }
        if k <= self.p {
            let fmask = (1 << k) - 1;
            let mut dist = vec![0.0; 1 << k];
            for (c, w) in ctx.iter().enumerate() {
                dist[c & fmask] += w;
            }
            return Ok(dist);
        }
        let mut dist = ctx;
        for _ in self.p..k {
            let mut grown = vec![0.0; dist.len() * 2];
            for (s, &w) in dist.iter().enumerate() {
                let p1 = self.transition[s & mask];
                grown[s << 1] = w * (1.0 - p1);
                grown[(s << 1) | 1] = w * p1;
            }
            dist = grown;
        }
        Ok(dist)
    }

    /// `P(f | context)` for all futures of `n + 1` bits.
    pub fn conditional_future_distribution(&self, context: usize, n: usize) -> Result<Vec<f64>> {
        self.check_bits(n)?;
        if context > self.mask() {
            return Err(Error::InvalidArgument(format!("context {context} out of range")));
        }
        let mask = self.mask();
        let mut dist = vec![1.0];
        for step in 0..=n {
            let mut grown = vec![0.0; dist.len() * 2];
            for (f, &w) in dist.iter().enumerate() {
                let p1 = self.transition[((context << step) | f) & mask];
                grown[f << 1] = w * (1.0 - p1);
                grown[(f << 1) | 1] = w * p1;
            }
            dist = grown;
        }
        Ok(dist)
    }

    /// Min-entropy per bit of `(X_t, ..., X_{t+n})`.
    pub fn min_entropy(&self, n: usize) -> Result<f64> {
        let dist = self.future_distribution(n)?;
        let max = dist.iter().copied().fold(0.0, f64::max);
        Ok(-max.log2() / (n + 1) as f64)
    }

    /// Worst-case min-entropy per bit.
    pub fn worst_case_min_entropy(&self, n: usize) -> Result<f64> {
        let best = self.max_future_given_context(n)?;
        let max = best.iter().copied().fold(0.0, f64::max);
        Ok(-max.log2() / (n + 1) as f64)
    }

    /// Guessing probability `sum_c pi(c) max_f P(f | c)`.
    pub fn guess_probability(&self, n: usize) -> Result<f64> {
        let best = self.max_future_given_context(n)?;
        Ok(self.stationary.iter().zip(&best).map(|(w, b)| w * b).sum())
    }

    /// Average min-entropy as `(per_bit, total)`.
    pub fn avg_min_entropy(&self, n: usize) -> Result<(f64, f64)> {
        let total = -self.guess_probability(n)?.log2();
        Ok((total / (n + 1) as f64, total))
    }

    /// `max_x P(x | c)` is the same for every context.
    pub fn is_simtp(&self, tol: f64) -> bool {
        let maxima = self.transition.iter().map(|&t| t.max(1.0 - t));
        let (lo, hi) = maxima.fold((f64::INFINITY, 0.0f64), |(lo, hi), m| (lo.min(m), hi.max(m)));
        hi - lo <= tol
    }

    /// `P(x | c) = P(1 - x | !c)` for every context.
    pub fn is_bitflip_symmetric(&self, tol: f64) -> bool {
        let mask = self.mask();
        self.transition
            .iter()
            .enumerate()
            .all(|(c, &t)| (t - (1.0 - self.transition[!c & mask])).abs() <= tol)
    }

    pub fn report(&self, n: usize, limit: Option<LimitValue>) -> Result<EntropyReport> {
        let (h_avg, h_avg_total) = self.avg_min_entropy(n)?;
        Ok(EntropyReport {
            p: self.p,
            n,
            h_min: self.min_entropy(n)?,
            h_avg,
            h_worst: self.worst_case_min_entropy(n)?,
            h_avg_total,
            h_limit: limit.map(|l| l.value),
            h_limit_approx: limit.is_some_and(|l| l.approximate),
            method: Method::Exact,
            unseen_contexts: 0,
        })
    }
}

/// Process min-entropy per bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitValue {
    pub value: f64,
    pub approximate: bool,
}

/// Min-entropy per bit of the whole process.
///
/// Uniform-noise positive models give `-log2(1 - beta/2)`; SIMTP chains give
/// `-log2(max transition)`. Anything else falls back to the average
/// min-entropy per bit at the largest `n` within the enumeration budget,
/// flagged as approximate.
pub fn min_entropy_limit(params: &GbarParams) -> Result<LimitValue> {
    if params.is_uniform_noise() && params.is_positive() {
        return Ok(LimitValue {
            value: -(1.0 - params.beta() / 2.0).log2(),
            approximate: false,
        });
    }
    let oracle = MarkovOracle::from_params(params)?;
    limit_from_oracle(&oracle)
}

pub fn limit_from_oracle(oracle: &MarkovOracle) -> Result<LimitValue> {
    if oracle.is_simtp(STRUCTURE_TOL) {
        return Ok(LimitValue {
            value: -oracle.max_transition().log2(),
            approximate: false,
        });
    }
    let n = MAX_EXACT_BITS - oracle.p() - 1;
    Ok(LimitValue {
        value: oracle.avg_min_entropy(n)?.0,
        approximate: true,
    })
}

/// Exact report for a gbAR(p) model, including the process limit.
pub fn exact_report(params: &GbarParams, n: usize) -> Result<EntropyReport> {
    let oracle = MarkovOracle::from_params(params)?;
    let limit = if params.is_uniform_noise() && params.is_positive() {
        min_entropy_limit(params)?
    } else {
        limit_from_oracle(&oracle)?
    };
    oracle.report(n, Some(limit))
}

fn check_irreducible(p: usize, transition: &[f64]) -> Result<()> {
    let size = 1usize << p;
    let mask = size - 1;
    let edge = |c: usize, x: usize| -> bool {
        let t = transition[c];
        if x == 1 {
            t > 0.0
        } else {
            t < 1.0
        }
    };
    // forward reachability from context 0
    let mut seen = vec![false; size];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(c) = stack.pop() {
        for x in 0..2 {
            let d = ((c << 1) | x) & mask;
            if edge(c, x) && !seen[d] {
                seen[d] = true;
                stack.push(d);
            }
        }
    }
    if let Some(c) = seen.iter().position(|s| !s) {
        return Err(Error::DegenerateChain(format!(
            "context {c} is unreachable from context 0"
        )));
    }
    // backward reachability: predecessors of d are (d >> 1) | (h << (p-1))
    let mut seen = vec![false; size];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(d) = stack.pop() {
        let x = d & 1;
        for h in 0..2 {
            let c = (d >> 1) | (h << (p - 1));
            if edge(c, x) && !seen[c] {
                seen[c] = true;
                stack.push(c);
            }
        }
    }
    if let Some(c) = seen.iter().position(|s| !s) {
        return Err(Error::DegenerateChain(format!("context 0 is unreachable from context {c}")));
    }
    let period = chain_period(p, transition);
    if period != 1 {
        return Err(Error::DegenerateChain(format!("chain is periodic with period {period}")));
    }
    Ok(())
}

/// Period of an irreducible chain: gcd over edges `u -> v` of
/// `level(u) + 1 - level(v)` for BFS levels from context 0.
fn chain_period(p: usize, transition: &[f64]) -> usize {
    let size = 1usize << p;
    let mask = size - 1;
    let mut level = vec![usize::MAX; size];
    let mut queue = std::collections::VecDeque::from([0usize]);
    level[0] = 0;
    let mut period = 0usize;
    while let Some(c) = queue.pop_front() {
        for x in 0..2 {
            let allowed = if x == 1 { transition[c] > 0.0 } else { transition[c] < 1.0 };
            if !allowed {
                continue;
            }
            let d = ((c << 1) | x) & mask;
            if level[d] == usize::MAX {
                level[d] = level[c] + 1;
                queue.push_back(d);
            } else {
                period = gcd(period, (level[c] + 1).abs_diff(level[d]));
            }
        }
    }
    period
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn power_iteration(p: usize, transition: &[f64]) -> Result<Vec<f64>> {
    let size = 1usize << p;
    let mask = size - 1;
    let mut pi = vec![1.0 / size as f64; size];
    let mut next = vec![0.0; size];
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_POWER_ITERATIONS {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (c, &w) in pi.iter().enumerate() {
            let d = (c << 1) & mask;
            let p1 = transition[c];
            next[d] += w * (1.0 - p1);
            next[d | 1] += w * p1;
        }
        let total: f64 = next.iter().sum();
        residual = 0.0;
        for (a, b) in next.iter_mut().zip(&pi) {
            *a /= total;
            residual = residual.max((*a - b).abs());
        }
        std::mem::swap(&mut pi, &mut next);
        if residual < STATIONARY_TOL {
            return Ok(pi);
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_POWER_ITERATIONS,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{make_alpha, AlphaShape};

    fn uniform(p: usize, mass: f64) -> GbarParams {
        GbarParams::from_shape(AlphaShape::Uniform, p, mass, None, 0.5).unwrap()
    }

    fn noise_only() -> GbarParams {
        GbarParams::new(vec![0.0], 1.0, 0.5).unwrap()
    }

    #[test]
    fn lag_one_stationary_is_half() {
        let o = MarkovOracle::from_params(&GbarParams::new(vec![0.5], 0.5, 0.5).unwrap()).unwrap();
        assert!((o.stationary()[0] - 0.5).abs() < 1e-12);
        assert!((o.stationary()[1] - 0.5).abs() < 1e-12);
        assert!((o.min_entropy(0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noise_only_is_uniform_and_full_entropy() {
        let o = MarkovOracle::from_params(&noise_only()).unwrap();
        for n in 0..6 {
            assert!((o.min_entropy(n).unwrap() - 1.0).abs() < 1e-12);
            assert!((o.avg_min_entropy(n).unwrap().0 - 1.0).abs() < 1e-12);
            assert!((o.worst_case_min_entropy(n).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(o.is_simtp(1e-12) && o.is_bitflip_symmetric(1e-12));
    }

    #[test]
    fn worst_case_closed_form() {
        let o = MarkovOracle::from_params(&uniform(3, 0.5)).unwrap();
        for n in 0..8 {
            let h = o.worst_case_min_entropy(n).unwrap();
            assert!((h - 0.415_037_499_278_843_8).abs() < 1e-9, "n={n} h={h}");
        }
    }

    #[test]
    fn simtp_point_to_point() {
        let params = GbarParams::from_shape(AlphaShape::PointToPoint, 3, 0.4, None, 0.5).unwrap();
        let o = MarkovOracle::from_params(&params).unwrap();
        assert!(o.is_simtp(1e-12));
        assert!(o.is_bitflip_symmetric(1e-12));
        let expected = -(0.4f64 + 0.3).log2();
        for n in [0, 3, 7] {
            assert!((o.avg_min_entropy(n).unwrap().0 - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn simtp_predicates_on_gbar2() {
        // mixed contexts such as (1, 0) top out at 1/2, all-equal ones at 3/4
        let o = MarkovOracle::from_params(&uniform(2, 0.5)).unwrap();
        assert!(!o.is_simtp(1e-12));
        assert!(o.is_bitflip_symmetric(1e-12));
        let skew = GbarParams::new(vec![0.25, 0.25], 0.5, 0.3).unwrap();
        let o = MarkovOracle::from_params(&skew).unwrap();
        assert!(!o.is_simtp(1e-12));
        assert!(!o.is_bitflip_symmetric(1e-12));
    }

    #[test]
    fn conditional_futures_sum_to_one() {
        let params = GbarParams::new(vec![0.2, -0.3, 0.1], 0.4, 0.35).unwrap();
        let o = MarkovOracle::from_params(&params).unwrap();
        for c in 0..8 {
            for n in [0, 2, 5] {
                let d = o.conditional_future_distribution(c, n).unwrap();
                assert_eq!(d.len(), 1 << (n + 1));
                assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-10);
                let best = o.max_future_given_context(n).unwrap()[c];
                let max = d.iter().copied().fold(0.0, f64::max);
                assert!((best - max).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn future_distribution_consistent_across_routes() {
        let params = GbarParams::new(vec![0.2, -0.3, 0.1], 0.4, 0.35).unwrap();
        let o = MarkovOracle::from_params(&params).unwrap();
        for n in 0..6 {
            let direct = o.future_distribution(n).unwrap();
            let mut mixed = vec![0.0; 1 << (n + 1)];
            for (c, w) in o.stationary().iter().enumerate() {
                for (f, q) in o.conditional_future_distribution(c, n).unwrap().iter().enumerate() {
                    mixed[f] += w * q;
                }
            }
            for (a, b) in direct.iter().zip(&mixed) {
                assert!((a - b).abs() < 1e-10, "n={n} {a} {b}");
            }
        }
    }

    #[test]
    fn limit_values() {
        let l = min_entropy_limit(&uniform(4, 0.5)).unwrap();
        assert!((l.value - 0.415_037_499_278_843_8).abs() < 1e-12 && !l.approximate);
        let l = min_entropy_limit(&noise_only()).unwrap();
        assert_eq!(l.value, 1.0);
        let alt = GbarParams::with_implied_beta(
            make_alpha(AlphaShape::Uniform, 2, 0.5, Some(&[1, -1])).unwrap(),
            0.5,
        )
        .unwrap();
        let l = min_entropy_limit(&alt).unwrap();
        assert!(l.approximate);
        let o = MarkovOracle::from_params(&alt).unwrap();
        assert!((l.value - o.avg_min_entropy(24).unwrap().0).abs() < 1e-15);
    }

    #[test]
    fn dimension_overflow_and_degenerate_chains() {
        let o = MarkovOracle::from_params(&uniform(10, 0.5)).unwrap();
        assert!(matches!(o.min_entropy(17), Err(Error::DimensionOverflow { .. })));
        assert!(o.min_entropy(16).is_ok());
        let big = GbarParams::from_shape(AlphaShape::Uniform, 21, 0.5, None, 0.5).unwrap();
        assert!(matches!(
            MarkovOracle::from_params(&big),
            Err(Error::DimensionOverflow { .. })
        ));
        // 0 -> 0 forever: 1 is unreachable
        assert!(matches!(
            MarkovOracle::from_transition(1, vec![0.0, 0.5]),
            Err(Error::DegenerateChain(_))
        ));
        // deterministic alternation is irreducible but periodic
        assert!(matches!(
            MarkovOracle::from_transition(1, vec![1.0, 0.0]),
            Err(Error::DegenerateChain(m)) if m.contains("period 2")
        ));
    }
}
