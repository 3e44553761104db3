//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use minent_core::generator::{generate, GeneratorConfig};
use minent_core::monte_carlo::{mc_entropies, McConfig};
use minent_core::oracle::{exact_report, MarkovOracle};
use minent_core::predictors::counting::{evaluate, fit_counting};
use minent_core::predictors::nist::{nist_predict, NistConfig, NistPredictor};
use minent_core::{AlphaShape, BitSequence, GbarParams, Strategy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// -log2(3/4)
const H_075: f64 = 0.415_037_499_278_843_8;

type Outcome = Result<String, String>;

fn uniform(p: usize, mass: f64) -> GbarParams {
    GbarParams::from_shape(AlphaShape::Uniform, p, mass, None, 0.5).unwrap()
}

fn bits(params: &GbarParams, n: usize, seed: u64) -> BitSequence {
    generate(&GeneratorConfig::new(params.clone(), n, seed)).unwrap()
}

fn worst_case_closed_form() -> Outcome {
    let mut worst = 0.0f64;
    for p in [1, 4, 10] {
        let oracle = MarkovOracle::from_params(&uniform(p, 0.5)).unwrap();
        for n in 0..=12 {
            let h = oracle.worst_case_min_entropy(n).unwrap();
            let err = (h - H_075).abs();
            worst = worst.max(err);
            if err > 1e-9 {
                return Err(format!("p={p} n={n}: h_worst={h}"));
            }
        }
    }
    Ok(format!("max |h_worst - 0.4150375| = {worst:.1e}"))
}

fn simtp_equality() -> Outcome {
    let mut worst = 0.0f64;
    for p in [1, 4, 10] {
        for mass in [0.1, 0.2, 0.3, 0.4, 0.5] {
            let params = GbarParams::from_shape(AlphaShape::PointToPoint, p, mass, None, 0.5).unwrap();
            let oracle = MarkovOracle::from_params(&params).unwrap();
            let target = -oracle.max_transition().log2();
            for n in [0, 4, 8] {
                let (h, _) = oracle.avg_min_entropy(n).unwrap();
                let err = (h - target).abs();
                worst = worst.max(err);
                if err > 1e-9 {
                    return Err(format!("p={p} mass={mass} n={n}: h_avg={h} target={target}"));
                }
            }
        }
    }
    Ok(format!("max |h_avg + log2 max T| = {worst:.1e}"))
}

fn random_params(rng: &mut ChaCha20Rng, max_p: usize) -> GbarParams {
    let p = rng.random_range(1..=max_p);
    let beta = rng.random_range(0.05..0.95);
    let raw: Vec<f64> = (0..p).map(|_| rng.random_range(0.01..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    let alpha = raw
        .iter()
        .map(|w| {
            let a = w / sum * (1.0 - beta);
            if rng.random_bool(0.5) {
                a
            } else {
                -a
            }
        })
        .collect();
    let epsilon = rng.random_range(0.05..0.95);
    GbarParams::with_implied_beta(alpha, epsilon).unwrap()
}

fn inequality_suite() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(0xACC3);
    let mut min_slack = f64::INFINITY;
    for case in 0..200 {
        let params = random_params(&mut rng, 4);
        let oracle = MarkovOracle::from_params(&params).unwrap();
        let mut prev_total = f64::NEG_INFINITY;
        for n in 0..=8 {
            let h_min = oracle.min_entropy(n).unwrap();
            let (h_avg, total) = oracle.avg_min_entropy(n).unwrap();
            let h_worst = oracle.worst_case_min_entropy(n).unwrap();
            let slack = (h_min - h_avg).min(h_avg - h_worst);
            min_slack = min_slack.min(slack);
            if slack < -1e-12 {
                return Err(format!("case {case} n={n}: {h_min} >= {h_avg} >= {h_worst} violated"));
            }
            if total < prev_total - 1e-12 {
                return Err(format!("case {case} n={n}: total {total} < previous {prev_total}"));
            }
            prev_total = total;
        }
    }
    Ok(format!("200 models, min slack {min_slack:.2e}"))
}

fn convergence() -> Outcome {
    let limit = H_075;
    let mut summary = Vec::new();
    let mut failures = Vec::new();
    for p in [1, 2, 4] {
        let oracle = MarkovOracle::from_params(&uniform(p, 0.5)).unwrap();
        let mut prev: Option<(f64, f64)> = None;
        for n in 0..=16 {
            let gap_min = (oracle.min_entropy(n).unwrap() - limit).abs();
            let gap_avg = (oracle.avg_min_entropy(n).unwrap().0 - limit).abs();
            if let Some((pm, pa)) = prev {
                if n > p && (gap_min > pm + 1e-12 || gap_avg > pa + 1e-12) {
                    failures.push(format!("p={p}: gap grows at n={n}"));
                }
            }
            prev = Some((gap_min, gap_avg));
        }
        let gap16 = prev.unwrap().1;
        summary.push(format!("p={p} |h_avg(16)-limit|={gap16:.4}"));
        if gap16 >= 0.02 {
            failures.push(format!("p={p}: |h_avg(16) - limit| = {gap16:.4} >= 0.02"));
        }
    }
    if failures.is_empty() {
        Ok(summary.join(", "))
    } else {
        Err(failures.join("; "))
    }
}

fn monte_carlo_fidelity() -> Outcome {
    let params = uniform(10, 0.5);
    let exact = exact_report(&params, 8).unwrap();
    let cfg = McConfig::new(params, 8, 0xACC5_0000).with_size(100, 800_000);
    let mc = mc_entropies(&cfg).unwrap();
    let d_min = (mc.h_min - exact.h_min).abs();
    let d_avg = (mc.h_avg - exact.h_avg).abs();
    let msg = format!("|d h_min|={d_min:.4}, |d h_avg|={d_avg:.4}");
    if d_min < 0.01 && d_avg < 0.01 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn counting_predictor_matches_average() -> Outcome {
    let params = uniform(10, 0.5);
    let oracle = MarkovOracle::from_params(&params).unwrap();
    let train = bits(&params, 10_000_000, 0xACC6_0001);
    let test = bits(&params, 2_500_000, 0xACC6_0002);
    let mut parts = Vec::new();
    let mut ok = true;
    for k in [1, 4, 8] {
        let pred = fit_counting(&train, 10, k).unwrap();
        let est = evaluate(&pred, &test, Strategy::Joint).unwrap();
        let exact = oracle.avg_min_entropy(k - 1).unwrap().0;
        let covered = est.covers(exact);
        ok &= covered;
        parts.push(format!(
            "k={k} {:.4}+-{:.4} vs {exact:.4}{}",
            est.h_per_bit,
            est.ci_delta.unwrap_or(f64::NAN),
            if covered { "" } else { " (miss)" }
        ));
    }
    let msg = parts.join(", ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn greedy_pathology() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (case, signs) in [[1i8, -1], [1, 1]].iter().enumerate() {
        let params = GbarParams::from_shape(AlphaShape::Uniform, 2, 0.5, Some(signs), 0.5).unwrap();
        let oracle = MarkovOracle::from_params(&params).unwrap();
        let seed = 0xACC7_0000 + 16 * case as u64;
        let train = bits(&params, 12_800_000, seed);
        let test = bits(&params, 3_200_000, seed + 1);
        let alternating = signs[1] < 0;
        for k in [2, 4, 8] {
            let pred = fit_counting(&train, 2, k).unwrap();
            let joint = evaluate(&pred, &test, Strategy::Joint).unwrap();
            let greedy = evaluate(&pred, &test, Strategy::Greedy).unwrap();
            let (jl, jh) = joint.interval().unwrap();
            let (gl, gh) = greedy.interval().unwrap();
            let exact = oracle.avg_min_entropy(k - 1).unwrap().0;
            let pass = if alternating {
                gl > jh && joint.covers(exact)
            } else {
                gl <= jh && jl <= gh
            };
            ok &= pass;
            parts.push(format!(
                "{}{} k={k} greedy {:.4} joint {:.4} exact {exact:.4}{}",
                if signs[0] > 0 { '+' } else { '-' },
                if alternating { '-' } else { '+' },
                greedy.h_per_bit,
                joint.h_per_bit,
                if pass { "" } else { " (miss)" }
            ));
        }
    }
    let msg = parts.join(", ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn nist_ordering() -> Outcome {
    let params = uniform(10, 0.5);
    let exact = MarkovOracle::from_params(&params).unwrap().avg_min_entropy(0).unwrap().0;
    let data = bits(&params, 1_000_000, 0xACC8_0001);
    let cfg = NistConfig::default();
    let global = |which| nist_predict(&data, which, &cfg).unwrap().h_global.unwrap();
    let mmc = global(NistPredictor::MultiMmc);
    let mcw = global(NistPredictor::MultiMcw);
    let lag = global(NistPredictor::Lag);
    let msg = format!("exact {exact:.4}: multimmc {mmc:.4}, multimcw {mcw:.4}, lag {lag:.4}");
    if (mmc - exact).abs() < 0.05 && mcw > exact && lag > exact {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// P(x_t = 1 | context), written out independently of the library.
fn next_one_prob(alpha: &[f64], beta: f64, epsilon: f64, ctx: usize) -> f64 {
    let mut p = beta * epsilon;
    for (i, &a) in alpha.iter().enumerate() {
        let lagged = (ctx >> i) & 1 == 1;
        if (a >= 0.0) == lagged {
            p += a.abs();
        }
    }
    p
}

fn generator_chi_square() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(0xACC9);
    let mut min_pvalue = 1.0f64;
    for case in 0..20 {
        let params = random_params(&mut rng, 6);
        let p = params.p();
        let seq = bits(&params, 10_000_000, 0xACC9_0000 + case);
        let mut ones = vec![0u64; 1 << p];
        let mut totals = vec![0u64; 1 << p];
        for w in seq.windows(p + 1) {
            let ctx = (w >> 1) as usize;
            totals[ctx] += 1;
            ones[ctx] += w & 1;
        }
        let (mut stat, mut df) = (0.0, 0usize);
        for ctx in 0..1 << p {
            let q = next_one_prob(params.alpha(), params.beta(), params.epsilon(), ctx);
            let n = totals[ctx] as f64;
            if n * q.min(1.0 - q) < 5.0 {
                continue;
            }
            let dev = ones[ctx] as f64 - n * q;
            stat += dev * dev / (n * q * (1.0 - q));
            df += 1;
        }
        let pvalue = ChiSquared::new(df as f64).unwrap().sf(stat);
        min_pvalue = min_pvalue.min(pvalue);
        if pvalue < 1e-3 {
            return Err(format!("case {case} (p={p}): chi2={stat:.1} df={df} p-value={pvalue:.2e}"));
        }
    }
    Ok(format!("20 models, min p-value {min_pvalue:.3}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("closed-form worst-case limit", worst_case_closed_form),
        ("SIMTP equality", simtp_equality),
        ("inequality suite", inequality_suite),
        ("convergence to the limit", convergence),
        ("Monte Carlo fidelity", monte_carlo_fidelity),
        ("counting predictor vs exact", counting_predictor_matches_average),
        ("greedy vs joint decoding", greedy_pathology),
        ("NIST predictor ordering", nist_ordering),
        ("generator chi-square", generator_chi_square),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}, {secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}, {secs:.1}s): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
