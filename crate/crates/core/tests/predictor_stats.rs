use minent_core::generator::{generate, GeneratorConfig};
use minent_core::oracle::MarkovOracle;
use minent_core::predictors::counting::{evaluate, evaluate_with, fit_counting, EvalOptions};
use minent_core::predictors::nist::{nist_predict, NistConfig, NistPredictor};
use minent_core::{AlphaShape, BitSequence, ContextIndex, GbarParams, Strategy};

fn gen(params: &GbarParams, bits: usize, seed: u64) -> BitSequence {
    generate(&GeneratorConfig::new(params.clone(), bits, seed)).unwrap()
}

fn shaped(p: usize, signs: Option<&[i8]>) -> GbarParams {
    GbarParams::from_shape(AlphaShape::Uniform, p, 0.5, signs, 0.5).unwrap()
}

#[test]
fn joint_accuracy_dominates_greedy() {
    let models = [
        shaped(2, Some(&[1, -1])),
        shaped(2, None),
        shaped(3, Some(&[1, -1, 1])),
        GbarParams::new(vec![0.1, -0.3, 0.2], 0.4, 0.3).unwrap(),
    ];
    for (i, params) in models.iter().enumerate() {
        let train = gen(params, 1_000_000, 10 + i as u64);
        let test = gen(params, 400_000, 20 + i as u64);
        for k in 1..=6 {
            let pred = fit_counting(&train, params.p(), k).unwrap();
            let joint = evaluate(&pred, &test, Strategy::Joint).unwrap();
            let greedy = evaluate(&pred, &test, Strategy::Greedy).unwrap();
            // on every training window joint is optimal by construction
            let all = EvalOptions { stride: Some(1), ..EvalOptions::default() };
            let joint_in = evaluate_with(&pred, &train, Strategy::Joint, &all).unwrap();
            let greedy_in = evaluate_with(&pred, &train, Strategy::Greedy, &all).unwrap();
            assert!(joint_in.p_acc >= greedy_in.p_acc, "model {i} k={k} in-sample");
            // out of sample, only test-set noise can reverse the order
            let slack = 3.0 * (joint.p_acc / joint.n_evals as f64).sqrt();
            assert!(joint.p_acc + slack >= greedy.p_acc, "model {i} k={k}: {} < {}", joint.p_acc, greedy.p_acc);
            if k == 1 {
                assert_eq!(joint.p_acc, greedy.p_acc);
            }
        }
    }
}

#[test]
fn single_bit_joint_equals_greedy() {
    let params = GbarParams::new(vec![0.25, -0.15, 0.1], 0.5, 0.4).unwrap();
    let pred = fit_counting(&gen(&params, 200_000, 3), 3, 1).unwrap();
    for c in 0..8 {
        let ctx = ContextIndex::new(c, 3).unwrap();
        assert_eq!(pred.predict_joint(ctx).unwrap(), pred.predict_greedy(ctx).unwrap());
    }
}

/// With 10^7 training bits the joint test accuracy sits within 0.01 of the
/// theoretical guessing probability. The fitted table's expected accuracy
/// under the true law (free of test-set noise) does not get worse from 10^5
/// to 10^7 training bits.
#[test]
fn accuracy_approaches_guessing_probability() {
    let cases = [(shaped(10, None), 8), (shaped(4, None), 6), (shaped(2, Some(&[1, -1])), 8)];
    for (i, (params, k)) in cases.iter().enumerate() {
        let oracle = MarkovOracle::from_params(params).unwrap();
        let target = oracle.guess_probability(k - 1).unwrap();
        let test = gen(params, 4_000_000, 300 + i as u64);
        let big = gen(params, 10_000_000, 400 + i as u64);
        let expected_accuracy = |train: &BitSequence| {
            let pred = fit_counting(train, params.p(), *k).unwrap();
            let table = pred.prediction_table(Strategy::Joint).unwrap();
            let acc: f64 = table
                .iter()
                .enumerate()
                .map(|(c, &(f, _))| oracle.stationary()[c] * oracle.conditional_future_distribution(c, k - 1).unwrap()[f as usize])
                .sum();
            (pred, acc)
        };
        let (_, acc_small) = expected_accuracy(&big.slice(0, 100_000));
        let (pred, acc_big) = expected_accuracy(&big);
        let gap = (evaluate(&pred, &test, Strategy::Joint).unwrap().p_acc - target).abs();
        assert!(gap < 0.01, "case {i}: gap {gap}");
        assert!(acc_big >= acc_small - 1e-12, "case {i}: {acc_small} -> {acc_big}");
        assert!(acc_big <= target + 1e-12);
    }
}

#[test]
fn interval_covers_exact_value() {
    let params = shaped(4, None);
    let k = 4;
    let exact = MarkovOracle::from_params(&params).unwrap().avg_min_entropy(k - 1).unwrap().0;
    let pred = fit_counting(&gen(&params, 2_000_000, 77), 4, k).unwrap();
    let covered = (0..100)
        .filter(|i| {
            let test = gen(&params, 200_000, 1000 + i);
            evaluate(&pred, &test, Strategy::Joint).unwrap().covers(exact)
        })
        .count();
    assert!(covered >= 90, "covered {covered}/100");
}

#[test]
fn final_estimate_never_exceeds_global() {
    let cfg = NistConfig::default();
    for (i, params) in [shaped(10, None), shaped(2, Some(&[1, -1])), shaped(1, None)].iter().enumerate() {
        let data = gen(params, 200_000, 50 + i as u64);
        for which in NistPredictor::ALL {
            let est = nist_predict(&data, which, &cfg).unwrap();
            let (g, l) = (est.h_global.unwrap(), est.h_local.unwrap());
            assert!(est.h_final <= g && est.h_final == g.min(l), "{which:?}: {est:?}");
            assert!((0.0..=1.0).contains(&est.h_final));
        }
    }
}
