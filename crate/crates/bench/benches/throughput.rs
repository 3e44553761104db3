use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use minent_core::generator::{generate, GeneratorConfig};
use minent_core::monte_carlo::{mc_entropies, McConfig};
use minent_core::predictors::counting::{evaluate, fit_counting};
use minent_core::predictors::nist::{nist_predict, NistConfig, NistPredictor};
use minent_core::{AlphaShape, BitSequence, GbarParams, MarkovOracle, Strategy};

fn uniform(p: usize) -> GbarParams {
    GbarParams::from_shape(AlphaShape::Uniform, p, 0.5, None, 0.5).unwrap()
}

fn bits(p: usize, n: usize, seed: u64) -> BitSequence {
    generate(&GeneratorConfig::new(uniform(p), n, seed)).unwrap()
}

fn generator(c: &mut Criterion) {
    let mut g = c.benchmark_group("generate");
    let n = 1_000_000;
    g.throughput(Throughput::Elements(n as u64));
    for p in [1, 10, 20] {
        let cfg = GeneratorConfig::new(uniform(p), n, 1);
        g.bench_with_input(BenchmarkId::from_parameter(p), &cfg, |b, cfg| b.iter(|| generate(cfg).unwrap()));
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("oracle");
    g.sample_size(10);
    for (p, n) in [(4, 8), (10, 8), (12, 12)] {
        let params = uniform(p);
        g.bench_function(format!("p{p}_n{n}"), |b| {
            b.iter(|| {
                let o = MarkovOracle::from_params(&params).unwrap();
                black_box((o.min_entropy(n).unwrap(), o.avg_min_entropy(n).unwrap()))
            })
        });
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("monte_carlo");
    g.sample_size(10);
    let bits = 800_000;
    g.throughput(Throughput::Elements(bits as u64));
    let cfg = McConfig::new(uniform(10), 8, 3).with_size(1, bits);
    g.bench_function("p10_n8", |b| b.iter(|| mc_entropies(&cfg).unwrap()));
    g.finish();
}

fn counting(c: &mut Criterion) {
    let mut g = c.benchmark_group("counting");
    g.sample_size(10);
    let train = bits(10, 2_000_000, 4);
    let test = bits(10, 500_000, 5);
    g.throughput(Throughput::Elements(train.len() as u64));
    for k in [1, 6, 12] {
        g.bench_function(format!("fit_k{k}"), |b| b.iter(|| fit_counting(&train, 10, k).unwrap()));
        let pred = fit_counting(&train, 10, k).unwrap();
        for s in [Strategy::Joint, Strategy::Greedy] {
            g.bench_function(format!("eval_k{k}_{s:?}"), |b| b.iter(|| evaluate(&pred, &test, s).unwrap()));
        }
    }
    g.finish();
}

fn nist(c: &mut Criterion) {
    let mut g = c.benchmark_group("nist");
    g.sample_size(10);
    let data = bits(10, 200_000, 6);
    let cfg = NistConfig::default();
    g.throughput(Throughput::Elements(data.len() as u64));
    for which in NistPredictor::ALL {
        g.bench_function(which.as_str(), |b| b.iter(|| nist_predict(&data, which, &cfg).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, generator, oracle, monte_carlo, counting, nist);
criterion_main!(benches);
