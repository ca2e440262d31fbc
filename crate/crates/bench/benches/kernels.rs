use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use gradval::baselines::{tmc_shapley, FnUtility, ShapleyConfig};
use gradval::diffmodel::{grad_batch, grad_single, LossKind, PassMode, SampleTarget, Targets};
use gradval::metrics::auroc;
use gradval::{dvgs_value, ValuationConfig};
use gradval_bench::{blobs, classifier, ids, labelled_scores, params};

fn gradients(c: &mut Criterion) {
    let spec = classifier(32);
    let p = params(&spec, 1);
    let data = blobs(256, 2);
    let classes = data.classes().unwrap();
    let ce = LossKind::cross_entropy();
    let mut g = c.benchmark_group("gradient");
    g.bench_function("single", |b| {
        b.iter(|| {
            grad_single(&spec, &p, data.features().row(0), SampleTarget::Class(classes[0]), &ce, PassMode::Eval).unwrap()
        })
    });
    g.throughput(Throughput::Elements(data.len() as u64));
    g.bench_function("batch_256", |b| {
        b.iter(|| grad_batch(&spec, &p, data.features(), Targets::Classes(classes), &ce, PassMode::Eval).unwrap())
    });
    g.finish();
}

fn valuation(c: &mut Criterion) {
    let spec = classifier(32);
    let target = blobs(200, 3);
    let mut g = c.benchmark_group("dvgs");
    g.sample_size(10);
    for n in [500usize, 2000] {
        let source = blobs(n, 4);
        for period in [1usize, 5] {
            let cfg = ValuationConfig {
                iterations: 50,
                period,
                runs: 1,
                ..ValuationConfig::default()
            };
            g.throughput(Throughput::Elements(n as u64));
            g.bench_with_input(BenchmarkId::new(format!("period_{period}"), n), &source, |b, s| {
                b.iter(|| dvgs_value(&spec, s, &target, &cfg).unwrap())
            });
        }
    }
    g.finish();
}

fn ranking(c: &mut Criterion) {
    let mut g = c.benchmark_group("auroc");
    for n in [1_000usize, 100_000] {
        let (labels, scores) = labelled_scores(n);
        g.throughput(Throughput::Elements(n as u64));
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| auroc(black_box(&labels), black_box(&scores)).unwrap())
        });
    }
    g.finish();
}

fn shapley(c: &mut Criterion) {
    let n = 40;
    let p: Vec<f64> = (0..n).map(|i| 0.05 + 0.9 * i as f64 / n as f64).collect();
    let coverage = FnUtility::new(n, move |s: &[usize]| 1.0 - s.iter().map(|&i| 1.0 - p[i]).product::<f64>());
    let players = ids(n);
    let mut g = c.benchmark_group("tmc_shapley");
    g.sample_size(20);
    for tolerance in [0.0, 0.01] {
        let cfg = ShapleyConfig {
            budget: 500,
            tolerance,
            ..ShapleyConfig::default()
        };
        g.bench_with_input(BenchmarkId::new("coverage_40", tolerance), &cfg, |b, cfg| {
            b.iter(|| tmc_shapley(&coverage, &players, cfg, 7).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, gradients, valuation, ranking, shapley);
criterion_main!(benches);
