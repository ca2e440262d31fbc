use gradval::diffmodel::{grad_batch, grad_single, init_params, sgd_step, LossKind, PassMode, Targets};
use gradval::harness::synth_classification;
use gradval::rng::derive_tagged;
use gradval::similarity::similarity_slices;
use gradval::{
    dvgs_value, dvgs_value_unsupervised, run_dvgs, Dataset, Labels, Matrix, ModelSpec, SimilarityKind,
    ValuationConfig,
};

fn blobs(n: usize, seed: u64) -> Dataset {
    synth_classification(n, 3, 2, 2.0, seed).unwrap()
}

fn small_config() -> ValuationConfig {
    ValuationConfig {
        iterations: 40,
        batch_size: 10,
        lr: 0.1,
        ..ValuationConfig::default()
    }
}

/// Straight-line reimplementation for a target batch that spans the whole target set.
fn reference_values(spec: &ModelSpec, source: &Dataset, target: &Dataset, cfg: &ValuationConfig) -> Vec<f64> {
    let ce = LossKind::cross_entropy();
    let src_y = source.classes().unwrap();
    let mut total = vec![0.0; source.len()];
    for seed in cfg.run_seeds() {
        let mut params = init_params(spec, derive_tagged(seed, "init")).unwrap();
        let mut sums = vec![0.0; source.len()];
        let mut taken = 0;
        for i in 0..cfg.iterations {
            let g_t = grad_batch(
                spec,
                &params,
                target.features(),
                Targets::Classes(target.classes().unwrap()),
                &ce,
                PassMode::Eval,
            )
            .unwrap();
            if i % cfg.period == 0 {
                taken += 1;
                for (k, s) in sums.iter_mut().enumerate() {
                    let g = grad_single(
                        spec,
                        &params,
                        source.features().row(k),
                        gradval::diffmodel::SampleTarget::Class(src_y[k]),
                        &ce,
                        PassMode::Eval,
                    )
                    .unwrap();
                    *s += similarity_slices(cfg.similarity, g.values(), g_t.values()).unwrap();
                }
            }
            params = sgd_step(&params, &g_t, cfg.lr).unwrap();
        }
        for (t, s) in total.iter_mut().zip(sums) {
            *t += s / taken as f64;
        }
    }
    total.iter().map(|t| t / cfg.runs as f64).collect()
}

#[test]
fn matches_a_direct_reimplementation() {
    let source = blobs(30, 1);
    let target = blobs(12, 2);
    let spec = ModelSpec::classifier(3, &[5], 2).unwrap();
    for (period, runs) in [(1, 1), (3, 2), (7, 3)] {
        let cfg = ValuationConfig {
            iterations: 20,
            batch_size: 12,
            period,
            runs,
            seed: 9,
            ..ValuationConfig::default()
        };
        let got = dvgs_value(&spec, &source, &target, &cfg).unwrap();
        assert_eq!(got.snapshots, Some(20usize.div_ceil(period)));
        let want = reference_values(&spec, &source, &target, &cfg);
        for (a, b) in got.values.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10, "period {period} runs {runs}: {a} vs {b}");
        }
    }
}

#[test]
fn duplicated_samples_get_identical_values() {
    let base = blobs(20, 3);
    let mut rows: Vec<usize> = (0..20).collect();
    rows.extend([4, 11]);
    let picked = base.subset(&rows);
    let ids: Vec<String> = (0..rows.len()).map(|i| format!("s{i}")).collect();
    let source = Dataset::new(
        ids,
        picked.features().clone(),
        Some(Labels::Classes(picked.classes().unwrap().to_vec())),
        None,
    )
    .unwrap();
    let spec = ModelSpec::classifier(3, &[6], 2).unwrap();
    let v = dvgs_value(&spec, &source, &blobs(30, 4), &small_config()).unwrap();
    assert_eq!(v.values[4].to_bits(), v.values[20].to_bits());
    assert_eq!(v.values[11].to_bits(), v.values[21].to_bits());
}

#[test]
fn a_sample_identical_to_a_single_target_scores_one() {
    let x = Matrix::from_rows(&[[0.3, -1.2, 0.7]]).unwrap();
    let target = Dataset::from_features(x.clone(), Some(Labels::Classes(vec![1]))).unwrap();
    let source = Dataset::from_features(x, Some(Labels::Classes(vec![1]))).unwrap();
    let spec = ModelSpec::classifier(3, &[4], 2).unwrap();
    let cfg = ValuationConfig {
        iterations: 15,
        batch_size: 1,
        ..ValuationConfig::default()
    };
    let v = dvgs_value(&spec, &source, &target, &cfg).unwrap();
    assert!((v.values[0] - 1.0).abs() < 1e-12, "{}", v.values[0]);
}

#[test]
fn runs_use_consecutive_seeds_and_are_averaged() {
    let source = blobs(25, 5);
    let target = blobs(20, 6);
    let spec = ModelSpec::classifier(3, &[4], 2).unwrap();
    let cfg = ValuationConfig {
        runs: 3,
        seed: 40,
        ..small_config()
    };
    let out = run_dvgs(&spec, &source, &target, &cfg, None).unwrap();
    assert_eq!(out.values.seeds, vec![40, 41, 42]);
    for (r, run) in out.per_run.iter().enumerate() {
        let single = ValuationConfig {
            runs: 1,
            seed: 40 + r as u64,
            ..cfg.clone()
        };
        let alone = dvgs_value(&spec, &source, &target, &single).unwrap();
        assert_eq!(&alone.values, run);
    }
    for (k, v) in out.values.values.iter().enumerate() {
        let mean = (out.per_run[0][k] + out.per_run[1][k] + out.per_run[2][k]) / 3.0;
        assert_eq!(v.to_bits(), mean.to_bits());
    }
}

#[test]
fn chunking_and_thread_count_do_not_change_values() {
    let source = blobs(53, 7);
    let target = blobs(20, 8);
    let spec = ModelSpec::classifier(3, &[6], 2).unwrap();
    let reference = dvgs_value(&spec, &source, &target, &small_config()).unwrap();
    for chunk in [1, 7, 53, 1000] {
        for threads in [1, 3] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let cfg = ValuationConfig {
                chunk_size: chunk,
                ..small_config()
            };
            let v = pool.install(|| dvgs_value(&spec, &source, &target, &cfg).unwrap());
            assert_eq!(v.values, reference.values, "chunk {chunk} threads {threads}");
        }
    }
}

#[test]
fn constant_autoencoder_data_gets_equal_values() {
    let row = [0.5, -0.25, 1.0, 2.0];
    let source = Dataset::from_features(Matrix::from_rows(&[row; 12]).unwrap(), None).unwrap();
    let target = Dataset::from_features(Matrix::from_rows(&[row; 6]).unwrap(), None).unwrap();
    let spec = ModelSpec::autoencoder(4, &[2]).unwrap();
    let cfg = ValuationConfig {
        iterations: 10,
        batch_size: 3,
        ..ValuationConfig::default()
    };
    let v = dvgs_value_unsupervised(&spec, &source, &target, &cfg).unwrap();
    assert!(v.values.iter().all(|x| x.to_bits() == v.values[0].to_bits()));
}

#[test]
fn weighted_batch_gradient_is_the_normalized_weighted_mean() {
    let data = blobs(15, 9);
    let spec = ModelSpec::classifier(3, &[5], 2).unwrap();
    let params = init_params(&spec, 2).unwrap();
    let weights = vec![0.4, 2.5];
    let labels = data.classes().unwrap();
    let batch = grad_batch(
        &spec,
        &params,
        data.features(),
        Targets::Classes(labels),
        &LossKind::weighted_cross_entropy(weights.clone()),
        PassMode::Eval,
    )
    .unwrap();
    let mean_w = labels.iter().map(|&c| weights[c]).sum::<f64>() / labels.len() as f64;
    let mut manual = vec![0.0; spec.num_params()];
    for (k, &c) in labels.iter().enumerate() {
        let g = grad_single(
            &spec,
            &params,
            data.features().row(k),
            gradval::diffmodel::SampleTarget::Class(c),
            &LossKind::cross_entropy(),
            PassMode::Eval,
        )
        .unwrap();
        for (m, v) in manual.iter_mut().zip(g.values()) {
            *m += weights[c] / mean_w * v / labels.len() as f64;
        }
    }
    let err = batch.values().iter().zip(&manual).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-10, "{err}");
}

#[test]
fn flipping_a_clean_label_lowers_its_value() {
    let source = synth_classification(200, 4, 2, 3.0, 11).unwrap();
    let target = synth_classification(100, 4, 2, 3.0, 12).unwrap();
    let spec = ModelSpec::classifier(4, &[16], 2).unwrap();
    let cfg = ValuationConfig {
        iterations: 100,
        batch_size: 25,
        ..ValuationConfig::default()
    };
    let before = dvgs_value(&spec, &source, &target, &cfg).unwrap();
    let picked: Vec<usize> = (0..20).map(|i| i * 10).collect();
    let mut labels = source.classes().unwrap().to_vec();
    for &i in &picked {
        labels[i] = 1 - labels[i];
    }
    let flipped = source.with_classes(labels).unwrap();
    let after = dvgs_value(&spec, &flipped, &target, &cfg).unwrap();
    let delta: f64 = picked.iter().map(|&i| after.values[i] - before.values[i]).sum::<f64>() / 20.0;
    assert!(delta < 0.0, "mean change {delta}");
}

#[test]
fn other_similarity_kinds_run() {
    let source = blobs(10, 13);
    let target = blobs(10, 14);
    let spec = ModelSpec::classifier(3, &[3], 2).unwrap();
    for kind in SimilarityKind::ALL {
        let cfg = ValuationConfig {
            similarity: kind,
            iterations: 5,
            batch_size: 5,
            ..ValuationConfig::default()
        };
        let v = dvgs_value(&spec, &source, &target, &cfg).unwrap();
        assert!(v.values.iter().all(|x| x.is_finite()));
    }
}
