//! Data valuation with gradient similarity.
//!
//! A model is trained by SGD on mini-batches of the target set. Every
//! `period` iterations (starting with the untrained model at iteration 0)
//! each source sample's own loss gradient is compared with the current
//! target-batch gradient. A sample's value is its mean similarity over those
//! snapshots, averaged again over independent runs.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffmodel::{
    batch_grad_into, check_params, init_params, sample_grad_into, sgd_step_in_place, Architecture,
    GradientVector, LossKind, ModelSpec, ParamSelector, ParameterVector, PassMode, Targets,
    Workspace,
};
use crate::error::{Error, Result};
use crate::harness::Dataset;
use crate::rng::{derive_seed, derive_tagged, rng_from};
use crate::similarity::SimilarityKind;
use crate::values::{digest_str, DataValues, Method};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValuationConfig {
    /// SGD learning rate for the target-driven parameter updates.
    pub lr: f64,
    pub iterations: usize,
    /// Target mini-batch size.
    pub batch_size: usize,
    pub similarity: SimilarityKind,
    /// Compare gradients every `period` iterations.
    pub period: usize,
    pub runs: usize,
    /// Run `r` uses seed `seed + r`.
    pub seed: u64,
    /// Weight target-loss classes by `N / (K * count_c)`.
    pub balance_classes: bool,
    /// Source gradients materialized at once.
    pub chunk_size: usize,
    pub params: ParamSelector,
    /// Apply dropout while extracting gradients (off: eval-mode passes).
    pub dropout_in_gradients: bool,
}

impl Default for ValuationConfig {
    fn default() -> Self {
        Self {
            lr: 0.05,
            iterations: 500,
            batch_size: 100,
            similarity: SimilarityKind::Cosine,
            period: 1,
            runs: 1,
            seed: 0,
            balance_classes: false,
            chunk_size: 256,
            params: ParamSelector::All,
            dropout_in_gradients: false,
        }
    }
}

impl ValuationConfig {
    pub fn validate(&self, target_len: usize) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return fail(format!("learning rate must be positive, got {}", self.lr));
        }
        if self.iterations == 0 {
            return fail("iterations must be at least 1".into());
        }
        if self.period == 0 || self.period > self.iterations {
            return fail(format!(
                "period must be in 1..={}, got {}",
                self.iterations, self.period
            ));
        }
        if self.batch_size == 0 || self.batch_size > target_len {
            return fail(format!(
                "target batch size must be in 1..={target_len}, got {}",
                self.batch_size
            ));
        }
        if self.runs == 0 {
            return fail("run count must be at least 1".into());
        }
        if self.chunk_size == 0 {
            return fail("chunk size must be at least 1".into());
        }
        Ok(())
    }

    /// Similarity snapshots taken per run: `ceil(iterations / period)`.
    pub fn snapshots_per_run(&self) -> usize {
        self.iterations.div_ceil(self.period)
    }

    pub fn run_seeds(&self) -> Vec<u64> {
        (0..self.runs as u64).map(|r| self.seed.wrapping_add(r)).collect()
    }

    pub fn digest(&self, spec: &ModelSpec) -> String {
        let cfg = serde_json::to_string(self).expect("config serializes");
        let spec = serde_json::to_string(spec).expect("spec serializes");
        digest_str(&format!("{spec}|{cfg}"))
    }
}

/// Per-class weights `N / (K * count_c)` for a set of labels.
pub fn class_weights(labels: &[usize], num_classes: usize) -> Result<Vec<f64>> {
    if labels.is_empty() {
        return Err(Error::Empty("labels"));
    }
    let mut counts = vec![0usize; num_classes];
    for &l in labels {
        if l >= num_classes {
            return Err(Error::LabelOutOfRange {
                label: l,
                classes: num_classes,
            });
        }
        counts[l] += 1;
    }
    if let Some(c) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Degenerate(format!("class {c} has no samples")));
    }
    let n = labels.len() as f64;
    let k = num_classes as f64;
    Ok(counts.into_iter().map(|c| n / (k * c as f64)).collect())
}

/// Values plus phase timings of one valuation.
#[derive(Debug, Clone)]
pub struct DvgsOutcome {
    pub values: DataValues,
    /// Per-run value vectors before the cross-run average.
    pub per_run: Vec<Vec<f64>>,
    /// Wall time spent computing source gradients and similarities, summed over runs.
    pub similarity_time: Duration,
    pub total_time: Duration,
}

/// Epoch-style sampling without replacement; reshuffles when fewer than a
/// full batch remain.
struct BatchSampler {
    order: Vec<usize>,
    cursor: usize,
    batch: usize,
    rng: ChaCha8Rng,
}

impl BatchSampler {
    fn new(n: usize, batch: usize, seed: u64) -> Self {
        let mut rng = rng_from(seed);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        Self {
            order,
            cursor: 0,
            batch,
            rng,
        }
    }

    fn next_batch(&mut self) -> &[usize] {
        if self.cursor + self.batch > self.order.len() {
            self.order.shuffle(&mut self.rng);
            self.cursor = 0;
        }
        let b = &self.order[self.cursor..self.cursor + self.batch];
        self.cursor += self.batch;
        b
    }
}

struct Problem<'a> {
    spec: &'a ModelSpec,
    source: &'a Dataset,
    target: &'a Dataset,
    source_targets: Targets<'a>,
    target_targets: Targets<'a>,
    target_loss: LossKind,
    config: &'a ValuationConfig,
    ranges: Vec<std::ops::Range<usize>>,
}

/// Supervised valuation with a classifier.
pub fn dvgs_value(
    spec: &ModelSpec,
    source: &Dataset,
    target: &Dataset,
    config: &ValuationConfig,
) -> Result<DataValues> {
    if spec.architecture != Architecture::Classifier {
        return Err(Error::config("dvgs_value needs a classifier; use dvgs_value_unsupervised"));
    }
    Ok(run_dvgs(spec, source, target, config, None)?.values)
}

/// Unsupervised valuation with an autoencoder and reconstruction loss; labels are ignored.
pub fn dvgs_value_unsupervised(
    spec: &ModelSpec,
    source: &Dataset,
    target: &Dataset,
    config: &ValuationConfig,
) -> Result<DataValues> {
    if spec.architecture != Architecture::Autoencoder {
        return Err(Error::config("dvgs_value_unsupervised needs an autoencoder"));
    }
    Ok(run_dvgs(spec, source, target, config, None)?.values)
}

/// Full valuation with timings. `init`, when given, replaces the fresh
/// initialization of every run (e.g. a pretrained model).
pub fn run_dvgs(
    spec: &ModelSpec,
    source: &Dataset,
    target: &Dataset,
    config: &ValuationConfig,
    init: Option<&ParameterVector>,
) -> Result<DvgsOutcome> {
    let started = Instant::now();
    spec.validate()?;
    if source.is_empty() {
        return Err(Error::Empty("source set"));
    }
    if target.is_empty() {
        return Err(Error::Empty("target set"));
    }
    for (d, what) in [(source, "source width"), (target, "target width")] {
        if d.width() != spec.input_width() {
            return Err(Error::DimensionMismatch {
                what,
                expected: spec.input_width(),
                actual: d.width(),
            });
        }
    }
    config.validate(target.len())?;
    if let Some(p) = init {
        check_params(spec, p)?;
    }

    let (method, target_loss, source_loss) = match spec.architecture {
        Architecture::Classifier => {
            let weights = if config.balance_classes {
                Some(class_weights(target.classes_or_err()?, spec.output_width())?)
            } else {
                None
            };
            (
                Method::Dvgs,
                LossKind::CrossEntropy {
                    class_weights: weights,
                },
                LossKind::cross_entropy(),
            )
        }
        Architecture::Autoencoder => (
            Method::DvgsUnsupervised,
            LossKind::MeanSquaredError,
            LossKind::MeanSquaredError,
        ),
    };
    let source_targets = source.targets(spec.architecture)?;
    let target_targets = target.targets(spec.architecture)?;
    source_targets.check(source.len(), spec.output_width(), &source_loss)?;
    target_targets.check(target.len(), spec.output_width(), &target_loss)?;

    let problem = Problem {
        spec,
        source,
        target,
        source_targets,
        target_targets,
        target_loss,
        config,
        ranges: spec.layout().ranges(&config.params)?,
    };

    let seeds = config.run_seeds();
    let mut per_run = Vec::with_capacity(seeds.len());
    let mut similarity_time = Duration::ZERO;
    for (run, &seed) in seeds.iter().enumerate() {
        let (values, t) = single_run(&problem, run, seed, init)?;
        per_run.push(values);
        similarity_time += t;
    }

    let mut mean = vec![0.0; source.len()];
    for v in &per_run {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    let runs = per_run.len() as f64;
    mean.iter_mut().for_each(|m| *m /= runs);

    let mut values = DataValues::new(source.ids().to_vec(), mean, method)?;
    values.config_digest = config.digest(spec);
    values.seeds = seeds;
    values.snapshots = Some(config.snapshots_per_run());
    Ok(DvgsOutcome {
        values,
        per_run,
        similarity_time,
        total_time: started.elapsed(),
    })
}

fn gather(src: &[f64], ranges: &[std::ops::Range<usize>], dst: &mut Vec<f64>) {
    dst.clear();
    for r in ranges {
        dst.extend_from_slice(&src[r.clone()]);
    }
}

fn single_run(
    p: &Problem<'_>,
    run: usize,
    seed: u64,
    init: Option<&ParameterVector>,
) -> Result<(Vec<f64>, Duration)> {
    let cfg = p.config;
    let spec = p.spec;
    let n_src = p.source.len();
    let n_params = spec.num_params();
    let mut params = match init {
        Some(pre) => pre.clone(),
        None => init_params(spec, derive_tagged(seed, "init"))?,
    };
    let mut sampler = BatchSampler::new(p.target.len(), cfg.batch_size, derive_tagged(seed, "batches"));
    let dropout_seed = derive_tagged(seed, "dropout");
    let whole = p.ranges.len() == 1 && p.ranges[0] == (0..n_params);

    let mut ws = Workspace::new(spec);
    let mut target_grad = GradientVector::zeros(params.layout().clone());
    let mut target_sel = Vec::with_capacity(n_params);
    let chunk = cfg.chunk_size.min(n_src);
    let mut chunk_grads = vec![0.0; chunk * n_params];
    let mut sums = vec![0.0; n_src];
    let mut snapshots = 0usize;
    let mut sim_time = Duration::ZERO;

    for iteration in 0..cfg.iterations {
        let iter_seed = derive_seed(dropout_seed, iteration as u64);
        let train_mode = |s: u64| {
            if cfg.dropout_in_gradients {
                PassMode::Train { seed: s }
            } else {
                PassMode::Eval
            }
        };
        let batch = sampler.next_batch();
        let loss = batch_grad_into(
            spec,
            params.values(),
            p.target.features(),
            &p.target_targets,
            batch,
            &p.target_loss,
            train_mode(iter_seed),
            &mut ws,
            target_grad.values_mut(),
        );
        if !loss.is_finite() || target_grad.values().iter().any(|g| !g.is_finite()) {
            return Err(Error::ValuationDiverged { run, iteration });
        }

        if iteration % cfg.period == 0 {
            let t0 = Instant::now();
            gather(target_grad.values(), &p.ranges, &mut target_sel);
            let target_slice: &[f64] = if whole { target_grad.values() } else { &target_sel };
            let param_values = params.values();
            for start in (0..n_src).step_by(chunk) {
                let end = (start + chunk).min(n_src);
                let len = end - start;
                chunk_grads[..len * n_params]
                    .par_chunks_mut(n_params)
                    .zip(sums[start..end].par_iter_mut())
                    .enumerate()
                    .try_for_each_init(
                        || (Workspace::new(spec), Vec::with_capacity(n_params)),
                        |(ws, sel), (j, (g, acc))| -> Result<()> {
                            let k = start + j;
                            sample_grad_into(
                                spec,
                                param_values,
                                p.source.features().row(k),
                                p.source_targets.row(k),
                                train_mode(derive_seed(iter_seed, 1 + k as u64)),
                                ws,
                                g,
                            );
                            if g.iter().any(|v| !v.is_finite()) {
                                return Err(Error::NonFinite("source gradient"));
                            }
                            let src: &[f64] = if whole {
                                g
                            } else {
                                gather(g, &p.ranges, sel);
                                sel
                            };
                            *acc += cfg.similarity.eval(src, target_slice);
                            Ok(())
                        },
                    )?;
            }
            snapshots += 1;
            sim_time += t0.elapsed();
        }

        sgd_step_in_place(&mut params, &target_grad, cfg.lr);
    }

    let denom = snapshots as f64;
    Ok((sums.into_iter().map(|s| s / denom).collect(), sim_time))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Labels;
    use crate::matrix::Matrix;

    #[test]
    fn class_weight_reference_values() {
        assert_eq!(class_weights(&[0, 1, 1, 0], 2).unwrap(), vec![1.0, 1.0]);
        let w = class_weights(&[0, 0, 0, 1], 2).unwrap();
        assert!((w[0] - 4.0 / 6.0).abs() < 1e-15);
        assert_eq!(w[1], 2.0);
        assert!(class_weights(&[0, 0], 2).is_err());
        assert!(class_weights(&[], 2).is_err());
    }

    #[test]
    fn class_weights_have_unit_sample_mean() {
        let labels = [0, 0, 0, 1, 2, 2];
        let w = class_weights(&labels, 3).unwrap();
        let mean = labels.iter().map(|&l| w[l]).sum::<f64>() / labels.len() as f64;
        assert!((mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampler_covers_every_row_each_epoch() {
        let mut s = BatchSampler::new(10, 5, 3);
        let mut seen: Vec<usize> = s.next_batch().to_vec();
        seen.extend_from_slice(s.next_batch());
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
        // 10 rows, batch 4: third draw reshuffles
        let mut s = BatchSampler::new(10, 4, 3);
        for _ in 0..7 {
            assert_eq!(s.next_batch().len(), 4);
        }
    }

    #[test]
    fn config_validation() {
        let ok = ValuationConfig {
            iterations: 10,
            period: 3,
            batch_size: 4,
            ..ValuationConfig::default()
        };
        ok.validate(4).unwrap();
        assert_eq!(ok.snapshots_per_run(), 4);
        assert!(ValuationConfig { period: 11, ..ok.clone() }.validate(4).is_err());
        assert!(ok.validate(3).is_err());
        assert!(ValuationConfig { runs: 0, ..ok.clone() }.validate(4).is_err());
        assert!(ValuationConfig { chunk_size: 0, ..ok.clone() }.validate(4).is_err());
        assert!(ValuationConfig { lr: 0.0, ..ok }.validate(4).is_err());
    }

    #[test]
    fn wrong_architecture_or_empty_sets_are_rejected() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let d = Dataset::from_features(x, Some(Labels::Classes(vec![0, 1]))).unwrap();
        let ae = ModelSpec::autoencoder(2, &[2]).unwrap();
        let clf = ModelSpec::classifier(2, &[2], 2).unwrap();
        let cfg = ValuationConfig {
            iterations: 2,
            batch_size: 1,
            ..ValuationConfig::default()
        };
        assert!(dvgs_value(&ae, &d, &d, &cfg).is_err());
        assert!(dvgs_value_unsupervised(&clf, &d, &d, &cfg).is_err());
        let empty = d.subset(&[]);
        assert!(matches!(dvgs_value(&clf, &empty, &d, &cfg), Err(Error::Empty(_))));
        assert!(matches!(dvgs_value(&clf, &d, &empty, &cfg), Err(Error::Empty(_))));
    }
}
