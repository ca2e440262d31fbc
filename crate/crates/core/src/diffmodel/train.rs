use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::loss::{LossKind, Targets};
use super::network::{
    batch_grad_into, check_features, check_loss_kind, check_params, forward, PassMode, Workspace,
};
use super::params::{init_params, sgd_step_in_place, GradientVector, ParameterVector};
use super::spec::ModelSpec;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, derive_tagged, rng_from};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            lr: 0.1,
            batch_size: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ParameterVector,
    /// Mean loss over the last epoch's mini-batches; the full-data loss when `epochs == 0`.
    pub final_loss: f64,
}

/// Mini-batch SGD from a fresh initialization seeded by `config.seed`.
pub fn train(
    spec: &ModelSpec,
    x: &Matrix,
    y: Targets<'_>,
    kind: &LossKind,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let init = init_params(spec, config.seed)?;
    train_from(spec, init, x, y, kind, config)
}

/// Mini-batch SGD starting at `params`. Batches are drawn by reshuffling the
/// rows every epoch; the last partial batch of an epoch is kept.
pub fn train_from(
    spec: &ModelSpec,
    mut params: ParameterVector,
    x: &Matrix,
    y: Targets<'_>,
    kind: &LossKind,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    check_params(spec, &params)?;
    check_loss_kind(spec, kind)?;
    if x.rows() == 0 {
        return Err(Error::Empty("training set"));
    }
    check_features(spec, x)?;
    y.check(x.rows(), spec.output_width(), kind)?;
    if config.batch_size == 0 {
        return Err(Error::config("batch size must be positive"));
    }
    if !(config.lr.is_finite() && config.lr > 0.0) {
        return Err(Error::config("learning rate must be positive"));
    }

    if config.epochs == 0 {
        let pred = forward(spec, &params, x, PassMode::Eval)?;
        let final_loss = super::loss::loss(&pred, y, kind)?;
        return Ok(TrainOutcome { params, final_loss });
    }

    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut shuffle_rng = rng_from(derive_tagged(config.seed, "shuffle"));
    let dropout_seed = derive_tagged(config.seed, "dropout");
    let mut ws = Workspace::new(spec);
    let mut grad = GradientVector::zeros(params.layout().clone());
    let mut step: u64 = 0;
    let mut final_loss = f64::NAN;

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mode = PassMode::Train {
                seed: derive_seed(dropout_seed, step),
            };
            let l = batch_grad_into(
                spec,
                params.values(),
                x,
                &y,
                batch,
                kind,
                mode,
                &mut ws,
                grad.values_mut(),
            );
            if !l.is_finite() || grad.values().iter().any(|g| !g.is_finite()) {
                return Err(Error::TrainingDiverged { epoch });
            }
            epoch_loss += l * batch.len() as f64;
            sgd_step_in_place(&mut params, &grad, config.lr);
            step += 1;
        }
        final_loss = epoch_loss / x.rows() as f64;
    }
    Ok(TrainOutcome { params, final_loss })
}

/// Index of the most probable class for each row.
pub fn predict_classes(spec: &ModelSpec, params: &ParameterVector, x: &Matrix) -> Result<Vec<usize>> {
    let probs = forward(spec, params, x, PassMode::Eval)?;
    Ok(probs
        .iter_rows()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best })
                .0
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn blobs(n: usize, seed: u64) -> (Matrix, Vec<usize>) {
        let mut rng = rng_from(seed);
        let mut data = Vec::with_capacity(n * 2);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let c = i % 2;
            let center = if c == 0 { -2.0 } else { 2.0 };
            data.push(center + rng.random::<f64>() - 0.5);
            data.push(rng.random::<f64>() - 0.5);
            labels.push(c);
        }
        (Matrix::from_vec(n, 2, data).unwrap(), labels)
    }

    #[test]
    fn zero_epochs_returns_initial_params() {
        let spec = ModelSpec::classifier(2, &[4], 2).unwrap();
        let (x, y) = blobs(10, 1);
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let out = train(&spec, &x, Targets::Classes(&y), &LossKind::cross_entropy(), &cfg).unwrap();
        assert_eq!(out.params, init_params(&spec, cfg.seed).unwrap());
        assert!(out.final_loss.is_finite());
    }

    #[test]
    fn separable_blobs_are_learned_and_training_is_reproducible() {
        let spec = ModelSpec::classifier(2, &[8], 2).unwrap();
        let (x, y) = blobs(200, 2);
        let cfg = TrainConfig {
            epochs: 20,
            lr: 0.1,
            batch_size: 16,
            seed: 4,
        };
        let a = train(&spec, &x, Targets::Classes(&y), &LossKind::cross_entropy(), &cfg).unwrap();
        let b = train(&spec, &x, Targets::Classes(&y), &LossKind::cross_entropy(), &cfg).unwrap();
        assert_eq!(a.params, b.params);
        let pred = predict_classes(&spec, &a.params, &x).unwrap();
        let acc = pred.iter().zip(&y).filter(|(p, t)| p == t).count() as f64 / y.len() as f64;
        assert!(acc >= 0.95, "accuracy {acc}");
    }

    #[test]
    fn autoencoder_fits_a_constant_dataset() {
        let spec = ModelSpec::autoencoder(3, &[4]).unwrap();
        let row = [0.5, -1.0, 2.0];
        let x = Matrix::from_rows(&vec![row; 16]).unwrap();
        let cfg = TrainConfig {
            epochs: 400,
            lr: 0.05,
            batch_size: 8,
            seed: 1,
        };
        let out = train(&spec, &x, Targets::Dense(&x), &LossKind::MeanSquaredError, &cfg).unwrap();
        assert!(out.final_loss < 1e-4, "loss {}", out.final_loss);
    }

    #[test]
    fn divergence_reports_epoch() {
        let spec = ModelSpec::autoencoder(2, &[8]).unwrap();
        let x = Matrix::from_rows(&[[1e200, -1e200], [2e200, 5e199]]).unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            lr: 10.0,
            batch_size: 2,
            seed: 0,
        };
        let err = train(&spec, &x, Targets::Dense(&x), &LossKind::MeanSquaredError, &cfg).unwrap_err();
        assert!(matches!(err, Error::TrainingDiverged { .. }), "{err:?}");
    }
}
