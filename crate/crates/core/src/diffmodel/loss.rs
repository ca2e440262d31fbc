use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Probabilities are clamped to this floor before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    /// Negative log-likelihood of softmax probabilities. Optional per-class
    /// weights are renormalized to mean 1 over each batch.
    CrossEntropy { class_weights: Option<Vec<f64>> },
    /// Per-sample mean of squared errors over output features.
    MeanSquaredError,
}

impl LossKind {
    pub fn cross_entropy() -> Self {
        LossKind::CrossEntropy {
            class_weights: None,
        }
    }

    pub fn weighted_cross_entropy(weights: Vec<f64>) -> Self {
        LossKind::CrossEntropy {
            class_weights: Some(weights),
        }
    }

    pub(crate) fn validate(&self, outputs: usize) -> Result<()> {
        if let LossKind::CrossEntropy {
            class_weights: Some(w),
        } = self
        {
            if w.len() != outputs {
                return Err(Error::DimensionMismatch {
                    what: "class weight count",
                    expected: outputs,
                    actual: w.len(),
                });
            }
            if w.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
                return Err(Error::config("class weights must be strictly positive"));
            }
        }
        Ok(())
    }

    /// Per-sample loss multipliers for `rows`, normalized to mean 1.
    pub(crate) fn sample_weights(&self, targets: &Targets<'_>, rows: &[usize]) -> Option<Vec<f64>> {
        let (LossKind::CrossEntropy {
            class_weights: Some(cw),
        }, Targets::Classes(labels)) = (self, targets)
        else {
            return None;
        };
        let raw: Vec<f64> = rows.iter().map(|&r| cw[labels[r]]).collect();
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        Some(raw.into_iter().map(|w| w / mean).collect())
    }
}

/// Supervision for a batch of predictions.
#[derive(Debug, Clone, Copy)]
pub enum Targets<'a> {
    Classes(&'a [usize]),
    Dense(&'a Matrix),
}

impl<'a> Targets<'a> {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes(c) => c.len(),
            Targets::Dense(m) => m.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn row(&self, i: usize) -> SampleTarget<'a> {
        match *self {
            Targets::Classes(c) => SampleTarget::Class(c[i]),
            Targets::Dense(m) => SampleTarget::Dense(m.row(i)),
        }
    }

    /// Checks the targets against a model output width and loss kind.
    pub(crate) fn check(&self, rows: usize, outputs: usize, kind: &LossKind) -> Result<()> {
        if self.len() != rows {
            return Err(Error::DimensionMismatch {
                what: "target rows",
                expected: rows,
                actual: self.len(),
            });
        }
        match (self, kind) {
            (Targets::Classes(labels), LossKind::CrossEntropy { .. }) => {
                if let Some(&bad) = labels.iter().find(|&&l| l >= outputs) {
                    return Err(Error::LabelOutOfRange {
                        label: bad,
                        classes: outputs,
                    });
                }
            }
            (Targets::Dense(m), LossKind::MeanSquaredError) => {
                if m.cols() != outputs {
                    return Err(Error::DimensionMismatch {
                        what: "target width",
                        expected: outputs,
                        actual: m.cols(),
                    });
                }
                if !m.all_finite() {
                    return Err(Error::NonFinite("targets"));
                }
            }
            _ => {
                return Err(Error::config(
                    "cross-entropy needs class labels and MSE needs dense targets",
                ))
            }
        }
        kind.validate(outputs)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum SampleTarget<'a> {
    Class(usize),
    Dense(&'a [f64]),
}

#[inline]
pub(crate) fn sample_loss(pred: &[f64], target: SampleTarget<'_>) -> f64 {
    match target {
        SampleTarget::Class(c) => -pred[c].max(PROB_FLOOR).ln(),
        SampleTarget::Dense(y) => {
            let d = pred.len() as f64;
            pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / d
        }
    }
}

/// Gradient of the per-sample loss with respect to the network's linear
/// output (logits for a classifier, reconstruction for an autoencoder).
#[inline]
pub(crate) fn output_delta(pred: &[f64], target: SampleTarget<'_>, out: &mut [f64]) {
    match target {
        SampleTarget::Class(c) => {
            if pred[c] < PROB_FLOOR {
                // clamped region: loss is locally constant
                out.iter_mut().for_each(|v| *v = 0.0);
            } else {
                out.copy_from_slice(pred);
                out[c] -= 1.0;
            }
        }
        SampleTarget::Dense(y) => {
            let scale = 2.0 / pred.len() as f64;
            for ((o, p), t) in out.iter_mut().zip(pred).zip(y) {
                *o = scale * (p - t);
            }
        }
    }
}

/// Batch loss: mean per-sample loss, with class weights (if any) as
/// per-sample factors normalized to mean 1 over the batch.
pub fn loss(pred: &Matrix, y: Targets<'_>, kind: &LossKind) -> Result<f64> {
    if pred.rows() == 0 {
        return Err(Error::Empty("prediction batch"));
    }
    if !pred.all_finite() {
        return Err(Error::NonFinite("predictions"));
    }
    y.check(pred.rows(), pred.cols(), kind)?;
    let rows: Vec<usize> = (0..pred.rows()).collect();
    let weights = kind.sample_weights(&y, &rows);
    let mut total = 0.0;
    for i in 0..pred.rows() {
        let l = sample_loss(pred.row(i), y.row(i));
        total += weights.as_ref().map_or(l, |w| w[i] * l);
    }
    Ok(total / pred.rows() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_entropy_of_perfect_prediction_is_zero() {
        let pred = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let l = loss(&pred, Targets::Classes(&[0, 1]), &LossKind::cross_entropy()).unwrap();
        assert!(l.abs() < 1e-12);
    }

    #[test]
    fn uniform_binary_prediction_costs_ln2() {
        let pred = Matrix::from_rows(&[[0.5, 0.5]]).unwrap();
        let l = loss(&pred, Targets::Classes(&[0]), &LossKind::cross_entropy()).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn mse_of_exact_reconstruction_is_zero() {
        let y = Matrix::from_rows(&[[1.0, -2.0, 3.5]]).unwrap();
        let l = loss(&y, Targets::Dense(&y), &LossKind::MeanSquaredError).unwrap();
        assert_eq!(l, 0.0);
    }

    #[test]
    fn confident_misprediction_is_finite() {
        let pred = Matrix::from_rows(&[[1.0, 0.0]]).unwrap();
        let l = loss(&pred, Targets::Classes(&[1]), &LossKind::cross_entropy()).unwrap();
        assert!((l - (-PROB_FLOOR.ln())).abs() < 1e-9);
    }

    #[test]
    fn class_weights_normalize_to_batch_mean_one() {
        let pred = Matrix::from_rows(&[[0.5, 0.5], [0.9, 0.1], [0.2, 0.8]]).unwrap();
        let labels = [0, 0, 1];
        let kind = LossKind::weighted_cross_entropy(vec![2.0, 1.0]);
        let got = loss(&pred, Targets::Classes(&labels), &kind).unwrap();
        // raw weights 2,2,1 -> mean 5/3 -> normalized 1.2,1.2,0.6
        let per = [0.5f64.ln(), 0.9f64.ln(), 0.8f64.ln()].map(|v| -v);
        let expected = (1.2 * per[0] + 1.2 * per[1] + 0.6 * per[2]) / 3.0;
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_labels_and_nan() {
        let pred = Matrix::from_rows(&[[0.5, 0.5]]).unwrap();
        assert!(matches!(
            loss(&pred, Targets::Classes(&[2]), &LossKind::cross_entropy()),
            Err(Error::LabelOutOfRange { .. })
        ));
        let nan = Matrix::from_rows(&[[f64::NAN, 0.5]]).unwrap();
        assert!(matches!(
            loss(&nan, Targets::Classes(&[0]), &LossKind::cross_entropy()),
            Err(Error::NonFinite(_))
        ));
        let bad_w = LossKind::weighted_cross_entropy(vec![1.0, 0.0]);
        assert!(loss(&pred, Targets::Classes(&[0]), &bad_w).is_err());
    }
}
