//! Ranking and correlation metrics used to score data values against ground truth.
//!
//! Ties are resolved with average (mid) ranks everywhere.

mod curves;
mod report;

pub use curves::{discovery_curve, CurvePoint};
pub use report::EvalReport;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Average ranks (1-based) with ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share rank mean(i+1..=j+1)
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn check_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    Ok(())
}

/// Mann–Whitney statistic: the number of (positive, negative) pairs where the
/// positive scores higher, counting ties as one half. Returns `(u, pairs)`.
pub fn mann_whitney_u(labels: &[bool], scores: &[f64]) -> Result<(f64, f64)> {
    if labels.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            what: "scores",
            expected: labels.len(),
            actual: scores.len(),
        });
    }
    check_finite(scores, "scores")?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Degenerate("AUROC needs both classes".into()));
    }
    let ranks = average_ranks(scores);
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l).map(|(r, _)| r).sum();
    let u = rank_sum - (n_pos as f64) * (n_pos as f64 + 1.0) / 2.0;
    Ok((u, n_pos as f64 * n_neg as f64))
}

/// `u / pairs`, except that the larger of `u` and `pairs - u` is normalized as
/// `1 - small / pairs`, so complementary statistics sum to exactly 1.
pub fn normalize_u(u: f64, pairs: f64) -> f64 {
    let complement = pairs - u;
    if u <= complement {
        u / pairs
    } else {
        1.0 - complement / pairs
    }
}

/// Rank-based (Mann–Whitney) area under the ROC curve of `scores` for the
/// positive class `labels[i] == true`.
///
/// `auroc(l, s) + auroc(l, -s) == 1.0` holds exactly in floating point.
pub fn auroc(labels: &[bool], scores: &[f64]) -> Result<f64> {
    let (u, pairs) = mann_whitney_u(labels, scores)?;
    Ok(normalize_u(u, pairs))
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            what: "pearson input",
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::Empty("pearson needs at least two points"));
    }
    check_finite(a, "pearson input")?;
    check_finite(b, "pearson input")?;
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Degenerate("zero variance".into()));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation of average ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            what: "spearman input",
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() < 3 {
        return Err(Error::Empty("spearman needs at least three points"));
    }
    check_finite(a, "spearman input")?;
    check_finite(b, "spearman input")?;
    pearson(&average_ranks(a), &average_ranks(b))
        .map_err(|_| Error::Degenerate("zero rank variance".into()))
}

/// Coefficient of determination, `1 - SS_res / SS_tot`; may be negative.
pub fn r2(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            what: "r2 predictions",
            expected: y_true.len(),
            actual: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::Empty("r2 input"));
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let ss_tot: f64 = y_true.iter().map(|y| (y - mean) * (y - mean)).sum();
    let ss_res: f64 = y_true.iter().zip(y_pred).map(|(y, p)| (y - p) * (y - p)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Degenerate("r2 of constant targets".into()));
    }
    Ok(1.0 - ss_res / ss_tot)
}

/// Multi-output R² with per-column means: predicting every column's mean scores 0.
pub fn r2_columns(y_true: &crate::Matrix, y_pred: &crate::Matrix) -> Result<f64> {
    if y_true.rows() != y_pred.rows() || y_true.cols() != y_pred.cols() {
        return Err(Error::DimensionMismatch {
            what: "r2 prediction matrix",
            expected: y_true.rows() * y_true.cols(),
            actual: y_pred.rows() * y_pred.cols(),
        });
    }
    if y_true.rows() == 0 {
        return Err(Error::Empty("r2 input"));
    }
    let (n, d) = (y_true.rows(), y_true.cols());
    let mut means = vec![0.0; d];
    for row in y_true.iter_rows() {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n as f64);
    let mut ss_tot = 0.0;
    let mut ss_res = 0.0;
    for i in 0..n {
        for ((t, p), m) in y_true.row(i).iter().zip(y_pred.row(i)).zip(&means) {
            ss_tot += (t - m) * (t - m);
            ss_res += (t - p) * (t - p);
        }
    }
    if ss_tot == 0.0 {
        return Err(Error::Degenerate("r2 of constant targets".into()));
    }
    Ok(1.0 - ss_res / ss_tot)
}

pub fn accuracy(labels: &[usize], preds: &[usize]) -> Result<f64> {
    if labels.len() != preds.len() {
        return Err(Error::DimensionMismatch {
            what: "predictions",
            expected: labels.len(),
            actual: preds.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::Empty("accuracy input"));
    }
    let hits = labels.iter().zip(preds).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Replicate profiles of one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateGroup {
    pub id: String,
    pub members: Vec<Vec<f64>>,
}

/// Average Pearson correlation over all unordered member pairs.
pub fn apc(group: &ReplicateGroup) -> Result<f64> {
    let m = &group.members;
    if m.len() < 2 {
        return Err(Error::Degenerate(format!(
            "group '{}' has {} member(s); APC needs at least two",
            group.id,
            m.len()
        )));
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            total += pearson(&m[i], &m[j]).map_err(|e| match e {
                Error::Degenerate(_) => {
                    Error::Degenerate(format!("group '{}' has a constant member", group.id))
                }
                other => other,
            })?;
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}
