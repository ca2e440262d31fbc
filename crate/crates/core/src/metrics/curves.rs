use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::fraction_count;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub fraction: f64,
    pub value: f64,
}

/// Share of all corrupted samples found after inspecting the lowest-valued
/// `floor(f * N)` samples, for each fraction `f` of `grid`. Ties keep sample order.
pub fn discovery_curve(mask: &[bool], values: &[f64], grid: &[f64]) -> Result<Vec<CurvePoint>> {
    if mask.is_empty() {
        return Err(Error::Empty("corruption mask"));
    }
    if mask.len() != values.len() {
        return Err(Error::DimensionMismatch {
            what: "values",
            expected: mask.len(),
            actual: values.len(),
        });
    }
    if let Some(f) = grid.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(Error::config(format!("grid fraction {f} outside [0, 1]")));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite("values"));
    }
    let total = mask.iter().filter(|&&c| c).count();
    if total == 0 {
        return Err(Error::Degenerate("no corrupted samples in mask".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    // found[k] = corrupted among the k lowest
    let mut found = Vec::with_capacity(order.len() + 1);
    found.push(0usize);
    for &i in &order {
        found.push(found.last().unwrap() + usize::from(mask[i]));
    }
    Ok(grid
        .iter()
        .map(|&f| CurvePoint {
            fraction: f,
            value: found[fraction_count(f, mask.len())] as f64 / total as f64,
        })
        .collect())
}
