use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A metric measured once per seed, summarized as mean ± sample std.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric: String,
    pub value: f64,
    pub per_seed: Vec<f64>,
    pub mean: f64,
    /// Sample (n-1) standard deviation; `None` for a single seed.
    pub std: Option<f64>,
    pub n: usize,
}

impl EvalReport {
    pub fn from_seeds(metric: impl Into<String>, per_seed: Vec<f64>) -> Result<Self> {
        if per_seed.is_empty() {
            return Err(Error::Empty("per-seed metric values"));
        }
        let (mean, std) = mean_std(&per_seed);
        Ok(Self {
            metric: metric.into(),
            value: mean,
            n: per_seed.len(),
            per_seed,
            mean,
            std,
        })
    }

    pub fn single(metric: impl Into<String>, value: f64) -> Self {
        Self {
            metric: metric.into(),
            value,
            per_seed: vec![value],
            mean: value,
            std: None,
            n: 1,
        }
    }
}

pub(crate) fn mean_std(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.len() > 1)
        .then(|| (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt());
    (mean, std)
}

impl std::fmt::Display for EvalReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.std {
            Some(s) => write!(f, "{}: {:.3} ± {:.3} (n={})", self.metric, self.mean, s, self.n),
            None => write!(f, "{}: {:.3} (n=1)", self.metric, self.mean),
        }
    }
}
