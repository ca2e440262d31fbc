use serde::{Deserialize, Serialize};

use crate::corruption::{CorruptionKind, CorruptionRecord};
use crate::error::{Error, Result};
use crate::metrics::{auroc, discovery_curve, spearman, CurvePoint};
use crate::values::DataValues;

/// How well low values flag corruption: AUROC(c, -v) for flipped labels,
/// Spearman(phi, -v) for feature noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionScore {
    pub metric: String,
    pub value: f64,
}

/// Scores `-values` against the ground truth in `record`; values are matched by sample id.
pub fn score_corruption(record: &CorruptionRecord, values: &DataValues) -> Result<CorruptionScore> {
    let negated: Vec<f64> = values.aligned_to(&record.ids)?.into_iter().map(|v| -v).collect();
    match record.kind {
        CorruptionKind::Labels => Ok(CorruptionScore {
            metric: "auroc".into(),
            value: auroc(&record.mask, &negated)?,
        }),
        CorruptionKind::Features => Ok(CorruptionScore {
            metric: "spearman".into(),
            value: spearman(&record.noise_rates, &negated)?,
        }),
        CorruptionKind::None => Err(Error::config("no corruption to score against")),
    }
}

/// Scores with an explicit metric: `auroc` uses the corruption mask,
/// `spearman` the noise rates.
pub fn score_corruption_with(record: &CorruptionRecord, values: &DataValues, metric: &str) -> Result<CorruptionScore> {
    let negated: Vec<f64> = values.aligned_to(&record.ids)?.into_iter().map(|v| -v).collect();
    let value = match metric {
        "auroc" => auroc(&record.mask, &negated)?,
        "spearman" => spearman(&record.noise_rates, &negated)?,
        _ => return Err(Error::config(format!("unknown evaluation metric '{metric}'"))),
    };
    Ok(CorruptionScore {
        metric: metric.to_string(),
        value,
    })
}

/// Discovery curve of the corruption mask when inspecting lowest values first.
pub fn discovery(record: &CorruptionRecord, values: &DataValues, grid: &[f64]) -> Result<Vec<CurvePoint>> {
    let aligned = values.aligned_to(&record.ids)?;
    discovery_curve(&record.mask, &aligned, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::values::Method;

    fn record(kind: CorruptionKind) -> CorruptionRecord {
        CorruptionRecord {
            ids: vec!["a".into(), "b".into(), "c".into(), "d".into()],
            mask: vec![true, false, false, true],
            noise_rates: vec![0.9, 0.1, 0.2, 0.5],
            kind,
            seed: 0,
            proportion: 0.5,
            phi_max: None,
        }
    }

    #[test]
    fn low_values_on_corrupted_samples_score_high() {
        // values listed in a different id order to exercise alignment
        let v = DataValues::new(
            vec!["d".into(), "c".into(), "b".into(), "a".into()],
            vec![0.1, 0.8, 0.9, -0.5],
            Method::Dvgs,
        )
        .unwrap();
        assert_eq!(score_corruption(&record(CorruptionKind::Labels), &v).unwrap().value, 1.0);
        let s = score_corruption(&record(CorruptionKind::Features), &v).unwrap();
        assert_eq!(s.metric, "spearman");
        assert!((s.value - 1.0).abs() < 1e-12);
        assert!(score_corruption(&record(CorruptionKind::None), &v).is_err());
        assert!(score_corruption_with(&record(CorruptionKind::None), &v, "auroc").is_ok());
        let curve = discovery(&record(CorruptionKind::Labels), &v, &[0.5, 1.0]).unwrap();
        assert_eq!(curve[0].value, 1.0);
    }
}
