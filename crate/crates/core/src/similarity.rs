//! Scalar similarity between two gradient vectors. Larger always means more similar.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diffmodel::GradientVector;
use crate::error::{Error, Result};

/// Norms below this are treated as zero.
pub const ZERO_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum SimilarityKind {
    #[default]
    #[serde(rename = "cosine")]
    Cosine,
    /// Negated Euclidean distance.
    #[serde(rename = "euclidean")]
    NegativeEuclidean,
    #[serde(rename = "dot")]
    Dot,
    /// Length of the source gradient's projection onto the target gradient.
    #[serde(rename = "projection")]
    ScalarProjection,
}

impl SimilarityKind {
    pub const ALL: [SimilarityKind; 4] = [
        SimilarityKind::Cosine,
        SimilarityKind::NegativeEuclidean,
        SimilarityKind::Dot,
        SimilarityKind::ScalarProjection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SimilarityKind::Cosine => "cosine",
            SimilarityKind::NegativeEuclidean => "euclidean",
            SimilarityKind::Dot => "dot",
            SimilarityKind::ScalarProjection => "projection",
        }
    }

    /// Similarity on raw slices; callers guarantee equal lengths and finite entries.
    #[inline]
    pub fn eval(self, source: &[f64], target: &[f64]) -> f64 {
        match self {
            SimilarityKind::Cosine => {
                let (dot, ss, tt) = dot_and_norms(source, target);
                if ss.sqrt() < ZERO_NORM || tt.sqrt() < ZERO_NORM {
                    0.0
                } else {
                    // sqrt(ss * ss) == ss exactly, so cosine(g, g) is exactly 1
                    (dot / (ss * tt).sqrt()).clamp(-1.0, 1.0)
                }
            }
            SimilarityKind::NegativeEuclidean => -source
                .iter()
                .zip(target)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            SimilarityKind::Dot => source.iter().zip(target).map(|(a, b)| a * b).sum(),
            SimilarityKind::ScalarProjection => {
                let (dot, _, tt) = dot_and_norms(source, target);
                let nt = tt.sqrt();
                if nt < ZERO_NORM {
                    0.0
                } else {
                    dot / nt
                }
            }
        }
    }
}

#[inline]
fn dot_and_norms(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let mut dot = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        aa += x * x;
        bb += y * y;
    }
    (dot, aa, bb)
}

impl fmt::Display for SimilarityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SimilarityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SimilarityKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config(format!("unknown similarity '{s}'")))
    }
}

/// Checked similarity between a source-sample gradient and a target-batch gradient.
pub fn similarity(kind: SimilarityKind, source: &GradientVector, target: &GradientVector) -> Result<f64> {
    if !source.same_layout(target.layout()) {
        return Err(Error::LayoutMismatch);
    }
    similarity_slices(kind, source.values(), target.values())
}

pub fn similarity_slices(kind: SimilarityKind, source: &[f64], target: &[f64]) -> Result<f64> {
    if source.len() != target.len() {
        return Err(Error::DimensionMismatch {
            what: "gradient length",
            expected: target.len(),
            actual: source.len(),
        });
    }
    if source.iter().chain(target).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gradient"));
    }
    Ok(kind.eval(source, target))
}
