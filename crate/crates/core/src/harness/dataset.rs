use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::diffmodel::{Architecture, Targets};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Labels {
    Classes(Vec<usize>),
    Real(Vec<f64>),
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Labels::Classes(v) => v.len(),
            Labels::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, idx: &[usize]) -> Labels {
        match self {
            Labels::Classes(v) => Labels::Classes(idx.iter().map(|&i| v[i]).collect()),
            Labels::Real(v) => Labels::Real(idx.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// Per-feature z-score parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    /// Population mean and standard deviation per column; constant columns get std 1.
    pub fn fit(x: &Matrix) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::Empty("standardization input"));
        }
        let n = x.rows() as f64;
        let d = x.cols();
        let mut mean = vec![0.0; d];
        for row in x.iter_rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in x.iter_rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                what: "standardization width",
                expected: self.mean.len(),
                actual: x.cols(),
            });
        }
        let mut out = x.clone();
        for i in 0..out.rows() {
            for ((v, m), s) in out.row_mut(i).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }
}

/// Samples with unique ids, an `N x d` feature matrix and optional labels and groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    ids: Vec<String>,
    features: Matrix,
    labels: Option<Labels>,
    groups: Option<Vec<String>>,
    standardization: Option<Standardization>,
}

impl Dataset {
    pub fn new(
        ids: Vec<String>,
        features: Matrix,
        labels: Option<Labels>,
        groups: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = features.rows();
        if ids.len() != n {
            return Err(Error::DimensionMismatch {
                what: "sample ids",
                expected: n,
                actual: ids.len(),
            });
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "labels",
                    expected: n,
                    actual: l.len(),
                });
            }
            if let Labels::Real(v) = l {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite("labels"));
                }
            }
        }
        if let Some(g) = &groups {
            if g.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "groups",
                    expected: n,
                    actual: g.len(),
                });
            }
        }
        if !features.all_finite() {
            return Err(Error::NonFinite("features"));
        }
        let mut seen = HashSet::with_capacity(n);
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(Error::config(format!("duplicate sample id '{dup}'")));
        }
        Ok(Self {
            ids,
            features,
            labels,
            groups,
            standardization: None,
        })
    }

    /// Dataset with ids `"0"`, `"1"`, ... .
    pub fn from_features(features: Matrix, labels: Option<Labels>) -> Result<Self> {
        let ids = (0..features.rows()).map(|i| i.to_string()).collect();
        Self::new(ids, features, labels, None)
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width(&self) -> usize {
        self.features.cols()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> Option<&Labels> {
        self.labels.as_ref()
    }

    pub fn groups(&self) -> Option<&[String]> {
        self.groups.as_deref()
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    pub fn classes(&self) -> Option<&[usize]> {
        match &self.labels {
            Some(Labels::Classes(c)) => Some(c),
            _ => None,
        }
    }

    pub fn classes_or_err(&self) -> Result<&[usize]> {
        self.classes()
            .ok_or_else(|| Error::config("dataset has no class labels"))
    }

    /// `max label + 1`, or `None` without class labels.
    pub fn num_classes(&self) -> Option<usize> {
        self.classes().map(|c| c.iter().max().map_or(0, |m| m + 1))
    }

    /// Supervision for a model of the given architecture.
    pub fn targets(&self, arch: Architecture) -> Result<Targets<'_>> {
        match arch {
            Architecture::Classifier => Ok(Targets::Classes(self.classes_or_err()?)),
            Architecture::Autoencoder => Ok(Targets::Dense(&self.features)),
        }
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
            features: self.features.select_rows(idx),
            labels: self.labels.as_ref().map(|l| l.select(idx)),
            groups: self
                .groups
                .as_ref()
                .map(|g| idx.iter().map(|&i| g[i].clone()).collect()),
            standardization: self.standardization.clone(),
        }
    }

    pub fn with_features(&self, features: Matrix) -> Result<Dataset> {
        if features.rows() != self.len() {
            return Err(Error::DimensionMismatch {
                what: "replacement features",
                expected: self.len(),
                actual: features.rows(),
            });
        }
        if !features.all_finite() {
            return Err(Error::NonFinite("features"));
        }
        Ok(Dataset {
            features,
            ..self.clone()
        })
    }

    pub fn with_classes(&self, classes: Vec<usize>) -> Result<Dataset> {
        if classes.len() != self.len() {
            return Err(Error::DimensionMismatch {
                what: "replacement labels",
                expected: self.len(),
                actual: classes.len(),
            });
        }
        Ok(Dataset {
            labels: Some(Labels::Classes(classes)),
            ..self.clone()
        })
    }

    /// Applies `s` to the features and records it.
    pub fn standardized(&self, s: &Standardization) -> Result<Dataset> {
        Ok(Dataset {
            features: s.apply(&self.features)?,
            standardization: Some(s.clone()),
            ..self.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_ids_and_bad_shapes() {
        let x = Matrix::from_rows(&[[1.0], [2.0]]).unwrap();
        assert!(Dataset::new(vec!["a".into(), "a".into()], x.clone(), None, None).is_err());
        assert!(Dataset::new(vec!["a".into()], x.clone(), None, None).is_err());
        assert!(Dataset::new(
            vec!["a".into(), "b".into()],
            x.clone(),
            Some(Labels::Classes(vec![0])),
            None
        )
        .is_err());
        let nan = Matrix::from_rows(&[[f64::NAN]]).unwrap();
        assert!(Dataset::from_features(nan, None).is_err());
    }

    #[test]
    fn standardization_centers_and_scales() {
        let x = Matrix::from_rows(&[[1.0, 5.0], [3.0, 5.0]]).unwrap();
        let s = Standardization::fit(&x).unwrap();
        assert_eq!(s.mean, vec![2.0, 5.0]);
        assert_eq!(s.std, vec![1.0, 1.0]);
        let z = s.apply(&x).unwrap();
        assert_eq!(z.row(0), &[-1.0, 0.0]);
        assert_eq!(z.row(1), &[1.0, 0.0]);
    }

    #[test]
    fn subset_keeps_alignment() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0]]).unwrap();
        let d = Dataset::from_features(x, Some(Labels::Classes(vec![0, 1, 0]))).unwrap();
        let s = d.subset(&[2, 0]);
        assert_eq!(s.ids(), &["2".to_string(), "0".to_string()]);
        assert_eq!(s.features().as_slice(), &[3.0, 1.0]);
        assert_eq!(s.classes().unwrap(), &[0, 0]);
        assert_eq!(d.num_classes(), Some(2));
    }
}
