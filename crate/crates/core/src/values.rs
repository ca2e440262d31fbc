use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Valuation method tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Dvgs,
    DvgsUnsupervised,
    Loo,
    TmcShapley,
    ExactShapley,
    Random,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Dvgs => "dvgs",
            Method::DvgsUnsupervised => "dvgs-unsupervised",
            Method::Loo => "loo",
            Method::TmcShapley => "tmc-shapley",
            Method::ExactShapley => "exact-shapley",
            Method::Random => "random",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Method::Dvgs,
            Method::DvgsUnsupervised,
            Method::Loo,
            Method::TmcShapley,
            Method::ExactShapley,
            Method::Random,
        ]
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| Error::config(format!("unknown valuation method '{s}'")))
    }
}

/// One value per source sample plus the provenance needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataValues {
    pub ids: Vec<String>,
    pub values: Vec<f64>,
    pub method: Method,
    pub config_digest: String,
    pub seeds: Vec<u64>,
    /// Similarity snapshots averaged per run (gradient-similarity methods).
    pub snapshots: Option<usize>,
    /// Marginal contributions actually evaluated per sample (Monte-Carlo methods).
    pub sample_counts: Option<Vec<usize>>,
}

impl DataValues {
    pub fn new(ids: Vec<String>, values: Vec<f64>, method: Method) -> Result<Self> {
        if ids.len() != values.len() {
            return Err(Error::DimensionMismatch {
                what: "data values",
                expected: ids.len(),
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("data values"));
        }
        Ok(Self {
            ids,
            values,
            method,
            config_digest: String::new(),
            seeds: Vec::new(),
            snapshots: None,
            sample_counts: None,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Writes `sample_id,value` rows. Values use the shortest representation
    /// that parses back to the same `f64`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record(["sample_id", "value"]).map_err(|e| Error::csv(path, e))?;
        for (id, v) in self.ids.iter().zip(&self.values) {
            w.write_record([id.as_str(), &v.to_string()])
                .map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a `sample_id,value` file; provenance fields are left empty and the
    /// method is set to `method`.
    pub fn read_csv(path: &Path, method: Method) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let headers = r.headers().map_err(|e| Error::csv(path, e))?.clone();
        let col = |name: &str| {
            headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!("missing column '{name}'"),
            })
        };
        let (id_c, v_c) = (col("sample_id")?, col("value")?);
        let mut ids = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            let raw = rec.get(v_c).unwrap_or_default().trim();
            let v = raw.parse::<f64>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: i + 2,
                message: format!("bad value '{raw}'"),
            })?;
            ids.push(rec.get(id_c).unwrap_or_default().to_string());
            values.push(v);
        }
        DataValues::new(ids, values, method)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&s).map_err(|e| Error::json(path, e))
    }

    /// Values reordered to follow `ids`.
    pub fn aligned_to(&self, ids: &[String]) -> Result<Vec<f64>> {
        let index: std::collections::HashMap<&str, usize> = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        ids.iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .map(|&i| self.values[i])
                    .ok_or_else(|| Error::config(format!("no data value for sample '{id}'")))
            })
            .collect()
    }
}

/// Hex SHA-256 of a string.
pub fn digest_str(s: &str) -> String {
    hex::encode(Sha256::digest(s.as_bytes()))
}

/// Hex SHA-256 of a file's bytes.
pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
