//! Ground-truth-tracked corruption of a dataset: label flips and per-sample
//! Gaussian feature noise.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::Dataset;
use crate::rng::{fraction_count, rng_from};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorruptionKind {
    #[default]
    None,
    Labels,
    Features,
}

impl CorruptionKind {
    pub fn name(self) -> &'static str {
        match self {
            CorruptionKind::None => "none",
            CorruptionKind::Labels => "labels",
            CorruptionKind::Features => "features",
        }
    }
}

impl fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorruptionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [CorruptionKind::None, CorruptionKind::Labels, CorruptionKind::Features]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config(format!("unknown corruption kind '{s}'")))
    }
}

/// Which samples were corrupted, and how strongly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionRecord {
    pub ids: Vec<String>,
    /// `true` for corrupted samples.
    pub mask: Vec<bool>,
    /// Standard deviation of the injected feature noise; 0 for untouched samples.
    pub noise_rates: Vec<f64>,
    pub kind: CorruptionKind,
    pub seed: u64,
    pub proportion: f64,
    pub phi_max: Option<f64>,
}

impl CorruptionRecord {
    pub fn clean(ids: Vec<String>) -> Self {
        let n = ids.len();
        Self {
            ids,
            mask: vec![false; n],
            noise_rates: vec![0.0; n],
            kind: CorruptionKind::None,
            seed: 0,
            proportion: 0.0,
            phi_max: None,
        }
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn corrupted_count(&self) -> usize {
        self.mask.iter().filter(|&&c| c).count()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.ids.len();
        if self.mask.len() != n || self.noise_rates.len() != n {
            return Err(Error::DimensionMismatch {
                what: "corruption record arrays",
                expected: n,
                actual: self.mask.len().min(self.noise_rates.len()),
            });
        }
        if self.noise_rates.iter().any(|&r| !(r.is_finite() && r >= 0.0)) {
            return Err(Error::config("noise rates must be finite and nonnegative"));
        }
        match self.kind {
            CorruptionKind::Labels if self.noise_rates.iter().any(|&r| r != 0.0) => Err(
                Error::config("label corruption record carries nonzero noise rates"),
            ),
            CorruptionKind::Features
                if self
                    .mask
                    .iter()
                    .zip(&self.noise_rates)
                    .any(|(&m, &r)| m != (r > 0.0)) =>
            {
                Err(Error::config(
                    "feature corruption mask must mark exactly the samples with positive noise",
                ))
            }
            _ => Ok(()),
        }
    }

    /// Writes `sample_id,corrupted,noise_rate` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record(["sample_id", "corrupted", "noise_rate"])
            .map_err(|e| Error::csv(path, e))?;
        for ((id, &m), r) in self.ids.iter().zip(&self.mask).zip(&self.noise_rates) {
            w.write_record([id.as_str(), if m { "1" } else { "0" }, &r.to_string()])
                .map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a `sample_id,corrupted,noise_rate` file. The corruption kind is
    /// inferred from the arrays; seed and generation parameters are not stored in CSV.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let headers = r.headers().map_err(|e| Error::csv(path, e))?.clone();
        let col = |name: &str| {
            headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!("missing column '{name}'"),
            })
        };
        let (id_c, mask_c, rate_c) = (col("sample_id")?, col("corrupted")?, col("noise_rate")?);
        let mut ids = Vec::new();
        let mut mask = Vec::new();
        let mut noise_rates = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            let line = i + 2;
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line,
                message,
            };
            ids.push(rec.get(id_c).unwrap_or_default().to_string());
            mask.push(match rec.get(mask_c).unwrap_or_default().trim() {
                "1" | "true" => true,
                "0" | "false" => false,
                other => return Err(parse_err(format!("bad corrupted flag '{other}'"))),
            });
            let rate_s = rec.get(rate_c).unwrap_or_default().trim();
            noise_rates.push(
                rate_s
                    .parse::<f64>()
                    .map_err(|_| parse_err(format!("bad noise rate '{rate_s}'")))?,
            );
        }
        let kind = if noise_rates.iter().any(|&r| r > 0.0) {
            CorruptionKind::Features
        } else if mask.iter().any(|&m| m) {
            CorruptionKind::Labels
        } else {
            CorruptionKind::None
        };
        let n = ids.len();
        let record = Self {
            ids,
            proportion: if n == 0 {
                0.0
            } else {
                mask.iter().filter(|&&m| m).count() as f64 / n as f64
            },
            mask,
            noise_rates,
            kind,
            seed: 0,
            phi_max: None,
        };
        record.validate()?;
        Ok(record)
    }
}

fn check_proportion(p: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::config(format!("{what} {p} outside [0, 1]")));
    }
    Ok(())
}

/// Relabels exactly `floor(p * N)` uniformly chosen samples; each new label
/// is drawn uniformly from the other `K - 1` classes.
pub fn corrupt_labels(dataset: &Dataset, p: f64, seed: u64) -> Result<(Dataset, CorruptionRecord)> {
    check_proportion(p, "corruption proportion")?;
    let labels = dataset.classes_or_err()?;
    let k = dataset.num_classes().unwrap_or(0);
    if k < 2 {
        return Err(Error::config("label corruption needs at least two classes"));
    }
    let n = dataset.len();
    let count = fraction_count(p, n);
    let mut rng = rng_from(seed);
    let mut chosen = index::sample(&mut rng, n, count).into_vec();
    chosen.sort_unstable();

    let mut new_labels = labels.to_vec();
    let mut mask = vec![false; n];
    for &i in &chosen {
        let draw = rng.random_range(0..k - 1);
        new_labels[i] = if draw >= labels[i] { draw + 1 } else { draw };
        mask[i] = true;
    }
    let record = CorruptionRecord {
        ids: dataset.ids().to_vec(),
        mask,
        noise_rates: vec![0.0; n],
        kind: CorruptionKind::Labels,
        seed,
        proportion: p,
        phi_max: None,
    };
    Ok((dataset.with_classes(new_labels)?, record))
}

/// Adds `N(0, phi_i)` noise (standard deviation `phi_i`) to every feature of
/// `floor(fraction * N)` chosen samples, with `phi_i ~ Uniform(0, phi_max]`.
/// Other samples are left bit-identical with `phi_i = 0`.
pub fn corrupt_features(
    dataset: &Dataset,
    phi_max: f64,
    fraction: f64,
    seed: u64,
) -> Result<(Dataset, CorruptionRecord)> {
    if !(phi_max.is_finite() && phi_max > 0.0) {
        return Err(Error::config(format!("phi_max must be positive, got {phi_max}")));
    }
    check_proportion(fraction, "noise fraction")?;
    let n = dataset.len();
    let count = fraction_count(fraction, n);
    let mut rng = rng_from(seed);
    let mut chosen = index::sample(&mut rng, n, count).into_vec();
    chosen.sort_unstable();

    let mut features = dataset.features().clone();
    let mut rates = vec![0.0; n];
    let mut mask = vec![false; n];
    for &i in &chosen {
        // (0, phi_max]: 1 - U[0, 1) lies in (0, 1]
        let phi = phi_max * (1.0 - rng.random::<f64>());
        let normal = Normal::new(0.0, phi).map_err(|e| Error::config(e.to_string()))?;
        for v in features.row_mut(i) {
            *v += normal.sample(&mut rng);
        }
        rates[i] = phi;
        mask[i] = true;
    }
    let record = CorruptionRecord {
        ids: dataset.ids().to_vec(),
        mask,
        noise_rates: rates,
        kind: CorruptionKind::Features,
        seed,
        proportion: fraction,
        phi_max: Some(phi_max),
    };
    Ok((dataset.with_features(features)?, record))
}
