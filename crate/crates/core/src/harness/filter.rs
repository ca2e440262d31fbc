use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::baselines::{score_model, ScoreMetric};
use crate::diffmodel::{train, Architecture, LossKind, ModelSpec, TrainConfig};
use crate::error::{Error, Result};
use crate::metrics::EvalReport;
use crate::rng::fraction_count;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    RemoveLowest,
    RemoveHighest,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::RemoveLowest => "lowest",
            Direction::RemoveHighest => "highest",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lowest" | "remove-lowest" => Ok(Direction::RemoveLowest),
            "highest" | "remove-highest" => Ok(Direction::RemoveHighest),
            _ => Err(Error::config(format!("unknown filter direction '{s}'"))),
        }
    }
}

/// Indices kept after removing the `floor(fraction * N)` lowest- or
/// highest-valued samples. Ties are removed in index order; kept indices
/// stay in their original order.
pub fn filter_indices(values: &[f64], fraction: f64, direction: Direction) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::config(format!("filter fraction {fraction} outside [0, 1]")));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    match direction {
        Direction::RemoveLowest => order.sort_by(|&a, &b| values[a].total_cmp(&values[b])),
        Direction::RemoveHighest => order.sort_by(|&a, &b| values[b].total_cmp(&values[a])),
    }
    let mut removed = vec![false; values.len()];
    for &i in &order[..fraction_count(fraction, values.len())] {
        removed[i] = true;
    }
    Ok((0..values.len()).filter(|&i| !removed[i]).collect())
}

/// Test score of a model trained on the filtered source set, one per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterPoint {
    pub fraction: f64,
    pub report: EvalReport,
}

/// What gets retrained and how it is scored.
#[derive(Debug, Clone)]
pub struct RetrainSetup<'a> {
    pub spec: &'a ModelSpec,
    pub train: TrainConfig,
    pub metric: ScoreMetric,
}

impl RetrainSetup<'_> {
    /// Trains on `idx` of `source` with `seed` and scores on `test`.
    pub fn score_subset(&self, source: &Dataset, idx: &[usize], test: &Dataset, seed: u64) -> Result<f64> {
        if idx.is_empty() {
            return Err(Error::Empty("filtered training set"));
        }
        let data = source.subset(idx);
        let loss = match self.spec.architecture {
            Architecture::Classifier => {
                let classes = data.classes_or_err()?;
                if classes.iter().all(|&c| c == classes[0]) {
                    return Err(Error::Degenerate("filtered training set has a single class".into()));
                }
                LossKind::cross_entropy()
            }
            Architecture::Autoencoder => LossKind::MeanSquaredError,
        };
        let cfg = TrainConfig {
            seed,
            ..self.train.clone()
        };
        let out = train(self.spec, data.features(), data.targets(self.spec.architecture)?, &loss, &cfg)?;
        score_model(self.spec, &out.params, test, self.metric)
    }
}

/// Retrains after filtering at every grid fraction. `values` are aligned to
/// `source`; every fraction uses the same `seeds`, so fraction 0 equals the
/// unfiltered baseline exactly.
pub fn filter_curve(
    setup: &RetrainSetup<'_>,
    source: &Dataset,
    test: &Dataset,
    values: &[f64],
    grid: &[f64],
    direction: Direction,
    seeds: &[u64],
) -> Result<Vec<FilterPoint>> {
    if values.len() != source.len() {
        return Err(Error::DimensionMismatch {
            what: "data values",
            expected: source.len(),
            actual: values.len(),
        });
    }
    if seeds.is_empty() {
        return Err(Error::Empty("retraining seeds"));
    }
    let kept: Vec<Vec<usize>> = grid
        .iter()
        .map(|&f| filter_indices(values, f, direction))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, u64)> = (0..grid.len()).flat_map(|g| seeds.iter().map(move |&s| (g, s))).collect();
    let scores = jobs
        .par_iter()
        .map(|&(g, seed)| setup.score_subset(source, &kept[g], test, seed))
        .collect::<Result<Vec<f64>>>()?;
    grid.iter()
        .zip(scores.chunks(seeds.len()))
        .map(|(&fraction, s)| {
            Ok(FilterPoint {
                fraction,
                report: EvalReport::from_seeds(setup.metric.name(), s.to_vec())?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synth_classification;

    #[test]
    fn removal_order_and_ties() {
        let v = [0.3, 0.1, 0.1, 0.9, 0.5];
        assert_eq!(filter_indices(&v, 0.4, Direction::RemoveLowest).unwrap(), vec![0, 3, 4]);
        assert_eq!(filter_indices(&v, 0.4, Direction::RemoveHighest).unwrap(), vec![0, 1, 2]);
        // one of the tied lows: the earlier index goes first
        assert_eq!(filter_indices(&v, 0.2, Direction::RemoveLowest).unwrap(), vec![0, 2, 3, 4]);
        assert_eq!(filter_indices(&v, 0.0, Direction::RemoveHighest).unwrap(), vec![0, 1, 2, 3, 4]);
        assert!(filter_indices(&v, 1.5, Direction::RemoveLowest).is_err());
    }

    #[test]
    fn zero_fraction_reproduces_the_baseline() {
        let data = synth_classification(200, 2, 2, 2.0, 0).unwrap();
        let source = data.subset(&(0..150).collect::<Vec<_>>());
        let test = data.subset(&(150..200).collect::<Vec<_>>());
        let spec = ModelSpec::classifier(2, &[8], 2).unwrap();
        let setup = RetrainSetup {
            spec: &spec,
            train: TrainConfig {
                epochs: 5,
                ..TrainConfig::default()
            },
            metric: ScoreMetric::Auroc,
        };
        let values: Vec<f64> = (0..150).map(|i| (i * 37 % 101) as f64).collect();
        let curve = filter_curve(&setup, &source, &test, &values, &[0.0, 0.3], Direction::RemoveLowest, &[1, 2]).unwrap();
        let all: Vec<usize> = (0..150).collect();
        let baseline: Vec<f64> = [1, 2]
            .iter()
            .map(|&s| setup.score_subset(&source, &all, &test, s).unwrap())
            .collect();
        assert_eq!(curve[0].report.per_seed, baseline);
        assert_eq!(curve[1].report.n, 2);
    }

    #[test]
    fn single_class_remainder_is_an_error() {
        let data = synth_classification(10, 2, 2, 2.0, 0).unwrap();
        let spec = ModelSpec::classifier(2, &[4], 2).unwrap();
        let setup = RetrainSetup {
            spec: &spec,
            train: TrainConfig::default(),
            metric: ScoreMetric::Auroc,
        };
        // class-1 samples carry the lowest values
        let values: Vec<f64> = data.classes().unwrap().iter().map(|&c| -(c as f64)).collect();
        let err = filter_curve(&setup, &data, &data, &values, &[0.5], Direction::RemoveLowest, &[0]);
        assert!(matches!(err, Err(Error::Degenerate(_))));
    }
}
