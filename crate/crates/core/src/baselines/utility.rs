use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diffmodel::{forward, train, Architecture, LossKind, ModelSpec, ParameterVector, PassMode, TrainConfig};
use crate::error::{Error, Result};
use crate::harness::Dataset;
use crate::metrics::{accuracy, auroc, r2_columns};
use crate::rng::mix64;

/// A set function over source-sample indices.
pub trait Utility: Sync {
    /// Number of players (source samples).
    fn players(&self) -> usize;

    /// Score of the subset; indices are distinct and `< players()`, in any order.
    fn evaluate(&self, subset: &[usize]) -> Result<f64>;

    /// Short description folded into the values' config digest.
    fn describe(&self) -> String {
        String::from("custom")
    }
}

/// Adapts a closure into a [`Utility`].
pub struct FnUtility<F> {
    players: usize,
    f: F,
}

impl<F> FnUtility<F>
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    pub fn new(players: usize, f: F) -> Self {
        Self { players, f }
    }
}

impl<F> Utility for FnUtility<F>
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    fn players(&self) -> usize {
        self.players
    }

    fn evaluate(&self, subset: &[usize]) -> Result<f64> {
        Ok((self.f)(subset))
    }
}

/// Performance measure used to score a trained model on held-out data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMetric {
    /// Binary classifiers only; scores are the class-1 probabilities.
    Auroc,
    Accuracy,
    /// Reconstruction R² pooled over all output columns.
    R2,
}

impl ScoreMetric {
    /// AUROC for binary classifiers, accuracy for multiclass, R² for autoencoders.
    pub fn default_for(spec: &ModelSpec) -> Self {
        match spec.architecture {
            Architecture::Autoencoder => ScoreMetric::R2,
            Architecture::Classifier if spec.output_width() == 2 => ScoreMetric::Auroc,
            Architecture::Classifier => ScoreMetric::Accuracy,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScoreMetric::Auroc => "auroc",
            ScoreMetric::Accuracy => "accuracy",
            ScoreMetric::R2 => "r2",
        }
    }
}

impl fmt::Display for ScoreMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScoreMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auroc" => Ok(ScoreMetric::Auroc),
            "accuracy" => Ok(ScoreMetric::Accuracy),
            "r2" => Ok(ScoreMetric::R2),
            _ => Err(Error::config(format!("unknown metric '{s}'"))),
        }
    }
}

/// Scores trained parameters on `eval`.
pub fn score_model(
    spec: &ModelSpec,
    params: &ParameterVector,
    eval: &Dataset,
    metric: ScoreMetric,
) -> Result<f64> {
    let out = forward(spec, params, eval.features(), PassMode::Eval)?;
    match metric {
        ScoreMetric::Auroc => {
            if spec.architecture != Architecture::Classifier || spec.output_width() != 2 {
                return Err(Error::config("AUROC scoring needs a binary classifier"));
            }
            let labels: Vec<bool> = eval.classes_or_err()?.iter().map(|&c| c == 1).collect();
            let scores: Vec<f64> = out.iter_rows().map(|r| r[1]).collect();
            auroc(&labels, &scores)
        }
        ScoreMetric::Accuracy => {
            let preds: Vec<usize> = out
                .iter_rows()
                .map(|r| {
                    (0..r.len())
                        .fold(0, |best, i| if r[i] > r[best] { i } else { best })
                })
                .collect();
            accuracy(eval.classes_or_err()?, &preds)
        }
        ScoreMetric::R2 => {
            if spec.architecture != Architecture::Autoencoder {
                return Err(Error::config("R² scoring needs an autoencoder"));
            }
            r2_columns(eval.features(), &out)
        }
    }
}

/// Score of a model that has seen no training data: a constant predictor.
/// AUROC 0.5, accuracy of always predicting `majority`, R² 0.
pub fn uninformed_score(metric: ScoreMetric, eval: &Dataset, majority: Option<usize>) -> Result<f64> {
    match metric {
        ScoreMetric::Auroc => Ok(0.5),
        ScoreMetric::R2 => Ok(0.0),
        ScoreMetric::Accuracy => {
            let labels = eval.classes_or_err()?;
            let m = majority.ok_or_else(|| Error::config("accuracy baseline needs a majority class"))?;
            accuracy(labels, &vec![m; labels.len()])
        }
    }
}

/// Most frequent class; ties go to the smallest label.
pub fn majority_class(labels: &[usize]) -> Option<usize> {
    let k = labels.iter().max()? + 1;
    let mut counts = vec![0usize; k];
    labels.iter().for_each(|&l| counts[l] += 1);
    (0..k).max_by_key(|&c| (counts[c], std::cmp::Reverse(c)))
}

/// Training seed for a subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedPolicy {
    /// The same seed for every subset.
    Fixed(u64),
    /// Seed mixed with a hash of the sorted subset.
    SubsetHash(u64),
}

impl SeedPolicy {
    pub fn seed_for(self, sorted_subset: &[usize]) -> u64 {
        match self {
            SeedPolicy::Fixed(s) => s,
            SeedPolicy::SubsetHash(s) => sorted_subset
                .iter()
                .fold(mix64(s), |h, &i| mix64(h ^ (i as u64).wrapping_add(0x9E37_79B9))),
        }
    }
}

/// Trains the model on a subset of `source` and scores it on `eval`.
pub struct TrainingUtility<'a> {
    spec: &'a ModelSpec,
    source: &'a Dataset,
    eval: &'a Dataset,
    train: TrainConfig,
    seeds: SeedPolicy,
    metric: ScoreMetric,
    majority: Option<usize>,
}

impl<'a> TrainingUtility<'a> {
    /// `train.seed` is ignored in favor of `seeds`.
    pub fn new(
        spec: &'a ModelSpec,
        source: &'a Dataset,
        eval: &'a Dataset,
        train: TrainConfig,
        seeds: SeedPolicy,
        metric: ScoreMetric,
    ) -> Result<Self> {
        spec.validate()?;
        if source.is_empty() {
            return Err(Error::Empty("source set"));
        }
        if eval.is_empty() {
            return Err(Error::Empty("evaluation set"));
        }
        let majority = source.classes().and_then(majority_class);
        Ok(Self {
            spec,
            source,
            eval,
            train,
            seeds,
            metric,
            majority,
        })
    }

    fn loss(&self) -> LossKind {
        match self.spec.architecture {
            Architecture::Classifier => LossKind::cross_entropy(),
            Architecture::Autoencoder => LossKind::MeanSquaredError,
        }
    }
}

impl Utility for TrainingUtility<'_> {
    fn players(&self) -> usize {
        self.source.len()
    }

    fn evaluate(&self, subset: &[usize]) -> Result<f64> {
        if subset.is_empty() {
            return uninformed_score(self.metric, self.eval, self.majority);
        }
        let mut idx = subset.to_vec();
        idx.sort_unstable();
        let wrap = |e: Error| Error::Utility {
            subset_len: idx.len(),
            source: Box::new(e),
        };
        let data = self.source.subset(&idx);
        let cfg = TrainConfig {
            seed: self.seeds.seed_for(&idx),
            ..self.train.clone()
        };
        let targets = data.targets(self.spec.architecture).map_err(wrap)?;
        let out = train(self.spec, data.features(), targets, &self.loss(), &cfg).map_err(wrap)?;
        score_model(self.spec, &out.params, self.eval, self.metric).map_err(wrap)
    }

    fn describe(&self) -> String {
        format!(
            "{}|{:?}|{:?}|{}",
            serde_json::to_string(self.spec).expect("spec serializes"),
            self.train,
            self.seeds,
            self.metric
        )
    }
}
