//! Experiment plans: flat `key = value` text with dotted keys and `#` comments.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::filter::Direction;
use super::split::SplitSizes;
use crate::baselines::ShapleyConfig;
use crate::corruption::CorruptionKind;
use crate::diffmodel::{Activation, Architecture, ModelSpec, ParamSelector, TrainConfig};
use crate::dvgs::ValuationConfig;
use crate::error::{Error, Result};
use crate::values::{digest_str, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    /// Gaussian class blobs.
    Synthetic,
    /// Unlabeled low-rank data.
    Lowrank,
    Csv,
}

impl FromStr for DataSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synthetic" => Ok(DataSource::Synthetic),
            "lowrank" => Ok(DataSource::Lowrank),
            "csv" => Ok(DataSource::Csv),
            _ => Err(Error::config(format!("unknown data source '{s}'"))),
        }
    }
}

impl DataSource {
    fn name(self) -> &'static str {
        match self {
            DataSource::Synthetic => "synthetic",
            DataSource::Lowrank => "lowrank",
            DataSource::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPlan {
    pub source: DataSource,
    pub n: usize,
    pub d: usize,
    pub classes: usize,
    pub separation: f64,
    pub rank: usize,
    pub path: Option<String>,
    pub id_column: Option<String>,
    pub label_column: Option<String>,
    pub group_column: Option<String>,
    /// Z-score with source-set statistics after splitting.
    pub standardize: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionPlan {
    pub kind: CorruptionKind,
    /// Share of source labels flipped.
    pub proportion: f64,
    pub phi_max: f64,
    /// Share of source samples receiving feature noise.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPlan {
    pub kind: Architecture,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub dropout: f64,
    pub instance_norm: bool,
}

impl ModelPlan {
    /// Concrete network for data of width `d` with `classes` classes.
    pub fn spec(&self, d: usize, classes: usize) -> Result<ModelSpec> {
        let spec = match self.kind {
            Architecture::Classifier => ModelSpec::classifier(d, &self.hidden, classes)?,
            Architecture::Autoencoder => ModelSpec::autoencoder(d, &self.hidden)?,
        };
        Ok(spec
            .with_activation(self.activation)
            .with_dropout(self.dropout)?
            .with_instance_norm(self.instance_norm))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub name: String,
    pub replicates: usize,
    pub seed: u64,
    pub data: DataPlan,
    pub split: SplitSizes,
    /// Stratify the target set by class (or group).
    pub balance_target: bool,
    pub corruption: CorruptionPlan,
    pub model: ModelPlan,
    pub method: Method,
    /// `seed` is replaced per replicate.
    pub valuation: ValuationConfig,
    pub shapley: ShapleyConfig,
    /// Used for utility and filter-curve retraining; `seed` is replaced.
    pub train: TrainConfig,
    /// Empty to skip filter curves.
    pub filter_grid: Vec<f64>,
    pub filter_directions: Vec<Direction>,
    pub discovery_grid: Vec<f64>,
}

impl Default for ExperimentPlan {
    /// The labelled synthetic benchmark: 1000 source, 400 target and 600 test
    /// samples with 20% of source labels flipped.
    fn default() -> Self {
        Self {
            name: "synthetic-labels".into(),
            replicates: 5,
            seed: 0,
            data: DataPlan {
                source: DataSource::Synthetic,
                n: 2000,
                d: 40,
                classes: 2,
                separation: 8.0,
                rank: 8,
                path: None,
                id_column: None,
                label_column: None,
                group_column: None,
                standardize: true,
            },
            split: SplitSizes {
                source: 1000,
                target: 400,
                test: 600,
            },
            balance_target: false,
            corruption: CorruptionPlan {
                kind: CorruptionKind::Labels,
                proportion: 0.2,
                phi_max: 1.0,
                fraction: 1.0,
            },
            model: ModelPlan {
                kind: Architecture::Classifier,
                hidden: vec![32],
                activation: Activation::Relu,
                dropout: 0.0,
                instance_norm: false,
            },
            method: Method::Dvgs,
            valuation: ValuationConfig {
                lr: 0.05,
                iterations: 500,
                batch_size: 50,
                runs: 3,
                ..ValuationConfig::default()
            },
            shapley: ShapleyConfig::default(),
            train: TrainConfig {
                epochs: 30,
                lr: 0.05,
                batch_size: 32,
                seed: 0,
            },
            filter_grid: vec![0.0, 0.1, 0.2, 0.3],
            filter_directions: vec![Direction::RemoveLowest, Direction::RemoveHighest],
            discovery_grid: (0..=10).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::config(format!("invalid value '{raw}' for {key}")))
}

fn parse_list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>> {
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',').map(|v| parse_value(key, v.trim())).collect()
}

fn parse_bool(key: &str, raw: &str) -> Result<bool> {
    match raw {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::config(format!("invalid value '{raw}' for {key}: expected true or false"))),
    }
}

fn optional(raw: &str) -> Option<String> {
    (!raw.is_empty() && raw != "none").then(|| raw.to_string())
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentPlan {
    /// Every recognized key, in canonical order.
    pub const KEYS: &'static [&'static str] = &[
        "name",
        "replicates",
        "seed",
        "data.source",
        "data.n",
        "data.d",
        "data.classes",
        "data.separation",
        "data.rank",
        "data.path",
        "data.id_column",
        "data.label_column",
        "data.group_column",
        "data.standardize",
        "split.source",
        "split.target",
        "split.test",
        "split.balance",
        "corruption.kind",
        "corruption.proportion",
        "corruption.phi_max",
        "corruption.fraction",
        "model.kind",
        "model.hidden",
        "model.activation",
        "model.dropout",
        "model.instance_norm",
        "valuation.method",
        "valuation.similarity",
        "valuation.lr",
        "valuation.iters",
        "valuation.batch",
        "valuation.period",
        "valuation.runs",
        "valuation.chunk",
        "valuation.balance_classes",
        "valuation.params",
        "valuation.dropout",
        "shapley.budget",
        "shapley.tolerance",
        "shapley.window",
        "train.epochs",
        "train.lr",
        "train.batch",
        "filter.grid",
        "filter.directions",
        "eval.discovery_grid",
    ];

    /// Sets one dotted key from its text form.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let raw = raw.trim();
        let k = key;
        match key {
            "name" => self.name = raw.to_string(),
            "replicates" => self.replicates = parse_value(k, raw)?,
            "seed" => self.seed = parse_value(k, raw)?,
            "data.source" => self.data.source = raw.parse()?,
            "data.n" => self.data.n = parse_value(k, raw)?,
            "data.d" => self.data.d = parse_value(k, raw)?,
            "data.classes" => self.data.classes = parse_value(k, raw)?,
            "data.separation" => self.data.separation = parse_value(k, raw)?,
            "data.rank" => self.data.rank = parse_value(k, raw)?,
            "data.path" => self.data.path = optional(raw),
            "data.id_column" => self.data.id_column = optional(raw),
            "data.label_column" => self.data.label_column = optional(raw),
            "data.group_column" => self.data.group_column = optional(raw),
            "data.standardize" => self.data.standardize = parse_bool(k, raw)?,
            "split.source" => self.split.source = parse_value(k, raw)?,
            "split.target" => self.split.target = parse_value(k, raw)?,
            "split.test" => self.split.test = parse_value(k, raw)?,
            "split.balance" => self.balance_target = parse_bool(k, raw)?,
            "corruption.kind" => self.corruption.kind = raw.parse()?,
            "corruption.proportion" => self.corruption.proportion = parse_value(k, raw)?,
            "corruption.phi_max" => self.corruption.phi_max = parse_value(k, raw)?,
            "corruption.fraction" => self.corruption.fraction = parse_value(k, raw)?,
            "model.kind" => self.model.kind = raw.parse()?,
            "model.hidden" => self.model.hidden = parse_list(k, raw)?,
            "model.activation" => self.model.activation = raw.parse()?,
            "model.dropout" => self.model.dropout = parse_value(k, raw)?,
            "model.instance_norm" => self.model.instance_norm = parse_bool(k, raw)?,
            "valuation.method" => self.method = raw.parse()?,
            "valuation.similarity" => self.valuation.similarity = raw.parse()?,
            "valuation.lr" => self.valuation.lr = parse_value(k, raw)?,
            "valuation.iters" => self.valuation.iterations = parse_value(k, raw)?,
            "valuation.batch" => self.valuation.batch_size = parse_value(k, raw)?,
            "valuation.period" => self.valuation.period = parse_value(k, raw)?,
            "valuation.runs" => self.valuation.runs = parse_value(k, raw)?,
            "valuation.chunk" => self.valuation.chunk_size = parse_value(k, raw)?,
            "valuation.balance_classes" => self.valuation.balance_classes = parse_bool(k, raw)?,
            "valuation.params" => self.valuation.params = raw.parse::<ParamSelector>()?,
            "valuation.dropout" => self.valuation.dropout_in_gradients = parse_bool(k, raw)?,
            "shapley.budget" => self.shapley.budget = parse_value(k, raw)?,
            "shapley.tolerance" => self.shapley.tolerance = parse_value(k, raw)?,
            "shapley.window" => self.shapley.convergence_window = parse_value(k, raw)?,
            "train.epochs" => self.train.epochs = parse_value(k, raw)?,
            "train.lr" => self.train.lr = parse_value(k, raw)?,
            "train.batch" => self.train.batch_size = parse_value(k, raw)?,
            "filter.grid" => self.filter_grid = parse_list(k, raw)?,
            "filter.directions" => self.filter_directions = parse_list(k, raw)?,
            "eval.discovery_grid" => self.discovery_grid = parse_list(k, raw)?,
            _ => return Err(Error::config(format!("unknown plan key '{key}'"))),
        }
        Ok(())
    }

    /// Current text value of a key.
    pub fn get(&self, key: &str) -> Option<String> {
        let opt = |v: &Option<String>| v.clone().unwrap_or_else(|| "none".into());
        Some(match key {
            "name" => self.name.clone(),
            "replicates" => self.replicates.to_string(),
            "seed" => self.seed.to_string(),
            "data.source" => self.data.source.name().into(),
            "data.n" => self.data.n.to_string(),
            "data.d" => self.data.d.to_string(),
            "data.classes" => self.data.classes.to_string(),
            "data.separation" => self.data.separation.to_string(),
            "data.rank" => self.data.rank.to_string(),
            "data.path" => opt(&self.data.path),
            "data.id_column" => opt(&self.data.id_column),
            "data.label_column" => opt(&self.data.label_column),
            "data.group_column" => opt(&self.data.group_column),
            "data.standardize" => self.data.standardize.to_string(),
            "split.source" => self.split.source.to_string(),
            "split.target" => self.split.target.to_string(),
            "split.test" => self.split.test.to_string(),
            "split.balance" => self.balance_target.to_string(),
            "corruption.kind" => self.corruption.kind.to_string(),
            "corruption.proportion" => self.corruption.proportion.to_string(),
            "corruption.phi_max" => self.corruption.phi_max.to_string(),
            "corruption.fraction" => self.corruption.fraction.to_string(),
            "model.kind" => self.model.kind.to_string(),
            "model.hidden" => join(&self.model.hidden),
            "model.activation" => self.model.activation.to_string(),
            "model.dropout" => self.model.dropout.to_string(),
            "model.instance_norm" => self.model.instance_norm.to_string(),
            "valuation.method" => self.method.to_string(),
            "valuation.similarity" => self.valuation.similarity.to_string(),
            "valuation.lr" => self.valuation.lr.to_string(),
            "valuation.iters" => self.valuation.iterations.to_string(),
            "valuation.batch" => self.valuation.batch_size.to_string(),
            "valuation.period" => self.valuation.period.to_string(),
            "valuation.runs" => self.valuation.runs.to_string(),
            "valuation.chunk" => self.valuation.chunk_size.to_string(),
            "valuation.balance_classes" => self.valuation.balance_classes.to_string(),
            "valuation.params" => self.valuation.params.to_string(),
            "valuation.dropout" => self.valuation.dropout_in_gradients.to_string(),
            "shapley.budget" => self.shapley.budget.to_string(),
            "shapley.tolerance" => self.shapley.tolerance.to_string(),
            "shapley.window" => self.shapley.convergence_window.to_string(),
            "train.epochs" => self.train.epochs.to_string(),
            "train.lr" => self.train.lr.to_string(),
            "train.batch" => self.train.batch_size.to_string(),
            "filter.grid" => join(&self.filter_grid),
            "filter.directions" => join(&self.filter_directions),
            "eval.discovery_grid" => join(&self.discovery_grid),
            _ => return None,
        })
    }

    /// Parses plan text on top of the defaults. Repeated keys are errors.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut plan = Self::default();
        plan.apply_text(text, origin)?;
        plan.validate()?;
        Ok(plan)
    }

    /// Applies the `key = value` lines of `text` without validating the
    /// result; `origin` is only used in error positions.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let err = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message,
            };
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected 'key = value', found '{content}'")))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(err(format!("key '{key}' appears twice")));
            }
            self.set(key, value).map_err(|e| err(e.to_string()))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Canonical text form listing every key; parses back to an equal plan.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in Self::KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("known key"));
        }
        out
    }

    pub fn digest(&self) -> String {
        digest_str(&self.to_text())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.replicates == 0 {
            return fail("replicates must be at least 1".into());
        }
        if self.data.source == DataSource::Csv && self.data.path.is_none() {
            return fail("data.source = csv needs data.path".into());
        }
        if self.data.source != DataSource::Csv && self.split.total() > self.data.n {
            return fail(format!(
                "split sizes sum to {} but data.n is {}",
                self.split.total(),
                self.data.n
            ));
        }
        if self.data.source == DataSource::Lowrank && self.model.kind != Architecture::Autoencoder {
            return fail("unlabeled low-rank data needs model.kind = autoencoder".into());
        }
        if self.corruption.kind == CorruptionKind::Labels && self.model.kind == Architecture::Autoencoder {
            return fail("label corruption needs a classifier".into());
        }
        if self.method == Method::DvgsUnsupervised && self.model.kind != Architecture::Autoencoder {
            return fail("dvgs-unsupervised needs model.kind = autoencoder".into());
        }
        for &f in self.filter_grid.iter().chain(&self.discovery_grid) {
            if !(0.0..=1.0).contains(&f) {
                return fail(format!("grid fraction {f} outside [0, 1]"));
            }
        }
        if !self.filter_grid.is_empty() && self.filter_directions.is_empty() {
            return fail("filter.grid is set but filter.directions is empty".into());
        }
        match self.method {
            Method::Dvgs | Method::DvgsUnsupervised => self.valuation.validate(self.split.target),
            Method::TmcShapley => self.shapley.validate(),
            _ => Ok(()),
        }
    }
}
