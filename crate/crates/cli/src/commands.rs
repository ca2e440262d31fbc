use std::fs;
use std::path::{Path, PathBuf};

use gradval::baselines::ScoreMetric;
use gradval::harness::{
    discovery, filter_curve, load_csv, load_replicate_groups, run_experiment, score_corruption, score_corruption_with,
    synth_classification, synth_lowrank, value_dataset, write_csv, CsvSchema, Direction, ExperimentPlan,
    RetrainSetup,
};
use gradval::metrics::apc;
use gradval::rng::derive_seed;
use gradval::{
    corrupt_features, corrupt_labels, Architecture, CorruptionRecord, DataValues, Dataset, Error, Method,
    ValuationConfig,
};
use serde::Serialize;

use crate::args::*;
use crate::CliError;

type Result<T, E = CliError> = std::result::Result<T, E>;

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    match out {
        Some(path) => write_text(path, &(text + "\n")),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn parse_grid(raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad grid fraction '{s}'")))
        })
        .collect()
}

/// Plan built from defaults, an optional plan file, `key=value` overrides
/// and finally explicit flags.
struct PlanBuilder(ExperimentPlan);

impl PlanBuilder {
    fn new(file: Option<&Path>) -> Result<Self> {
        let mut plan = ExperimentPlan::default();
        if let Some(path) = file {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            plan.apply_text(&text, path)?;
        }
        Ok(Self(plan))
    }

    fn set(&mut self, key: &str, value: impl ToString) -> Result<()> {
        Ok(self.0.set(key, &value.to_string())?)
    }

    fn set_opt(&mut self, key: &str, value: Option<impl ToString>) -> Result<()> {
        match value {
            Some(v) => self.set(key, v),
            None => Ok(()),
        }
    }

    fn overrides(&mut self, pairs: &[String]) -> Result<()> {
        for pair in pairs {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got '{pair}'")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    fn valuation(&mut self, a: &ValuationArgs) -> Result<()> {
        self.set_opt("valuation.method", a.method.as_ref())?;
        self.set_opt("valuation.similarity", a.similarity.as_ref())?;
        self.set_opt("valuation.iters", a.iters)?;
        self.set_opt("valuation.lr", a.lr)?;
        self.set_opt("valuation.batch", a.batch)?;
        self.set_opt("valuation.period", a.period)?;
        self.set_opt("valuation.runs", a.runs)?;
        self.set_opt("seed", a.seed)?;
        self.set_opt("valuation.chunk", a.chunk)?;
        if a.balance_classes {
            self.set("valuation.balance_classes", true)?;
        }
        self.set_opt("valuation.params", a.params.as_ref())
    }

    fn model(&mut self, a: &ModelArgs) -> Result<()> {
        self.set_opt("model.kind", a.model.as_ref())?;
        self.set_opt("model.hidden", a.hidden.as_ref())?;
        self.set_opt("model.activation", a.activation.as_ref())?;
        self.set_opt("model.dropout", a.dropout)?;
        if a.instance_norm {
            self.set("model.instance_norm", true)?;
        }
        Ok(())
    }

    fn train(&mut self, a: &TrainArgs) -> Result<()> {
        self.set_opt("train.epochs", a.epochs)?;
        self.set_opt("train.lr", a.train_lr)?;
        self.set_opt("train.batch", a.train_batch)
    }

    fn shapley(&mut self, a: &ShapleyArgs) -> Result<()> {
        self.set_opt("shapley.budget", a.budget)?;
        self.set_opt("shapley.tolerance", a.tolerance)
    }
}

fn load_dataset(path: &Path, architecture: Architecture) -> Result<Dataset> {
    let mut schema = CsvSchema::detect(path)?;
    if architecture == Architecture::Autoencoder {
        schema.label_column = None;
    }
    let data = load_csv(path, &schema)?;
    if architecture == Architecture::Classifier && data.classes().is_none() {
        return Err(Error::InvalidConfig(format!("{} has no 'label' column for a classifier", path.display())).into());
    }
    Ok(data)
}

/// Class count covering the labels of every given set.
fn class_count(sets: &[&Dataset]) -> usize {
    sets.iter()
        .filter_map(|d| d.classes())
        .flat_map(|c| c.iter().copied())
        .max()
        .map_or(0, |m| (m + 1).max(2))
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let data = match a.kind.as_str() {
        "lowrank" => synth_lowrank(a.n, a.d, a.rank, a.seed)?,
        _ => synth_classification(a.n, a.d, a.classes, a.separation, a.seed)?,
    };
    write_csv(&data, &a.out)?;
    eprintln!("wrote {} samples x {} features to {}", data.len(), data.width(), a.out.display());
    Ok(())
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    out.with_file_name(format!("{stem}{suffix}"))
}

pub fn corrupt(a: &CorruptArgs) -> Result<()> {
    let schema = CsvSchema::detect(&a.data)?;
    let data = load_csv(&a.data, &schema)?;
    let (corrupted, record) = match a.kind.as_str() {
        "labels" => corrupt_labels(&data, a.proportion, a.seed)?,
        _ => corrupt_features(&data, a.phi_max, a.fraction, a.seed)?,
    };
    let record_path = a.record.clone().unwrap_or_else(|| sibling(&a.out, ".corruption.csv"));
    write_csv(&corrupted, &a.out)?;
    record.write_csv(&record_path)?;
    eprintln!(
        "corrupted {} of {} samples; data in {}, record in {}",
        record.corrupted_count(),
        record.len(),
        a.out.display(),
        record_path.display()
    );
    Ok(())
}

pub fn value(a: &ValueArgs) -> Result<()> {
    let mut b = PlanBuilder::new(a.config.config.as_deref())?;
    b.overrides(&a.config.set)?;
    b.valuation(&a.valuation)?;
    b.model(&a.model)?;
    b.train(&a.train)?;
    b.shapley(&a.shapley)?;
    let plan = b.0;

    let source = load_dataset(&a.source, plan.model.kind)?;
    let target = load_dataset(&a.target, plan.model.kind)?;
    let spec = plan.model.spec(source.width(), class_count(&[&source, &target]))?;
    let cfg = ValuationConfig {
        seed: plan.seed,
        ..plan.valuation.clone()
    };
    let values = value_dataset(plan.method, &spec, &source, &target, &cfg, &plan.shapley, &plan.train)?;
    values.write_csv(&a.out)?;
    write_text(&a.out.with_extension("plan"), &plan.to_text())?;
    eprintln!("wrote {} {} values to {}", values.len(), values.method, a.out.display());
    Ok(())
}

#[derive(Serialize)]
struct EvaluationReport {
    metric: String,
    value: f64,
    samples: usize,
    corrupted: usize,
    values: PathBuf,
    corruption: PathBuf,
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let values = DataValues::read_csv(&a.values, Method::Dvgs)?;
    let record = CorruptionRecord::read_csv(&a.corruption)?;
    let score = match &a.metric {
        Some(m) => score_corruption_with(&record, &values, m)?,
        None => score_corruption(&record, &values)?,
    };
    write_json(
        &EvaluationReport {
            metric: score.metric,
            value: score.value,
            samples: record.len(),
            corrupted: record.corrupted_count(),
            values: a.values.clone(),
            corruption: a.corruption.clone(),
        },
        a.out.as_deref(),
    )
}

pub fn filter(a: &FilterCurveArgs) -> Result<()> {
    let mut b = PlanBuilder::new(a.config.config.as_deref())?;
    b.overrides(&a.config.set)?;
    b.set_opt("seed", a.seed)?;
    b.model(&a.model)?;
    b.train(&a.train)?;
    let plan = b.0;
    if a.repeats == 0 {
        return Err(CliError::Usage("--repeats must be at least 1".into()));
    }

    let source = load_dataset(&a.source, plan.model.kind)?;
    let test = load_dataset(&a.test, plan.model.kind)?;
    let spec = plan.model.spec(source.width(), class_count(&[&source, &test]))?;
    let values = DataValues::read_csv(&a.values, Method::Dvgs)?.aligned_to(source.ids())?;
    let grid = parse_grid(&a.grid)?;
    let directions: Vec<Direction> = if a.direction.is_empty() {
        vec![Direction::RemoveLowest, Direction::RemoveHighest]
    } else {
        a.direction.iter().map(|d| d.parse()).collect::<Result<_, Error>>()?
    };
    let seeds: Vec<u64> = (0..a.repeats as u64).map(|i| derive_seed(plan.seed, i)).collect();
    let setup = RetrainSetup {
        spec: &spec,
        train: plan.train.clone(),
        metric: ScoreMetric::default_for(&spec),
    };

    let mut text = String::from("direction,fraction,metric,mean,std,n\n");
    for direction in directions {
        for p in filter_curve(&setup, &source, &test, &values, &grid, direction, &seeds)? {
            let std = p.report.std.map_or(String::new(), |s| s.to_string());
            text.push_str(&format!(
                "{},{},{},{},{},{}\n",
                direction, p.fraction, p.report.metric, p.report.mean, std, p.report.n
            ));
        }
    }
    write_text(&a.out, &text)?;
    write_text(&a.out.with_extension("plan"), &plan.to_text())?;
    eprintln!("wrote filter curve to {}", a.out.display());
    Ok(())
}

pub fn discovery_curve(a: &DiscoveryArgs) -> Result<()> {
    let values = DataValues::read_csv(&a.values, Method::Dvgs)?;
    let record = CorruptionRecord::read_csv(&a.corruption)?;
    let curve = discovery(&record, &values, &parse_grid(&a.grid)?)?;
    let mut text = String::from("fraction,found\n");
    for p in curve {
        text.push_str(&format!("{},{}\n", p.fraction, p.value));
    }
    write_text(&a.out, &text)?;
    eprintln!("wrote discovery curve to {}", a.out.display());
    Ok(())
}

#[derive(Serialize)]
struct GroupApc {
    id: String,
    members: usize,
    /// Absent for groups with fewer than two members or a constant member.
    apc: Option<f64>,
    note: Option<String>,
}

#[derive(Serialize)]
struct ApcReport {
    metric: &'static str,
    groups: Vec<GroupApc>,
    /// Mean over groups with a defined APC.
    mean: Option<f64>,
}

pub fn apc_report(a: &ApcArgs) -> Result<()> {
    let groups = load_replicate_groups(&a.data, &a.group_column)?;
    let mut rows = Vec::with_capacity(groups.len());
    for g in &groups {
        let (value, note) = match apc(g) {
            Ok(v) => (Some(v), None),
            Err(Error::Degenerate(m)) => (None, Some(m)),
            Err(e) => return Err(e.into()),
        };
        rows.push(GroupApc {
            id: g.id.clone(),
            members: g.members.len(),
            apc: value,
            note,
        });
    }
    let defined: Vec<f64> = rows.iter().filter_map(|r| r.apc).collect();
    let mean = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    write_json(
        &ApcReport {
            metric: "apc",
            groups: rows,
            mean,
        },
        a.out.as_deref(),
    )
}

pub fn run(a: &RunArgs) -> Result<()> {
    let mut b = PlanBuilder::new(a.plan.as_deref())?;
    b.overrides(&a.set)?;
    b.valuation(&a.valuation)?;
    b.model(&a.model)?;
    b.train(&a.train)?;
    b.shapley(&a.shapley)?;
    let plan = b.0;
    plan.validate()?;

    let (dir, result) = run_experiment(&plan, &a.out)?;
    println!("bundle {}", dir.display());
    if let Some(v) = &result.reports.valuation {
        println!("valuation {} = {}", v.metric, v);
    }
    for row in result.reports.curves.iter().filter(|r| r.kind.starts_with("filter")) {
        println!("{} {} = {}", row.kind, row.fraction, row.report);
    }
    match result.failures().first() {
        None => Ok(()),
        Some(f) => Err(CliError::Stage {
            kind: f.kind.clone(),
            message: format!(
                "{} of {} replicates failed; first: replicate {} stage {}: {}",
                result.failures().len(),
                plan.replicates,
                f.replicate,
                f.stage,
                f.message
            ),
        }),
    }
}
