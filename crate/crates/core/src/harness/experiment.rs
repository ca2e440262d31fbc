//! End-to-end experiments: data, split, standardize, corrupt, value,
//! evaluate and filter, per replicate, with results persisted to a bundle
//! directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Standardization};
use super::evaluation::{discovery, score_corruption};
use super::filter::{filter_curve, Direction, FilterPoint, RetrainSetup};
use super::io::{load_csv, CsvSchema};
use super::plan::{DataSource, ExperimentPlan};
use super::split::split;
use super::synth::{synth_classification, synth_lowrank};
use crate::baselines::{
    exact_shapley, loo_values, random_values, tmc_shapley, ScoreMetric, SeedPolicy, ShapleyConfig,
    TrainingUtility,
};
use crate::corruption::{corrupt_features, corrupt_labels, CorruptionKind, CorruptionRecord};
use crate::diffmodel::{Architecture, ModelSpec, TrainConfig};
use crate::dvgs::{run_dvgs, ValuationConfig};
use crate::error::{Error, Result};
use crate::metrics::{CurvePoint, EvalReport};
use crate::rng::{derive_seed, derive_tagged};
use crate::values::{file_digest, DataValues, Method};

/// Values `source` samples against `target` with any supported method.
/// DVGS uses `valuation` (including its seed); the other methods use
/// `valuation.seed` as their seed and, where a model is retrained, `train`.
pub fn value_dataset(
    method: Method,
    spec: &ModelSpec,
    source: &Dataset,
    target: &Dataset,
    valuation: &ValuationConfig,
    shapley: &ShapleyConfig,
    train: &TrainConfig,
) -> Result<DataValues> {
    let seed = valuation.seed;
    let utility = || {
        TrainingUtility::new(
            spec,
            source,
            target,
            train.clone(),
            SeedPolicy::Fixed(seed),
            ScoreMetric::default_for(spec),
        )
    };
    match method {
        Method::Dvgs | Method::DvgsUnsupervised => {
            if method == Method::DvgsUnsupervised && spec.architecture != Architecture::Autoencoder {
                return Err(Error::config("dvgs-unsupervised needs an autoencoder"));
            }
            Ok(run_dvgs(spec, source, target, valuation, None)?.values)
        }
        Method::Loo => loo_values(&utility()?, source.ids()),
        Method::TmcShapley => tmc_shapley(&utility()?, source.ids(), shapley, seed),
        Method::ExactShapley => exact_shapley(&utility()?, source.ids()),
        Method::Random => random_values(source.ids(), seed),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureKind {
    Io,
    Divergence,
    Other,
}

impl FailureKind {
    pub fn of(error: &Error) -> Self {
        if error.is_io() {
            FailureKind::Io
        } else if error.is_divergence() {
            FailureKind::Divergence
        } else {
            FailureKind::Other
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub replicate: usize,
    pub stage: String,
    pub kind: FailureKind,
    pub message: String,
}

/// Everything one replicate produced. Fields after a failed stage stay empty.
#[derive(Debug, Clone)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub seed: u64,
    pub values: Option<DataValues>,
    pub corruption: Option<CorruptionRecord>,
    pub score: Option<EvalReport>,
    pub discovery: Option<Vec<CurvePoint>>,
    pub filter: Vec<(Direction, Vec<FilterPoint>)>,
    /// `(stage, seconds)` in execution order.
    pub timings: Vec<(String, f64)>,
    pub failure: Option<StageFailure>,
}

/// A curve point aggregated over replicates; `report.per_seed` holds one entry per replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub kind: String,
    pub fraction: f64,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reports {
    /// Corruption-recovery score over replicates; absent without corruption.
    pub valuation: Option<EvalReport>,
    pub curves: Vec<CurveRow>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub plan: ExperimentPlan,
    pub replicates: Vec<ReplicateOutcome>,
    pub reports: Reports,
}

impl ExperimentResult {
    pub fn failures(&self) -> Vec<&StageFailure> {
        self.replicates.iter().filter_map(|r| r.failure.as_ref()).collect()
    }

    /// Filter-curve row for a direction and fraction.
    pub fn filter_row(&self, direction: Direction, fraction: f64) -> Option<&CurveRow> {
        let kind = filter_kind(direction);
        self.reports
            .curves
            .iter()
            .find(|r| r.kind == kind && r.fraction == fraction)
    }
}

fn filter_kind(direction: Direction) -> String {
    format!("filter-{}", direction.name())
}

/// Per-replicate seed: `derive_seed(plan.seed, replicate)`.
pub fn replicate_seed(plan: &ExperimentPlan, replicate: usize) -> u64 {
    derive_seed(plan.seed, replicate as u64)
}

fn load_data(plan: &ExperimentPlan, seed: u64) -> Result<Dataset> {
    let d = &plan.data;
    match d.source {
        DataSource::Synthetic => synth_classification(d.n, d.d, d.classes, d.separation, seed),
        DataSource::Lowrank => synth_lowrank(d.n, d.d, d.rank, seed),
        DataSource::Csv => {
            let path = Path::new(d.path.as_deref().ok_or_else(|| Error::config("data.path is not set"))?);
            let mut schema = CsvSchema::detect(path)?;
            if d.id_column.is_some() {
                schema.id_column = d.id_column.clone();
            }
            if d.label_column.is_some() {
                schema.label_column = d.label_column.clone();
            }
            if d.group_column.is_some() {
                schema.group_column = d.group_column.clone();
            }
            if plan.model.kind == Architecture::Autoencoder && d.label_column.is_none() {
                schema.label_column = None;
            }
            load_csv(path, &schema)
        }
    }
}

struct Stages {
    timings: Vec<(String, f64)>,
}

impl Stages {
    fn run<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> std::result::Result<T, (String, Error)> {
        let t0 = Instant::now();
        let out = f();
        self.timings.push((name.to_string(), t0.elapsed().as_secs_f64()));
        out.map_err(|e| (name.to_string(), e))
    }
}

fn run_replicate(plan: &ExperimentPlan, replicate: usize) -> ReplicateOutcome {
    let seed = replicate_seed(plan, replicate);
    let mut out = ReplicateOutcome {
        replicate,
        seed,
        values: None,
        corruption: None,
        score: None,
        discovery: None,
        filter: Vec::new(),
        timings: Vec::new(),
        failure: None,
    };
    let mut stages = Stages { timings: Vec::new() };
    if let Err((stage, e)) = replicate_stages(plan, seed, &mut stages, &mut out) {
        out.failure = Some(StageFailure {
            replicate,
            stage,
            kind: FailureKind::of(&e),
            message: e.to_string(),
        });
    }
    out.timings = stages.timings;
    out
}

fn replicate_stages(
    plan: &ExperimentPlan,
    seed: u64,
    stages: &mut Stages,
    out: &mut ReplicateOutcome,
) -> std::result::Result<(), (String, Error)> {
    let data = stages.run("data", || load_data(plan, derive_tagged(seed, "data")))?;
    let (source, target, test) = stages.run("split", || {
        split(&data, plan.split, derive_tagged(seed, "split"), plan.balance_target)
    })?;
    let (source, target, test) = stages.run("standardize", || {
        if !plan.data.standardize {
            return Ok((source, target, test));
        }
        let s = Standardization::fit(source.features())?;
        Ok((source.standardized(&s)?, target.standardized(&s)?, test.standardized(&s)?))
    })?;
    let (source, record) = stages.run("corrupt", || {
        let cseed = derive_tagged(seed, "corrupt");
        match plan.corruption.kind {
            CorruptionKind::None => Ok((source.clone(), CorruptionRecord::clean(source.ids().to_vec()))),
            CorruptionKind::Labels => corrupt_labels(&source, plan.corruption.proportion, cseed),
            CorruptionKind::Features => {
                corrupt_features(&source, plan.corruption.phi_max, plan.corruption.fraction, cseed)
            }
        }
    })?;
    out.corruption = Some(record.clone());

    let (spec, values) = stages.run("value", || {
        let spec = plan.model.spec(data.width(), data.num_classes().unwrap_or(0))?;
        let cfg = ValuationConfig {
            seed: derive_tagged(seed, "value"),
            ..plan.valuation.clone()
        };
        let values = value_dataset(plan.method, &spec, &source, &target, &cfg, &plan.shapley, &plan.train)?;
        Ok((spec, values))
    })?;
    out.values = Some(values.clone());

    if record.kind != CorruptionKind::None {
        let (score, curve) = stages.run("evaluate", || {
            let s = score_corruption(&record, &values)?;
            let curve = discovery(&record, &values, &plan.discovery_grid)?;
            Ok((EvalReport::single(s.metric, s.value), curve))
        })?;
        out.score = Some(score);
        out.discovery = Some(curve);
    }

    if !plan.filter_grid.is_empty() {
        let setup = RetrainSetup {
            spec: &spec,
            train: plan.train.clone(),
            metric: ScoreMetric::default_for(&spec),
        };
        let aligned = values.aligned_to(source.ids()).map_err(|e| ("filter".to_string(), e))?;
        for &direction in &plan.filter_directions {
            let points = stages.run("filter", || {
                filter_curve(
                    &setup,
                    &source,
                    &test,
                    &aligned,
                    &plan.filter_grid,
                    direction,
                    &[derive_tagged(seed, "retrain")],
                )
            })?;
            out.filter.push((direction, points));
        }
    }
    Ok(())
}

/// Runs every replicate (in parallel) and aggregates the reports in memory.
pub fn execute_plan(plan: &ExperimentPlan) -> Result<ExperimentResult> {
    plan.validate()?;
    let replicates: Vec<ReplicateOutcome> = (0..plan.replicates)
        .into_par_iter()
        .map(|r| run_replicate(plan, r))
        .collect();
    let reports = aggregate(plan, &replicates)?;
    Ok(ExperimentResult {
        plan: plan.clone(),
        replicates,
        reports,
    })
}

fn aggregate(plan: &ExperimentPlan, replicates: &[ReplicateOutcome]) -> Result<Reports> {
    let scores: Vec<&EvalReport> = replicates.iter().filter_map(|r| r.score.as_ref()).collect();
    let valuation = match scores.first() {
        Some(first) => Some(EvalReport::from_seeds(
            first.metric.clone(),
            scores.iter().map(|s| s.value).collect(),
        )?),
        None => None,
    };

    let mut curves = Vec::new();
    let discoveries: Vec<&Vec<CurvePoint>> = replicates.iter().filter_map(|r| r.discovery.as_ref()).collect();
    if !discoveries.is_empty() {
        for (g, &fraction) in plan.discovery_grid.iter().enumerate() {
            curves.push(CurveRow {
                kind: "discovery".into(),
                fraction,
                report: EvalReport::from_seeds("found", discoveries.iter().map(|c| c[g].value).collect())?,
            });
        }
    }
    for &direction in &plan.filter_directions {
        let per_rep: Vec<&Vec<FilterPoint>> = replicates
            .iter()
            .flat_map(|r| r.filter.iter().filter(|(d, _)| *d == direction).map(|(_, p)| p))
            .collect();
        if per_rep.is_empty() {
            continue;
        }
        for (g, &fraction) in plan.filter_grid.iter().enumerate() {
            let per_seed: Vec<f64> = per_rep.iter().flat_map(|p| p[g].report.per_seed.iter().copied()).collect();
            curves.push(CurveRow {
                kind: filter_kind(direction),
                fraction,
                report: EvalReport::from_seeds(per_rep[0][g].report.metric.clone(), per_seed)?,
            });
        }
    }
    Ok(Reports { valuation, curves })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub version: String,
    pub created_unix: u64,
    /// Canonical plan text; parses back to `plan`.
    pub plan_text: String,
    pub plan: ExperimentPlan,
    pub plan_digest: String,
    pub base_seed: u64,
    pub replicate_seeds: Vec<u64>,
    /// SHA-256 of values.csv.
    pub values_digest: String,
    pub method: Method,
    pub failures: Vec<StageFailure>,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const VALUES_FILE: &str = "values.csv";
pub const CORRUPTION_FILE: &str = "corruption.csv";
pub const REPORTS_FILE: &str = "reports.json";
pub const CURVES_FILE: &str = "curves.csv";
pub const TIMINGS_FILE: &str = "timings.csv";

fn create_run_dir(out: &Path) -> Result<PathBuf> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let base = format!("run-{secs}");
    for k in 0.. {
        let name = if k == 0 { base.clone() } else { format!("{base}-{k}") };
        let dir = out.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(Error::io(&dir, e)),
        }
    }
    unreachable!("unbounded suffix search")
}

fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<fs::File>> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    Ok(w)
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv_writer(path, header)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>())
            .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Writes the result into a fresh `run-<unix seconds>` directory under `out`
/// and returns its path. The manifest is written last.
pub fn write_bundle(result: &ExperimentResult, out: &Path) -> Result<PathBuf> {
    let dir = create_run_dir(out)?;
    let reps = &result.replicates;

    let values_path = dir.join(VALUES_FILE);
    write_rows(
        &values_path,
        &["replicate", "sample_id", "value"],
        reps.iter().filter_map(|r| r.values.as_ref().map(|v| (r.replicate, v))).flat_map(|(rep, v)| {
            v.ids
                .iter()
                .zip(&v.values)
                .map(move |(id, x)| vec![rep.to_string(), id.clone(), x.to_string()])
        }),
    )?;
    write_rows(
        &dir.join(CORRUPTION_FILE),
        &["replicate", "sample_id", "corrupted", "noise_rate"],
        reps.iter().filter_map(|r| r.corruption.as_ref().map(|c| (r.replicate, c))).flat_map(|(rep, c)| {
            (0..c.len()).map(move |i| {
                vec![
                    rep.to_string(),
                    c.ids[i].clone(),
                    u8::from(c.mask[i]).to_string(),
                    c.noise_rates[i].to_string(),
                ]
            })
        }),
    )?;
    write_rows(
        &dir.join(CURVES_FILE),
        &["kind", "fraction", "mean", "std", "n"],
        result.reports.curves.iter().map(|c| {
            vec![
                c.kind.clone(),
                c.fraction.to_string(),
                c.report.mean.to_string(),
                opt_num(c.report.std),
                c.report.n.to_string(),
            ]
        }),
    )?;
    write_rows(
        &dir.join(TIMINGS_FILE),
        &["replicate", "stage", "seconds"],
        reps.iter().flat_map(|r| {
            r.timings
                .iter()
                .map(move |(s, t)| vec![r.replicate.to_string(), s.clone(), t.to_string()])
        }),
    )?;
    let reports_path = dir.join(REPORTS_FILE);
    let json = serde_json::to_string_pretty(&result.reports).map_err(|e| Error::json(&reports_path, e))?;
    fs::write(&reports_path, json).map_err(|e| Error::io(&reports_path, e))?;

    let manifest = Manifest {
        name: result.plan.name.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        plan_text: result.plan.to_text(),
        plan: result.plan.clone(),
        plan_digest: result.plan.digest(),
        base_seed: result.plan.seed,
        replicate_seeds: reps.iter().map(|r| r.seed).collect(),
        values_digest: file_digest(&values_path)?,
        method: result.plan.method,
        failures: reps.iter().filter_map(|r| r.failure.clone()).collect(),
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json(&manifest_path, e))?;
    fs::write(&manifest_path, json).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(dir)
}

/// Executes the plan and persists the bundle; see [`write_bundle`].
pub fn run_experiment(plan: &ExperimentPlan, out: &Path) -> Result<(PathBuf, ExperimentResult)> {
    let result = execute_plan(plan)?;
    let dir = write_bundle(&result, out)?;
    Ok((dir, result))
}

/// Raw arrays and stored reports of a result bundle.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub manifest: Manifest,
    pub values: BTreeMap<usize, DataValues>,
    pub corruption: BTreeMap<usize, CorruptionRecord>,
    pub reports: Reports,
}

fn read_rows(path: &Path) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    r.records()
        .enumerate()
        .map(|(i, rec)| rec.map(|rec| (i + 2, rec)).map_err(|e| Error::csv(path, e)))
        .collect()
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, rec: &csv::StringRecord, col: usize) -> Result<T> {
    let raw = rec.get(col).unwrap_or("");
    raw.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("bad field '{raw}' in column {}", col + 1),
    })
}

pub fn load_bundle(dir: &Path) -> Result<Bundle> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::json(&manifest_path, e))?;
    let reports_path = dir.join(REPORTS_FILE);
    let text = fs::read_to_string(&reports_path).map_err(|e| Error::io(&reports_path, e))?;
    let reports: Reports = serde_json::from_str(&text).map_err(|e| Error::json(&reports_path, e))?;

    let values_path = dir.join(VALUES_FILE);
    let mut raw_values: BTreeMap<usize, (Vec<String>, Vec<f64>)> = BTreeMap::new();
    for (line, rec) in read_rows(&values_path)? {
        let rep: usize = field(&values_path, line, &rec, 0)?;
        let entry = raw_values.entry(rep).or_default();
        entry.0.push(rec.get(1).unwrap_or("").to_string());
        entry.1.push(field(&values_path, line, &rec, 2)?);
    }
    let values = raw_values
        .into_iter()
        .map(|(rep, (ids, v))| Ok((rep, DataValues::new(ids, v, manifest.method)?)))
        .collect::<Result<_>>()?;

    let corruption_path = dir.join(CORRUPTION_FILE);
    let mut corruption: BTreeMap<usize, CorruptionRecord> = BTreeMap::new();
    let c = &manifest.plan.corruption;
    for (line, rec) in read_rows(&corruption_path)? {
        let rep: usize = field(&corruption_path, line, &rec, 0)?;
        let flag: u8 = field(&corruption_path, line, &rec, 2)?;
        let rate: f64 = field(&corruption_path, line, &rec, 3)?;
        let entry = corruption.entry(rep).or_insert_with(|| CorruptionRecord {
            ids: Vec::new(),
            mask: Vec::new(),
            noise_rates: Vec::new(),
            kind: c.kind,
            seed: derive_tagged(manifest.replicate_seeds.get(rep).copied().unwrap_or_default(), "corrupt"),
            proportion: match c.kind {
                CorruptionKind::Features => c.fraction,
                _ => c.proportion,
            },
            phi_max: (c.kind == CorruptionKind::Features).then_some(c.phi_max),
        });
        entry.ids.push(rec.get(1).unwrap_or("").to_string());
        entry.mask.push(flag == 1);
        entry.noise_rates.push(rate);
    }
    Ok(Bundle {
        manifest,
        values,
        corruption,
        reports,
    })
}

/// Recomputes the reports from the bundle's raw arrays: corruption scores
/// and discovery curves from values.csv and corruption.csv, filter summaries
/// from their stored per-replicate scores.
pub fn recompute_reports(bundle: &Bundle) -> Result<Reports> {
    let plan = &bundle.manifest.plan;
    let skipped: Vec<usize> = bundle
        .manifest
        .failures
        .iter()
        .filter(|f| f.stage == "evaluate")
        .map(|f| f.replicate)
        .collect();
    let mut replicates = Vec::new();
    for (&rep, values) in &bundle.values {
        let mut out = ReplicateOutcome {
            replicate: rep,
            seed: 0,
            values: None,
            corruption: None,
            score: None,
            discovery: None,
            filter: Vec::new(),
            timings: Vec::new(),
            failure: None,
        };
        if let Some(record) = bundle.corruption.get(&rep) {
            if record.kind != CorruptionKind::None && !skipped.contains(&rep) {
                let s = score_corruption(record, values)?;
                out.score = Some(EvalReport::single(s.metric, s.value));
                out.discovery = Some(discovery(record, values, &plan.discovery_grid)?);
            }
        }
        replicates.push(out);
    }
    let mut reports = aggregate(plan, &replicates)?;
    let stored_filters = bundle.reports.curves.iter().filter(|c| c.kind.starts_with("filter-"));
    for row in stored_filters {
        reports.curves.push(CurveRow {
            kind: row.kind.clone(),
            fraction: row.fraction,
            report: EvalReport::from_seeds(row.report.metric.clone(), row.report.per_seed.clone())?,
        });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_plan() -> ExperimentPlan {
        let mut p = ExperimentPlan::default();
        for (k, v) in [
            ("replicates", "2"),
            ("data.n", "200"),
            ("data.d", "4"),
            ("split.source", "80"),
            ("split.target", "40"),
            ("split.test", "60"),
            ("valuation.iters", "20"),
            ("valuation.batch", "20"),
            ("valuation.runs", "1"),
            ("train.epochs", "5"),
            ("filter.grid", "0,0.2"),
        ] {
            p.set(k, v).unwrap();
        }
        p
    }

    #[test]
    fn bundle_round_trip_recomputes_reports_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let (run_dir, result) = run_experiment(&small_plan(), dir.path()).unwrap();
        assert!(result.failures().is_empty());
        for f in [MANIFEST_FILE, VALUES_FILE, CORRUPTION_FILE, REPORTS_FILE, CURVES_FILE, TIMINGS_FILE] {
            assert!(run_dir.join(f).exists(), "{f}");
        }
        let bundle = load_bundle(&run_dir).unwrap();
        assert_eq!(bundle.reports, result.reports);
        assert_eq!(recompute_reports(&bundle).unwrap(), bundle.reports);
        assert_eq!(bundle.values[&1], without_provenance(result.replicates[1].values.clone().unwrap()));
        let v = result.reports.valuation.as_ref().unwrap();
        assert_eq!((v.metric.as_str(), v.n), ("auroc", 2));
        assert_eq!(bundle.manifest.plan, small_plan());
    }

    /// Drops the provenance fields that values.csv does not carry.
    fn without_provenance(mut v: DataValues) -> DataValues {
        v.config_digest.clear();
        v.seeds.clear();
        v.snapshots = None;
        v.sample_counts = None;
        v
    }

    #[test]
    fn reruns_are_identical_and_dirs_do_not_collide() {
        let dir = tempfile::tempdir().unwrap();
        let plan = small_plan();
        let (a, _) = run_experiment(&plan, dir.path()).unwrap();
        let (b, _) = run_experiment(&plan, dir.path()).unwrap();
        assert_ne!(a, b);
        assert_eq!(
            file_digest(&a.join(VALUES_FILE)).unwrap(),
            file_digest(&b.join(VALUES_FILE)).unwrap()
        );
    }

    #[test]
    fn stage_failures_are_recorded() {
        let mut plan = small_plan();
        plan.set("valuation.lr", "1e300").unwrap();
        plan.set("filter.grid", "").unwrap();
        let result = execute_plan(&plan).unwrap();
        let failures = result.failures();
        assert_eq!(failures.len(), 2);
        assert_eq!(failures[0].stage, "value");
        assert_eq!(failures[0].kind, FailureKind::Divergence);
        assert!(result.replicates[0].corruption.is_some());
        assert!(result.reports.valuation.is_none());
    }
}
