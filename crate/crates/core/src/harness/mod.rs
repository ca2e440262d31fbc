//! Experiment orchestration: data ingestion and synthesis, splits, valuation
//! dispatch, filter curves and result bundles.

mod dataset;
mod evaluation;
mod experiment;
mod filter;
mod io;
mod plan;
mod split;
mod synth;

pub use dataset::{Dataset, Labels, Standardization};
pub use evaluation::{discovery, score_corruption, score_corruption_with, CorruptionScore};
pub use experiment::{
    execute_plan, load_bundle, recompute_reports, replicate_seed, run_experiment, value_dataset, write_bundle,
    Bundle, CurveRow, ExperimentResult, FailureKind, Manifest, ReplicateOutcome, Reports, StageFailure,
    CORRUPTION_FILE, CURVES_FILE, MANIFEST_FILE, REPORTS_FILE, TIMINGS_FILE, VALUES_FILE,
};
pub use filter::{filter_curve, filter_indices, Direction, FilterPoint, RetrainSetup};
pub use io::{load_csv, load_replicate_groups, write_csv, CsvSchema, LabelKind};
pub use plan::{CorruptionPlan, DataPlan, DataSource, ExperimentPlan, ModelPlan};
pub use split::{split, SplitSizes};
pub use synth::{synth_classification, synth_lowrank};
