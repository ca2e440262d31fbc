//! Gradient-similarity data valuation with baselines, corruption models,
//! evaluation metrics and an experiment harness.

pub mod baselines;
pub mod corruption;
pub mod diffmodel;
pub mod dvgs;
mod error;
pub mod harness;
mod matrix;
pub mod metrics;
pub mod rng;
pub mod similarity;
pub mod values;

pub use corruption::{corrupt_features, corrupt_labels, CorruptionKind, CorruptionRecord};
pub use diffmodel::{Activation, Architecture, ModelSpec, ParamSelector, ParameterVector};
pub use dvgs::{dvgs_value, dvgs_value_unsupervised, run_dvgs, DvgsOutcome, ValuationConfig};
pub use error::{Error, Result};
pub use harness::{Dataset, Labels, Standardization};
pub use matrix::Matrix;
pub use metrics::{CurvePoint, EvalReport};
pub use similarity::SimilarityKind;
pub use values::{DataValues, Method};
