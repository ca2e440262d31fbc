//! Shared fixtures for the benchmarks.

use gradval::diffmodel::{init_params, ParameterVector};
use gradval::harness::synth_classification;
use gradval::{Dataset, ModelSpec};

pub const FEATURES: usize = 40;

/// Two-class blobs with the default benchmark geometry.
pub fn blobs(n: usize, seed: u64) -> Dataset {
    synth_classification(n, FEATURES, 2, 8.0, seed).expect("valid synthetic parameters")
}

/// One-hidden-layer classifier over [`FEATURES`] inputs.
pub fn classifier(hidden: usize) -> ModelSpec {
    ModelSpec::classifier(FEATURES, &[hidden], 2).expect("valid spec")
}

pub fn params(spec: &ModelSpec, seed: u64) -> ParameterVector {
    init_params(spec, seed).expect("initializable spec")
}

/// Scores with a planted signal so the rank statistics see ties and overlap.
pub fn labelled_scores(n: usize) -> (Vec<bool>, Vec<f64>) {
    let labels: Vec<bool> = (0..n).map(|i| i % 5 == 0).collect();
    let scores = (0..n)
        .map(|i| {
            let jitter = ((i * 7919) % 1000) as f64 / 1000.0;
            jitter + if labels[i] { 0.3 } else { 0.0 } + (i % 17 == 0) as u8 as f64
        })
        .collect();
    (labels, scores)
}

pub fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}
