//! Small fully connected networks with analytic per-sample gradients.
//!
//! Parameters live in one flat `f64` buffer described by a [`Layout`]; all
//! gradient routines write into that same layout, so gradients of different
//! samples can be compared directly.

mod loss;
mod network;
mod params;
mod spec;
mod train;

pub use loss::{loss, LossKind, SampleTarget, Targets, PROB_FLOOR};
pub use network::{forward, grad_batch, grad_single, PassMode};
pub use params::{
    init_params, sgd_step, GradientVector, Layout, ParamSelector, ParameterVector, TensorSlot,
};
pub use spec::{Activation, Architecture, ModelSpec};
pub use train::{predict_classes, train, train_from, TrainConfig, TrainOutcome};

pub(crate) use network::{batch_grad_into, check_params, sample_grad_into, Workspace};
pub(crate) use params::sgd_step_in_place;
