use std::ops::Range;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::spec::ModelSpec;
use crate::error::{Error, Result};
use crate::rng::rng_from;

/// One named tensor inside a flat parameter buffer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSlot {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorSlot {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.numel()
    }
}

/// Canonical flattening of a network's parameters.
///
/// Layer `l` contributes `layers.{l}.weight` with shape `[out, in]` (row-major)
/// followed by `layers.{l}.bias` with shape `[out]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    slots: Vec<TensorSlot>,
    len: usize,
}

impl Layout {
    pub fn for_widths(widths: &[usize]) -> Self {
        let mut slots = Vec::with_capacity(2 * widths.len().saturating_sub(1));
        let mut offset = 0;
        for (l, w) in widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            slots.push(TensorSlot {
                name: format!("layers.{l}.weight"),
                shape: vec![fan_out, fan_in],
                offset,
            });
            offset += fan_in * fan_out;
            slots.push(TensorSlot {
                name: format!("layers.{l}.bias"),
                shape: vec![fan_out],
                offset,
            });
            offset += fan_out;
        }
        Self { slots, len: offset }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn slots(&self) -> &[TensorSlot] {
        &self.slots
    }

    pub fn slot(&self, name: &str) -> Option<&TensorSlot> {
        self.slots.iter().find(|s| s.name == name)
    }

    /// Splits a flat buffer into one vector per tensor slot.
    pub fn unflatten(&self, values: &[f64]) -> Result<Vec<Vec<f64>>> {
        if values.len() != self.len {
            return Err(Error::DimensionMismatch {
                what: "flat parameter length",
                expected: self.len,
                actual: values.len(),
            });
        }
        Ok(self.slots.iter().map(|s| values[s.range()].to_vec()).collect())
    }

    pub fn flatten(&self, tensors: &[Vec<f64>]) -> Result<Vec<f64>> {
        if tensors.len() != self.slots.len() {
            return Err(Error::DimensionMismatch {
                what: "tensor count",
                expected: self.slots.len(),
                actual: tensors.len(),
            });
        }
        let mut out = Vec::with_capacity(self.len);
        for (slot, t) in self.slots.iter().zip(tensors) {
            if t.len() != slot.numel() {
                return Err(Error::DimensionMismatch {
                    what: "tensor length",
                    expected: slot.numel(),
                    actual: t.len(),
                });
            }
            out.extend_from_slice(t);
        }
        Ok(out)
    }

    /// Flat index ranges covered by `selector`, in layout order.
    #[allow(clippy::single_range_in_vec_init)]
    pub fn ranges(&self, selector: &ParamSelector) -> Result<Vec<Range<usize>>> {
        match selector {
            ParamSelector::All => Ok(vec![0..self.len]),
            ParamSelector::LastLayer => {
                let n = self.slots.len();
                // weight and bias of the final layer are contiguous
                Ok(vec![self.slots[n - 2].offset..self.len])
            }
            ParamSelector::Named(names) => {
                let mut ranges = Vec::with_capacity(names.len());
                for slot in &self.slots {
                    if names.iter().any(|n| n == &slot.name) {
                        ranges.push(slot.range());
                    }
                }
                if let Some(missing) = names.iter().find(|n| self.slot(n).is_none()) {
                    return Err(Error::config(format!("unknown parameter tensor '{missing}'")));
                }
                if ranges.is_empty() {
                    return Err(Error::config("empty parameter subset"));
                }
                Ok(ranges)
            }
        }
    }
}

/// Which parameters take part in gradient comparisons.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamSelector {
    #[default]
    All,
    LastLayer,
    Named(Vec<String>),
}

impl std::fmt::Display for ParamSelector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamSelector::All => f.write_str("all"),
            ParamSelector::LastLayer => f.write_str("last-layer"),
            ParamSelector::Named(names) => f.write_str(&names.join("+")),
        }
    }
}

impl FromStr for ParamSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(ParamSelector::All),
            "last-layer" => Ok(ParamSelector::LastLayer),
            "" => Err(Error::config("empty parameter selector")),
            names => Ok(ParamSelector::Named(
                names.split('+').map(|n| n.trim().to_string()).collect(),
            )),
        }
    }
}

/// Flattened network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    values: Vec<f64>,
    layout: Arc<Layout>,
}

/// Flattened loss gradient, in the layout of the parameters it differentiates.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    values: Vec<f64>,
    layout: Arc<Layout>,
}

macro_rules! flat_vector_impl {
    ($ty:ident) => {
        impl $ty {
            pub fn new(values: Vec<f64>, layout: Arc<Layout>) -> Result<Self> {
                if values.len() != layout.len() {
                    return Err(Error::DimensionMismatch {
                        what: "flat vector length",
                        expected: layout.len(),
                        actual: values.len(),
                    });
                }
                Ok(Self { values, layout })
            }

            pub fn zeros(layout: Arc<Layout>) -> Self {
                Self {
                    values: vec![0.0; layout.len()],
                    layout,
                }
            }

            pub fn values(&self) -> &[f64] {
                &self.values
            }

            pub fn values_mut(&mut self) -> &mut [f64] {
                &mut self.values
            }

            pub fn into_values(self) -> Vec<f64> {
                self.values
            }

            pub fn layout(&self) -> &Arc<Layout> {
                &self.layout
            }

            pub fn len(&self) -> usize {
                self.values.len()
            }

            pub fn is_empty(&self) -> bool {
                self.values.is_empty()
            }

            pub fn tensor(&self, name: &str) -> Option<&[f64]> {
                self.layout.slot(name).map(|s| &self.values[s.range()])
            }

            pub fn same_layout(&self, other_layout: &Layout) -> bool {
                *self.layout == *other_layout
            }
        }
    };
}

flat_vector_impl!(ParameterVector);
flat_vector_impl!(GradientVector);

impl GradientVector {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Fresh parameters: weights uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, biases zero.
pub fn init_params(spec: &ModelSpec, seed: u64) -> Result<ParameterVector> {
    spec.validate()?;
    let layout = spec.layout();
    let mut values = vec![0.0; layout.len()];
    let mut rng = rng_from(seed);
    for slot in layout.slots() {
        if slot.shape.len() == 2 {
            let bound = 1.0 / (slot.shape[1] as f64).sqrt();
            for v in &mut values[slot.range()] {
                *v = rng.random_range(-bound..=bound);
            }
        }
    }
    ParameterVector::new(values, layout)
}

/// Plain gradient descent step, `params - lr * grad`.
pub fn sgd_step(params: &ParameterVector, grad: &GradientVector, lr: f64) -> Result<ParameterVector> {
    if !(lr.is_finite() && lr > 0.0) {
        return Err(Error::config(format!("learning rate must be positive, got {lr}")));
    }
    if *params.layout != *grad.layout {
        return Err(Error::LayoutMismatch);
    }
    let values = params
        .values
        .iter()
        .zip(&grad.values)
        .map(|(p, g)| p - lr * g)
        .collect();
    Ok(ParameterVector {
        values,
        layout: params.layout.clone(),
    })
}

pub(crate) fn sgd_step_in_place(params: &mut ParameterVector, grad: &GradientVector, lr: f64) {
    debug_assert_eq!(params.values.len(), grad.values.len());
    for (p, g) in params.values.iter_mut().zip(&grad.values) {
        *p -= lr * g;
    }
}
