use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::params::Layout;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    /// Softmax head over `output_width` classes.
    Classifier,
    /// Linear head reconstructing the input.
    Autoencoder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Mish,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Mish => z * softplus(z).tanh(),
        }
    }

    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Mish => {
                let t = softplus(z).tanh();
                let sig = 1.0 / (1.0 + (-z).exp());
                t + z * sig * (1.0 - t * t)
            }
        }
    }
}

#[inline]
fn softplus(z: f64) -> f64 {
    // log(1 + e^z) without overflow for large |z|
    if z > 30.0 {
        z
    } else if z < -30.0 {
        z.exp()
    } else {
        z.exp().ln_1p()
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Mish => "mish",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "mish" => Ok(Activation::Mish),
            other => Err(Error::config(format!("unknown activation '{other}'"))),
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Architecture::Classifier => "classifier",
            Architecture::Autoencoder => "autoencoder",
        })
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "classifier" => Ok(Architecture::Classifier),
            "autoencoder" => Ok(Architecture::Autoencoder),
            other => Err(Error::config(format!("unknown model kind '{other}'"))),
        }
    }
}

/// Architecture of a fully connected network.
///
/// `widths` lists every layer width from input to output; hidden layers use
/// `activation` followed by optional inverted dropout, the last layer is
/// linear (logits for a classifier, reconstruction for an autoencoder).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub architecture: Architecture,
    pub widths: Vec<usize>,
    pub activation: Activation,
    pub dropout: f64,
    /// Standardize every input row (zero mean, unit variance) before the first layer.
    pub instance_norm: bool,
}

impl ModelSpec {
    pub fn classifier(input: usize, hidden: &[usize], classes: usize) -> Result<Self> {
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(input);
        widths.extend_from_slice(hidden);
        widths.push(classes);
        let spec = Self {
            architecture: Architecture::Classifier,
            widths,
            activation: Activation::Relu,
            dropout: 0.0,
            instance_norm: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn autoencoder(input: usize, hidden: &[usize]) -> Result<Self> {
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(input);
        widths.extend_from_slice(hidden);
        widths.push(input);
        let spec = Self {
            architecture: Architecture::Autoencoder,
            widths,
            activation: Activation::Relu,
            dropout: 0.0,
            instance_norm: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn with_dropout(mut self, dropout: f64) -> Result<Self> {
        self.dropout = dropout;
        self.validate()?;
        Ok(self)
    }

    pub fn with_instance_norm(mut self, on: bool) -> Self {
        self.instance_norm = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 3 {
            return Err(Error::config("model needs at least one hidden layer"));
        }
        if self.widths.contains(&0) {
            return Err(Error::config("layer widths must be positive"));
        }
        match self.architecture {
            Architecture::Classifier if self.output_width() < 2 => {
                return Err(Error::config("classifier needs at least two output classes"));
            }
            Architecture::Autoencoder if self.output_width() != self.input_width() => {
                return Err(Error::config("autoencoder output width must equal input width"));
            }
            _ => {}
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    #[inline]
    pub fn output_width(&self) -> usize {
        self.widths[self.widths.len() - 1]
    }

    /// Number of affine layers.
    #[inline]
    pub fn depth(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn num_params(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn layout(&self) -> Arc<Layout> {
        Arc::new(Layout::for_widths(&self.widths))
    }
}
