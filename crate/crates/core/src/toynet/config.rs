use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Named dropout placements over the hidden layers.
///
/// `FirstHalf` covers the first `ceil(n/2)` hidden layers and `SecondHalf`
/// the last `ceil(n/2)`, so with an odd count both include the middle one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropoutPlan {
    None,
    FirstHalf,
    SecondHalf,
    All,
    FirstLayer,
    LastLayer,
}

impl DropoutPlan {
    /// Per-hidden-layer flags for a network with `n_hidden` hidden layers.
    pub fn flags(self, n_hidden: usize) -> Vec<bool> {
        let half = n_hidden.div_ceil(2);
        (0..n_hidden)
            .map(|i| match self {
                DropoutPlan::None => false,
                DropoutPlan::All => true,
                DropoutPlan::FirstHalf => i < half,
                DropoutPlan::SecondHalf => i >= n_hidden - half,
                DropoutPlan::FirstLayer => i == 0,
                DropoutPlan::LastLayer => i + 1 == n_hidden,
            })
            .collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            DropoutPlan::None => "none",
            DropoutPlan::FirstHalf => "first_half",
            DropoutPlan::SecondHalf => "second_half",
            DropoutPlan::All => "all",
            DropoutPlan::FirstLayer => "first_layer",
            DropoutPlan::LastLayer => "last_layer",
        }
    }
}

impl fmt::Display for DropoutPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DropoutPlan {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "none" => DropoutPlan::None,
            "first_half" => DropoutPlan::FirstHalf,
            "second_half" => DropoutPlan::SecondHalf,
            "all" => DropoutPlan::All,
            "first_layer" => DropoutPlan::FirstLayer,
            "last_layer" => DropoutPlan::LastLayer,
            other => {
                return Err(Error::Parameter(format!(
                    "unknown dropout preset '{other}' \
                     (expected none, first_half, second_half, all, first_layer, last_layer)"
                )))
            }
        })
    }
}

/// Architecture of the fully connected two-head regressor.
///
/// `layer_sizes` runs input, hidden..., output; the output is always 2
/// wide (mean, log sigma). Hidden layers use ELU, and dropout (if flagged)
/// follows the activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyNetConfig {
    pub layer_sizes: Vec<usize>,
    pub dropout: Vec<bool>,
    /// Probability that an element is zeroed.
    pub dropout_rate: f64,
}

impl ToyNetConfig {
    pub fn new(layer_sizes: Vec<usize>, plan: DropoutPlan, dropout_rate: f64) -> Result<Self> {
        let n_hidden = layer_sizes.len().saturating_sub(2);
        let cfg = Self {
            dropout: plan.flags(n_hidden),
            layer_sizes,
            dropout_rate: if plan == DropoutPlan::None {
                0.0
            } else {
                dropout_rate
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `input -> hidden x depth -> 2`.
    pub fn mlp(
        input: usize,
        hidden: usize,
        depth: usize,
        plan: DropoutPlan,
        rate: f64,
    ) -> Result<Self> {
        let mut sizes = vec![input];
        sizes.extend(std::iter::repeat_n(hidden, depth));
        sizes.push(2);
        Self::new(sizes, plan, rate)
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = &self.layer_sizes;
        if sizes.len() < 3 {
            return Err(Error::Config(format!(
                "need input, at least one hidden layer and output, got sizes {sizes:?}"
            )));
        }
        if sizes.contains(&0) {
            return Err(Error::Config(format!("zero-width layer in {sizes:?}")));
        }
        if *sizes.last().unwrap() != 2 {
            return Err(Error::Config(format!(
                "output width must be 2 (mean, log sigma), got {}",
                sizes.last().unwrap()
            )));
        }
        if self.dropout.len() != self.n_hidden() {
            return Err(Error::Config(format!(
                "{} dropout flags for {} hidden layers",
                self.dropout.len(),
                self.n_hidden()
            )));
        }
        if self.has_dropout() && !(self.dropout_rate > 0.0 && self.dropout_rate < 1.0) {
            return Err(Error::Config(format!(
                "dropout rate must be in (0, 1), got {}",
                self.dropout_rate
            )));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_hidden(&self) -> usize {
        self.layer_sizes.len() - 2
    }

    pub fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn has_dropout(&self) -> bool {
        self.dropout.iter().any(|&f| f)
    }

    /// Same architecture with every dropout flag cleared.
    pub fn without_dropout(&self) -> Self {
        Self {
            layer_sizes: self.layer_sizes.clone(),
            dropout: vec![false; self.n_hidden()],
            dropout_rate: 0.0,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layer_sizes
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }
}
