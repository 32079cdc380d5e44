use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::config::ToyNetConfig;
use crate::error::{Error, Result};

/// Variance of the Gaussian used to initialize every weight and bias.
pub const INIT_VARIANCE: f64 = 1e-2;

/// One affine layer, `out = weights * in + bias` with `weights` row-major
/// `(out, in)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub inputs: usize,
    pub outputs: usize,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            inputs,
            outputs,
        }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.bias.iter().enumerate().map(|(o, &b)| {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            b + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>()
        }));
    }
}

/// Network weights. Also used to hold gradients, which share the shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyNetParams {
    pub layers: Vec<Layer>,
}

impl ToyNetParams {
    pub fn zeros(config: &ToyNetConfig) -> Self {
        Self {
            layers: config
                .layer_sizes
                .windows(2)
                .map(|w| Layer::zeros(w[0], w[1]))
                .collect(),
        }
    }

    /// All parameters, layer by layer, weights (row-major) before bias.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.len());
        for l in &self.layers {
            flat.extend_from_slice(&l.weights);
            flat.extend_from_slice(&l.bias);
        }
        flat
    }

    pub fn from_flat(config: &ToyNetConfig, flat: &[f64]) -> Result<Self> {
        if flat.len() != config.param_count() {
            return Err(Error::Shape(format!(
                "configuration has {} parameters, got {}",
                config.param_count(),
                flat.len()
            )));
        }
        let mut params = Self::zeros(config);
        let mut it = flat.iter().copied();
        for l in &mut params.layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w = it.next().expect("length checked");
            }
        }
        Ok(params)
    }

    pub fn len(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub(crate) fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    pub fn matches(&self, config: &ToyNetConfig) -> bool {
        self.layers.len() == config.n_layers()
            && self
                .layers
                .iter()
                .zip(config.layer_sizes.windows(2))
                .all(|(l, w)| {
                    l.inputs == w[0]
                        && l.outputs == w[1]
                        && l.weights.len() == w[0] * w[1]
                        && l.bias.len() == w[1]
                })
    }
}

/// Draws every weight and bias iid from `N(0, INIT_VARIANCE)`.
pub fn init_params(config: &ToyNetConfig, seed: u64) -> ToyNetParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, INIT_VARIANCE.sqrt()).expect("finite std");
    let mut params = ToyNetParams::zeros(config);
    for w in params.values_mut() {
        *w = normal.sample(&mut rng);
    }
    params
}

/// Keep-masks (1 = keep, 0 = drop) for the flagged hidden layers.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks(pub Vec<Option<Vec<f64>>>);

impl DropoutMasks {
    pub fn sample<R: Rng + ?Sized>(config: &ToyNetConfig, rng: &mut R) -> Self {
        let keep = Bernoulli::new(1.0 - config.dropout_rate).expect("rate validated");
        Self(
            config
                .dropout
                .iter()
                .zip(&config.layer_sizes[1..])
                .map(|(&flag, &width)| {
                    flag.then(|| {
                        (0..width)
                            .map(|_| if keep.sample(rng) { 1.0 } else { 0.0 })
                            .collect()
                    })
                })
                .collect(),
        )
    }

    /// All-keep masks on the flagged layers.
    pub fn ones(config: &ToyNetConfig) -> Self {
        Self(
            config
                .dropout
                .iter()
                .zip(&config.layer_sizes[1..])
                .map(|(&flag, &width)| flag.then(|| vec![1.0; width]))
                .collect(),
        )
    }

    fn check(&self, config: &ToyNetConfig) -> Result<()> {
        if self.0.len() != config.n_hidden() {
            return Err(Error::Shape(format!(
                "{} masks for {} hidden layers",
                self.0.len(),
                config.n_hidden()
            )));
        }
        for (i, (mask, &flag)) in self.0.iter().zip(&config.dropout).enumerate() {
            match mask {
                Some(m) if !flag => {
                    return Err(Error::Shape(format!(
                        "mask given for hidden layer {i} which has no dropout (len {})",
                        m.len()
                    )))
                }
                Some(m) if m.len() != config.layer_sizes[i + 1] => {
                    return Err(Error::Shape(format!(
                        "mask for hidden layer {i} has {} entries, layer is {} wide",
                        m.len(),
                        config.layer_sizes[i + 1]
                    )))
                }
                None if flag => {
                    return Err(Error::Shape(format!(
                        "hidden layer {i} has dropout but no mask"
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

fn elu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        x.exp()
    }
}

/// Intermediate values kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input of each layer (after activation and dropout for hidden ones).
    activations: Vec<Vec<f64>>,
    /// Pre-activation of each hidden layer.
    pre: Vec<Vec<f64>>,
    /// Dropout multiplier per hidden unit (`mask / (1 - p)`), if any.
    scales: Vec<Option<Vec<f64>>>,
    pub mean: f64,
    pub raw_sigma: f64,
}

fn check_shapes(params: &ToyNetParams, config: &ToyNetConfig, input: &[f64]) -> Result<()> {
    if !params.matches(config) {
        return Err(Error::Shape(
            "parameters do not match the configuration".into(),
        ));
    }
    if input.len() != config.input_dim() {
        return Err(Error::Shape(format!(
            "input has {} features, network expects {}",
            input.len(),
            config.input_dim()
        )));
    }
    Ok(())
}

/// Forward pass keeping everything needed by [`backward`].
///
/// `masks` is required exactly when some layer is flagged for dropout and
/// the caller wants it active; `None` runs the deterministic network.
pub fn forward_cached(
    params: &ToyNetParams,
    config: &ToyNetConfig,
    input: &[f64],
    masks: Option<&DropoutMasks>,
) -> Result<ForwardCache> {
    check_shapes(params, config, input)?;
    if let Some(m) = masks {
        m.check(config)?;
    }
    let keep_scale = 1.0 / (1.0 - config.dropout_rate);
    let n_hidden = config.n_hidden();

    let mut activations = Vec::with_capacity(config.n_layers());
    let mut pre = Vec::with_capacity(n_hidden);
    let mut scales = Vec::with_capacity(n_hidden);
    let mut x = input.to_vec();
    let mut z = Vec::new();
    for (i, layer) in params.layers.iter().enumerate() {
        layer.apply(&x, &mut z);
        activations.push(std::mem::take(&mut x));
        if i == n_hidden {
            break;
        }
        let scale = masks
            .and_then(|m| m.0[i].as_ref())
            .map(|mask| mask.iter().map(|k| k * keep_scale).collect::<Vec<f64>>());
        x = match &scale {
            Some(s) => z.iter().zip(s).map(|(&v, k)| elu(v) * k).collect(),
            None => z.iter().map(|&v| elu(v)).collect(),
        };
        pre.push(z.clone());
        scales.push(scale);
    }
    Ok(ForwardCache {
        activations,
        pre,
        scales,
        mean: z[0],
        raw_sigma: z[1],
    })
}

/// `(mean, raw_sigma)` for one feature vector; `sigma = exp(raw_sigma)`.
pub fn forward(
    params: &ToyNetParams,
    config: &ToyNetConfig,
    input: &[f64],
    masks: Option<&DropoutMasks>,
) -> Result<(f64, f64)> {
    let c = forward_cached(params, config, input, masks)?;
    Ok((c.mean, c.raw_sigma))
}

/// Accumulates parameter gradients into `grads` given the loss gradient
/// with respect to the two outputs.
pub fn backward(
    params: &ToyNetParams,
    cache: &ForwardCache,
    d_mean: f64,
    d_raw_sigma: f64,
    grads: &mut ToyNetParams,
) {
    let mut delta = vec![d_mean, d_raw_sigma];
    for i in (0..params.layers.len()).rev() {
        let layer = &params.layers[i];
        let input = &cache.activations[i];
        let g = &mut grads.layers[i];
        for (o, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            g.bias[o] += d;
            let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
            for (gw, &xi) in row.iter_mut().zip(input) {
                *gw += d * xi;
            }
        }
        if i == 0 {
            break;
        }
        // propagate to the previous hidden layer's pre-activation
        let h = i - 1;
        let mut next = vec![0.0; layer.inputs];
        for (o, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
            for (n, &w) in next.iter_mut().zip(row) {
                *n += d * w;
            }
        }
        for (k, n) in next.iter_mut().enumerate() {
            let s = cache.scales[h].as_ref().map_or(1.0, |s| s[k]);
            *n *= s * elu_grad(cache.pre[h][k]);
        }
        delta = next;
    }
}
