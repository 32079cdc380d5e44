use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ToyNetConfig;
use super::network::{backward, forward_cached, init_params, DropoutMasks, ToyNetParams};
use crate::error::{Error, Result};
use crate::losses::laplace_nll_grad_values;

/// Supervised regression pairs, one feature vector per target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::Shape(format!(
                "{} inputs for {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        if let Some(first) = inputs.first() {
            if inputs.iter().any(|x| x.len() != first.len()) {
                return Err(Error::Shape("inputs have differing feature counts".into()));
            }
        }
        Ok(Self { inputs, targets })
    }

    /// Scalar inputs.
    pub fn from_xy(xs: &[f64], ys: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| vec![x]).collect(), ys.to_vec())
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 100,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMetadata {
    pub settings: TrainSettings,
    pub seed: u64,
    pub steps: usize,
    /// Mean batch loss per epoch.
    pub epoch_loss: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub params: ToyNetParams,
    pub metadata: TrainMetadata,
}

/// Mean Laplace NLL of a batch and its gradient with respect to every
/// parameter, for fixed dropout masks (one entry per example, `None` for
/// the deterministic network).
pub fn batch_loss_and_grad(
    params: &ToyNetParams,
    config: &ToyNetConfig,
    inputs: &[&[f64]],
    targets: &[f64],
    masks: &[Option<DropoutMasks>],
) -> Result<(f64, ToyNetParams)> {
    if inputs.len() != targets.len() || masks.len() != inputs.len() {
        return Err(Error::Shape(
            "batch inputs, targets and masks differ in length".into(),
        ));
    }
    let caches = inputs
        .iter()
        .zip(masks)
        .map(|(x, m)| forward_cached(params, config, x, m.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let means: Vec<f64> = caches.iter().map(|c| c.mean).collect();
    let raws: Vec<f64> = caches.iter().map(|c| c.raw_sigma).collect();
    let (loss, d_mean, d_raw) = laplace_nll_grad_values(&means, &raws, targets)?;
    let mut grads = ToyNetParams::zeros(config);
    for ((cache, dm), dr) in caches.iter().zip(&d_mean).zip(&d_raw) {
        backward(params, cache, *dm, *dr, &mut grads);
    }
    Ok((loss, grads))
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut ToyNetParams, grads: &ToyNetParams, s: &TrainSettings) {
        self.t += 1;
        let bc1 = 1.0 - s.beta1.powi(self.t);
        let bc2 = 1.0 - s.beta2.powi(self.t);
        for (((p, g), m), v) in params
            .values_mut()
            .zip(grads.values())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = s.beta1 * *m + (1.0 - s.beta1) * g;
            *v = s.beta2 * *v + (1.0 - s.beta2) * g * g;
            *p -= s.learning_rate * (*m / bc1) / ((*v / bc2).sqrt() + s.epsilon);
        }
    }
}

/// Mini-batch Adam on the Laplace NLL.
///
/// Initialization uses `seed`; shuffling and dropout masks use a separate
/// stream of the same seed. Fresh masks are drawn per example per step on
/// the flagged layers.
pub fn train(
    config: &ToyNetConfig,
    data: &Dataset,
    settings: &TrainSettings,
    seed: u64,
) -> Result<TrainedModel> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training set is empty".into()));
    }
    if data.inputs[0].len() != config.input_dim() {
        return Err(Error::Shape(format!(
            "dataset has {} features, network expects {}",
            data.inputs[0].len(),
            config.input_dim()
        )));
    }
    if settings.batch_size == 0 || !(settings.learning_rate > 0.0) {
        return Err(Error::Parameter(
            "batch size and learning rate must be positive".into(),
        ));
    }

    let mut params = init_params(config, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut adam = Adam::new(params.len());
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_loss = Vec::with_capacity(settings.epochs);
    let mut step = 0;

    for _ in 0..settings.epochs {
        order.shuffle(&mut rng);
        let mut acc = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(settings.batch_size) {
            let inputs: Vec<&[f64]> = chunk.iter().map(|&i| data.inputs[i].as_slice()).collect();
            let targets: Vec<f64> = chunk.iter().map(|&i| data.targets[i]).collect();
            let masks: Vec<Option<DropoutMasks>> = chunk
                .iter()
                .map(|_| {
                    config
                        .has_dropout()
                        .then(|| DropoutMasks::sample(config, &mut rng))
                })
                .collect();
            let (loss, grads) =
                match batch_loss_and_grad(&params, config, &inputs, &targets, &masks) {
                    Ok(r) => r,
                    Err(Error::Domain(_)) => {
                        return Err(Error::TrainingFailure {
                            step,
                            loss: f64::INFINITY,
                        })
                    }
                    Err(e) => return Err(e),
                };
            if !loss.is_finite() || grads.values().any(|g| !g.is_finite()) {
                return Err(Error::TrainingFailure { step, loss });
            }
            adam.step(&mut params, &grads, settings);
            acc += loss;
            batches += 1;
            step += 1;
        }
        epoch_loss.push(acc / batches as f64);
    }

    Ok(TrainedModel {
        params,
        metadata: TrainMetadata {
            settings: settings.clone(),
            seed,
            steps: step,
            epoch_loss,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toynet::config::DropoutPlan;

    fn line_data(n: usize) -> Dataset {
        let xs: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 * x + 1.0).collect();
        Dataset::from_xy(&xs, &ys).unwrap()
    }

    #[test]
    fn deterministic_given_seed() {
        let c = ToyNetConfig::mlp(1, 8, 1, DropoutPlan::All, 0.3).unwrap();
        let s = TrainSettings {
            epochs: 3,
            ..Default::default()
        };
        let a = train(&c, &line_data(100), &s, 4).unwrap();
        let b = train(&c, &line_data(100), &s, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.metadata.steps, 3 * 2);
    }

    #[test]
    fn loss_goes_down() {
        let c = ToyNetConfig::mlp(1, 16, 2, DropoutPlan::None, 0.0).unwrap();
        let s = TrainSettings {
            epochs: 60,
            learning_rate: 5e-3,
            batch_size: 32,
            ..Default::default()
        };
        let m = train(&c, &line_data(256), &s, 1).unwrap();
        let l = &m.metadata.epoch_loss;
        assert!(l[l.len() - 1] < l[0] - 1.0, "{:?}", l);
    }

    #[test]
    fn divergence_is_reported() {
        let c = ToyNetConfig::mlp(1, 8, 1, DropoutPlan::None, 0.0).unwrap();
        let s = TrainSettings {
            epochs: 50,
            learning_rate: 1e6,
            ..Default::default()
        };
        let data = Dataset::from_xy(&[1.0, 2.0, 3.0], &[1e3, -1e3, 1e3]).unwrap();
        match train(&c, &data, &s, 0) {
            Err(Error::TrainingFailure { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn rejects_empty_and_mismatched() {
        let c = ToyNetConfig::mlp(2, 4, 1, DropoutPlan::None, 0.0).unwrap();
        let s = TrainSettings::default();
        assert!(matches!(
            train(&c, &Dataset::new(vec![], vec![]).unwrap(), &s, 0),
            Err(Error::Empty(_))
        ));
        assert!(matches!(
            train(&c, &line_data(4), &s, 0),
            Err(Error::Shape(_))
        ));
    }
}
