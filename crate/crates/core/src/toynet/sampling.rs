use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ToyNetConfig;
use super::network::{forward, DropoutMasks, ToyNetParams};
use super::train::{train, Dataset, TrainSettings};
use crate::error::{Error, Result};
use crate::predictive::{PredictiveSample, PredictiveSampleSet};
use crate::raster::{Raster, SigmaRaster};

/// Independently trained copies of one dropout-free architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub config: ToyNetConfig,
    pub members: Vec<ToyNetParams>,
    pub seeds: Vec<u64>,
}

impl EnsembleModel {
    pub fn new(config: ToyNetConfig, members: Vec<ToyNetParams>, seeds: Vec<u64>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Empty("an ensemble needs at least one member".into()));
        }
        if config.has_dropout() {
            return Err(Error::Config(
                "ensemble members must not use dropout".into(),
            ));
        }
        if seeds.len() != members.len() {
            return Err(Error::Shape(format!(
                "{} seeds for {} members",
                seeds.len(),
                members.len()
            )));
        }
        if let Some(i) = members.iter().position(|p| !p.matches(&config)) {
            return Err(Error::Shape(format!(
                "member {i} does not match the configuration"
            )));
        }
        Ok(Self {
            config,
            members,
            seeds,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Trains one member per seed, in parallel. Dropout flags in `config`
/// are cleared.
pub fn train_ensemble(
    config: &ToyNetConfig,
    data: &Dataset,
    settings: &TrainSettings,
    seeds: &[u64],
) -> Result<EnsembleModel> {
    let config = config.without_dropout();
    let members = seeds
        .par_iter()
        .map(|&s| train(&config, data, settings, s).map(|m| m.params))
        .collect::<Result<Vec<_>>>()?;
    EnsembleModel::new(config, members, seeds.to_vec())
}

fn sample_from(means: Vec<f64>, raws: Vec<f64>) -> Result<PredictiveSample> {
    let raw = Raster::row(raws)?;
    Ok(PredictiveSample {
        mean: Raster::row(means)?,
        sigma: SigmaRaster::from_raw(&raw)?,
    })
}

/// `m` stochastic passes over `inputs` with fresh dropout masks per input
/// per pass. Each sample is a `len(inputs) x 1` raster.
pub fn mc_dropout_sample(
    params: &ToyNetParams,
    config: &ToyNetConfig,
    inputs: &[Vec<f64>],
    m: usize,
    seed: u64,
) -> Result<PredictiveSampleSet> {
    if !config.has_dropout() {
        return Err(Error::Config(
            "MC dropout sampling needs at least one dropout layer".into(),
        ));
    }
    if m == 0 {
        return Err(Error::Parameter("sample count must be at least 1".into()));
    }
    if inputs.is_empty() {
        return Err(Error::Empty("no inputs to predict".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..m)
        .map(|_| {
            let (means, raws): (Vec<f64>, Vec<f64>) = inputs
                .iter()
                .map(|x| {
                    let masks = DropoutMasks::sample(config, &mut rng);
                    forward(params, config, x, Some(&masks))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .unzip();
            sample_from(means, raws)
        })
        .collect::<Result<Vec<_>>>()?;
    PredictiveSampleSet::new(samples)
}

/// One deterministic pass per member.
pub fn ensemble_sample(
    ensemble: &EnsembleModel,
    inputs: &[Vec<f64>],
) -> Result<PredictiveSampleSet> {
    if inputs.is_empty() {
        return Err(Error::Empty("no inputs to predict".into()));
    }
    let samples = ensemble
        .members
        .iter()
        .map(|p| {
            let (means, raws): (Vec<f64>, Vec<f64>) = inputs
                .iter()
                .map(|x| forward(p, &ensemble.config, x, None))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .unzip();
            sample_from(means, raws)
        })
        .collect::<Result<Vec<_>>>()?;
    PredictiveSampleSet::new(samples)
}
