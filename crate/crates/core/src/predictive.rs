//! Fusion of stochastic forward passes into one Gaussian per pixel.
//!
//! Every sample `m` contributes a mean raster and a standard-deviation
//! raster. The fused prediction keeps the mixture's first two moments and
//! splits the variance into the spread of the sample means (epistemic) and
//! the average predicted noise (aleatoric).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Raster, SigmaRaster};

/// One stochastic forward pass: predicted mean and standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveSample {
    pub mean: Raster,
    pub sigma: SigmaRaster,
}

/// `M >= 1` samples over a common raster shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveSampleSet {
    samples: Vec<PredictiveSample>,
}

impl PredictiveSampleSet {
    pub fn new(samples: Vec<PredictiveSample>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::Empty("a sample set needs at least one sample".into()))?;
        let dims = first.mean.dims();
        for (m, s) in samples.iter().enumerate() {
            if s.mean.dims() != dims || s.sigma.dims() != dims {
                return Err(Error::Shape(format!(
                    "sample {m}: mean {:?} / sigma {:?} do not match {:?}",
                    s.mean.dims(),
                    s.sigma.dims(),
                    dims
                )));
            }
        }
        Ok(Self { samples })
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Raster, SigmaRaster)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(mean, sigma)| PredictiveSample { mean, sigma })
                .collect(),
        )
    }

    pub fn samples(&self) -> &[PredictiveSample] {
        &self.samples
    }

    /// Number of samples `M`.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.samples[0].mean.dims()
    }
}

/// Per-pixel Gaussian with the variance split into its two sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPrediction {
    pub mean: Raster,
    pub var_epistemic: Raster,
    pub var_aleatoric: Raster,
    pub var_total: Raster,
}

impl GaussianPrediction {
    /// Assembles a prediction from stored rasters, checking shapes and signs.
    ///
    /// `var_total` is taken as given; it is not recomputed from the parts.
    pub fn from_parts(
        mean: Raster,
        var_epistemic: Raster,
        var_aleatoric: Raster,
        var_total: Raster,
    ) -> Result<Self> {
        let dims = mean.dims();
        mean.ensure_same_dims(var_epistemic.dims(), "epistemic variance")?;
        mean.ensure_same_dims(var_aleatoric.dims(), "aleatoric variance")?;
        mean.ensure_same_dims(var_total.dims(), "total variance")?;
        if var_epistemic.values().iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::Domain("epistemic variance must be >= 0".into()));
        }
        if var_aleatoric.values().iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Domain("aleatoric variance must be > 0".into()));
        }
        if var_total.values().iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::Domain("total variance must be >= 0".into()));
        }
        debug_assert_eq!(dims, var_total.dims());
        Ok(Self {
            mean,
            var_epistemic,
            var_aleatoric,
            var_total,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.mean.dims()
    }

    /// Total standard deviation per pixel.
    pub fn sigma_total(&self) -> Raster {
        self.var_total.map(f64::sqrt)
    }
}

/// Moment-matches the sample mixture to a single Gaussian per pixel.
///
/// Population statistics (divide by `M`) throughout. The per-pixel
/// reduction order is the sample order, so results are deterministic.
pub fn fuse_samples(set: &PredictiveSampleSet) -> GaussianPrediction {
    let (width, height) = set.dims();
    let n = width * height;
    let m = set.len() as f64;
    let samples = set.samples();

    let mut mean = vec![0.0; n];
    let mut epistemic = vec![0.0; n];
    let mut aleatoric = vec![0.0; n];
    for j in 0..n {
        // shifting by the first sample keeps identical samples exactly
        // spread-free and limits cancellation for large depths
        let pivot = samples[0].mean.values()[j];
        let mut sum = 0.0;
        let mut sum_var = 0.0;
        for s in samples {
            sum += s.mean.values()[j] - pivot;
            let sigma = s.sigma.values()[j];
            sum_var += sigma * sigma;
        }
        let shift = sum / m;
        let spread: f64 = samples
            .iter()
            .map(|s| {
                let d = (s.mean.values()[j] - pivot) - shift;
                d * d
            })
            .sum();
        let mu = pivot + shift;
        mean[j] = mu;
        epistemic[j] = spread / m;
        aleatoric[j] = sum_var / m;
    }
    let total: Vec<f64> = epistemic
        .iter()
        .zip(&aleatoric)
        .map(|(e, a)| e + a)
        .collect();

    let mk = |values| Raster::new(width, height, values).expect("dims checked by sample set");
    GaussianPrediction {
        mean: mk(mean),
        var_epistemic: mk(epistemic),
        var_aleatoric: mk(aleatoric),
        var_total: mk(total),
    }
}
