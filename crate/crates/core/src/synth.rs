//! Deterministic synthetic datasets.
//!
//! - `regress1d`: `y = 3 + sin x + Laplace(b(x))` on a bounded input range,
//!   with heteroscedastic, homoscedastic or zero noise.
//! - `depthscene`: rendered rooms with a sampled prediction set and a
//!   ground truth drawn from the fused Gaussian, so the prediction is
//!   calibrated by construction.
//! - `pairset`: see [`crate::geometry::scene`].

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::scene::{render_depth, Scene};
use crate::geometry::{CameraIntrinsics, RigidTransform};
use crate::predictive::{fuse_samples, GaussianPrediction, PredictiveSampleSet};
use crate::raster::{DepthRaster, Raster, SigmaRaster};

/// Shape of the observation noise scale `b(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// `b(x) = s (0.5 + |x|)`
    #[default]
    Hetero,
    /// `b(x) = s`
    Homo,
    /// Noise-free targets.
    Zero,
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hetero" => Ok(Self::Hetero),
            "homo" => Ok(Self::Homo),
            "zero" | "none" => Ok(Self::Zero),
            other => Err(Error::Parameter(format!(
                "unknown noise kind '{other}', expected hetero, homo or zero"
            ))),
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Hetero => "hetero",
            Self::Homo => "homo",
            Self::Zero => "zero",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regress1dConfig {
    pub noise: NoiseKind,
    /// `s` in the noise scale.
    pub noise_scale: f64,
    /// Inputs are drawn uniformly from `[x_min, x_max)`.
    pub x_min: f64,
    pub x_max: f64,
}

impl Default for Regress1dConfig {
    fn default() -> Self {
        Self {
            noise: NoiseKind::Hetero,
            noise_scale: 0.1,
            x_min: -2.0,
            x_max: 2.0,
        }
    }
}

impl Regress1dConfig {
    pub fn mean(&self, x: f64) -> f64 {
        3.0 + x.sin()
    }

    /// Laplace scale of the observation noise at `x`.
    pub fn noise_b(&self, x: f64) -> f64 {
        match self.noise {
            NoiseKind::Hetero => self.noise_scale * (0.5 + x.abs()),
            NoiseKind::Homo => self.noise_scale,
            NoiseKind::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regress1d {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// True noise scale at each input.
    pub b: Vec<f64>,
}

pub fn regress1d<R: Rng + ?Sized>(
    cfg: &Regress1dConfig,
    n: usize,
    rng: &mut R,
) -> Result<Regress1d> {
    if !(cfg.x_min < cfg.x_max) || !(cfg.noise_scale >= 0.0) {
        return Err(Error::Parameter(format!(
            "need x_min < x_max and noise_scale >= 0, got {cfg:?}"
        )));
    }
    let mut out = Regress1d {
        x: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        b: Vec::with_capacity(n),
    };
    for _ in 0..n {
        let x = rng.random_range(cfg.x_min..cfg.x_max);
        let b = cfg.noise_b(x);
        out.y.push(cfg.mean(x) + b * laplace(rng));
        out.x.push(x);
        out.b.push(b);
    }
    Ok(out)
}

/// Standard Laplace draw (scale 1).
fn laplace<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let e: f64 = Exp1.sample(rng);
    if rng.random_bool(0.5) {
        e
    } else {
        -e
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthSceneConfig {
    pub width: usize,
    pub height: usize,
    pub intrinsics: CameraIntrinsics,
    /// Stochastic passes per image.
    pub samples: usize,
    /// Aleatoric sigma as a fraction of depth, before jitter.
    pub aleatoric_relative: f64,
    /// Spread of the sample means as a fraction of depth, before jitter.
    pub epistemic_relative: f64,
    /// Lognormal jitter applied to both scales.
    pub jitter: f64,
}

impl Default for DepthSceneConfig {
    fn default() -> Self {
        Self {
            width: 80,
            height: 60,
            intrinsics: CameraIntrinsics {
                fx: 70.0,
                fy: 70.0,
                cx: 39.5,
                cy: 29.5,
            },
            samples: 8,
            aleatoric_relative: 0.02,
            epistemic_relative: 0.02,
            jitter: 0.5,
        }
    }
}

/// One image: the samples, their fusion, and a ground truth consistent
/// with the fused Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthScene {
    pub samples: PredictiveSampleSet,
    pub prediction: GaussianPrediction,
    pub ground_truth: DepthRaster,
}

pub fn depthscene<R: Rng + ?Sized>(cfg: &DepthSceneConfig, rng: &mut R) -> Result<DepthScene> {
    if cfg.samples == 0 {
        return Err(Error::Parameter(
            "depthscene needs at least one sample".into(),
        ));
    }
    let scene = Scene::random_room(rng);
    let rendered = render_depth(
        &scene,
        &RigidTransform::identity(),
        &cfg.intrinsics,
        cfg.width,
        cfg.height,
    )?;
    // rays that miss get a far-wall depth so every pixel has a prediction
    let center: Vec<f64> = rendered
        .values()
        .iter()
        .zip(rendered.valid())
        .map(|(&d, &ok)| if ok { d } else { 7.0 })
        .collect();
    let jitter = |rng: &mut R| (cfg.jitter * rng.sample::<f64, _>(StandardNormal)).exp();
    let n = center.len();
    let aleatoric: Vec<f64> = center
        .iter()
        .map(|&d| cfg.aleatoric_relative * d * jitter(rng))
        .collect();
    let spread: Vec<f64> = center
        .iter()
        .map(|&d| cfg.epistemic_relative * d * jitter(rng))
        .collect();
    let mut pairs = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        let mean: Vec<f64> = (0..n)
            .map(|j| center[j] + spread[j] * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let sigma: Vec<f64> = aleatoric
            .iter()
            .map(|&s| s * (0.1 * rng.sample::<f64, _>(StandardNormal)).exp())
            .collect();
        pairs.push((
            Raster::new(cfg.width, cfg.height, mean)?,
            SigmaRaster::clamped(Raster::new(cfg.width, cfg.height, sigma)?)?,
        ));
    }
    let samples = PredictiveSampleSet::from_pairs(pairs)?;
    let prediction = fuse_samples(&samples);
    let truth: Vec<f64> = prediction
        .mean
        .values()
        .iter()
        .zip(prediction.var_total.values())
        .map(|(&m, &v)| m + v.sqrt() * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let ground_truth = DepthRaster::from_positive(Raster::new(cfg.width, cfg.height, truth)?);
    Ok(DepthScene {
        samples,
        prediction,
        ground_truth,
    })
}
