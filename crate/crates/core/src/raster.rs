//! Per-pixel rasters.
//!
//! All rasters are row-major, `values[v * width + u]` for column `u` and
//! row `v`, and hold `f64` regardless of how they are stored on disk.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound applied to predicted standard deviations, in meters.
pub const SIGMA_MIN: f64 = 1e-6;

/// A dense grid of scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Raster {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape(format!(
                "raster dimensions must be positive, got {width}x{height}"
            )));
        }
        if values.len() != width * height {
            return Err(Error::Shape(format!(
                "{width}x{height} raster needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// A `len x 1` raster, used for feature-vector predictions.
    pub fn row(values: Vec<f64>) -> Result<Self> {
        let width = values.len();
        Self::new(width, 1, values)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.values[v * self.width + u]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }

    pub(crate) fn ensure_same_dims(&self, other_dims: (usize, usize), what: &str) -> Result<()> {
        if self.dims() != other_dims {
            return Err(Error::Shape(format!(
                "{what}: expected {}x{}, got {}x{}",
                self.width, self.height, other_dims.0, other_dims.1
            )));
        }
        Ok(())
    }
}

/// Ground-truth (or predicted) depth with a validity mask.
///
/// Depth is strictly positive wherever the mask is set; masked-out pixels
/// may hold anything finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthRaster {
    depth: Raster,
    valid: Vec<bool>,
}

impl DepthRaster {
    pub fn new(depth: Raster, valid: Vec<bool>) -> Result<Self> {
        if valid.len() != depth.len() {
            return Err(Error::Shape(format!(
                "mask has {} entries for a {}-pixel raster",
                valid.len(),
                depth.len()
            )));
        }
        for (j, (&z, &ok)) in depth.values().iter().zip(&valid).enumerate() {
            if ok && !(z > 0.0 && z.is_finite()) {
                return Err(Error::Domain(format!(
                    "valid pixel {j} has nonpositive or non-finite depth {z}"
                )));
            }
        }
        Ok(Self { depth, valid })
    }

    /// Every pixel valid.
    pub fn dense(depth: Raster) -> Result<Self> {
        let valid = vec![true; depth.len()];
        Self::new(depth, valid)
    }

    /// Pixels with positive finite depth are valid, everything else is masked.
    pub fn from_positive(depth: Raster) -> Self {
        let valid = depth
            .values()
            .iter()
            .map(|&z| z > 0.0 && z.is_finite())
            .collect();
        Self { depth, valid }
    }

    pub fn depth(&self) -> &Raster {
        &self.depth
    }

    pub fn values(&self) -> &[f64] {
        self.depth.values()
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn dims(&self) -> (usize, usize) {
        self.depth.dims()
    }

    pub fn width(&self) -> usize {
        self.depth.width()
    }

    pub fn height(&self) -> usize {
        self.depth.height()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&ok| ok).count()
    }

    /// Indices of valid pixels in ascending order.
    pub fn valid_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.valid
            .iter()
            .enumerate()
            .filter_map(|(j, &ok)| ok.then_some(j))
    }
}

/// Per-pixel standard deviation, strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaRaster(Raster);

impl SigmaRaster {
    /// Rejects any nonpositive or non-finite value.
    pub fn new(sigma: Raster) -> Result<Self> {
        if let Some((j, &s)) = sigma
            .values()
            .iter()
            .enumerate()
            .find(|(_, &s)| !(s > 0.0 && s.is_finite()))
        {
            return Err(Error::Domain(format!(
                "sigma must be positive and finite, pixel {j} is {s}"
            )));
        }
        Ok(Self(sigma))
    }

    /// Raises every value to at least [`SIGMA_MIN`]. NaN is still rejected.
    pub fn clamped(sigma: Raster) -> Result<Self> {
        if sigma.values().iter().any(|s| s.is_nan()) {
            return Err(Error::Domain("sigma contains NaN".into()));
        }
        Self::new(sigma.map(|s| s.max(SIGMA_MIN)))
    }

    /// `sigma = exp(raw)`, the network's positivity parameterization.
    pub fn from_raw(raw: &Raster) -> Result<Self> {
        Self::clamped(raw.map(f64::exp))
    }

    pub fn raster(&self) -> &Raster {
        &self.0
    }

    pub fn values(&self) -> &[f64] {
        self.0.values()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }

    pub fn into_raster(self) -> Raster {
        self.0
    }
}
