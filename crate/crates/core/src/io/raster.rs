//! `DUQ1` multi-plane raster files.
//!
//! Layout, all integers little-endian:
//!
//! | offset            | size        | content                          |
//! |-------------------|-------------|----------------------------------|
//! | 0                 | 4           | magic `DUQ1`                     |
//! | 4                 | 4           | width `u32`                      |
//! | 8                 | 4           | height `u32`                     |
//! | 12                | 4           | channel count `c` (`u32`)        |
//! | 16                | c           | one tag byte per plane           |
//! | 16 + c            | 4·w·h·c     | planes, row-major `f32` each     |
//!
//! Tags: depth 0, sigma 1, var 2, mask 3.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::predictive::{GaussianPrediction, PredictiveSampleSet};
use crate::raster::{DepthRaster, Raster, SigmaRaster};

pub const RASTER_MAGIC: &[u8; 4] = b"DUQ1";
const HEADER_LEN: usize = 16;

/// Meaning of one raster plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlaneKind {
    Depth,
    Sigma,
    Var,
    Mask,
}

impl PlaneKind {
    pub fn tag(self) -> u8 {
        match self {
            PlaneKind::Depth => 0,
            PlaneKind::Sigma => 1,
            PlaneKind::Var => 2,
            PlaneKind::Mask => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => PlaneKind::Depth,
            1 => PlaneKind::Sigma,
            2 => PlaneKind::Var,
            3 => PlaneKind::Mask,
            _ => return None,
        })
    }
}

impl fmt::Display for PlaneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlaneKind::Depth => "depth",
            PlaneKind::Sigma => "sigma",
            PlaneKind::Var => "var",
            PlaneKind::Mask => "mask",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub kind: PlaneKind,
    pub values: Vec<f32>,
}

/// Planes of equal size, stored at `f32` precision.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterBundle {
    width: usize,
    height: usize,
    planes: Vec<Plane>,
}

impl RasterBundle {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            planes: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn planes(&self) -> &[Plane] {
        &self.planes
    }

    /// Appends a plane, validating its size and domain.
    pub fn push_f32(&mut self, kind: PlaneKind, values: Vec<f32>) -> Result<()> {
        if values.len() != self.width * self.height {
            return Err(Error::Shape(format!(
                "{kind} plane has {} values for a {}x{} raster",
                values.len(),
                self.width,
                self.height
            )));
        }
        if let Some((i, message)) = check_plane(kind, &values) {
            return Err(Error::Domain(format!("pixel {i}: {message}")));
        }
        self.planes.push(Plane { kind, values });
        Ok(())
    }

    /// Appends a plane, rounding to `f32`.
    pub fn push(&mut self, kind: PlaneKind, raster: &Raster) -> Result<()> {
        raster.ensure_same_dims(self.dims(), "raster bundle plane")?;
        self.push_f32(kind, raster.values().iter().map(|&v| v as f32).collect())
    }

    pub fn push_mask(&mut self, valid: &[bool]) -> Result<()> {
        self.push_f32(
            PlaneKind::Mask,
            valid.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        )
    }

    /// Plane `i` widened to `f64`.
    pub fn raster(&self, i: usize) -> Result<Raster> {
        let plane = self
            .planes
            .get(i)
            .ok_or_else(|| Error::Shape(format!("bundle has no plane {i}")))?;
        Raster::new(
            self.width,
            self.height,
            plane.values.iter().map(|&v| f64::from(v)).collect(),
        )
    }

    /// Indices of the planes of `kind`, in file order.
    pub fn indices_of(&self, kind: PlaneKind) -> Vec<usize> {
        (0..self.planes.len())
            .filter(|&i| self.planes[i].kind == kind)
            .collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.width * self.height;
        let mut out = Vec::with_capacity(HEADER_LEN + self.planes.len() * (1 + 4 * n));
        out.extend_from_slice(RASTER_MAGIC);
        for v in [self.width, self.height, self.planes.len()] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend(self.planes.iter().map(|p| p.kind.tag()));
        for p in &self.planes {
            for v in &p.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::format(
                bytes.len(),
                format!(
                    "truncated header: expected at least {HEADER_LEN} bytes, got {}",
                    bytes.len()
                ),
            ));
        }
        if &bytes[..4] != RASTER_MAGIC {
            return Err(Error::format(
                0,
                format!("bad magic {:?}, expected \"DUQ1\"", &bytes[..4]),
            ));
        }
        let word =
            |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes")) as usize;
        let (width, height, channels) = (word(4), word(8), word(12));
        let n = width
            .checked_mul(height)
            .ok_or_else(|| Error::format(4, "raster dimensions overflow"))?;
        let expected = channels
            .checked_mul(4 * n)
            .and_then(|d| d.checked_add(HEADER_LEN + channels))
            .ok_or_else(|| Error::format(12, "payload size overflows"))?;
        if bytes.len() != expected {
            let what = if bytes.len() < expected {
                "truncated payload"
            } else {
                "trailing bytes"
            };
            return Err(Error::format(
                bytes.len().min(expected),
                format!("{what}: expected {expected} bytes, got {}", bytes.len()),
            ));
        }
        let mut bundle = Self::new(width, height);
        let data_start = HEADER_LEN + channels;
        for c in 0..channels {
            let tag = bytes[HEADER_LEN + c];
            let kind = PlaneKind::from_tag(tag)
                .ok_or_else(|| Error::format(HEADER_LEN + c, format!("unknown plane tag {tag}")))?;
            let start = data_start + 4 * n * c;
            let values: Vec<f32> = bytes[start..start + 4 * n]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
                .collect();
            if let Some((i, message)) = check_plane(kind, &values) {
                return Err(Error::format(start + 4 * i, message));
            }
            bundle.planes.push(Plane { kind, values });
        }
        Ok(bundle)
    }
}

/// First pixel violating the plane's domain.
fn check_plane(kind: PlaneKind, values: &[f32]) -> Option<(usize, String)> {
    match kind {
        PlaneKind::Depth => values
            .iter()
            .position(|v| v.is_nan())
            .map(|i| (i, "NaN in depth plane".to_string())),
        PlaneKind::Mask => values
            .iter()
            .position(|&v| v != 0.0 && v != 1.0)
            .map(|i| (i, format!("mask value {} is not 0 or 1", values[i]))),
        PlaneKind::Sigma | PlaneKind::Var => values
            .iter()
            .position(|&v| !(v >= 0.0) || v.is_infinite())
            .map(|i| {
                (
                    i,
                    format!(
                        "{kind} value {} is not a finite non-negative number",
                        values[i]
                    ),
                )
            }),
    }
}

pub fn read_raster(path: impl AsRef<Path>) -> Result<RasterBundle> {
    RasterBundle::from_bytes(&std::fs::read(path)?)
}

pub fn write_raster(bundle: &RasterBundle, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, bundle.to_bytes())?;
    Ok(())
}

/// Ground truth as a depth plane plus an optional mask plane.
///
/// Without a mask, pixels with positive finite depth are valid.
pub fn depth_to_bundle(gt: &DepthRaster) -> Result<RasterBundle> {
    let mut b = RasterBundle::new(gt.width(), gt.height());
    let depth = Raster::new(
        gt.width(),
        gt.height(),
        gt.values()
            .iter()
            .zip(gt.valid())
            .map(|(&d, &ok)| if ok { d } else { 0.0 })
            .collect(),
    )?;
    b.push(PlaneKind::Depth, &depth)?;
    b.push_mask(gt.valid())?;
    Ok(b)
}

pub fn depth_from_bundle(b: &RasterBundle) -> Result<DepthRaster> {
    let depth = match b.indices_of(PlaneKind::Depth).as_slice() {
        [i] => b.raster(*i)?,
        other => {
            return Err(Error::Config(format!(
                "ground truth needs exactly one depth plane, found {}",
                other.len()
            )))
        }
    };
    match b.indices_of(PlaneKind::Mask).as_slice() {
        [] => Ok(DepthRaster::from_positive(depth)),
        [i] => {
            let valid: Vec<bool> = b.planes()[*i].values.iter().map(|&v| v == 1.0).collect();
            DepthRaster::new(depth, valid)
        }
        other => Err(Error::Config(format!(
            "ground truth has {} mask planes, expected at most one",
            other.len()
        ))),
    }
}

/// Sample set as `M` (depth, sigma) plane pairs.
pub fn samples_to_bundle(set: &PredictiveSampleSet) -> Result<RasterBundle> {
    let (w, h) = set.dims();
    let mut b = RasterBundle::new(w, h);
    for s in set.samples() {
        b.push(PlaneKind::Depth, &s.mean)?;
        b.push(PlaneKind::Sigma, s.sigma.raster())?;
    }
    Ok(b)
}

pub fn samples_from_bundle(b: &RasterBundle) -> Result<PredictiveSampleSet> {
    let planes = b.planes();
    if planes.is_empty() || !planes.len().is_multiple_of(2) {
        return Err(Error::Config(format!(
            "a sample set needs depth/sigma plane pairs, found {} planes",
            planes.len()
        )));
    }
    let mut pairs = Vec::with_capacity(planes.len() / 2);
    for m in 0..planes.len() / 2 {
        let (d, s) = (&planes[2 * m], &planes[2 * m + 1]);
        if d.kind != PlaneKind::Depth || s.kind != PlaneKind::Sigma {
            return Err(Error::Config(format!(
                "sample {m}: expected depth then sigma planes, found {} then {}",
                d.kind, s.kind
            )));
        }
        pairs.push((
            b.raster(2 * m)?,
            SigmaRaster::clamped(b.raster(2 * m + 1)?)?,
        ));
    }
    PredictiveSampleSet::from_pairs(pairs)
}

/// Fused prediction as planes mean, epistemic, aleatoric, total variance.
pub fn prediction_to_bundle(p: &GaussianPrediction) -> Result<RasterBundle> {
    let (w, h) = p.dims();
    let mut b = RasterBundle::new(w, h);
    b.push(PlaneKind::Depth, &p.mean)?;
    b.push(PlaneKind::Var, &p.var_epistemic)?;
    b.push(PlaneKind::Var, &p.var_aleatoric)?;
    b.push(PlaneKind::Var, &p.var_total)?;
    Ok(b)
}

pub fn prediction_from_bundle(b: &RasterBundle) -> Result<GaussianPrediction> {
    let kinds: Vec<PlaneKind> = b.planes().iter().map(|p| p.kind).collect();
    let want = [
        PlaneKind::Depth,
        PlaneKind::Var,
        PlaneKind::Var,
        PlaneKind::Var,
    ];
    if kinds != want {
        return Err(Error::Config(format!(
            "prediction bundle must hold depth, var, var, var planes, found {kinds:?}"
        )));
    }
    // f32 storage can round a tiny aleatoric variance to zero
    let aleatoric = b
        .raster(2)?
        .map(|v| v.max(crate::raster::SIGMA_MIN * crate::raster::SIGMA_MIN));
    GaussianPrediction::from_parts(b.raster(0)?, b.raster(1)?, aleatoric, b.raster(3)?)
}
