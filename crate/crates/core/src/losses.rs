//! Heteroscedastic Laplace negative log-likelihood.
//!
//! Per valid pixel `j` the loss is `|d_j - mean_j| / sigma_j + ln sigma_j`,
//! averaged over the valid pixels of the ground truth. The network emits
//! `raw = ln sigma`, so the gradient is taken with respect to `raw`.

use crate::error::{Error, Result};
use crate::raster::{DepthRaster, Raster, SigmaRaster};

/// Loss value and its gradients with respect to the two network heads.
///
/// Gradients are zero at masked-out pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceGrad {
    pub loss: f64,
    pub d_mean: Raster,
    pub d_raw_sigma: Raster,
}

fn check_inputs(mean: &Raster, sigma_dims: (usize, usize), gt: &DepthRaster) -> Result<usize> {
    mean.ensure_same_dims(gt.dims(), "ground truth vs prediction")?;
    mean.ensure_same_dims(sigma_dims, "sigma vs prediction")?;
    match gt.valid_count() {
        0 => Err(Error::Empty("ground truth has no valid pixels".into())),
        n => Ok(n),
    }
}

/// Mean Laplace NLL over the valid pixels of `gt`.
pub fn laplace_nll(mean: &Raster, sigma: &SigmaRaster, gt: &DepthRaster) -> Result<f64> {
    let n_valid = check_inputs(mean, sigma.dims(), gt)?;
    let mut acc = 0.0;
    for j in gt.valid_indices() {
        let s = sigma.values()[j];
        acc += (gt.values()[j] - mean.values()[j]).abs() / s + s.ln();
    }
    Ok(acc / n_valid as f64)
}

/// Loss and analytic gradient for `sigma = exp(raw_sigma)`.
///
/// `d/d mean_j = -sign(d_j - mean_j) / (sigma_j N)` with `sign(0) = 0`,
/// `d/d raw_j = (1 - |d_j - mean_j| / sigma_j) / N`.
pub fn laplace_nll_grad(
    mean: &Raster,
    raw_sigma: &Raster,
    gt: &DepthRaster,
) -> Result<LaplaceGrad> {
    check_inputs(mean, raw_sigma.dims(), gt)?;
    let (loss, d_mean, d_raw) = grad_core(
        mean.values(),
        raw_sigma.values(),
        gt.values(),
        Some(gt.valid()),
    )?;
    let (w, h) = mean.dims();
    Ok(LaplaceGrad {
        loss,
        d_mean: Raster::new(w, h, d_mean)?,
        d_raw_sigma: Raster::new(w, h, d_raw)?,
    })
}

/// [`laplace_nll_grad`] over plain slices with every entry valid and no
/// sign constraint on the targets.
pub fn laplace_nll_grad_values(
    mean: &[f64],
    raw_sigma: &[f64],
    target: &[f64],
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if mean.len() != raw_sigma.len() || mean.len() != target.len() {
        return Err(Error::Shape(format!(
            "mean/raw sigma/target lengths {}/{}/{} differ",
            mean.len(),
            raw_sigma.len(),
            target.len()
        )));
    }
    if mean.is_empty() {
        return Err(Error::Empty("no targets".into()));
    }
    grad_core(mean, raw_sigma, target, None)
}

fn grad_core(
    mean: &[f64],
    raw_sigma: &[f64],
    target: &[f64],
    valid: Option<&[bool]>,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let is_valid = |j: usize| valid.is_none_or(|v| v[j]);
    let n_valid = (0..mean.len()).filter(|&j| is_valid(j)).count();
    let inv_n = 1.0 / n_valid as f64;
    let mut d_mean = vec![0.0; mean.len()];
    let mut d_raw = vec![0.0; mean.len()];
    let mut acc = 0.0;
    for j in (0..mean.len()).filter(|&j| is_valid(j)) {
        let raw = raw_sigma[j];
        let s = raw.exp();
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Domain(format!(
                "sigma = exp({raw}) is not a positive finite number at pixel {j}"
            )));
        }
        let r = target[j] - mean[j];
        let sign = if r > 0.0 {
            1.0
        } else if r < 0.0 {
            -1.0
        } else {
            0.0
        };
        acc += r.abs() / s + raw;
        d_mean[j] = -sign / s * inv_n;
        d_raw[j] = (1.0 - r.abs() / s) * inv_n;
    }
    Ok((acc * inv_n, d_mean, d_raw))
}
