//! Sparsification curves and AUSE in terms of RMSE.
//!
//! Pixels are removed in order of decreasing uncertainty, 1% at a time,
//! and the RMSE of what remains is compared with the curve obtained by
//! removing pixels in order of decreasing true error.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{DepthRaster, Raster};

/// Removal fractions `k / STEPS` for `k = 0..STEPS`.
pub const SPARSIFICATION_STEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsificationResult {
    pub fractions: Vec<f64>,
    /// Retained RMSE, normalized by the full-set RMSE, removing by uncertainty.
    pub curve_by_uncertainty: Vec<f64>,
    /// Same, removing by true absolute error.
    pub curve_oracle: Vec<f64>,
    pub error_curve: Vec<f64>,
    pub ause: f64,
}

impl SparsificationResult {
    /// Rebuilds the derived fields from the two curves.
    pub fn from_curves(curve_by_uncertainty: Vec<f64>, curve_oracle: Vec<f64>) -> Self {
        let error_curve: Vec<f64> = curve_by_uncertainty
            .iter()
            .zip(&curve_oracle)
            .map(|(u, o)| u - o)
            .collect();
        let ause = error_curve.iter().sum::<f64>() / error_curve.len() as f64;
        Self {
            fractions: sparsification_fractions(),
            curve_by_uncertainty,
            curve_oracle,
            error_curve,
            ause,
        }
    }
}

pub fn sparsification_fractions() -> Vec<f64> {
    (0..SPARSIFICATION_STEPS)
        .map(|k| k as f64 / SPARSIFICATION_STEPS as f64)
        .collect()
}

/// Descending by key, ties by ascending position.
fn removal_order(keys: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| {
        keys[b]
            .partial_cmp(&keys[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Normalized retained-RMSE curve for one removal order.
fn retained_rmse_curve(order: &[usize], sq_err: &[f64]) -> Vec<f64> {
    let n = order.len();
    // suffix[r] = sum of squared errors that survive removing the first r
    let mut suffix = vec![0.0; n + 1];
    for r in (0..n).rev() {
        suffix[r] = suffix[r + 1] + sq_err[order[r]];
    }
    let full = (suffix[0] / n as f64).sqrt();
    (0..SPARSIFICATION_STEPS)
        .map(|k| {
            let removed = k * n / SPARSIFICATION_STEPS;
            let kept = n - removed;
            (suffix[removed] / kept as f64).sqrt() / full
        })
        .collect()
}

/// Sparsification of `|gt - pred_mean|` driven by `uncertainty`.
///
/// Requires at least 100 valid pixels and a nonzero full-set RMSE.
pub fn ause_rmse(
    uncertainty: &Raster,
    pred_mean: &Raster,
    gt: &DepthRaster,
) -> Result<SparsificationResult> {
    pred_mean.ensure_same_dims(gt.dims(), "ground truth vs prediction")?;
    pred_mean.ensure_same_dims(uncertainty.dims(), "uncertainty vs prediction")?;
    let n = gt.valid_count();
    if n < SPARSIFICATION_STEPS {
        return Err(Error::InsufficientData(format!(
            "sparsification needs at least {SPARSIFICATION_STEPS} valid pixels, got {n}"
        )));
    }

    let mut unc = Vec::with_capacity(n);
    let mut abs_err = Vec::with_capacity(n);
    for j in gt.valid_indices() {
        let u = uncertainty.values()[j];
        if u.is_nan() {
            return Err(Error::Domain(format!("uncertainty is NaN at pixel {j}")));
        }
        unc.push(u);
        abs_err.push((gt.values()[j] - pred_mean.values()[j]).abs());
    }
    let sq_err: Vec<f64> = abs_err.iter().map(|e| e * e).collect();
    if sq_err.iter().sum::<f64>() == 0.0 {
        return Err(Error::Degenerate(
            "prediction is exact, full-set RMSE is zero".into(),
        ));
    }

    let by_uncertainty = retained_rmse_curve(&removal_order(&unc), &sq_err);
    let oracle = retained_rmse_curve(&removal_order(&abs_err), &sq_err);
    Ok(SparsificationResult::from_curves(by_uncertainty, oracle))
}
