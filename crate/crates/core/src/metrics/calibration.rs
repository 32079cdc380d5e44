//! Calibration of Gaussian predictive intervals (AUCE).

use serde::{Deserialize, Serialize};

use super::normal::central_interval_z;
use crate::error::{Error, Result};
use crate::predictive::GaussianPrediction;
use crate::raster::DepthRaster;

/// Number of confidence levels, `p_k = k / LEVELS` for `k = 1..=LEVELS`.
pub const CALIBRATION_LEVELS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCurve {
    pub levels: Vec<f64>,
    /// Empirical fraction of valid pixels inside each central interval.
    pub coverage: Vec<f64>,
    /// Mean absolute gap between `levels` and `coverage`.
    pub auce: f64,
}

impl CalibrationCurve {
    /// Rebuilds the curve from per-level coverages.
    pub fn from_coverage(coverage: Vec<f64>) -> Self {
        let levels = calibration_levels();
        let auce = levels
            .iter()
            .zip(&coverage)
            .map(|(p, c)| (p - c).abs())
            .sum::<f64>()
            / levels.len() as f64;
        Self {
            levels,
            coverage,
            auce,
        }
    }
}

pub fn calibration_levels() -> Vec<f64> {
    (1..=CALIBRATION_LEVELS)
        .map(|k| k as f64 / CALIBRATION_LEVELS as f64)
        .collect()
}

/// Coverage of symmetric central intervals `mean +- z_k sigma_total` at 100
/// confidence levels, and the area between the coverage curve and the
/// diagonal.
pub fn auce(pred: &GaussianPrediction, gt: &DepthRaster) -> Result<CalibrationCurve> {
    pred.mean
        .ensure_same_dims(gt.dims(), "ground truth vs prediction")?;
    let n = gt.valid_count();
    if n == 0 {
        return Err(Error::Empty("ground truth has no valid pixels".into()));
    }

    let mut scaled = Vec::with_capacity(n);
    for j in gt.valid_indices() {
        let var = pred.var_total.values()[j];
        if !(var > 0.0 && var.is_finite()) {
            return Err(Error::Domain(format!(
                "total variance must be positive at valid pixel {j}, got {var}"
            )));
        }
        scaled.push(((gt.values()[j] - pred.mean.values()[j]).abs(), var.sqrt()));
    }

    let coverage = calibration_levels()
        .iter()
        .map(|&p| {
            let z = central_interval_z(p);
            let inside = scaled.iter().filter(|&&(err, s)| err <= z * s).count();
            inside as f64 / n as f64
        })
        .collect();
    Ok(CalibrationCurve::from_coverage(coverage))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Raster;

    fn prediction(mean: Vec<f64>, var: f64) -> GaussianPrediction {
        let n = mean.len();
        GaussianPrediction::from_parts(
            Raster::row(mean).unwrap(),
            Raster::row(vec![0.0; n]).unwrap(),
            Raster::row(vec![var; n]).unwrap(),
            Raster::row(vec![var; n]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn huge_sigma_covers_everything() {
        let gt = DepthRaster::dense(Raster::row(vec![1.0, 2.0, 3.0, 4.0]).unwrap()).unwrap();
        let c = auce(&prediction(vec![1.5, 2.5, 2.0, 6.0], 1e18), &gt).unwrap();
        assert!(c.coverage.iter().all(|&p| p == 1.0));
        assert!((c.auce - 0.495).abs() < 1e-15, "{}", c.auce);
    }

    #[test]
    fn tiny_sigma_covers_nothing() {
        let gt = DepthRaster::dense(Raster::row(vec![1.0, 2.0, 3.0, 4.0]).unwrap()).unwrap();
        let c = auce(&prediction(vec![1.5, 2.5, 2.0, 6.0], 1e-24), &gt).unwrap();
        assert!(c.coverage.iter().all(|&p| p == 0.0));
        assert!((c.auce - 0.505).abs() < 1e-15, "{}", c.auce);
    }

    #[test]
    fn levels_are_increasing() {
        let l = calibration_levels();
        assert_eq!(l.len(), 100);
        assert!(l.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(l[99], 1.0);
    }

    #[test]
    fn zero_variance_is_rejected() {
        let gt = DepthRaster::dense(Raster::row(vec![1.0]).unwrap()).unwrap();
        let pred = GaussianPrediction {
            mean: Raster::row(vec![1.0]).unwrap(),
            var_epistemic: Raster::row(vec![0.0]).unwrap(),
            var_aleatoric: Raster::row(vec![0.0]).unwrap(),
            var_total: Raster::row(vec![0.0]).unwrap(),
        };
        assert!(matches!(auce(&pred, &gt), Err(Error::Domain(_))));
    }
}
