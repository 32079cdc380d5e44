use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{DepthRaster, Raster};

/// Standard depth-error metrics over the valid pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthMetrics {
    pub abs_rel: f64,
    pub sq_rel: f64,
    /// Meters.
    pub rmse: f64,
    pub rmse_log: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
}

const DELTA_BASE: f64 = 1.25;

pub fn depth_metrics(pred: &Raster, gt: &DepthRaster) -> Result<DepthMetrics> {
    pred.ensure_same_dims(gt.dims(), "ground truth vs prediction")?;
    let n = gt.valid_count();
    if n == 0 {
        return Err(Error::Empty("ground truth has no valid pixels".into()));
    }
    let thresholds = [DELTA_BASE, DELTA_BASE.powi(2), DELTA_BASE.powi(3)];

    let (mut abs_rel, mut sq_rel, mut sq, mut sq_log) = (0.0, 0.0, 0.0, 0.0);
    let mut hits = [0usize; 3];
    for j in gt.valid_indices() {
        let d = gt.values()[j];
        let p = pred.values()[j];
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::Domain(format!(
                "prediction must be positive at valid pixel {j}, got {p}"
            )));
        }
        let diff = d - p;
        abs_rel += diff.abs() / d;
        sq_rel += diff * diff / d;
        sq += diff * diff;
        let dl = d.ln() - p.ln();
        sq_log += dl * dl;
        let ratio = (d / p).max(p / d);
        for (hit, &t) in hits.iter_mut().zip(&thresholds) {
            if ratio < t {
                *hit += 1;
            }
        }
    }
    let nf = n as f64;
    Ok(DepthMetrics {
        abs_rel: abs_rel / nf,
        sq_rel: sq_rel / nf,
        rmse: (sq / nf).sqrt(),
        rmse_log: (sq_log / nf).sqrt(),
        delta1: hits[0] as f64 / nf,
        delta2: hits[1] as f64 / nf,
        delta3: hits[2] as f64 / nf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn row(v: &[f64]) -> Raster {
        Raster::row(v.to_vec()).unwrap()
    }

    #[test]
    fn identity() {
        let gt = DepthRaster::dense(row(&[1.0, 2.5, 7.0])).unwrap();
        let m = depth_metrics(&row(&[1.0, 2.5, 7.0]), &gt).unwrap();
        assert_eq!(
            m,
            DepthMetrics {
                abs_rel: 0.0,
                sq_rel: 0.0,
                rmse: 0.0,
                rmse_log: 0.0,
                delta1: 1.0,
                delta2: 1.0,
                delta3: 1.0
            }
        );
    }

    #[test]
    fn hand_evaluated() {
        let gt = DepthRaster::dense(row(&[2.0, 4.0])).unwrap();
        let m = depth_metrics(&row(&[1.0, 5.0]), &gt).unwrap();
        // |2-1|/2 = .5, |4-5|/4 = .25
        assert_relative_eq!(m.abs_rel, 0.375);
        assert_relative_eq!(m.sq_rel, 0.375);
        assert_relative_eq!(m.rmse, 1.0);
        let lg = ((2f64.ln() - 1f64.ln()).powi(2) + (4f64.ln() - 5f64.ln()).powi(2)) / 2.0;
        assert_relative_eq!(m.rmse_log, lg.sqrt());
        // ratios 2.0 and exactly 1.25: neither is strictly below 1.25,
        // and 2.0 stays above 1.25^3
        assert_eq!(m.delta1, 0.0);
        assert_eq!(m.delta2, 0.5);
        assert_eq!(m.delta3, 0.5);

        let m = depth_metrics(&row(&[1.9, 4.2]), &gt).unwrap();
        assert_eq!(m.delta1, 1.0);
    }

    #[test]
    fn masked_and_errors() {
        let gt = DepthRaster::new(row(&[2.0, 4.0]), vec![true, false]).unwrap();
        let m = depth_metrics(&row(&[2.0, -1.0]), &gt).unwrap();
        assert_eq!(m.rmse, 0.0);
        let gt = DepthRaster::dense(row(&[2.0, 4.0])).unwrap();
        assert!(matches!(
            depth_metrics(&row(&[2.0, 0.0]), &gt),
            Err(Error::Domain(_))
        ));
        let none = DepthRaster::new(row(&[2.0]), vec![false]).unwrap();
        assert!(matches!(
            depth_metrics(&row(&[2.0]), &none),
            Err(Error::Empty(_))
        ));
    }
}
