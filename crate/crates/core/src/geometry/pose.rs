use serde::{Deserialize, Serialize};

use super::transform::RigidTransform;
use crate::error::{Error, Result};

/// Translational (meters) and rotational (degrees) RMSE over pose pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseErrorStats {
    pub rmse_t: f64,
    pub rmse_r: f64,
    pub n_pairs: usize,
}

/// Angle of the relative rotation `R_gt^T R_est`, in degrees.
///
/// Evaluated as `atan2(sin, cos)` of the axis-angle magnitude, which equals
/// `acos((tr - 1) / 2)` but stays accurate near zero and 180 degrees.
pub fn rotation_error_deg(estimate: &RigidTransform, truth: &RigidTransform) -> f64 {
    let rel = truth.rotation().transpose() * estimate.rotation();
    let cos = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let axis = nalgebra::Vector3::new(
        rel[(2, 1)] - rel[(1, 2)],
        rel[(0, 2)] - rel[(2, 0)],
        rel[(1, 0)] - rel[(0, 1)],
    );
    let sin = axis.norm() / 2.0;
    sin.atan2(cos).to_degrees()
}

pub fn pose_error(
    estimates: &[RigidTransform],
    truth: &[RigidTransform],
) -> Result<PoseErrorStats> {
    if estimates.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} estimates for {} ground-truth poses",
            estimates.len(),
            truth.len()
        )));
    }
    if estimates.is_empty() {
        return Err(Error::Empty("no pose pairs".into()));
    }
    let n = estimates.len() as f64;
    let (mut sq_t, mut sq_r) = (0.0, 0.0);
    for (e, g) in estimates.iter().zip(truth) {
        sq_t += (e.translation() - g.translation()).norm_squared();
        sq_r += rotation_error_deg(e, g).powi(2);
    }
    Ok(PoseErrorStats {
        rmse_t: (sq_t / n).sqrt(),
        rmse_r: (sq_r / n).sqrt(),
        n_pairs: estimates.len(),
    })
}
