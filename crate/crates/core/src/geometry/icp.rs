//! Point-to-point ICP with closed-form SVD alignment.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::cloud::UncertainPointCloud;
use super::kdtree::NearestNeighbors;
use super::transform::{RigidTransform, ORTHONORMALITY_TOL};
use crate::error::{Error, Result};

/// Multiple of the target's median nearest-neighbor spacing used as the
/// correspondence gate when none is given.
pub const ADAPTIVE_GATE_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcpConfig {
    pub max_iterations: usize,
    /// Stop once the correspondence RMSE changes by less than this (meters).
    pub tol_delta_rmse: f64,
    /// Reject pairs farther apart than this (meters). `None` picks
    /// `ADAPTIVE_GATE_FACTOR` times the target's median point spacing.
    pub max_corr_dist: Option<f64>,
    pub initial: RigidTransform,
}

impl Default for IcpConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            tol_delta_rmse: 1e-6,
            max_corr_dist: None,
            initial: RigidTransform::identity(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcpResult {
    /// Maps source-frame points into the target frame.
    pub transform: RigidTransform,
    pub iterations: usize,
    /// RMSE of the gated correspondences under `transform`, meters.
    pub final_rmse: f64,
    pub converged: bool,
    pub matched_fraction: f64,
    /// Gate actually used, meters.
    pub max_corr_dist: f64,
}

/// Least-squares rigid transform taking `src[i]` onto `dst[i]`.
///
/// Kabsch/Umeyama without scale; if the SVD solution is a reflection the
/// singular vector of the smallest singular value is flipped.
pub fn fit_rigid(src: &[Vector3<f64>], dst: &[Vector3<f64>]) -> Result<RigidTransform> {
    if src.len() != dst.len() {
        return Err(Error::Shape(format!(
            "{} source points for {} targets",
            src.len(),
            dst.len()
        )));
    }
    if src.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "rigid fit needs at least 3 pairs, got {}",
            src.len()
        )));
    }
    let n = src.len() as f64;
    let cs = src.iter().sum::<Vector3<f64>>() / n;
    let cd = dst.iter().sum::<Vector3<f64>>() / n;
    let mut h = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (s - cs) * (d - cd).transpose();
    }
    let svd = h.svd(true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v requested"));
    let v = v_t.transpose();
    let mut d = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        d[(svd.singular_values.imin(), svd.singular_values.imin())] = -1.0;
    }
    let rotation = v * d * u.transpose();
    let translation = cd - rotation * cs;
    RigidTransform::new(rotation, translation)
}

fn ensure_finite(cloud: &UncertainPointCloud, what: &str) -> Result<()> {
    if let Some(i) = cloud
        .points()
        .iter()
        .position(|p| !p.iter().all(|v| v.is_finite()))
    {
        return Err(Error::Domain(format!("{what} point {i} is not finite")));
    }
    Ok(())
}

/// Median distance from each point to its nearest other point.
pub fn median_spacing(points: &[Vector3<f64>]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let tree = NearestNeighbors::new(points.to_vec());
    let mut d: Vec<f64> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            tree.nearest_excluding(p, i)
                .map_or(0.0, |n| n.dist_sq.sqrt())
        })
        .collect();
    let mid = d.len() / 2;
    let (_, m, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    *m
}

struct Matches {
    src: Vec<Vector3<f64>>,
    dst: Vec<Vector3<f64>>,
    sum_sq: f64,
}

fn correspond(
    source: &UncertainPointCloud,
    target: &UncertainPointCloud,
    tree: &NearestNeighbors,
    t: &RigidTransform,
    gate: f64,
) -> Matches {
    let gate_sq = gate * gate;
    let mut m = Matches {
        src: Vec::new(),
        dst: Vec::new(),
        sum_sq: 0.0,
    };
    for p in source.points() {
        let moved = t.apply(p);
        if let Some(nn) = tree.nearest(&moved) {
            if nn.dist_sq <= gate_sq {
                m.src.push(*p);
                m.dst.push(target.points()[nn.index]);
                m.sum_sq += nn.dist_sq;
            }
        }
    }
    m
}

/// Aligns `source` to `target`.
pub fn icp_align(
    source: &UncertainPointCloud,
    target: &UncertainPointCloud,
    config: &IcpConfig,
) -> Result<IcpResult> {
    ensure_finite(source, "source")?;
    ensure_finite(target, "target")?;
    let gate = match config.max_corr_dist {
        Some(g) if g > 0.0 => g,
        Some(g) => {
            return Err(Error::Parameter(format!(
                "correspondence gate must be positive, got {g}"
            )))
        }
        None => ADAPTIVE_GATE_FACTOR * median_spacing(target.points()),
    };
    let tree = NearestNeighbors::new(target.points().to_vec());

    let mut t = config.initial;
    let mut prev_rmse: Option<f64> = None;
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..config.max_iterations {
        iterations = it + 1;
        let m = correspond(source, target, &tree, &t, gate);
        if m.src.len() < 3 {
            return Err(Error::DegenerateCorrespondence {
                iteration: it,
                found: m.src.len(),
            });
        }
        let rmse = (m.sum_sq / m.src.len() as f64).sqrt();
        if rmse == 0.0 || prev_rmse.is_some_and(|p| (p - rmse).abs() < config.tol_delta_rmse) {
            converged = true;
            break;
        }
        t = fit_rigid(&m.src, &m.dst)?;
        prev_rmse = Some(rmse);
    }

    let m = correspond(source, target, &tree, &t, gate);
    if m.src.len() < 3 {
        return Err(Error::DegenerateCorrespondence {
            iteration: iterations,
            found: m.src.len(),
        });
    }
    assert!(
        t.is_orthonormal(ORTHONORMALITY_TOL),
        "ICP produced a non-rigid transform"
    );
    Ok(IcpResult {
        transform: t,
        iterations,
        final_rmse: (m.sum_sq / m.src.len() as f64).sqrt(),
        converged,
        matched_fraction: m.src.len() as f64 / source.len() as f64,
        max_corr_dist: gate,
    })
}
