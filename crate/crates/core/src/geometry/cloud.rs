use std::cmp::Ordering;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{DepthRaster, Raster};

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0 && fx.is_finite() && fy.is_finite()) {
            return Err(Error::Parameter(format!(
                "focal lengths must be positive, got fx={fx} fy={fy}"
            )));
        }
        if !(cx.is_finite() && cy.is_finite()) {
            return Err(Error::Parameter("principal point must be finite".into()));
        }
        Ok(Self { fx, fy, cx, cy })
    }

    /// 3D point of pixel `(u, v)` at depth `z` along the optical axis.
    pub fn unproject(&self, u: f64, v: f64, z: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) * z / self.fx, (v - self.cy) * z / self.fy, z)
    }

    /// Pixel coordinates of a camera-frame point with `z > 0`.
    pub fn project(&self, p: &Vector3<f64>) -> (f64, f64) {
        (self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }
}

/// 3D points, each with a standard deviation in meters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UncertainPointCloud {
    points: Vec<Vector3<f64>>,
    sigma: Vec<f64>,
}

impl UncertainPointCloud {
    pub fn new(points: Vec<Vector3<f64>>, sigma: Vec<f64>) -> Result<Self> {
        if points.len() != sigma.len() {
            return Err(Error::Shape(format!(
                "{} points with {} sigmas",
                points.len(),
                sigma.len()
            )));
        }
        if let Some(s) = sigma.iter().find(|s| !(**s >= 0.0)) {
            return Err(Error::Domain(format!("point sigma must be >= 0, got {s}")));
        }
        Ok(Self { points, sigma })
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices kept, in ascending order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            sigma: indices.iter().map(|&i| self.sigma[i]).collect(),
        }
    }

    pub fn transformed(&self, t: &super::RigidTransform) -> Self {
        Self {
            points: self.points.iter().map(|p| t.apply(p)).collect(),
            sigma: self.sigma.clone(),
        }
    }
}

/// Lifts every `stride`-th valid pixel (in both directions) to 3D.
///
/// The depth-axis standard deviation is carried through unchanged.
pub fn backproject(
    depth: &DepthRaster,
    sigma_total: &Raster,
    intrinsics: &CameraIntrinsics,
    stride: usize,
) -> Result<UncertainPointCloud> {
    if stride == 0 {
        return Err(Error::Parameter("stride must be at least 1".into()));
    }
    sigma_total.ensure_same_dims(depth.dims(), "depth vs sigma")?;
    let w = depth.width();
    let mut points = Vec::new();
    let mut sigma = Vec::new();
    for j in depth.valid_indices() {
        let (u, v) = (j % w, j / w);
        if u % stride != 0 || v % stride != 0 {
            continue;
        }
        points.push(intrinsics.unproject(u as f64, v as f64, depth.values()[j]));
        sigma.push(sigma_total.values()[j]);
    }
    UncertainPointCloud::new(points, sigma)
}

/// Number of points kept at certainty percentile `q`: `ceil(q n)`.
///
/// A slack of 1e-9 absorbs the representation error of decimal `q`, so
/// `q = 0.3, n = 1000` keeps exactly 300.
pub fn percentile_count(q: f64, n: usize) -> usize {
    let raw = (q * n as f64 - 1e-9).ceil();
    (raw.max(0.0) as usize).min(n)
}

/// Keeps the `ceil(q n)` points with the smallest sigma (ties by index),
/// preserving their original order.
pub fn percentile_filter(cloud: &UncertainPointCloud, q: f64) -> Result<UncertainPointCloud> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Parameter(format!(
            "certainty percentile must be in (0, 1], got {q}"
        )));
    }
    if cloud.is_empty() {
        return Err(Error::Empty("cannot filter an empty cloud".into()));
    }
    if q == 1.0 {
        return Ok(cloud.clone());
    }
    let keep = percentile_count(q, cloud.len());
    let mut order: Vec<usize> = (0..cloud.len()).collect();
    order.sort_by(|&a, &b| {
        cloud.sigma[a]
            .partial_cmp(&cloud.sigma[b])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut kept = order[..keep].to_vec();
    kept.sort_unstable();
    Ok(cloud.select(&kept))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(100.0, 120.0, 4.0, 3.0).unwrap()
    }

    #[test]
    fn principal_ray_and_unit_tangent() {
        assert_eq!(k().unproject(4.0, 3.0, 2.0), Vector3::new(0.0, 0.0, 2.0));
        assert_eq!(k().unproject(104.0, 3.0, 1.0), Vector3::new(1.0, 0.0, 1.0));
    }

    #[test]
    fn backproject_respects_mask_and_stride() {
        let depth = Raster::new(4, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).unwrap();
        let mut valid = vec![true; 8];
        valid[2] = false;
        let d = DepthRaster::new(depth, valid).unwrap();
        let s = Raster::new(4, 2, (0..8).map(|i| i as f64 * 0.1).collect()).unwrap();
        let c = backproject(&d, &s, &k(), 1).unwrap();
        assert_eq!(c.len(), 7);
        let c = backproject(&d, &s, &k(), 2).unwrap();
        // pixels (0,0) and (2,0); (2,0) is masked
        assert_eq!(c.len(), 1);
        assert_eq!(c.sigma(), &[0.0]);
        assert!(backproject(&d, &s, &k(), 0).is_err());
    }

    #[test]
    fn keeps_smallest_sigmas() {
        let pts = vec![Vector3::zeros(); 10];
        let sig: Vec<f64> = (1..=10).rev().map(f64::from).collect();
        let c = UncertainPointCloud::new(pts, sig).unwrap();
        let f = percentile_filter(&c, 0.9).unwrap();
        assert_eq!(f.len(), 9);
        assert!(f.sigma().iter().all(|&s| s <= 9.0));
        assert_eq!(percentile_filter(&c, 1.0).unwrap(), c);
    }

    #[test]
    fn ties_resolve_by_index() {
        let pts: Vec<_> = (0..4).map(|i| Vector3::new(i as f64, 0.0, 0.0)).collect();
        let c = UncertainPointCloud::new(pts, vec![1.0; 4]).unwrap();
        let f = percentile_filter(&c, 0.5).unwrap();
        assert_eq!(f.points()[0].x, 0.0);
        assert_eq!(f.points()[1].x, 1.0);
    }

    #[test]
    fn parameter_errors() {
        let c = UncertainPointCloud::new(vec![Vector3::zeros()], vec![0.1]).unwrap();
        assert!(percentile_filter(&c, 0.0).is_err());
        assert!(percentile_filter(&c, 1.01).is_err());
        assert!(percentile_filter(&UncertainPointCloud::default(), 0.5).is_err());
    }

    #[test]
    fn count_matches_integer_ceiling() {
        for n in [1usize, 7, 10, 99, 1000, 1234] {
            for a in 1..=1000usize {
                let q = a as f64 / 1000.0;
                assert_eq!(
                    percentile_count(q, n),
                    (a * n).div_ceil(1000),
                    "q={q} n={n}"
                );
            }
        }
    }
}
