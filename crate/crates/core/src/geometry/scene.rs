//! Procedural pseudo-RGBD views.
//!
//! A scene is a room (floor, walls) with boxes and spheres in it. Views are
//! ray-cast to ground-truth depth, then turned into a "network prediction":
//! depth noise proportional to a per-pixel sigma, with sigma raised in a
//! band around depth discontinuities. With corruption enabled, pixels in
//! that band receive heavy-tailed errors and blends of foreground and
//! background depth (flying pixels), the failure mode uncertainty filtering
//! is meant to remove.

use nalgebra::{Rotation3, Unit, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::cloud::{backproject, CameraIntrinsics, UncertainPointCloud};
use super::sweep::CloudPair;
use super::transform::RigidTransform;
use crate::error::Result;
use crate::raster::{DepthRaster, Raster};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Primitive {
    /// Points `x` with `normal . x = offset`.
    Plane {
        normal: [f64; 3],
        offset: f64,
    },
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
    /// Axis-aligned.
    Cuboid {
        min: [f64; 3],
        max: [f64; 3],
    },
}

impl Primitive {
    /// Smallest positive ray parameter of an intersection.
    fn intersect(&self, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<f64> {
        const EPS: f64 = 1e-9;
        match *self {
            Primitive::Plane { normal, offset } => {
                let n = Vector3::from(normal);
                let denom = n.dot(d);
                if denom.abs() < EPS {
                    return None;
                }
                let t = (offset - n.dot(o)) / denom;
                (t > EPS).then_some(t)
            }
            Primitive::Sphere { center, radius } => {
                let oc = o - Vector3::from(center);
                let b = oc.dot(d);
                let c = oc.norm_squared() - radius * radius;
                let a = d.norm_squared();
                let disc = b * b - a * c;
                if disc < 0.0 {
                    return None;
                }
                let s = disc.sqrt();
                [(-b - s) / a, (-b + s) / a].into_iter().find(|&t| t > EPS)
            }
            Primitive::Cuboid { min, max } => {
                let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
                for k in 0..3 {
                    if d[k].abs() < EPS {
                        if o[k] < min[k] || o[k] > max[k] {
                            return None;
                        }
                        continue;
                    }
                    let (a, b) = ((min[k] - o[k]) / d[k], (max[k] - o[k]) / d[k]);
                    t0 = t0.max(a.min(b));
                    t1 = t1.min(a.max(b));
                }
                if t0 > t1 {
                    return None;
                }
                [t0, t1].into_iter().find(|&t| t > EPS)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub primitives: Vec<Primitive>,
}

impl Scene {
    /// A room about 5.5 m wide and 7 m deep with a few random objects.
    ///
    /// World axes follow the camera convention of the reference view:
    /// x right, y down, z forward; the floor is at `y = 1.4`.
    pub fn random_room<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut primitives = vec![
            Primitive::Plane {
                normal: [0.0, 1.0, 0.0],
                offset: 1.4,
            },
            Primitive::Plane {
                normal: [0.0, 1.0, 0.0],
                offset: -1.6,
            },
            Primitive::Plane {
                normal: [0.0, 0.0, 1.0],
                offset: rng.random_range(6.0..7.0),
            },
            Primitive::Plane {
                normal: [1.0, 0.0, 0.0],
                offset: rng.random_range(-3.0..-2.5),
            },
            Primitive::Plane {
                normal: [1.0, 0.0, 0.0],
                offset: rng.random_range(2.5..3.0),
            },
        ];
        for _ in 0..rng.random_range(2..=4) {
            let (x, z) = (rng.random_range(-1.8..1.8), rng.random_range(2.0..5.0));
            let (hw, hd, h) = (
                rng.random_range(0.2..0.6),
                rng.random_range(0.2..0.6),
                rng.random_range(0.4..1.6),
            );
            primitives.push(Primitive::Cuboid {
                min: [x - hw, 1.4 - h, z - hd],
                max: [x + hw, 1.4, z + hd],
            });
        }
        for _ in 0..rng.random_range(1..=3) {
            let r = rng.random_range(0.2..0.5);
            primitives.push(Primitive::Sphere {
                center: [
                    rng.random_range(-1.8..1.8),
                    rng.random_range(-0.5..1.4 - r),
                    rng.random_range(2.0..5.0),
                ],
                radius: r,
            });
        }
        Self { primitives }
    }

    fn cast(&self, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<f64> {
        self.primitives
            .iter()
            .filter_map(|p| p.intersect(o, d))
            .min_by(f64::total_cmp)
    }
}

/// Ground-truth depth seen from `camera_to_world`. Misses are masked out.
pub fn render_depth(
    scene: &Scene,
    camera_to_world: &RigidTransform,
    intrinsics: &CameraIntrinsics,
    width: usize,
    height: usize,
) -> Result<DepthRaster> {
    let origin = *camera_to_world.translation();
    let mut depth = Vec::with_capacity(width * height);
    for v in 0..height {
        for u in 0..width {
            // z component 1 in the camera frame, so the ray parameter is depth
            let ray_cam = intrinsics.unproject(u as f64, v as f64, 1.0);
            let ray = camera_to_world.rotation() * ray_cam;
            depth.push(scene.cast(&origin, &ray).unwrap_or(0.0));
        }
    }
    Ok(DepthRaster::from_positive(Raster::new(
        width, height, depth,
    )?))
}

/// Settings for turning ground-truth depth into a noisy prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewNoise {
    /// Sigma away from discontinuities, as a fraction of depth.
    pub relative_sigma: f64,
    /// A pixel is on a discontinuity if a neighbor's depth differs by more
    /// than this fraction of its own.
    pub edge_threshold: f64,
    /// Sigma inside the discontinuity band, as a fraction of depth.
    pub edge_relative_sigma: f64,
    /// Heavy-tailed errors and flying pixels in the band.
    pub corrupt: bool,
    /// Probability that a band pixel is corrupted.
    pub corrupt_fraction: f64,
    /// Scale of the Cauchy error on corrupted pixels, as a fraction of depth.
    pub corrupt_scale: f64,
    /// Extra dilation of the discontinuity band, in pixels.
    pub edge_dilation: usize,
}

impl Default for ViewNoise {
    fn default() -> Self {
        Self {
            relative_sigma: 0.01,
            edge_threshold: 0.08,
            edge_relative_sigma: 0.15,
            corrupt: true,
            corrupt_fraction: 0.7,
            corrupt_scale: 0.05,
            edge_dilation: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticView {
    pub truth: DepthRaster,
    /// Predicted depth, positive wherever `truth` is valid.
    pub predicted: Raster,
    pub sigma: Raster,
    /// Pixels in the discontinuity band.
    pub edge: Vec<bool>,
}

impl SyntheticView {
    pub fn predicted_depth(&self) -> Result<DepthRaster> {
        DepthRaster::new(self.predicted.clone(), self.truth.valid().to_vec())
    }

    pub fn cloud(
        &self,
        intrinsics: &CameraIntrinsics,
        stride: usize,
    ) -> Result<UncertainPointCloud> {
        backproject(&self.predicted_depth()?, &self.sigma, intrinsics, stride)
    }
}

/// Marks pixels within one pixel of a depth jump (or of a masked pixel).
fn edge_band(truth: &DepthRaster, threshold: f64) -> Vec<bool> {
    let (w, h) = truth.dims();
    let z = truth.values();
    let ok = truth.valid();
    let mut jump = vec![false; w * h];
    for v in 0..h {
        for u in 0..w {
            let j = v * w + u;
            if !ok[j] {
                continue;
            }
            for (du, dv) in [(1i64, 0i64), (0, 1), (1, 1), (1, -1)] {
                let (nu, nv) = (u as i64 + du, v as i64 + dv);
                if nu < 0 || nv < 0 || nu >= w as i64 || nv >= h as i64 {
                    continue;
                }
                let k = nv as usize * w + nu as usize;
                if !ok[k] || (z[j] - z[k]).abs() > threshold * z[j].min(z[k]) {
                    jump[j] = true;
                    jump[k] = true;
                }
            }
        }
    }
    jump
}

fn dilate(band: &[bool], w: usize, h: usize, radius: usize) -> Vec<bool> {
    let mut out = band.to_vec();
    for _ in 0..radius {
        let prev = out.clone();
        for v in 0..h {
            for u in 0..w {
                if neighbors(u, v, w, h).any(|(nu, nv)| prev[nv * w + nu]) {
                    out[v * w + u] = true;
                }
            }
        }
    }
    out
}

/// Noisy prediction of `truth` with discontinuity-aware sigma.
pub fn predict_view<R: Rng + ?Sized>(
    truth: DepthRaster,
    noise: &ViewNoise,
    rng: &mut R,
) -> Result<SyntheticView> {
    let (w, h) = truth.dims();
    let edge = dilate(
        &edge_band(&truth, noise.edge_threshold),
        w,
        h,
        noise.edge_dilation,
    );
    let z = truth.values();
    let mut predicted = vec![0.0; w * h];
    let mut sigma = vec![0.0; w * h];
    for j in truth.valid_indices() {
        // 10% multiplicative jitter keeps the sigma ranking free of ties
        let jitter = (0.1 * rng.sample::<f64, _>(StandardNormal)).exp();
        let rel = if edge[j] {
            noise.edge_relative_sigma
        } else {
            noise.relative_sigma
        };
        sigma[j] = rel * z[j] * jitter;
        let base_sigma = noise.relative_sigma * z[j];
        let gauss: f64 = rng.sample(StandardNormal);
        predicted[j] = if edge[j] && noise.corrupt && rng.random_bool(noise.corrupt_fraction) {
            // flying pixel: somewhere between the near and far neighbor,
            // plus a Cauchy-distributed error
            let (u, v) = (j % w, j / w);
            let (mut near, mut far) = (z[j], z[j]);
            for (nu, nv) in neighbors(u, v, w, h) {
                let k = nv * w + nu;
                if truth.valid()[k] {
                    near = near.min(z[k]);
                    far = far.max(z[k]);
                }
            }
            let blend = near + rng.random::<f64>() * (far - near);
            let cauchy = (std::f64::consts::PI * (rng.random::<f64>() - 0.5)).tan();
            blend + noise.corrupt_scale * z[j] * cauchy.clamp(-20.0, 20.0)
        } else {
            z[j] + base_sigma * gauss
        };
        predicted[j] = predicted[j].clamp(0.1 * z[j], 3.0 * z[j]);
    }
    Ok(SyntheticView {
        predicted: Raster::new(w, h, predicted)?,
        sigma: Raster::new(w, h, sigma)?,
        truth,
        edge,
    })
}

fn neighbors(u: usize, v: usize, w: usize, h: usize) -> impl Iterator<Item = (usize, usize)> {
    (-1i64..=1)
        .flat_map(move |dv| (-1i64..=1).map(move |du| (u as i64 + du, v as i64 + dv)))
        .filter(move |&(x, y)| x >= 0 && y >= 0 && x < w as i64 && y < h as i64)
        .map(|(x, y)| (x as usize, y as usize))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSetConfig {
    pub width: usize,
    pub height: usize,
    pub intrinsics: CameraIntrinsics,
    pub noise: ViewNoise,
    /// Largest relative rotation between the views, degrees.
    pub max_rotation_deg: f64,
    /// Largest relative translation between the views, meters.
    pub max_translation: f64,
    pub stride: usize,
}

impl Default for PairSetConfig {
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
            noise: ViewNoise::default(),
            max_rotation_deg: 6.0,
            max_translation: 0.25,
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPair {
    pub source: SyntheticView,
    pub target: SyntheticView,
    /// Source camera frame to target camera frame.
    pub ground_truth: RigidTransform,
}

impl SyntheticPair {
    pub fn clouds(&self, cfg: &PairSetConfig) -> Result<CloudPair> {
        Ok(CloudPair {
            source: self.source.cloud(&cfg.intrinsics, cfg.stride)?,
            target: self.target.cloud(&cfg.intrinsics, cfg.stride)?,
            ground_truth: self.ground_truth,
        })
    }
}

fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> Unit<Vector3<f64>> {
    loop {
        let v = Vector3::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        if v.norm() > 1e-6 {
            return Unit::new_normalize(v);
        }
    }
}

/// One room, two views: the source camera at the origin, the target
/// camera displaced by a random motion within the configured bounds.
pub fn synthetic_pair<R: Rng + ?Sized>(cfg: &PairSetConfig, rng: &mut R) -> Result<SyntheticPair> {
    let scene = Scene::random_room(rng);
    let source_pose = RigidTransform::identity();
    let angle = rng.random_range(0.3..1.0) * cfg.max_rotation_deg.to_radians();
    let rotation = Rotation3::from_axis_angle(&random_unit(rng), angle);
    let shift = random_unit(rng).into_inner() * rng.random_range(0.3..1.0) * cfg.max_translation;
    let target_pose = RigidTransform::from_rotation(rotation, shift);

    let render =
        |pose: &RigidTransform| render_depth(&scene, pose, &cfg.intrinsics, cfg.width, cfg.height);
    let source = predict_view(render(&source_pose)?, &cfg.noise, rng)?;
    let target = predict_view(render(&target_pose)?, &cfg.noise, rng)?;
    Ok(SyntheticPair {
        source,
        target,
        ground_truth: target_pose.inverse().compose(&source_pose),
    })
}
