//! Pseudo-RGBD geometry: back-projection of predicted depth into clouds
//! carrying per-point uncertainty, certainty-percentile filtering,
//! point-to-point ICP and pose error statistics.

mod cloud;
mod icp;
mod kdtree;
mod pose;
pub mod scene;
mod sweep;
mod transform;

pub use cloud::{
    backproject, percentile_count, percentile_filter, CameraIntrinsics, UncertainPointCloud,
};
pub use icp::{fit_rigid, icp_align, median_spacing, IcpConfig, IcpResult, ADAPTIVE_GATE_FACTOR};
pub use kdtree::{NearestNeighbors, Neighbor, BRUTE_FORCE_BELOW};
pub use pose::{pose_error, rotation_error_deg, PoseErrorStats};
pub use sweep::{percentile_sweep, CloudPair, SweepRow, DEFAULT_PERCENTILES};
pub use transform::{RigidTransform, ORTHONORMALITY_TOL};
