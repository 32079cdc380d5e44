use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cloud::{percentile_filter, UncertainPointCloud};
use super::icp::{icp_align, IcpConfig};
use super::pose::{pose_error, PoseErrorStats};
use super::transform::RigidTransform;
use crate::error::{Error, Result};

/// Certainty percentiles evaluated by default; 1.00 is the full cloud.
pub const DEFAULT_PERCENTILES: [f64; 7] = [0.30, 0.50, 0.75, 0.90, 0.95, 0.99, 1.00];

/// Two views and the true transform taking source-frame points into the
/// target frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudPair {
    pub source: UncertainPointCloud,
    pub target: UncertainPointCloud,
    pub ground_truth: RigidTransform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub percentile: f64,
    /// `None` when every pair failed at this percentile.
    pub stats: Option<PoseErrorStats>,
    pub n_failed: usize,
}

impl SweepRow {
    pub fn rmse_t(&self) -> f64 {
        self.stats.map_or(f64::NAN, |s| s.rmse_t)
    }

    pub fn rmse_r(&self) -> f64 {
        self.stats.map_or(f64::NAN, |s| s.rmse_r)
    }

    pub fn n_pairs(&self) -> usize {
        self.stats.map_or(0, |s| s.n_pairs)
    }
}

/// Filters both clouds of every pair to each certainty percentile, runs
/// ICP, and aggregates pose errors per percentile.
///
/// Pairs are processed in parallel; aggregation follows pair order, so the
/// table does not depend on scheduling. Pairs whose ICP fails are left out
/// of the statistics and counted in `n_failed`.
pub fn percentile_sweep(
    pairs: &[CloudPair],
    percentiles: &[f64],
    icp: &IcpConfig,
) -> Result<Vec<SweepRow>> {
    if pairs.is_empty() {
        return Err(Error::Empty("no cloud pairs to sweep".into()));
    }
    if let Some(q) = percentiles.iter().find(|&&q| !(q > 0.0 && q <= 1.0)) {
        return Err(Error::Parameter(format!(
            "percentile {q} is outside (0, 1]"
        )));
    }
    let per_pair: Vec<Vec<Option<RigidTransform>>> = pairs
        .par_iter()
        .map(|pair| {
            percentiles
                .iter()
                .map(|&q| {
                    let src = percentile_filter(&pair.source, q).ok()?;
                    let tgt = percentile_filter(&pair.target, q).ok()?;
                    icp_align(&src, &tgt, icp).ok().map(|r| r.transform)
                })
                .collect()
        })
        .collect();

    percentiles
        .iter()
        .enumerate()
        .map(|(k, &q)| {
            let (est, gt): (Vec<_>, Vec<_>) = per_pair
                .iter()
                .zip(pairs)
                .filter_map(|(r, p)| r[k].map(|t| (t, p.ground_truth)))
                .unzip();
            let n_failed = pairs.len() - est.len();
            let stats = if est.is_empty() {
                None
            } else {
                Some(pose_error(&est, &gt)?)
            };
            Ok(SweepRow {
                percentile: q,
                stats,
                n_failed,
            })
        })
        .collect()
}
