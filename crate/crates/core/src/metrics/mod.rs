//! Depth-error metrics and uncertainty-quality metrics.

mod calibration;
mod depth;
mod normal;
mod sparsification;

use serde::{Deserialize, Serialize};

pub use calibration::{auce, calibration_levels, CalibrationCurve, CALIBRATION_LEVELS};
pub use depth::{depth_metrics, DepthMetrics};
pub use normal::{central_interval_z, normal_quantile};
pub use sparsification::{
    ause_rmse, sparsification_fractions, SparsificationResult, SPARSIFICATION_STEPS,
};

use crate::error::{Error, Result};
use crate::predictive::GaussianPrediction;
use crate::raster::{DepthRaster, Raster};

/// How metrics over several images are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// All valid pixels of all images form one population.
    #[default]
    Pooled,
    /// Metrics per image, then the unweighted mean over images.
    PerImage,
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pooled" => Ok(Self::Pooled),
            "per-image" => Ok(Self::PerImage),
            other => Err(Error::Parameter(format!(
                "unknown aggregation '{other}', expected pooled or per-image"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSelection {
    pub depth: bool,
    pub auce: bool,
    pub ause: bool,
}

impl MetricSelection {
    pub const ALL: Self = Self {
        depth: true,
        auce: true,
        ause: true,
    };
}

impl std::str::FromStr for MetricSelection {
    type Err = Error;

    /// Comma-separated subset of `depth,auce,ause`.
    fn from_str(s: &str) -> Result<Self> {
        let mut sel = Self {
            depth: false,
            auce: false,
            ause: false,
        };
        for name in s.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            match name {
                "depth" => sel.depth = true,
                "auce" => sel.auce = true,
                "ause" => sel.ause = true,
                other => {
                    return Err(Error::Parameter(format!(
                        "unknown metric '{other}', expected depth, auce or ause"
                    )))
                }
            }
        }
        if !(sel.depth || sel.auce || sel.ause) {
            return Err(Error::Parameter("no metrics selected".into()));
        }
        Ok(sel)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub aggregation: Aggregation,
    pub n_images: usize,
    pub n_pixels: usize,
    pub depth: Option<DepthMetrics>,
    pub calibration: Option<CalibrationCurve>,
    pub sparsification: Option<SparsificationResult>,
}

fn evaluate_one(
    pred: &GaussianPrediction,
    gt: &DepthRaster,
    sel: MetricSelection,
) -> Result<(
    Option<DepthMetrics>,
    Option<CalibrationCurve>,
    Option<SparsificationResult>,
)> {
    let depth = sel
        .depth
        .then(|| depth_metrics(&pred.mean, gt))
        .transpose()?;
    let calibration = sel.auce.then(|| auce(pred, gt)).transpose()?;
    let sparsification = sel
        .ause
        .then(|| ause_rmse(&pred.sigma_total(), &pred.mean, gt))
        .transpose()?;
    Ok((depth, calibration, sparsification))
}

/// Concatenates the valid pixels of all images into one `n x 1` problem.
fn pool(items: &[(GaussianPrediction, DepthRaster)]) -> Result<(GaussianPrediction, DepthRaster)> {
    let mut cols: [Vec<f64>; 5] = Default::default();
    for (pred, gt) in items {
        pred.mean
            .ensure_same_dims(gt.dims(), "ground truth vs prediction")?;
        for j in gt.valid_indices() {
            cols[0].push(pred.mean.values()[j]);
            cols[1].push(pred.var_epistemic.values()[j]);
            cols[2].push(pred.var_aleatoric.values()[j]);
            cols[3].push(pred.var_total.values()[j]);
            cols[4].push(gt.values()[j]);
        }
    }
    if cols[0].is_empty() {
        return Err(Error::Empty("no valid pixels in any image".into()));
    }
    let [mean, ep, al, total, depth] = cols;
    let pred = GaussianPrediction {
        mean: Raster::row(mean)?,
        var_epistemic: Raster::row(ep)?,
        var_aleatoric: Raster::row(al)?,
        var_total: Raster::row(total)?,
    };
    Ok((pred, DepthRaster::dense(Raster::row(depth)?)?))
}

fn mean_of(vs: impl Iterator<Item = f64>, n: usize) -> f64 {
    vs.sum::<f64>() / n as f64
}

fn mean_curve<'a>(curves: impl Iterator<Item = &'a [f64]> + Clone, n: usize) -> Vec<f64> {
    let len = curves.clone().next().map_or(0, <[f64]>::len);
    (0..len)
        .map(|k| mean_of(curves.clone().map(|c| c[k]), n))
        .collect()
}

/// Runs the selected metrics over a set of (prediction, ground truth) images.
pub fn evaluate(
    items: &[(GaussianPrediction, DepthRaster)],
    sel: MetricSelection,
    aggregation: Aggregation,
) -> Result<Evaluation> {
    if items.is_empty() {
        return Err(Error::Empty("no images to evaluate".into()));
    }
    let n_pixels = items.iter().map(|(_, gt)| gt.valid_count()).sum();
    let (depth, calibration, sparsification) = match aggregation {
        Aggregation::Pooled => {
            let (pred, gt) = pool(items)?;
            evaluate_one(&pred, &gt, sel)?
        }
        Aggregation::PerImage => {
            let per: Vec<_> = items
                .iter()
                .map(|(p, g)| evaluate_one(p, g, sel))
                .collect::<Result<_>>()?;
            let n = per.len();
            let depth = sel.depth.then(|| {
                let ms: Vec<DepthMetrics> = per.iter().filter_map(|r| r.0).collect();
                let avg = |f: fn(&DepthMetrics) -> f64| mean_of(ms.iter().map(f), n);
                DepthMetrics {
                    abs_rel: avg(|m| m.abs_rel),
                    sq_rel: avg(|m| m.sq_rel),
                    rmse: avg(|m| m.rmse),
                    rmse_log: avg(|m| m.rmse_log),
                    delta1: avg(|m| m.delta1),
                    delta2: avg(|m| m.delta2),
                    delta3: avg(|m| m.delta3),
                }
            });
            let calibration = sel.auce.then(|| {
                let cs: Vec<&CalibrationCurve> = per.iter().filter_map(|r| r.1.as_ref()).collect();
                let mut curve = CalibrationCurve::from_coverage(mean_curve(
                    cs.iter().map(|c| c.coverage.as_slice()),
                    n,
                ));
                curve.auce = mean_of(cs.iter().map(|c| c.auce), n);
                curve
            });
            let sparsification = sel.ause.then(|| {
                let ss: Vec<&SparsificationResult> =
                    per.iter().filter_map(|r| r.2.as_ref()).collect();
                let mut s = SparsificationResult::from_curves(
                    mean_curve(ss.iter().map(|s| s.curve_by_uncertainty.as_slice()), n),
                    mean_curve(ss.iter().map(|s| s.curve_oracle.as_slice()), n),
                );
                s.ause = mean_of(ss.iter().map(|s| s.ause), n);
                s
            });
            (depth, calibration, sparsification)
        }
    };
    Ok(Evaluation {
        aggregation,
        n_images: items.len(),
        n_pixels,
        depth,
        calibration,
        sparsification,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image(offset: f64, n: usize) -> (GaussianPrediction, DepthRaster) {
        let gt: Vec<f64> = (0..n).map(|j| 2.0 + (j as f64 * 0.37).sin()).collect();
        let mean: Vec<f64> = gt
            .iter()
            .enumerate()
            .map(|(j, d)| d + offset * (j as f64 * 1.3).cos())
            .collect();
        let var: Vec<f64> = (0..n).map(|j| 0.01 + 0.001 * (j % 7) as f64).collect();
        (
            GaussianPrediction::from_parts(
                Raster::row(mean).unwrap(),
                Raster::row(vec![0.0; n]).unwrap(),
                Raster::row(var.clone()).unwrap(),
                Raster::row(var).unwrap(),
            )
            .unwrap(),
            DepthRaster::dense(Raster::row(gt).unwrap()).unwrap(),
        )
    }

    #[test]
    fn single_image_aggregations_agree() {
        let items = vec![image(0.1, 200)];
        let a = evaluate(&items, MetricSelection::ALL, Aggregation::Pooled).unwrap();
        let b = evaluate(&items, MetricSelection::ALL, Aggregation::PerImage).unwrap();
        assert_eq!(a.depth, b.depth);
        assert_eq!(a.calibration, b.calibration);
        let (sa, sb) = (a.sparsification.unwrap(), b.sparsification.unwrap());
        assert_eq!(sa.ause, sb.ause);
    }

    #[test]
    fn per_image_is_mean_of_images() {
        let items = vec![image(0.1, 150), image(0.3, 300)];
        let sel: MetricSelection = "depth".parse().unwrap();
        let r = evaluate(&items, sel, Aggregation::PerImage).unwrap();
        let a = depth_metrics(&items[0].0.mean, &items[0].1).unwrap();
        let b = depth_metrics(&items[1].0.mean, &items[1].1).unwrap();
        assert!((r.depth.unwrap().rmse - (a.rmse + b.rmse) / 2.0).abs() < 1e-15);
        assert!(r.calibration.is_none());
        assert_eq!(r.n_pixels, 450);
    }

    #[test]
    fn parse_selection_and_aggregation() {
        let s: MetricSelection = "auce, ause".parse().unwrap();
        assert!(!s.depth && s.auce && s.ause);
        assert!("nll".parse::<MetricSelection>().is_err());
        assert!("".parse::<MetricSelection>().is_err());
        assert_eq!(
            "per-image".parse::<Aggregation>().unwrap(),
            Aggregation::PerImage
        );
        assert!("mean".parse::<Aggregation>().is_err());
    }
}
