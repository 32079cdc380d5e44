use std::path::Path;

use duq_core::io::{
    depth_from_bundle, prediction_from_bundle, read_raster, samples_from_bundle, MetricsReport,
    PlaneKind,
};
use duq_core::metrics::{evaluate, Aggregation, MetricSelection};
use duq_core::{fuse_samples, DepthRaster, GaussianPrediction};
use serde_json::json;

use crate::error::{at, io_at, CliError, Result};
use crate::meta::derived;
use crate::EvalArgs;

/// A fused prediction, or a sample set that is fused on the fly.
fn load_prediction(path: &Path) -> Result<GaussianPrediction> {
    let bundle = at(path, read_raster(path))?;
    if bundle.indices_of(PlaneKind::Sigma).is_empty() {
        at(path, prediction_from_bundle(&bundle))
    } else {
        Ok(fuse_samples(&at(path, samples_from_bundle(&bundle))?))
    }
}

fn load_truth(path: &Path) -> Result<DepthRaster> {
    at(path, depth_from_bundle(&at(path, read_raster(path))?))
}

pub fn run(a: EvalArgs) -> Result<()> {
    let sel: MetricSelection = a
        .metrics
        .parse()
        .map_err(|e: duq_core::Error| CliError::Usage(e.to_string()))?;
    let aggregation: Aggregation = a
        .aggregate
        .parse()
        .map_err(|e: duq_core::Error| CliError::Usage(e.to_string()))?;
    if a.pred.len() != a.gt.len() {
        return Err(CliError::Usage(format!(
            "{} predictions but {} ground truths; pass them in matching order",
            a.pred.len(),
            a.gt.len()
        )));
    }
    let items = a
        .pred
        .iter()
        .zip(&a.gt)
        .map(|(p, g)| Ok((load_prediction(p)?, load_truth(g)?)))
        .collect::<Result<Vec<_>>>()?;
    let eval = evaluate(&items, sel, aggregation)?;

    let inputs: Vec<&Path> = a.pred.iter().chain(&a.gt).map(|p| p.as_path()).collect();
    let config = json!({"metrics": a.metrics, "aggregate": a.aggregate});
    let report = MetricsReport::new(eval, derived(&inputs, &config)?);
    let text = report.to_json()?;
    match &a.out {
        Some(path) => {
            io_at(path, std::fs::write(path, &text))?;
            let mut summary = vec![format!("{} pixels", report.n_pixels)];
            if let Some(c) = &report.auce {
                summary.push(format!("AUCE {:.4}", c.auce));
            }
            if let Some(s) = &report.ause {
                summary.push(format!("AUSE {:.4}", s.ause));
            }
            if let Some(d) = &report.depth {
                summary.push(format!("RMSE {:.4} m", d.rmse));
            }
            eprintln!("{}; wrote {}", summary.join(", "), path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}
