use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use duq_core::geometry::{
    backproject as lift, icp_align, percentile_filter, percentile_sweep, CameraIntrinsics,
    CloudPair, IcpConfig, RigidTransform,
};
use duq_core::io::{depth_from_bundle, read_ply, read_raster, write_ply, PlaneKind, RasterBundle};
use duq_core::Raster;
use nalgebra::Vector3;
use serde_json::{json, Value};

use crate::error::{at, io_at, CliError, Result};
use crate::meta::{derived, ply_comments, provenance_value, read_json, write_json, write_sidecar};
use crate::synth::transform_json;
use crate::{BackprojectArgs, IcpArgs, IcpOptions, SweepArgs};

/// Per-pixel sigma from a bundle: its single sigma plane, or the square
/// root of its last variance plane (total variance for a prediction).
fn sigma_plane(path: &Path, b: &RasterBundle) -> Result<Raster> {
    let sigma = b.indices_of(PlaneKind::Sigma);
    let var = b.indices_of(PlaneKind::Var);
    match (sigma.as_slice(), var.last()) {
        ([i], _) => at(path, b.raster(*i)),
        ([], Some(&i)) => Ok(at(path, b.raster(i))?.map(f64::sqrt)),
        _ => Err(CliError::Data(format!(
            "{}: need one sigma plane or a variance plane to take sigma from",
            path.display()
        ))),
    }
}

pub fn backproject(a: BackprojectArgs) -> Result<()> {
    let intrinsics = CameraIntrinsics::new(a.fx, a.fy, a.cx, a.cy)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let depth_bundle = at(&a.depth, read_raster(&a.depth))?;
    let depth = at(&a.depth, depth_from_bundle(&depth_bundle))?;
    let sigma_path = a.sigma.clone().unwrap_or_else(|| a.depth.clone());
    let sigma = if sigma_path == a.depth {
        sigma_plane(&a.depth, &depth_bundle)?
    } else {
        sigma_plane(&sigma_path, &at(&sigma_path, read_raster(&sigma_path))?)?
    };
    let cloud = lift(&depth, &sigma, &intrinsics, a.stride)?;
    let mut inputs = vec![a.depth.as_path()];
    if sigma_path != a.depth {
        inputs.push(sigma_path.as_path());
    }
    let config = json!({
        "intrinsics": [a.fx, a.fy, a.cx, a.cy],
        "stride": a.stride,
    });
    let prov = derived(&inputs, &config)?;
    at(
        &a.out,
        write_ply(&a.out, &cloud, &ply_comments("backproject", &prov)),
    )?;
    eprintln!("wrote {} points to {}", cloud.len(), a.out.display());
    Ok(())
}

fn icp_config(o: &IcpOptions) -> IcpConfig {
    IcpConfig {
        max_iterations: o.max_iter,
        tol_delta_rmse: o.tol,
        max_corr_dist: o.max_corr_dist,
        initial: RigidTransform::identity(),
    }
}

fn icp_options_json(o: &IcpOptions) -> Value {
    json!({"max_iter": o.max_iter, "tol": o.tol, "max_corr_dist": o.max_corr_dist})
}

fn check_percentile(q: f64) -> Result<()> {
    if q > 0.0 && q <= 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "percentiles must lie in (0, 1], got {q}"
        )))
    }
}

pub fn icp(a: IcpArgs) -> Result<()> {
    check_percentile(a.percentile)?;
    let source = at(&a.source, read_ply(&a.source))?.cloud;
    let target = at(&a.target, read_ply(&a.target))?.cloud;
    let src = percentile_filter(&source, a.percentile)?;
    let tgt = percentile_filter(&target, a.percentile)?;
    let result = icp_align(&src, &tgt, &icp_config(&a.icp))?;
    let r = result.transform.rotation();
    let t = result.transform.translation();
    let config = json!({"percentile": a.percentile, "icp": icp_options_json(&a.icp)});
    let prov = derived(&[&a.source, &a.target], &config)?;
    let doc = json!({
        "percentile": a.percentile,
        "n_source": src.len(),
        "n_target": tgt.len(),
        "transform": {
            "rotation": [[r[(0, 0)], r[(0, 1)], r[(0, 2)]], [r[(1, 0)], r[(1, 1)], r[(1, 2)]], [r[(2, 0)], r[(2, 1)], r[(2, 2)]]],
            "translation": [t.x, t.y, t.z],
        },
        "pose": transform_json(&result.transform),
        "iterations": result.iterations,
        "converged": result.converged,
        "final_rmse": result.final_rmse,
        "matched_fraction": result.matched_fraction,
        "max_corr_dist": result.max_corr_dist,
        "provenance": provenance_value(&prov),
    });
    match &a.out {
        Some(path) => {
            write_json(path, &doc)?;
            eprintln!(
                "{} iterations, rmse {:.6} m; wrote {}",
                result.iterations,
                result.final_rmse,
                path.display()
            );
        }
        None => print!("{}", duq_core::io::to_canonical_json(&doc)),
    }
    Ok(())
}

fn manifest_error(path: &Path, what: &str) -> CliError {
    CliError::Data(format!("{}: {what}", path.display()))
}

fn vec3(path: &Path, v: Option<&Value>, what: &str) -> Result<Vector3<f64>> {
    let xs: Vec<f64> = v
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(Value::as_f64).collect())
        .unwrap_or_default();
    match xs.as_slice() {
        [x, y, z] => Ok(Vector3::new(*x, *y, *z)),
        _ => Err(manifest_error(
            path,
            &format!("{what} must be three numbers"),
        )),
    }
}

/// Pairs listed in a pairset manifest; cloud paths are relative to it.
fn load_pairs(path: &Path) -> Result<Vec<CloudPair>> {
    let doc = read_json(path)?;
    let items = doc
        .get("items")
        .and_then(Value::as_array)
        .ok_or_else(|| manifest_error(path, "no \"items\" list; is this a pairset manifest?"))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let file = |key: &str| -> Result<PathBuf> {
                item.get(key)
                    .and_then(Value::as_str)
                    .map(|f| base.join(f))
                    .ok_or_else(|| manifest_error(path, &format!("item {i} has no \"{key}\"")))
            };
            let (s, t) = (file("source")?, file("target")?);
            let gt = item.get("ground_truth").ok_or_else(|| {
                manifest_error(path, &format!("item {i} has no \"ground_truth\""))
            })?;
            let rv = vec3(path, gt.get("rotation_vector"), "rotation_vector")?;
            let tr = vec3(path, gt.get("translation"), "translation")?;
            let angle = rv.norm();
            let axis = if angle > 0.0 {
                rv / angle
            } else {
                Vector3::z()
            };
            Ok(CloudPair {
                source: at(&s, read_ply(&s))?.cloud,
                target: at(&t, read_ply(&t))?.cloud,
                ground_truth: RigidTransform::from_axis_angle(axis, angle, tr),
            })
        })
        .collect()
}

/// Two decimals when that is exact, so the defaults print as 0.30 ... 1.00.
fn format_percentile(q: f64) -> String {
    let short = format!("{q:.2}");
    if short.parse::<f64>() == Ok(q) {
        short
    } else {
        q.to_string()
    }
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    for &q in &a.percentiles {
        check_percentile(q)?;
    }
    let pairs = load_pairs(&a.pairs)?;
    let rows = percentile_sweep(&pairs, &a.percentiles, &icp_config(&a.icp))?;
    let mut csv = String::from("percentile,rmse_t_m,rmse_r_deg,n_pairs,n_failed\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{},{}",
            format_percentile(r.percentile),
            r.rmse_t(),
            r.rmse_r(),
            r.n_pairs(),
            r.n_failed
        )
        .expect("write to String");
    }
    let config = json!({"percentiles": a.percentiles, "icp": icp_options_json(&a.icp)});
    match &a.out {
        Some(path) => {
            io_at(path, std::fs::write(path, &csv))?;
            write_sidecar(path, "sweep", &derived(&[&a.pairs], &config)?)?;
            eprint!("{csv}");
        }
        None => print!("{csv}"),
    }
    Ok(())
}
