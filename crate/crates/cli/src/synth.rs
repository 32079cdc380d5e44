use std::collections::BTreeMap;
use std::path::Path;

use duq_core::geometry::scene::{synthetic_pair, PairSetConfig};
use duq_core::geometry::RigidTransform;
use duq_core::io::{
    depth_to_bundle, prediction_to_bundle, samples_to_bundle, write_ply, write_raster, Provenance,
};
use duq_core::synth::{depthscene, regress1d, DepthSceneConfig, NoiseKind, Regress1dConfig};
use nalgebra::Rotation3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{at, io_at, CliError, Result};
use crate::meta::{config_hash, ply_comments, provenance_value, write_json, write_sidecar};
use crate::tabular::write_csv;
use crate::{SynthArgs, SynthKind};

const COMMAND: &str = "synth";

/// Seed of the `i`-th item drawn under master seed `seed`.
pub fn item_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add(i as u64)
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("configs are plain data")
}

fn provenance(seeds: BTreeMap<String, u64>, hash: &str) -> Provenance {
    Provenance {
        inputs: Vec::new(),
        seeds,
        config_hash: hash.to_string(),
    }
}

pub fn run(a: SynthArgs) -> Result<()> {
    if a.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    io_at(&a.out_dir, std::fs::create_dir_all(&a.out_dir))?;
    match a.kind {
        SynthKind::Regress1d => regress(&a),
        SynthKind::Depthscene => scenes(&a),
        SynthKind::Pairset => pairs(&a),
    }
}

fn manifest(a: &SynthArgs, kind: &str, config: &Value, hash: &str, items: Value) -> Result<()> {
    let doc = json!({
        "command": COMMAND,
        "kind": kind,
        "n": a.n,
        "config": config,
        "provenance": provenance_value(&provenance(
            BTreeMap::from([("seed".to_string(), a.seed)]),
            hash,
        )),
        "items": items,
    });
    write_json(&a.out_dir.join("manifest.json"), &doc)
}

fn regress(a: &SynthArgs) -> Result<()> {
    let noise: NoiseKind = match &a.noise {
        Some(s) => s
            .parse()
            .map_err(|e: duq_core::Error| CliError::Usage(e.to_string()))?,
        None => NoiseKind::default(),
    };
    let cfg = Regress1dConfig {
        noise,
        ..Default::default()
    };
    let config = json!({"kind": "regress1d", "n": a.n, "generator": to_json(&cfg)});
    let hash = config_hash(&config)?;
    let data = regress1d(&cfg, a.n, &mut ChaCha8Rng::seed_from_u64(a.seed))?;
    let rows: Vec<Vec<String>> = (0..a.n)
        .map(|i| {
            vec![
                data.x[i].to_string(),
                data.y[i].to_string(),
                data.b[i].to_string(),
            ]
        })
        .collect();
    let path = a.out_dir.join("data.csv");
    write_csv(&path, &["x", "y", "b"], &rows)?;
    let prov = provenance(BTreeMap::from([("seed".to_string(), a.seed)]), &hash);
    write_sidecar(&path, COMMAND, &prov)?;
    manifest(
        a,
        "regress1d",
        &config,
        &hash,
        json!([{"data": "data.csv", "seed": a.seed}]),
    )?;
    eprintln!("wrote {} points to {}", a.n, path.display());
    Ok(())
}

fn scenes(a: &SynthArgs) -> Result<()> {
    if a.noise.is_some() {
        return Err(CliError::Usage(
            "--noise does not apply to depthscene; its predictions are calibrated by construction"
                .into(),
        ));
    }
    let cfg = DepthSceneConfig::default();
    let config = json!({"kind": "depthscene", "n": a.n, "generator": to_json(&cfg)});
    let hash = config_hash(&config)?;
    let mut items = Vec::new();
    for i in 0..a.n {
        let seed = item_seed(a.seed, i);
        let scene = depthscene(&cfg, &mut ChaCha8Rng::seed_from_u64(seed))?;
        let prov = provenance(BTreeMap::from([("seed".to_string(), seed)]), &hash);
        let names = [
            format!("scene_{i:03}_samples.duq"),
            format!("scene_{i:03}_pred.duq"),
            format!("scene_{i:03}_gt.duq"),
        ];
        let bundles = [
            samples_to_bundle(&scene.samples)?,
            prediction_to_bundle(&scene.prediction)?,
            depth_to_bundle(&scene.ground_truth)?,
        ];
        for (name, bundle) in names.iter().zip(&bundles) {
            let path = a.out_dir.join(name);
            at(&path, write_raster(bundle, &path))?;
            write_sidecar(&path, COMMAND, &prov)?;
        }
        items.push(json!({
            "samples": names[0],
            "prediction": names[1],
            "ground_truth": names[2],
            "seed": seed,
        }));
    }
    manifest(a, "depthscene", &config, &hash, Value::Array(items))?;
    eprintln!("wrote {} scenes to {}", a.n, a.out_dir.display());
    Ok(())
}

fn pairs(a: &SynthArgs) -> Result<()> {
    let mut cfg = PairSetConfig::default();
    match a.noise.as_deref() {
        None | Some("corrupt") => {}
        Some("clean") => cfg.noise.corrupt = false,
        Some(other) => {
            return Err(CliError::Usage(format!(
                "unknown pairset noise '{other}', expected corrupt or clean"
            )))
        }
    }
    let config = json!({"kind": "pairset", "n": a.n, "generator": to_json(&cfg)});
    let hash = config_hash(&config)?;
    let mut items = Vec::new();
    for i in 0..a.n {
        let seed = item_seed(a.seed, i);
        let pair = synthetic_pair(&cfg, &mut ChaCha8Rng::seed_from_u64(seed))?;
        let clouds = pair.clouds(&cfg)?;
        let prov = provenance(BTreeMap::from([("seed".to_string(), seed)]), &hash);
        let comments = ply_comments(COMMAND, &prov);
        let source = format!("pair_{i:03}_source.ply");
        let target = format!("pair_{i:03}_target.ply");
        write_cloud(&a.out_dir.join(&source), &clouds.source, &comments)?;
        write_cloud(&a.out_dir.join(&target), &clouds.target, &comments)?;
        items.push(json!({
            "source": source,
            "target": target,
            "seed": seed,
            "ground_truth": transform_json(&clouds.ground_truth),
        }));
    }
    manifest(a, "pairset", &config, &hash, Value::Array(items))?;
    eprintln!("wrote {} pairs to {}", a.n, a.out_dir.display());
    Ok(())
}

fn write_cloud(
    path: &Path,
    cloud: &duq_core::geometry::UncertainPointCloud,
    comments: &[String],
) -> Result<()> {
    at(path, write_ply(path, cloud, comments))
}

/// Rotation as an axis-angle vector (radians) plus translation, which
/// stays a valid rotation after rounding to the report precision.
pub fn transform_json(t: &RigidTransform) -> Value {
    let axis_angle = Rotation3::from_matrix_unchecked(*t.rotation()).scaled_axis();
    json!({
        "rotation_vector": [axis_angle.x, axis_angle.y, axis_angle.z],
        "translation": [t.translation().x, t.translation().y, t.translation().z],
    })
}
