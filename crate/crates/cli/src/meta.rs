//! Seeds and config hashes attached to every output.
//!
//! JSON outputs carry a `provenance` block, PLY files carry header
//! comments, and binary or CSV outputs get a `<file>.meta.json` sidecar.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use duq_core::io::{read_ply, to_canonical_json, Provenance};
use serde_json::{json, Value};

use crate::error::{at, io_at, Result};

pub fn config_hash(config: &Value) -> Result<String> {
    Ok(duq_core::io::config_hash(config)?)
}

pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

pub fn write_sidecar(output: &Path, command: &str, provenance: &Provenance) -> Result<()> {
    let doc = json!({
        "command": command,
        "file": output.file_name().map(|n| n.to_string_lossy()),
        "provenance": serde_json::to_value(provenance).map_err(duq_core::Error::from)?,
    });
    let path = sidecar_path(output);
    io_at(&path, std::fs::write(&path, to_canonical_json(&doc)))
}

pub fn write_json(path: &Path, doc: &Value) -> Result<()> {
    io_at(path, std::fs::write(path, to_canonical_json(doc)))
}

pub fn provenance_value(p: &Provenance) -> Value {
    serde_json::to_value(p).expect("provenance is plain data")
}

pub fn ply_comments(command: &str, provenance: &Provenance) -> Vec<String> {
    let mut out = vec![format!("generated_by duq {command}")];
    out.extend(
        provenance
            .seeds
            .iter()
            .map(|(k, v)| format!("seed {k}={v}")),
    );
    out.push(format!("config_hash {}", provenance.config_hash));
    out
}

/// Seeds recorded for `input`, keyed `<file name>:<seed name>`.
///
/// Looks at a sidecar, PLY comments, or an embedded `provenance` block, in
/// that order. Inputs without any record contribute nothing.
pub fn inherited_seeds(input: &Path) -> Result<BTreeMap<String, u64>> {
    let name = input.file_name().map_or_else(
        || input.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    );
    let mut seeds = BTreeMap::new();
    let sidecar = sidecar_path(input);
    let own = if sidecar.exists() {
        embedded_seeds(&read_json(&sidecar)?)
    } else if input.extension().is_some_and(|e| e == "ply") {
        let ply = at(input, read_ply(input))?;
        ply.comments
            .iter()
            .filter_map(|c| c.strip_prefix("seed "))
            .filter_map(|c| c.split_once('='))
            .filter_map(|(k, v)| Some((k.to_string(), v.parse().ok()?)))
            .collect()
    } else if input.extension().is_some_and(|e| e == "json") {
        embedded_seeds(&read_json(input)?)
    } else {
        BTreeMap::new()
    };
    for (k, v) in own {
        seeds.insert(format!("{name}:{k}"), v);
    }
    Ok(seeds)
}

fn embedded_seeds(doc: &Value) -> BTreeMap<String, u64> {
    doc.pointer("/provenance/seeds")
        .and_then(Value::as_object)
        .map(|m| {
            m.iter()
                .filter_map(|(k, v)| Some((k.clone(), v.as_u64()?)))
                .collect()
        })
        .unwrap_or_default()
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = io_at(path, std::fs::read_to_string(path))?;
    at(
        path,
        serde_json::from_str(&text).map_err(duq_core::Error::from),
    )
}

/// Provenance for a command that consumes `inputs` and draws no randomness
/// of its own.
pub fn derived(inputs: &[&Path], config: &Value) -> Result<Provenance> {
    let mut seeds = BTreeMap::new();
    for p in inputs {
        seeds.extend(inherited_seeds(p)?);
    }
    Ok(Provenance {
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        seeds,
        config_hash: config_hash(config)?,
    })
}
