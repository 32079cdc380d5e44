use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use duq_core::io::{
    prediction_to_bundle, read_checkpoint, read_raster, samples_from_bundle, samples_to_bundle,
    write_checkpoint, write_raster, Checkpoint, Provenance, RASTER_MAGIC,
};
use duq_core::toynet::{
    ensemble_sample, mc_dropout_sample, train as train_net, Dataset, DropoutPlan, EnsembleModel,
    ToyNetConfig, TrainSettings,
};
use duq_core::{fuse_samples, PredictiveSampleSet, Raster, SigmaRaster};
use rayon::prelude::*;
use serde_json::json;

use crate::error::{at, io_at, CliError, Result};
use crate::meta::{config_hash, derived, write_sidecar};
use crate::synth::item_seed;
use crate::tabular::read_table;
use crate::{FuseArgs, PredictArgs, PredictMode, TrainArgs};

fn usage(e: duq_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim().parse::<usize>().map_err(|_| {
                CliError::Usage(format!(
                    "--config wants layer sizes like 1,32,32,2, got '{s}'"
                ))
            })
        })
        .collect()
}

pub fn train(a: TrainArgs) -> Result<()> {
    let plan: DropoutPlan = a.dropout.parse().map_err(usage)?;
    let config = ToyNetConfig::new(parse_sizes(&a.config)?, plan, a.p).map_err(usage)?;
    if config.input_dim() != a.features.len() {
        return Err(CliError::Usage(format!(
            "network takes {} inputs but {} feature columns were named",
            config.input_dim(),
            a.features.len()
        )));
    }
    if a.members == 0 {
        return Err(CliError::Usage("--members must be at least 1".into()));
    }
    let settings = TrainSettings {
        learning_rate: a.lr,
        batch_size: a.batch,
        epochs: a.epochs,
        ..Default::default()
    };
    let table = read_table(&a.data, &a.features, Some(&a.target))?;
    let data = at(
        &a.data,
        Dataset::new(
            table.inputs,
            table.targets.expect("target column requested"),
        ),
    )?;
    let run_config = json!({
        "network": serde_json::to_value(&config).map_err(duq_core::Error::from)?,
        "settings": serde_json::to_value(&settings).map_err(duq_core::Error::from)?,
        "members": a.members,
        "features": a.features,
        "target": a.target,
    });
    let hash = config_hash(&run_config)?;
    let inputs = vec![a.data.display().to_string()];

    if a.members == 1 {
        let model = train_net(&config, &data, &settings, a.seed)?;
        let ckpt = Checkpoint {
            config,
            params: model.params,
            seed: a.seed,
            settings,
            steps: model.metadata.steps as u64,
        };
        save(&a.out, &ckpt, &inputs, &hash)?;
        eprintln!(
            "trained {} steps, final epoch loss {:.6}; wrote {}",
            model.metadata.steps,
            model
                .metadata
                .epoch_loss
                .last()
                .copied()
                .unwrap_or(f64::NAN),
            a.out.display()
        );
        return Ok(());
    }

    let seeds: Vec<u64> = (0..a.members).map(|k| item_seed(a.seed, k)).collect();
    // same as train_ensemble, but keeping each member's step count
    let member_config = config.without_dropout();
    let models = seeds
        .par_iter()
        .map(|&s| train_net(&member_config, &data, &settings, s))
        .collect::<duq_core::Result<Vec<_>>>()?;
    io_at(&a.out, std::fs::create_dir_all(&a.out))?;
    for (k, (model, &seed)) in models.into_iter().zip(&seeds).enumerate() {
        let ckpt = Checkpoint {
            config: member_config.clone(),
            params: model.params,
            seed,
            settings: settings.clone(),
            steps: model.metadata.steps as u64,
        };
        save(
            &a.out.join(format!("member_{k:03}.duqm")),
            &ckpt,
            &inputs,
            &hash,
        )?;
    }
    eprintln!("trained {} members into {}", a.members, a.out.display());
    Ok(())
}

fn save(path: &Path, ckpt: &Checkpoint, inputs: &[String], hash: &str) -> Result<()> {
    at(path, write_checkpoint(ckpt, path))?;
    let prov = Provenance {
        inputs: inputs.to_vec(),
        seeds: BTreeMap::from([("seed".to_string(), ckpt.seed)]),
        config_hash: hash.to_string(),
    };
    write_sidecar(path, "train", &prov)
}

/// Network inputs plus the raster shape the predictions should take.
struct Inputs {
    rows: Vec<Vec<f64>>,
    dims: (usize, usize),
}

fn read_inputs(path: &Path, features: &[String], input_dim: usize) -> Result<Inputs> {
    let head = io_at(path, std::fs::read(path))?;
    if head.starts_with(RASTER_MAGIC) {
        let bundle = at(path, read_raster(path))?;
        if bundle.planes().len() != input_dim {
            return Err(CliError::Data(format!(
                "{}: raster has {} planes, the network takes {input_dim} features",
                path.display(),
                bundle.planes().len()
            )));
        }
        let planes = (0..input_dim)
            .map(|i| at(path, bundle.raster(i)))
            .collect::<Result<Vec<_>>>()?;
        let (w, h) = bundle.dims();
        let rows = (0..w * h)
            .map(|j| planes.iter().map(|p| p.values()[j]).collect())
            .collect();
        return Ok(Inputs { rows, dims: (w, h) });
    }
    if features.len() != input_dim {
        return Err(CliError::Usage(format!(
            "network takes {input_dim} features but {} columns were named",
            features.len()
        )));
    }
    let table = read_table(path, features, None)?;
    let n = table.inputs.len();
    Ok(Inputs {
        rows: table.inputs,
        dims: (n, 1),
    })
}

fn reshape(set: PredictiveSampleSet, (w, h): (usize, usize)) -> Result<PredictiveSampleSet> {
    let pairs = set
        .samples()
        .iter()
        .map(|s| {
            Ok((
                Raster::new(w, h, s.mean.values().to_vec())?,
                SigmaRaster::new(Raster::new(w, h, s.sigma.values().to_vec())?)?,
            ))
        })
        .collect::<duq_core::Result<Vec<_>>>()?;
    Ok(PredictiveSampleSet::from_pairs(pairs)?)
}

fn load_ensemble(dir: &Path) -> Result<EnsembleModel> {
    let mut paths: Vec<PathBuf> = io_at(dir, std::fs::read_dir(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "duqm"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no .duqm checkpoints found",
            dir.display()
        )));
    }
    let ckpts = paths
        .iter()
        .map(|p| at(p, read_checkpoint(p)))
        .collect::<Result<Vec<_>>>()?;
    let config = ckpts[0].config.clone();
    let seeds = ckpts.iter().map(|c| c.seed).collect();
    let members = ckpts.into_iter().map(|c| c.params).collect();
    at(dir, EnsembleModel::new(config, members, seeds))
}

pub fn predict(a: PredictArgs) -> Result<()> {
    let mode = match (a.mode, &a.model, &a.ensemble) {
        (Some(PredictMode::Mcdropout) | None, Some(_), None) => PredictMode::Mcdropout,
        (Some(PredictMode::Ensemble) | None, None, Some(_)) => PredictMode::Ensemble,
        (_, None, None) => {
            return Err(CliError::Usage("give --model or --ensemble".into()));
        }
        _ => {
            return Err(CliError::Usage(
                "--mode mcdropout needs --model; --mode ensemble needs --ensemble".into(),
            ))
        }
    };
    let (set, model_path, seeds, dims) = match mode {
        PredictMode::Mcdropout => {
            let path = a.model.expect("checked above");
            let ckpt = at(&path, read_checkpoint(&path))?;
            let inputs = read_inputs(&a.input, &a.features, ckpt.config.input_dim())?;
            let set =
                mc_dropout_sample(&ckpt.params, &ckpt.config, &inputs.rows, a.samples, a.seed)
                    .map_err(|e| match e {
                        duq_core::Error::Config(m) => {
                            CliError::Usage(format!("{}: {m}", path.display()))
                        }
                        other => other.into(),
                    })?;
            let seeds = BTreeMap::from([
                ("seed".to_string(), a.seed),
                ("model_seed".to_string(), ckpt.seed),
            ]);
            (set, path, seeds, inputs.dims)
        }
        PredictMode::Ensemble => {
            let dir = a.ensemble.expect("checked above");
            let ensemble = load_ensemble(&dir)?;
            let inputs = read_inputs(&a.input, &a.features, ensemble.config.input_dim())?;
            let set = ensemble_sample(&ensemble, &inputs.rows)?;
            let seeds = ensemble
                .seeds
                .iter()
                .enumerate()
                .map(|(k, &s)| (format!("member_{k:03}"), s))
                .collect();
            (set, dir, seeds, inputs.dims)
        }
    };
    let set = reshape(set, dims)?;
    at(&a.out, write_raster(&samples_to_bundle(&set)?, &a.out))?;
    let config = json!({
        "mode": match mode { PredictMode::Mcdropout => "mcdropout", PredictMode::Ensemble => "ensemble" },
        "samples": set.len(),
        "features": a.features,
    });
    let prov = Provenance {
        inputs: vec![
            model_path.display().to_string(),
            a.input.display().to_string(),
        ],
        seeds,
        config_hash: config_hash(&config)?,
    };
    write_sidecar(&a.out, "predict", &prov)?;
    eprintln!(
        "wrote {} samples of {}x{} to {}",
        set.len(),
        dims.0,
        dims.1,
        a.out.display()
    );
    Ok(())
}

pub fn fuse(a: FuseArgs) -> Result<()> {
    let bundle = at(&a.input, read_raster(&a.input))?;
    let set = at(&a.input, samples_from_bundle(&bundle))?;
    let pred = fuse_samples(&set);
    at(&a.out, write_raster(&prediction_to_bundle(&pred)?, &a.out))?;
    let prov = derived(
        &[&a.input],
        &json!({"fusion": "moment_matching", "samples": set.len()}),
    )?;
    write_sidecar(&a.out, "fuse", &prov)?;
    eprintln!("fused {} samples into {}", set.len(), a.out.display());
    Ok(())
}
