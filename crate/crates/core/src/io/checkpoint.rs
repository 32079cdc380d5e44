//! `DUQM` toy-network checkpoints.
//!
//! Version 1 layout, all fields little-endian:
//!
//! | field                         | type                 |
//! |-------------------------------|----------------------|
//! | magic `DUQM`                  | 4 bytes              |
//! | version (= 1)                 | `u32`                |
//! | layer count `L`               | `u32`                |
//! | layer sizes                   | `L` × `u32`          |
//! | dropout flags, hidden layers  | `L - 2` × `u8` (0/1) |
//! | dropout rate                  | `f64`                |
//! | init spread kind (0 variance) | `u8`                 |
//! | init spread value             | `f64`                |
//! | seed                          | `u64`                |
//! | learning rate                 | `f64`                |
//! | batch size, epochs            | 2 × `u64`            |
//! | Adam beta1, beta2, epsilon    | 3 × `f64`            |
//! | optimizer steps taken         | `u64`                |
//! | parameter count `P`           | `u64`                |
//! | parameters                    | `P` × `f64`          |
//!
//! Parameters are ordered layer by layer, weights row-major `(out, in)`
//! then bias.

use std::path::Path;

use crate::error::{Error, Result};
use crate::toynet::{ToyNetConfig, ToyNetParams, TrainSettings, INIT_VARIANCE};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"DUQM";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Tag for "the init spread is a variance".
const INIT_KIND_VARIANCE: u8 = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ToyNetConfig,
    pub params: ToyNetParams,
    pub seed: u64,
    pub settings: TrainSettings,
    pub steps: u64,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        let sizes = &self.config.layer_sizes;
        out.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
        for &s in sizes {
            out.extend_from_slice(&(s as u32).to_le_bytes());
        }
        out.extend(self.config.dropout.iter().map(|&f| u8::from(f)));
        out.extend_from_slice(&self.config.dropout_rate.to_le_bytes());
        out.push(INIT_KIND_VARIANCE);
        out.extend_from_slice(&INIT_VARIANCE.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        let s = &self.settings;
        out.extend_from_slice(&s.learning_rate.to_le_bytes());
        out.extend_from_slice(&(s.batch_size as u64).to_le_bytes());
        out.extend_from_slice(&(s.epochs as u64).to_le_bytes());
        for v in [s.beta1, s.beta2, s.epsilon] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.steps.to_le_bytes());
        let flat = self.params.to_flat();
        out.extend_from_slice(&(flat.len() as u64).to_le_bytes());
        for v in flat {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(Error::format(0, "bad magic, expected \"DUQM\""));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::format(
                4,
                format!("unsupported checkpoint version {version}"),
            ));
        }
        let at = r.pos;
        let n_sizes = r.u32()? as usize;
        if !(3..=1024).contains(&n_sizes) {
            return Err(Error::format(
                at,
                format!("implausible layer count {n_sizes}"),
            ));
        }
        let layer_sizes = (0..n_sizes)
            .map(|_| r.u32().map(|v| v as usize))
            .collect::<Result<Vec<_>>>()?;
        let at = r.pos;
        let dropout = r
            .take(n_sizes - 2)?
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(Error::format(at, format!("dropout flag {b} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let dropout_rate = r.f64()?;
        let at = r.pos;
        let kind = r.take(1)?[0];
        let spread = r.f64()?;
        if kind != INIT_KIND_VARIANCE || spread != INIT_VARIANCE {
            return Err(Error::format(
                at,
                format!("unknown init spread (kind {kind}, value {spread})"),
            ));
        }
        let seed = r.u64()?;
        let learning_rate = r.f64()?;
        let batch_size = r.u64()? as usize;
        let epochs = r.u64()? as usize;
        let (beta1, beta2, epsilon) = (r.f64()?, r.f64()?, r.f64()?);
        let steps = r.u64()?;
        let at = r.pos;
        let count = r.u64()? as usize;

        let config = ToyNetConfig {
            layer_sizes,
            dropout,
            dropout_rate,
        };
        config
            .validate()
            .map_err(|e| Error::format(8, format!("invalid network config: {e}")))?;
        if count != config.param_count() {
            return Err(Error::format(
                at,
                format!(
                    "{count} parameters stored, architecture needs {}",
                    config.param_count()
                ),
            ));
        }
        let flat = (0..count).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        if r.pos != bytes.len() {
            return Err(Error::format(
                r.pos,
                format!(
                    "trailing bytes: expected {} bytes, got {}",
                    r.pos,
                    bytes.len()
                ),
            ));
        }
        let params = ToyNetParams::from_flat(&config, &flat)?;
        Ok(Self {
            config,
            params,
            seed,
            settings: TrainSettings {
                learning_rate,
                batch_size,
                epochs,
                beta1,
                beta2,
                epsilon,
            },
            steps,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::format(
                self.bytes.len(),
                format!(
                    "truncated checkpoint: need {end} bytes, file has {}",
                    self.bytes.len()
                ),
            ));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    Checkpoint::from_bytes(&std::fs::read(path)?)
}

pub fn write_checkpoint(checkpoint: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, checkpoint.to_bytes())?;
    Ok(())
}
