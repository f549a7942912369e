//! Versioned JSON checkpoints.
//!
//! ```text
//! {
//!   "format": "argqual-checkpoint",
//!   "version": 1,
//!   "name": "...",
//!   "encoder": { descriptor },
//!   "encoder_parameters": { hashing encoder tensors } | null,
//!   "heads": [ {"weight": [...], "bias": [..]}, {...} ],   // validity, novelty
//!   "train_config": {...} | null,
//!   "contrastive_config": {...} | null,
//!   "best_epoch": n | null,
//!   "history": [ epoch records ]
//! }
//! ```

use std::path::Path;

use argqual_core::contrastive::ContrastiveConfig;
use argqual_core::encoder::{HashingEncoder, TextEncoder};
use argqual_core::mtl::{EpochRecord, LinearHead, MtlModel, TrainConfig};
use argqual_core::Error;
use serde::{Deserialize, Serialize};

use crate::encoders::{load_pretrained, EncoderDescriptor, LoadedEncoder};
use crate::error::Result;
use crate::fsutil::{read_json, write_json};

pub const FORMAT: &str = "argqual-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub name: String,
    pub encoder: EncoderDescriptor,
    /// Trained weights of the reference encoder; absent for external ones.
    pub encoder_parameters: Option<HashingEncoder>,
    pub heads: [LinearHead; 2],
    pub train_config: Option<TrainConfig>,
    pub contrastive_config: Option<ContrastiveConfig>,
    pub best_epoch: Option<usize>,
    #[serde(default)]
    pub history: Vec<EpochRecord>,
}

impl Checkpoint {
    pub fn from_model(model: &MtlModel<LoadedEncoder>, descriptor: &EncoderDescriptor) -> Self {
        Checkpoint {
            format: FORMAT.into(),
            version: VERSION,
            name: model.name.clone(),
            encoder: descriptor.clone(),
            encoder_parameters: match &model.encoder {
                LoadedEncoder::Reference(e) => Some(e.clone()),
                LoadedEncoder::External(_) => None,
            },
            heads: model.heads.clone(),
            train_config: None,
            contrastive_config: None,
            best_epoch: None,
            history: Vec::new(),
        }
    }

    /// Rebuilds the model, reconnecting external encoders.
    pub fn into_model(self) -> Result<MtlModel<LoadedEncoder>> {
        let encoder = match (self.encoder_parameters, &self.encoder) {
            (Some(params), _) => LoadedEncoder::Reference(params),
            (None, EncoderDescriptor::External { .. }) => load_pretrained(&self.encoder, None)?,
            (None, EncoderDescriptor::Reference { .. }) => {
                return Err(Error::Config("checkpoint has a reference encoder but no encoder parameters".into()).into())
            }
        };
        let dim = encoder.dim();
        if let Some(h) = self.heads.iter().find(|h| h.dim() != dim) {
            return Err(Error::Config(format!(
                "checkpoint heads expect dimension {}, encoder produces {dim}",
                h.dim()
            ))
            .into());
        }
        Ok(MtlModel::with_heads(self.name, encoder, self.heads)?)
    }
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    write_json(path, ckpt)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let ckpt: Checkpoint = read_json(path)?;
    if ckpt.format != FORMAT {
        return Err(Error::Config(format!("{}: not a checkpoint (format {:?})", path.display(), ckpt.format)).into());
    }
    if ckpt.version != VERSION {
        return Err(Error::Config(format!(
            "{}: checkpoint version {} is not supported (expected {VERSION})",
            path.display(),
            ckpt.version
        ))
        .into());
    }
    Ok(ckpt)
}
