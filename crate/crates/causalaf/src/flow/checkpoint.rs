//! Versioned flow checkpoints.
//!
//! A checkpoint is a JSON document holding the flow configuration, every
//! parameter array (flattened) and the sampling state needed to resume:
//! master seed and next episode index. Loading a checkpoint and re-sampling
//! with the same seed reproduces identical graphs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{FlowConfig, FlowModel};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowCheckpoint {
    pub version: u32,
    pub config: FlowConfig,
    pub params: Vec<f64>,
    /// Master RNG seed of the run that produced this checkpoint.
    pub master_seed: u64,
    /// Next episode index; sampling streams are derived from
    /// `(master_seed, episode)`.
    pub episode: u64,
}

impl FlowCheckpoint {
    pub fn capture(flow: &FlowModel, master_seed: u64, episode: u64) -> Self {
        FlowCheckpoint {
            version: CHECKPOINT_VERSION,
            config: flow.config().clone(),
            params: flow.to_flat(),
            master_seed,
            episode,
        }
    }

    pub fn restore(&self) -> FlowModel {
        use rand::SeedableRng;
        // Network shapes depend only on the config; the random init is
        // immediately overwritten by the stored parameters.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let mut flow = FlowModel::new(self.config.clone(), &mut rng);
        flow.set_flat(&self.params);
        flow
    }
}

pub fn save_flow(ckpt: &FlowCheckpoint, path: &Path) -> Result<()> {
    let text = serde_json::to_string(ckpt)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_flow(path: &Path) -> Result<FlowCheckpoint> {
    if !path.exists() {
        return Err(Error::MissingCheckpoint(path.display().to_string()));
    }
    let text = std::fs::read_to_string(path)?;
    let ckpt: FlowCheckpoint = serde_json::from_str(&text)?;
    if ckpt.version != CHECKPOINT_VERSION {
        return Err(Error::Config(format!(
            "checkpoint version {} unsupported (expected {CHECKPOINT_VERSION})",
            ckpt.version
        )));
    }
    Ok(ckpt)
}
