//! Parameter checkpoints: a flat little-endian f64 payload plus a JSON
//! manifest describing the network dimensions and named segments.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::{AgentConfig, AgentNet, CriticConfig, CriticNet, Segment};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("manifest is not valid JSON: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("payload holds {found} parameters, manifest expects {expected}")]
    PayloadSize { found: usize, expected: usize },
    #[error("payload length {0} is not a multiple of 8 bytes")]
    MalformedPayload(usize),
}

/// Manifest entry for one network's slice of the payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetEntry {
    pub name: String,
    pub offset: usize,
    pub len: usize,
    pub segments: Vec<Segment>,
}

/// Sidecar manifest; refuses to load on version mismatch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format_version: u32,
    pub n_agents: usize,
    /// Critic-side per-agent observation width.
    pub critic_obs_dim: usize,
    /// Agent-side observation width.
    pub agent_obs_dim: usize,
    pub action_space_size: usize,
    pub hidden_units: usize,
    pub groups: Vec<usize>,
    pub nets: Vec<NetEntry>,
}

/// A loaded checkpoint: reconstructed critic and agents.
pub struct Checkpoint {
    pub manifest: CheckpointManifest,
    pub critic: CriticNet,
    pub agents: Vec<AgentNet>,
}

fn paths(base: &Path) -> (PathBuf, PathBuf) {
    let base = base.with_extension("");
    (
        base.with_extension("params"),
        base.with_extension("manifest.json"),
    )
}

/// Writes `<base>.params` and `<base>.manifest.json`.
pub fn save_checkpoint(
    base: &Path,
    critic: &CriticNet,
    agents: &[AgentNet],
) -> Result<(), CheckpointError> {
    let (params_path, manifest_path) = paths(base);
    let mut nets = Vec::with_capacity(1 + agents.len());
    let mut payload: Vec<u8> = Vec::new();
    let mut offset = 0usize;

    let mut push_net = |name: String, data: &[f64], segments: &[Segment], payload: &mut Vec<u8>| {
        for v in data {
            payload.extend_from_slice(&v.to_le_bytes());
        }
        nets.push(NetEntry {
            name,
            offset,
            len: data.len(),
            segments: segments.to_vec(),
        });
        offset += data.len();
    };

    push_net(
        "critic".to_string(),
        critic.params().as_slice(),
        critic.params().segments(),
        &mut payload,
    );
    for (i, agent) in agents.iter().enumerate() {
        push_net(
            format!("agent{i}"),
            agent.params().as_slice(),
            agent.params().segments(),
            &mut payload,
        );
    }

    let ccfg = critic.config();
    let acfg = agents
        .first()
        .map(|a| a.config().obs_dim)
        .unwrap_or(ccfg.obs_dim);
    let manifest = CheckpointManifest {
        format_version: CHECKPOINT_FORMAT_VERSION,
        n_agents: ccfg.n_agents,
        critic_obs_dim: ccfg.obs_dim,
        agent_obs_dim: acfg,
        action_space_size: ccfg.act_dim,
        hidden_units: ccfg.hidden,
        groups: ccfg.groups.clone(),
        nets,
    };

    std::fs::write(&params_path, &payload)?;
    std::fs::write(&manifest_path, serde_json::to_vec_pretty(&manifest)?)?;
    Ok(())
}

/// Loads a checkpoint from `<base>.params` + `<base>.manifest.json`;
/// `base` may carry either extension or none.
pub fn load_checkpoint(base: &Path) -> Result<Checkpoint, CheckpointError> {
    let (params_path, manifest_path) = paths(base);
    let manifest: CheckpointManifest =
        serde_json::from_slice(&std::fs::read(&manifest_path)?)?;
    if manifest.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(CheckpointError::VersionMismatch {
            found: manifest.format_version,
            expected: CHECKPOINT_FORMAT_VERSION,
        });
    }

    let bytes = std::fs::read(&params_path)?;
    if bytes.len() % 8 != 0 {
        return Err(CheckpointError::MalformedPayload(bytes.len()));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let expected: usize = manifest.nets.iter().map(|n| n.len).sum();
    if values.len() != expected {
        return Err(CheckpointError::PayloadSize {
            found: values.len(),
            expected,
        });
    }

    let mut critic = CriticNet::new(CriticConfig {
        n_agents: manifest.n_agents,
        obs_dim: manifest.critic_obs_dim,
        act_dim: manifest.action_space_size,
        hidden: manifest.hidden_units,
        head_hidden: manifest.hidden_units,
        groups: manifest.groups.clone(),
    })
    .expect("manifest dimensions construct a critic");
    let mut agents: Vec<AgentNet> = (0..manifest.n_agents)
        .map(|_| {
            AgentNet::new(AgentConfig {
                obs_dim: manifest.agent_obs_dim,
                n_actions: manifest.action_space_size,
                hidden: manifest.hidden_units,
            })
        })
        .collect();

    for entry in &manifest.nets {
        let slice = &values[entry.offset..entry.offset + entry.len];
        if entry.name == "critic" {
            if critic.params().len() != slice.len() {
                return Err(CheckpointError::PayloadSize {
                    found: slice.len(),
                    expected: critic.params().len(),
                });
            }
            critic.params_mut().as_mut_slice().copy_from_slice(slice);
        } else if let Some(idx) = entry
            .name
            .strip_prefix("agent")
            .and_then(|s| s.parse::<usize>().ok())
        {
            if agents[idx].params().len() != slice.len() {
                return Err(CheckpointError::PayloadSize {
                    found: slice.len(),
                    expected: agents[idx].params().len(),
                });
            }
            agents[idx].params_mut().as_mut_slice().copy_from_slice(slice);
        }
    }

    Ok(Checkpoint {
        manifest,
        critic,
        agents,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn networks() -> (CriticNet, Vec<AgentNet>) {
        let mut rng = StdRng::seed_from_u64(5);
        let mut critic = CriticNet::new(CriticConfig {
            n_agents: 2,
            obs_dim: 3,
            act_dim: 2,
            hidden: 4,
            head_hidden: 4,
            groups: vec![0, 0],
        })
        .unwrap();
        critic.init(&mut rng);
        let agents: Vec<AgentNet> = (0..2)
            .map(|_| {
                let mut a = AgentNet::new(AgentConfig {
                    obs_dim: 2,
                    n_actions: 2,
                    hidden: 4,
                });
                a.init(&mut rng);
                a
            })
            .collect();
        (critic, agents)
    }

    #[test]
    fn round_trip_restores_every_parameter() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("ckpt_final");
        let (critic, agents) = networks();
        save_checkpoint(&base, &critic, &agents).unwrap();

        let loaded = load_checkpoint(&base).unwrap();
        assert_eq!(loaded.critic.params().as_slice(), critic.params().as_slice());
        for (l, a) in loaded.agents.iter().zip(&agents) {
            assert_eq!(l.params().as_slice(), a.params().as_slice());
        }
        // Functional equality on a probe input.
        let obs = vec![vec![0.1, 0.2, 0.3], vec![-0.1, 0.0, 0.4]];
        let enc = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(
            loaded.critic.forward(&obs, &enc).unwrap(),
            critic.forward(&obs, &enc).unwrap()
        );
    }

    #[test]
    fn loads_from_either_extension() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("ckpt");
        let (critic, agents) = networks();
        save_checkpoint(&base, &critic, &agents).unwrap();
        assert!(load_checkpoint(&dir.path().join("ckpt.params")).is_ok());
        assert!(load_checkpoint(&dir.path().join("ckpt.manifest.json")).is_ok());
    }

    #[test]
    fn version_mismatch_refuses_to_load() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("ckpt");
        let (critic, agents) = networks();
        save_checkpoint(&base, &critic, &agents).unwrap();
        let manifest_path = dir.path().join("ckpt.manifest.json");
        let text = std::fs::read_to_string(&manifest_path)
            .unwrap()
            .replace("\"format_version\": 1", "\"format_version\": 99");
        std::fs::write(&manifest_path, text).unwrap();
        assert!(matches!(
            load_checkpoint(&base),
            Err(CheckpointError::VersionMismatch { found: 99, .. })
        ));
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("ckpt");
        let (critic, agents) = networks();
        save_checkpoint(&base, &critic, &agents).unwrap();
        let params_path = dir.path().join("ckpt.params");
        let mut bytes = std::fs::read(&params_path).unwrap();
        bytes.truncate(bytes.len() - 16);
        std::fs::write(&params_path, bytes).unwrap();
        assert!(matches!(
            load_checkpoint(&base),
            Err(CheckpointError::PayloadSize { .. })
        ));
    }
}
