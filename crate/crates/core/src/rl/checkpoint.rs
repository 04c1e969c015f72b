//! Versioned binary checkpoint format for all parameter arrays.
//!
//! Layout (little endian): magic `CAUVCKP1`, format version u32, config hash
//! u64, block count u32, then per block a length-prefixed name, the f64 count
//! as u64 and the raw values. The config hash binds a checkpoint to the
//! structural configuration it was trained under.

use super::trainer::Policies;
use thiserror::Error;

const MAGIC: &[u8; 8] = b"CAUVCKP1";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum CheckpointError {
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint format version {0}")]
    BadVersion(u32),
    #[error("checkpoint is truncated")]
    Truncated,
    #[error("checkpoint does not match the configured networks: {0}")]
    ShapeMismatch(String),
}

/// Named parameter blocks plus the config hash.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config_hash: u64,
    pub blocks: Vec<(String, Vec<f64>)>,
}

impl Checkpoint {
    pub fn from_policies(policies: &Policies, config_hash: u64) -> Self {
        let mut blocks = Vec::new();
        for (i, a) in policies.micro_actors.iter().enumerate() {
            blocks.push((format!("micro_actor.{i}.net"), a.net.params().to_vec()));
            blocks.push((format!("micro_actor.{i}.log_std"), a.log_std.clone()));
        }
        for (i, c) in policies.micro_critics.iter().enumerate() {
            blocks.push((format!("micro_critic.{i}.net"), c.net.params().to_vec()));
        }
        blocks.push((
            "macro_actor.net".to_string(),
            policies.macro_actor.net.params().to_vec(),
        ));
        blocks.push((
            "macro_critic.net".to_string(),
            policies.macro_critic.net.params().to_vec(),
        ));
        Checkpoint {
            config_hash,
            blocks,
        }
    }

    /// Loads the blocks into a freshly constructed policy skeleton (which
    /// fixes all shapes); errors when names or lengths disagree.
    pub fn apply_to(&self, policies: &mut Policies) -> Result<(), CheckpointError> {
        let mut lookup: std::collections::BTreeMap<&str, &Vec<f64>> = self
            .blocks
            .iter()
            .map(|(n, v)| (n.as_str(), v))
            .collect();
        let mut take = |name: String, dst: &mut [f64]| -> Result<(), CheckpointError> {
            let src = lookup
                .remove(name.as_str())
                .ok_or_else(|| CheckpointError::ShapeMismatch(format!("missing block {name}")))?;
            if src.len() != dst.len() {
                return Err(CheckpointError::ShapeMismatch(format!(
                    "block {name}: {} values, expected {}",
                    src.len(),
                    dst.len()
                )));
            }
            dst.copy_from_slice(src);
            Ok(())
        };
        for i in 0..policies.micro_actors.len() {
            take(
                format!("micro_actor.{i}.net"),
                policies.micro_actors[i].net.params_mut(),
            )?;
            take(
                format!("micro_actor.{i}.log_std"),
                &mut policies.micro_actors[i].log_std,
            )?;
        }
        for i in 0..policies.micro_critics.len() {
            take(
                format!("micro_critic.{i}.net"),
                policies.micro_critics[i].net.params_mut(),
            )?;
        }
        take(
            "macro_actor.net".to_string(),
            policies.macro_actor.net.params_mut(),
        )?;
        take(
            "macro_critic.net".to_string(),
            policies.macro_critic.net.params_mut(),
        )?;
        if !lookup.is_empty() {
            return Err(CheckpointError::ShapeMismatch(format!(
                "unexpected blocks: {:?}",
                lookup.keys().collect::<Vec<_>>()
            )));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.config_hash.to_le_bytes());
        out.extend_from_slice(&(self.blocks.len() as u32).to_le_bytes());
        for (name, values) in &self.blocks {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(values.len() as u64).to_le_bytes());
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut pos = 0usize;
        let take = |pos: &mut usize, n: usize| -> Result<&[u8], CheckpointError> {
            if *pos + n > bytes.len() {
                return Err(CheckpointError::Truncated);
            }
            let s = &bytes[*pos..*pos + n];
            *pos += n;
            Ok(s)
        };
        if take(&mut pos, 8)? != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(CheckpointError::BadVersion(version));
        }
        let config_hash = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
        let n_blocks = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
        let mut blocks = Vec::with_capacity(n_blocks as usize);
        for _ in 0..n_blocks {
            let name_len = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
            let name = String::from_utf8(take(&mut pos, name_len)?.to_vec())
                .map_err(|_| CheckpointError::Truncated)?;
            let len = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
            let mut values = Vec::with_capacity(len);
            for _ in 0..len {
                values.push(f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()));
            }
            blocks.push((name, values));
        }
        Ok(Checkpoint {
            config_hash,
            blocks,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvConfig;
    use crate::rl::trainer::TrainConfig;

    fn cfg() -> TrainConfig {
        TrainConfig {
            env: EnvConfig {
                n_auvs: 2,
                macro_steps: 1,
                micro_steps: 2,
                ..EnvConfig::default()
            },
            hidden_actor: 8,
            hidden_critic: 8,
            hidden_cauv: 4,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn round_trip_preserves_everything() {
        let policies = Policies::new(&cfg());
        let ckpt = Checkpoint::from_policies(&policies, 0xdead_beef);
        let bytes = ckpt.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, ckpt);
        let mut restored = Policies::new(&TrainConfig {
            seed: 99,
            ..cfg()
        });
        assert_ne!(restored.checksum(), policies.checksum());
        back.apply_to(&mut restored).unwrap();
        assert_eq!(restored.checksum(), policies.checksum());
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let policies = Policies::new(&cfg());
        let bytes = Checkpoint::from_policies(&policies, 1).to_bytes();
        assert_eq!(
            Checkpoint::from_bytes(&bytes[..10]).unwrap_err(),
            CheckpointError::Truncated
        );
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(
            Checkpoint::from_bytes(&bad).unwrap_err(),
            CheckpointError::BadMagic
        );
    }

    #[test]
    fn shape_mismatch_is_detected() {
        let policies = Policies::new(&cfg());
        let ckpt = Checkpoint::from_policies(&policies, 1);
        let mut other_cfg = cfg();
        other_cfg.hidden_actor = 16;
        let mut other = Policies::new(&other_cfg);
        assert!(matches!(
            ckpt.apply_to(&mut other),
            Err(CheckpointError::ShapeMismatch(_))
        ));
    }
}
