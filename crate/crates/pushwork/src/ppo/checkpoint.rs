//! Versioned binary checkpoint container.
//!
//! Layout: an 8-byte magic, a little-endian u32 format version, a
//! little-endian u64 header length, a JSON header, then the parameter blob
//! (network weights followed by the Adam moment tensors) as little-endian
//! 64-bit reals in the header's manifest order. Everything mutable in a
//! training run is captured, so loading and resuming reproduces the
//! unbroken run bit-exactly.

use super::net::{AdamState, Matrix, PolicyParams};
use super::PpoConfig;
use crate::envs::EnvSnapshot;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

pub const CHECKPOINT_MAGIC: [u8; 8] = *b"PWCHKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0} (expected {CHECKPOINT_VERSION})")]
    BadVersion(u32),
    #[error("corrupt checkpoint header: {0}")]
    BadHeader(#[from] serde_json::Error),
    #[error("checkpoint blob truncated: expected {expected} values, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("tensor {name} has shape {rows}x{cols} but the header promised {expected_rows}x{expected_cols}")]
    ShapeMismatch {
        name: String,
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
}

/// Serializable ChaCha state: seed, stream, and word position restore the
/// generator exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        Self {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> ChaCha8Rng {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

/// Per-episode record kept for trailing statistics and run logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub index: u64,
    pub end_step: u64,
    pub length: u32,
    pub total_reward: f64,
    pub success: bool,
    pub collided: bool,
    pub episode_work: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorMeta {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    ppo: PpoConfig,
    env_steps: u64,
    episode_index: u64,
    episode_return: f64,
    rng: RngState,
    adam_t: u64,
    env: EnvSnapshot,
    recent_episodes: Vec<EpisodeRecord>,
    manifest: Vec<TensorMeta>,
}

/// Complete trainer state at a rollout boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub ppo: PpoConfig,
    pub params: PolicyParams,
    pub adam: AdamState,
    pub rng: RngState,
    pub env_steps: u64,
    pub episode_index: u64,
    /// Reward accumulated so far in the episode in progress.
    pub episode_return: f64,
    pub env: EnvSnapshot,
    pub recent_episodes: Vec<EpisodeRecord>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let manifest: Vec<TensorMeta> = self
            .params
            .tensor_views()
            .iter()
            .map(|(name, _, (rows, cols))| TensorMeta {
                name: (*name).to_string(),
                rows: *rows,
                cols: *cols,
            })
            .collect();
        let header = Header {
            ppo: self.ppo,
            env_steps: self.env_steps,
            episode_index: self.episode_index,
            episode_return: self.episode_return,
            rng: self.rng.clone(),
            adam_t: self.adam.t,
            env: self.env.clone(),
            recent_episodes: self.recent_episodes.clone(),
            manifest,
        };
        let header_json = serde_json::to_vec(&header).expect("header serializes");

        let mut out = Vec::new();
        out.extend_from_slice(&CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header_json.len() as u64).to_le_bytes());
        out.extend_from_slice(&header_json);
        for source in [&self.params, &self.adam.m, &self.adam.v] {
            for (_, values, _) in source.tensor_views() {
                for v in values {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut cursor = bytes;
        let mut magic = [0u8; 8];
        read_exact(&mut cursor, &mut magic)?;
        if magic != CHECKPOINT_MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let mut version = [0u8; 4];
        read_exact(&mut cursor, &mut version)?;
        let version = u32::from_le_bytes(version);
        if version != CHECKPOINT_VERSION {
            return Err(CheckpointError::BadVersion(version));
        }
        let mut len = [0u8; 8];
        read_exact(&mut cursor, &mut len)?;
        let header_len = u64::from_le_bytes(len) as usize;
        if cursor.len() < header_len {
            return Err(CheckpointError::Truncated {
                expected: header_len,
                found: cursor.len(),
            });
        }
        let header: Header = serde_json::from_slice(&cursor[..header_len])?;
        cursor = &cursor[header_len..];

        let per_copy: usize = header.manifest.iter().map(|m| m.rows * m.cols).sum();
        let expected = per_copy * 3;
        if cursor.len() < expected * 8 {
            return Err(CheckpointError::Truncated {
                expected,
                found: cursor.len() / 8,
            });
        }
        let mut read_params = || -> PolicyParams {
            let mut tensors = Vec::new();
            for meta in &header.manifest {
                let n = meta.rows * meta.cols;
                let mut data = Vec::with_capacity(n);
                for _ in 0..n {
                    let mut b = [0u8; 8];
                    b.copy_from_slice(&cursor[..8]);
                    cursor = &cursor[8..];
                    data.push(f64::from_le_bytes(b));
                }
                tensors.push(Matrix {
                    rows: meta.rows,
                    cols: meta.cols,
                    data,
                });
            }
            params_from_tensors(tensors)
        };
        let params = read_params();
        let m = read_params();
        let v = read_params();
        validate_shapes(&params, &header.manifest)?;

        let adam = AdamState {
            m,
            v,
            t: header.adam_t,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        };
        Ok(Checkpoint {
            ppo: header.ppo,
            params,
            adam,
            rng: header.rng,
            env_steps: header.env_steps,
            episode_index: header.episode_index,
            episode_return: header.episode_return,
            env: header.env,
            recent_episodes: header.recent_episodes,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let bytes = self.to_bytes();
        let mut file = std::fs::File::create(path).map_err(|source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        })?;
        file.write_all(&bytes).map_err(|source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|source| CheckpointError::Io {
                path: path.display().to_string(),
                source,
            })?;
        Self::from_bytes(&bytes)
    }
}

fn read_exact(cursor: &mut &[u8], buf: &mut [u8]) -> Result<(), CheckpointError> {
    if cursor.len() < buf.len() {
        return Err(CheckpointError::Truncated {
            expected: buf.len(),
            found: cursor.len(),
        });
    }
    buf.copy_from_slice(&cursor[..buf.len()]);
    *cursor = &cursor[buf.len()..];
    Ok(())
}

fn params_from_tensors(mut tensors: Vec<Matrix>) -> PolicyParams {
    // Manifest order matches PolicyParams::tensor_views.
    let b_v = tensors.pop().expect("b_v");
    let w_v = tensors.pop().expect("w_v");
    let b_pi = tensors.pop().expect("b_pi");
    let w_pi = tensors.pop().expect("w_pi");
    let b2 = tensors.pop().expect("b2");
    let w2 = tensors.pop().expect("w2");
    let b1 = tensors.pop().expect("b1");
    let w1 = tensors.pop().expect("w1");
    PolicyParams {
        w1,
        b1: b1.data,
        w2,
        b2: b2.data,
        w_pi,
        b_pi: b_pi.data,
        w_v,
        b_v: b_v.data,
    }
}

fn validate_shapes(params: &PolicyParams, manifest: &[TensorMeta]) -> Result<(), CheckpointError> {
    for ((name, data, (rows, cols)), meta) in params.tensor_views().iter().zip(manifest.iter()) {
        if *rows != meta.rows || *cols != meta.cols || data.len() != meta.rows * meta.cols {
            return Err(CheckpointError::ShapeMismatch {
                name: (*name).to_string(),
                rows: *rows,
                cols: *cols,
                expected_rows: meta.rows,
                expected_cols: meta.cols,
            });
        }
    }
    Ok(())
}
