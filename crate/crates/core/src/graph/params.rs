use serde::{Deserialize, Serialize};

use crate::commitment::Digest;
use crate::{Error, Result};

/// Largest supported `k_L`; histories are materialized in memory.
pub const MAX_K: u32 = 24;

/// Level structure `0 = k_0 < k_1 < ... < k_L`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct LevelConfig {
    ks: Vec<u32>,
}

impl LevelConfig {
    pub fn new(ks: Vec<u32>) -> Result<LevelConfig> {
        if ks.is_empty() {
            return Err(Error::invalid("at least one level is required"));
        }
        let mut prev = 0;
        for &k in &ks {
            if k <= prev {
                return Err(Error::invalid(format!(
                    "level exponents must be strictly increasing and positive, got {ks:?}"
                )));
            }
            prev = k;
        }
        if prev > MAX_K {
            return Err(Error::invalid(format!("k_L = {prev} exceeds the supported maximum {MAX_K}")));
        }
        Ok(LevelConfig { ks })
    }

    /// Number of levels L.
    pub fn levels(&self) -> u32 {
        self.ks.len() as u32
    }

    pub fn ks(&self) -> &[u32] {
        &self.ks
    }

    /// `k_ℓ`, with `k_0 = 0`.
    pub fn k(&self, level: u32) -> u32 {
        if level == 0 {
            0
        } else {
            self.ks[level as usize - 1]
        }
    }

    pub fn k_max(&self) -> u32 {
        self.k(self.levels())
    }

    /// `K_ℓ = k_ℓ - k_{ℓ-1}`.
    pub fn k_step(&self, level: u32) -> u32 {
        self.k(level) - self.k(level - 1)
    }

    /// Total number of steps n = 2^{k_L}.
    pub fn n(&self) -> u64 {
        1 << self.k_max()
    }

    /// Stride `Δ_ℓ = 2^{k_{ℓ-1}}`.
    pub fn delta(&self, level: u32) -> u64 {
        1 << self.k(level - 1)
    }

    /// Window size `n_ℓ = 2^{k_ℓ - k_{ℓ-1}}`.
    pub fn n_at(&self, level: u32) -> u64 {
        1 << self.k_step(level)
    }

    /// Number of level-ℓ leaves across the whole history.
    pub fn leaves_at(&self, level: u32) -> u64 {
        self.n() / self.delta(level)
    }
}

impl TryFrom<Vec<u32>> for LevelConfig {
    type Error = Error;

    fn try_from(ks: Vec<u32>) -> Result<Self> {
        LevelConfig::new(ks)
    }
}

impl From<LevelConfig> for Vec<u32> {
    fn from(c: LevelConfig) -> Vec<u32> {
        c.ks
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub levels: LevelConfig,
    /// Confirmation threshold T.
    pub threshold: u64,
    /// Nominal delay δ.
    pub delta: u64,
    /// Censorship budget C_max.
    pub c_max: u64,
    /// Commitment to the initial state.
    pub h0: Digest,
}

impl ProtocolParams {
    pub fn new(levels: LevelConfig, threshold: u64, delta: u64, c_max: u64, h0: Digest) -> Result<Self> {
        if threshold == 0 {
            return Err(Error::invalid("confirmation threshold must be at least 1"));
        }
        Ok(ProtocolParams {
            levels,
            threshold,
            delta,
            c_max,
            h0,
        })
    }
}
