//! Domain-separated SHA-256, perfect Merkle span trees, right-most paths and
//! the left-leaning base accumulator.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};

use crate::graph::LevelConfig;
use crate::{Error, Result};

pub const TAG_LEAF: u8 = 0x00;
pub const TAG_NODE: u8 = 0x01;
pub const TAG_STATE: u8 = 0x02;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub fn tagged(tag: u8, parts: &[&[u8]]) -> Digest {
        let mut h = Sha256::new();
        h.update([tag]);
        for p in parts {
            h.update(p);
        }
        let out = h.finalize();
        let mut bytes = [0u8; 32];
        bytes.copy_from_slice(&out);
        Digest(bytes)
    }

    /// Hash of opaque bytes under the leaf tag. Used for synthetic commitments.
    pub fn leaf(data: &[u8]) -> Digest {
        Digest::tagged(TAG_LEAF, &[data])
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Digest> {
        let raw = hex::decode(s).map_err(|e| Error::invalid(format!("bad digest hex: {e}")))?;
        let bytes: [u8; 32] = raw
            .try_into()
            .map_err(|_| Error::invalid("digest must be 32 bytes"))?;
        Ok(Digest(bytes))
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", &self.to_hex()[..12])
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Digest::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Order-sensitive internal-node hash.
pub fn hash_pair(l: &Digest, r: &Digest) -> Digest {
    Digest::tagged(TAG_NODE, &[&l.0, &r.0])
}

/// Base of a right child: the parent's base absorbs the left half's span.
pub fn derive_right_base(base: &Digest, span_l: &Digest) -> Digest {
    hash_pair(base, span_l)
}

/// A perfect binary Merkle tree, stored level by level from the leaves up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanTree {
    levels: Vec<Vec<Digest>>,
}

impl SpanTree {
    pub fn build(leaves: &[Digest]) -> Result<SpanTree> {
        if leaves.is_empty() || !leaves.len().is_power_of_two() {
            return Err(Error::invalid(format!(
                "span tree needs a power-of-two leaf count, got {}",
                leaves.len()
            )));
        }
        let mut levels = vec![leaves.to_vec()];
        while levels.last().map_or(0, Vec::len) > 1 {
            let prev = levels.last().expect("non-empty");
            let next = prev.chunks(2).map(|c| hash_pair(&c[0], &c[1])).collect();
            levels.push(next);
        }
        Ok(SpanTree { levels })
    }

    pub fn leaf_count(&self) -> usize {
        self.levels[0].len()
    }

    pub fn root(&self) -> Digest {
        self.levels.last().expect("non-empty")[0]
    }

    pub fn leaves(&self) -> &[Digest] {
        &self.levels[0]
    }

    /// Root of the subtree over `count` leaves starting at `offset`.
    /// `count` must be a power of two and `offset` a multiple of it.
    pub fn subtree_root(&self, offset: usize, count: usize) -> Result<Digest> {
        if count == 0
            || !count.is_power_of_two()
            || offset % count != 0
            || offset + count > self.leaf_count()
        {
            return Err(Error::invalid(format!(
                "no aligned subtree at offset {offset} with {count} leaves"
            )));
        }
        let height = count.trailing_zeros() as usize;
        Ok(self.levels[height][offset / count])
    }

    /// Left and right subtree roots, or `None` for a single leaf.
    pub fn split(&self) -> Option<(Digest, Digest)> {
        let h = self.levels.len();
        if h < 2 {
            return None;
        }
        let below = &self.levels[h - 2];
        Some((below[0], below[1]))
    }

    /// Right-most path for the subtree over `count` leaves at `offset`.
    pub fn subtree_rightmost_path(&self, offset: usize, count: usize) -> Result<RightmostPath> {
        self.subtree_root(offset, count)?;
        let last = offset + count - 1;
        let height = count.trailing_zeros() as usize;
        let siblings = (0..height).map(|i| self.levels[i][(last >> i) - 1]).collect();
        Ok(RightmostPath { siblings })
    }

    pub fn rightmost_path(&self) -> RightmostPath {
        self.subtree_rightmost_path(0, self.leaf_count())
            .expect("whole tree is aligned")
    }
}

/// Left siblings along the path from the last leaf to the root, bottom-up.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RightmostPath {
    pub siblings: Vec<Digest>,
}

impl RightmostPath {
    pub fn fold(&self, leaf: &Digest) -> Digest {
        self.siblings
            .iter()
            .fold(*leaf, |running, sib| hash_pair(sib, &running))
    }
}

pub fn verify_rightmost(root: &Digest, leaf: &Digest, path: &RightmostPath, leaf_count: u64) -> bool {
    if leaf_count == 0 || !leaf_count.is_power_of_two() {
        return false;
    }
    path.siblings.len() == leaf_count.trailing_zeros() as usize && path.fold(leaf) == *root
}

/// Leaves `Com(S_{(lbase+i)·Δ_ℓ})` for `i = 1..=lspan`, given the state
/// commitments `c_0..c_n`.
pub fn level_leaves(
    commitments: &[Digest],
    cfg: &LevelConfig,
    level: u32,
    lbase: u64,
    lspan: u64,
) -> Result<Vec<Digest>> {
    if level == 0 || level > cfg.levels() {
        return Err(Error::invalid(format!("level {level} out of range")));
    }
    let delta = cfg.delta(level);
    (1..=lspan)
        .map(|i| {
            let idx = (lbase + i)
                .checked_mul(delta)
                .filter(|&idx| (idx as usize) < commitments.len())
                .ok_or_else(|| Error::invalid(format!("leaf index ({lbase}+{i})*{delta} out of range")))?;
            Ok(commitments[idx as usize])
        })
        .collect()
}

/// Length of the base path for a level-1 position `lbase`: the leaf sits
/// under the span absorbed at the last right turn, one hash below the base.
pub fn base_path_len(cfg: &LevelConfig, lbase: u64) -> usize {
    if lbase == 0 {
        return 0;
    }
    let z = lbase.trailing_zeros();
    let level = (1..=cfg.levels())
        .find(|&l| z < cfg.k(l))
        .unwrap_or(cfg.levels());
    (z - cfg.k(level - 1)) as usize + 1
}
