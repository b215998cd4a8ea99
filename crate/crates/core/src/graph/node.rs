use std::fmt;

use serde::{Deserialize, Serialize};

use super::LevelConfig;
use crate::commitment::Digest;

/// Index of a node in the graph's arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A node is identified by its full tuple. Level 0 marks a proof node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Node {
    pub level: u32,
    pub lbase: u64,
    pub lspan: u64,
    pub base: Digest,
    pub span: Digest,
}

/// Position plus base: nodes sharing a context with different spans are rivals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Context {
    pub level: u32,
    pub lbase: u64,
    pub lspan: u64,
    pub base: Digest,
}

impl Node {
    pub fn context(&self) -> Context {
        Context {
            level: self.level,
            lbase: self.lbase,
            lspan: self.lspan,
            base: self.base,
        }
    }

    pub fn is_proof(&self) -> bool {
        self.level == 0
    }

    pub fn is_regular(&self) -> bool {
        self.level > 0
    }

    pub fn is_terminal(&self) -> bool {
        self.level > 0 && self.lspan == 1
    }

    /// First node of a refinement window (or the root window at level L).
    pub fn is_initial(&self, cfg: &LevelConfig) -> bool {
        self.level > 0 && self.level <= cfg.levels() && self.lspan == cfg.n_at(self.level)
    }

    pub fn is_root(&self, cfg: &LevelConfig) -> bool {
        self.level == cfg.levels() && self.lbase == 0 && self.lspan == cfg.n_at(self.level)
    }

    /// Position invariants for a regular node, or a proof node's level-1 shape.
    pub fn well_formed(&self, cfg: &LevelConfig) -> bool {
        if self.level > cfg.levels() {
            return false;
        }
        let level = self.level.max(1);
        if self.level == 0 && self.lspan != 1 {
            return false;
        }
        self.lspan.is_power_of_two()
            && cfg.n_at(level) % self.lspan == 0
            && self.lbase % self.lspan == 0
            && self
                .lbase
                .checked_add(self.lspan)
                .is_some_and(|end| end <= cfg.leaves_at(level))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Honest,
    Adversary,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::Honest => "honest",
            Party::Adversary => "adversary",
        })
    }
}
