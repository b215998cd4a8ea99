use serde::{Deserialize, Serialize};

use super::{Node, NodeId, Party};
use crate::commitment::{Digest, RightmostPath};
use crate::vm::StepProof;
use crate::{ExtNat, Round};

/// Evidence for a one-step proof at a level-1 terminal node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProofBundle {
    /// Commitment to the pre-state, the right-most leaf under the node's base.
    pub state_commitment: Digest,
    pub base_path: RightmostPath,
    pub step: StepProof,
}

/// A move as submitted to the referee. Targets are referenced by tuple so
/// that moves can be planned before the target exists.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Move {
    CreateRoot {
        span: Digest,
    },
    Bisect {
        node: Node,
        span_l: Digest,
        span_r: Digest,
    },
    Prove {
        node: Node,
        proof: ProofBundle,
    },
    Refine {
        node: Node,
        span_star: Digest,
        path: RightmostPath,
    },
    Update {
        node: Node,
        beta_star: ExtNat,
        child: Option<Node>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    RootCreation,
    Bisection,
    Proof,
    Refinement,
    Update,
}

impl Move {
    pub fn kind(&self) -> MoveKind {
        match self {
            Move::CreateRoot { .. } => MoveKind::RootCreation,
            Move::Bisect { .. } => MoveKind::Bisection,
            Move::Prove { .. } => MoveKind::Proof,
            Move::Refine { .. } => MoveKind::Refinement,
            Move::Update { .. } => MoveKind::Update,
        }
    }

    pub fn target(&self) -> Option<&Node> {
        match self {
            Move::CreateRoot { .. } => None,
            Move::Bisect { node, .. }
            | Move::Prove { node, .. }
            | Move::Refine { node, .. }
            | Move::Update { node, .. } => Some(node),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Applied,
    /// Replays an earlier effect; the graph is unchanged.
    Redundant,
    /// Failed validation; the graph is unchanged but the mover still pays.
    Invalid,
}

/// One entry of the referee's history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub round: Round,
    pub mover: Party,
    #[serde(rename = "move")]
    pub mv: Move,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// Nodes that did not exist before this move.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub created: Vec<NodeId>,
    /// Cohort size of a newly created initial node, itself included.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cohort: Option<u64>,
    /// Estimate written by an applied update.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<ExtNat>,
}
