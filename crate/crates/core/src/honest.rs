//! The honest party: create the correct root, answer every rivaled honest
//! path below the threshold, then drive the bottom-up estimates up with
//! depth-ordered batches of update moves.

use std::collections::HashSet;
use std::sync::Arc;

use crate::graph::{Move, NodeId, ProtocolGraph, Winner};
use crate::history::History;
use crate::timers::{children_at, honest_paths, honest_root, path_weight, paths_from, PathRef};
use crate::{ExtNat, Round};

/// The move the honest strategy makes on a rivaled honest path end.
pub fn response(truth: &History, g: &ProtocolGraph, v: NodeId) -> Option<Move> {
    let node = g.node(v);
    if node.is_proof() {
        None
    } else if !node.is_terminal() {
        Some(truth.bisect_move(node))
    } else if node.level == 1 {
        truth.prove_move(node.lbase)
    } else {
        Some(truth.refine_move(node))
    }
}

/// Moves the strategy wants as of round `t`: one per rivaled path end
/// whose path weight is still below `threshold`.
pub fn dispute_moves(g: &ProtocolGraph, truth: &History, threshold: u64, t: Round) -> Vec<Move> {
    let mut out = Vec::new();
    for p in honest_paths(g, truth, t) {
        let v = p.last();
        let rivaled = g.rival_time_of(v).is_some_and(|rt| rt <= t);
        if !rivaled || path_weight(g, &p, t) >= threshold {
            continue;
        }
        if let Some(mv) = response(truth, g, v) {
            if !out.contains(&mv) {
                out.push(mv);
            }
        }
    }
    out
}

/// Whether the honest root exists and every honest path weighs at least T.
pub fn threshold_reached(g: &ProtocolGraph, truth: &History, threshold: u64, t: Round) -> bool {
    reached(&honest_paths(g, truth, t), g, threshold, t)
}

/// As [`threshold_reached`] for the tree under `root` selected by `keep`.
pub fn threshold_reached_with(
    g: &ProtocolGraph,
    root: NodeId,
    keep: &dyn Fn(NodeId) -> bool,
    threshold: u64,
    t: Round,
) -> bool {
    reached(&paths_from(g, root, t, keep), g, threshold, t)
}

fn reached(paths: &[PathRef], g: &ProtocolGraph, threshold: u64, t: Round) -> bool {
    !paths.is_empty() && paths.iter().all(|p| path_weight(g, p, t) >= threshold)
}

/// Update batches computed at `t_star`, deepest first. The plain variant
/// covers the whole proof-free honest tree with β* = min complete-path
/// weight; `minimal` stops each path at the node where the weight reaches T.
pub fn update_batches(
    g: &ProtocolGraph,
    truth: &History,
    threshold: u64,
    t_star: Round,
    minimal: bool,
) -> Vec<Vec<Move>> {
    match honest_root(g, truth) {
        Some(root) => update_batches_with(g, root, &|c| truth.is_correct(g.node(c)), threshold, t_star, minimal),
        None => Vec::new(),
    }
}

/// As [`update_batches`] for the tree under `root` selected by `keep`.
pub fn update_batches_with(
    g: &ProtocolGraph,
    root: NodeId,
    keep: &dyn Fn(NodeId) -> bool,
    threshold: u64,
    t_star: Round,
    minimal: bool,
) -> Vec<Vec<Move>> {
    let paths = paths_from(g, root, t_star, keep);
    // (node, depth, beta*) for every node of the update tree.
    let mut entries: Vec<(NodeId, usize, ExtNat)> = Vec::new();
    let mut note = |v: NodeId, depth: usize, beta: ExtNat| {
        if let Some(e) = entries.iter_mut().find(|e| e.0 == v) {
            e.2 = e.2.min(beta);
        } else {
            entries.push((v, depth, beta));
        }
    };
    for p in &paths {
        let weights: Vec<ExtNat> = p
            .nodes
            .iter()
            .map(|&v| path_weight(g, &PathRef::single(v), t_star))
            .collect();
        if minimal {
            let mut prefix = ExtNat::ZERO;
            for (i, &v) in p.nodes.iter().enumerate() {
                if g.node(v).is_proof() {
                    break;
                }
                note(v, i, ExtNat::Fin(threshold).saturating_sub_ext(prefix));
                prefix = prefix + weights[i];
                if prefix >= threshold {
                    break;
                }
            }
        } else {
            let total: ExtNat = weights.iter().copied().sum();
            let mut prefix = ExtNat::ZERO;
            for (i, &v) in p.nodes.iter().enumerate() {
                if g.node(v).is_proof() {
                    break;
                }
                // The suffix weight from v is this path's contribution to β*(v).
                note(v, i, total.saturating_sub_ext(prefix));
                prefix = prefix + weights[i];
            }
        }
    }
    let depth = entries.iter().map(|e| e.1).max();
    let Some(depth) = depth else { return Vec::new() };
    (0..=depth)
        .rev()
        .map(|d| {
            entries
                .iter()
                .filter(|e| e.1 == d)
                .map(|&(v, _, beta)| {
                    let node = g.node(v).clone();
                    let child = (node.is_terminal() && node.level > 1)
                        .then(|| children_at(g, v, t_star).find(|&c| keep(c)))
                        .flatten()
                        .map(|c| g.node(c).clone());
                    Move::Update {
                        node,
                        beta_star: beta,
                        child,
                    }
                })
                .collect()
        })
        .filter(|b: &Vec<Move>| !b.is_empty())
        .collect()
}

trait SubExt {
    fn saturating_sub_ext(self, rhs: ExtNat) -> ExtNat;
}

impl SubExt for ExtNat {
    /// `self - rhs` floored at zero; ∞ - finite = ∞, anything - ∞ = 0.
    fn saturating_sub_ext(self, rhs: ExtNat) -> ExtNat {
        match rhs {
            ExtNat::Inf => ExtNat::ZERO,
            ExtNat::Fin(r) => self.saturating_sub(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Phase {
    Dispute,
    Updating { batches: Vec<Vec<Move>>, next: usize },
    Done,
}

/// Honest player state between rounds.
#[derive(Debug)]
pub struct HonestParty {
    truth: Arc<History>,
    threshold: u64,
    minimal: bool,
    submitted: HashSet<Move>,
    outstanding: Vec<Move>,
    phase: Phase,
    t_star: Option<Round>,
    root_sent: bool,
    static_mode: bool,
}

impl HonestParty {
    pub fn new(truth: Arc<History>, threshold: u64, minimal_subtree: bool) -> Self {
        HonestParty {
            truth,
            threshold,
            minimal: minimal_subtree,
            submitted: HashSet::new(),
            outstanding: Vec::new(),
            phase: Phase::Dispute,
            t_star: None,
            root_sent: false,
            static_mode: false,
        }
    }

    /// Dispute moves only, played regardless of any declared winner.
    pub fn set_static(&mut self, on: bool) {
        self.static_mode = on;
    }

    pub fn truth(&self) -> &Arc<History> {
        &self.truth
    }

    /// Last round before the update phase began.
    pub fn t_star(&self) -> Option<Round> {
        self.t_star
    }

    pub fn update_done(&self) -> bool {
        self.phase == Phase::Done
    }

    /// `Submit_t`, computed from the graph as of round `t - 1`.
    pub fn plan(&mut self, g: &ProtocolGraph, t: Round) -> Vec<Move> {
        if !self.root_sent {
            self.root_sent = true;
            let mv = Move::CreateRoot {
                span: self.truth.root().span,
            };
            return self.submit(vec![mv]);
        }
        let seen = t - 1;
        if self.static_mode {
            let wanted = dispute_moves(g, &self.truth, self.threshold, seen);
            return self.submit(wanted);
        }
        if g.winner() != Winner::Undecided {
            return Vec::new();
        }
        if self.phase == Phase::Dispute {
            let wanted = dispute_moves(g, &self.truth, self.threshold, seen);
            let fresh = self.submit(wanted);
            if !fresh.is_empty() || !self.outstanding.is_empty() {
                return fresh;
            }
            if !threshold_reached(g, &self.truth, self.threshold, seen) {
                return Vec::new();
            }
            self.t_star = Some(seen);
            let batches = update_batches(g, &self.truth, self.threshold, seen, self.minimal);
            self.phase = Phase::Updating { batches, next: 0 };
        }
        if !self.outstanding.is_empty() {
            return Vec::new();
        }
        let Phase::Updating { batches, next } = &mut self.phase else {
            return Vec::new();
        };
        if *next >= batches.len() {
            self.phase = Phase::Done;
            return Vec::new();
        }
        let batch = batches[*next].clone();
        *next += 1;
        self.submit(batch)
    }

    fn submit(&mut self, moves: Vec<Move>) -> Vec<Move> {
        let fresh: Vec<Move> = moves.into_iter().filter(|m| self.submitted.insert(m.clone())).collect();
        self.outstanding.extend(fresh.iter().cloned());
        fresh
    }

    /// Called once for each of this party's moves when it is executed.
    pub fn notify(&mut self, mv: &Move) {
        if let Some(i) = self.outstanding.iter().position(|m| m == mv) {
            self.outstanding.swap_remove(i);
        }
        if let Phase::Updating { batches, next } = &self.phase {
            if self.outstanding.is_empty() && *next >= batches.len() {
                self.phase = Phase::Done;
            }
        }
    }
}
