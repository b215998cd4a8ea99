//! Ground-truth timers recomputed from creation rounds, rival rounds and
//! edge rounds: local timers, bottom-up timers, path weights, the path
//! characterizations and the round bound. Used for winner cross-checks and
//! property tests, never by the referee itself.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::graph::{LevelConfig, NodeId, ProtocolGraph, ProtocolParams, Winner};
use crate::history::History;
use crate::{ExtNat, Round};

/// λ_v(t): rounds `v` existed unrivaled up to `t`. ∞ for existing proof nodes.
pub fn local_timer(g: &ProtocolGraph, v: NodeId, t: Round) -> ExtNat {
    g.local_timer(v, t)
}

/// λ̄_v(t): as λ but proof nodes count their age instead of ∞.
pub fn finite_local_timer(g: &ProtocolGraph, v: NodeId, t: Round) -> u64 {
    if g.node(v).is_proof() {
        t.saturating_sub(g.created(v))
    } else {
        local_timer(g, v, t).finite().expect("regular timers are finite")
    }
}

/// Children of `v` whose edge exists as of round `t`.
pub fn children_at(g: &ProtocolGraph, v: NodeId, t: Round) -> impl Iterator<Item = NodeId> + '_ {
    g.edges(v).iter().filter(move |e| e.round <= t).map(|e| e.child)
}

/// Memoizing evaluator of β at a fixed round.
pub struct Oracle<'g> {
    g: &'g ProtocolGraph,
    t: Round,
    memo: RefCell<HashMap<NodeId, ExtNat>>,
}

impl<'g> Oracle<'g> {
    pub fn new(g: &'g ProtocolGraph, t: Round) -> Self {
        Oracle {
            g,
            t,
            memo: RefCell::new(HashMap::new()),
        }
    }

    pub fn round(&self) -> Round {
        self.t
    }

    pub fn lambda(&self, v: NodeId) -> ExtNat {
        if self.g.created(v) > self.t {
            return ExtNat::ZERO;
        }
        local_timer(self.g, v, self.t)
    }

    /// β_v(t). Terminal regular nodes take the max over children (with 0),
    /// everything else the min (0 when childless).
    pub fn beta(&self, v: NodeId) -> ExtNat {
        if let Some(&b) = self.memo.borrow().get(&v) {
            return b;
        }
        let mut kids = children_at(self.g, v, self.t).map(|c| self.beta(c)).peekable();
        let below = if self.g.node(v).is_terminal() {
            kids.fold(ExtNat::ZERO, ExtNat::max)
        } else if kids.peek().is_none() {
            ExtNat::ZERO
        } else {
            kids.min().expect("non-empty")
        };
        let b = self.lambda(v) + below;
        self.memo.borrow_mut().insert(v, b);
        b
    }
}

pub fn bottom_up(g: &ProtocolGraph, v: NodeId, t: Round) -> ExtNat {
    Oracle::new(g, t).beta(v)
}

/// A sequence of nodes linked by edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathRef {
    pub nodes: Vec<NodeId>,
}

impl PathRef {
    pub fn single(v: NodeId) -> Self {
        PathRef { nodes: vec![v] }
    }

    pub fn last(&self) -> NodeId {
        *self.nodes.last().expect("paths are non-empty")
    }

    pub fn extended(&self, x: NodeId) -> PathRef {
        let mut nodes = self.nodes.clone();
        nodes.push(x);
        PathRef { nodes }
    }

    pub fn is_connected(&self, g: &ProtocolGraph, t: Round) -> bool {
        !self.nodes.is_empty()
            && self
                .nodes
                .windows(2)
                .all(|w| children_at(g, w[0], t).any(|c| c == w[1]))
    }
}

pub fn path_weight(g: &ProtocolGraph, path: &PathRef, t: Round) -> ExtNat {
    path.nodes
        .iter()
        .map(|&v| if g.created(v) > t { ExtNat::ZERO } else { local_timer(g, v, t) })
        .sum()
}

pub fn finite_path_weight(g: &ProtocolGraph, path: &PathRef, t: Round) -> u64 {
    path.nodes
        .iter()
        .map(|&v| if g.created(v) > t { 0 } else { finite_local_timer(g, v, t) })
        .sum()
}

/// Every path from `v` to a childless node. Exponential; small graphs only.
pub fn complete_paths(g: &ProtocolGraph, v: NodeId, t: Round) -> Vec<PathRef> {
    let mut out = Vec::new();
    let mut stack = vec![PathRef::single(v)];
    while let Some(p) = stack.pop() {
        let kids: Vec<NodeId> = children_at(g, p.last(), t).collect();
        if kids.is_empty() {
            out.push(p);
        } else {
            stack.extend(kids.into_iter().map(|c| p.extended(c)));
        }
    }
    out
}

fn same_level_children(g: &ProtocolGraph, v: NodeId, t: Round) -> Vec<NodeId> {
    let level = g.node(v).level;
    children_at(g, v, t).filter(|&c| g.node(c).level == level).collect()
}

/// Extensions `Q` of `p` that only add same-level nodes and end at a node
/// without same-level children.
fn level_complete_extensions(g: &ProtocolGraph, p: &PathRef, t: Round) -> Vec<PathRef> {
    let mut out = Vec::new();
    let mut stack = vec![p.clone()];
    while let Some(q) = stack.pop() {
        let kids = same_level_children(g, q.last(), t);
        if kids.is_empty() {
            out.push(q);
        } else {
            stack.extend(kids.into_iter().map(|c| q.extended(c)));
        }
    }
    out
}

fn ext(g: &ProtocolGraph, q: &PathRef, t: Round) -> Vec<NodeId> {
    let level = g.node(q.last()).level;
    children_at(g, q.last(), t).filter(|&c| g.node(c).level != level).collect()
}

/// β from the path characterization: min over level-complete paths of the
/// path weight plus the max over extending nodes (0 if none).
pub fn path_characterization(g: &ProtocolGraph, v: NodeId, t: Round) -> ExtNat {
    level_complete_extensions(g, &PathRef::single(v), t)
        .iter()
        .map(|q| {
            let tail = ext(g, q, t)
                .into_iter()
                .map(|x| path_characterization(g, x, t))
                .fold(ExtNat::ZERO, ExtNat::max);
            path_weight(g, q, t) + tail
        })
        .min()
        .expect("at least the trivial extension")
}

/// Single-level form: min complete-path weight from `v`.
pub fn min_complete_weight(g: &ProtocolGraph, v: NodeId, t: Round) -> ExtNat {
    complete_paths(g, v, t)
        .iter()
        .map(|p| path_weight(g, p, t))
        .min()
        .expect("at least one complete path")
}

/// Ψ(P, W): every level-complete extension below weight `W` can be carried
/// on through some extending node.
pub fn psi(g: &ProtocolGraph, path: &PathRef, w: u64, t: Round) -> bool {
    level_complete_extensions(g, path, t).iter().all(|q| {
        path_weight(g, q, t) >= w || ext(g, q, t).into_iter().any(|x| psi(g, &q.extended(x), w, t))
    })
}

/// The honest root if it is in the graph.
pub fn honest_root(g: &ProtocolGraph, truth: &History) -> Option<NodeId> {
    g.id_of(&truth.root())
}

/// Complete paths from `root` that only follow children accepted by `keep`.
pub fn paths_from(g: &ProtocolGraph, root: NodeId, t: Round, keep: &dyn Fn(NodeId) -> bool) -> Vec<PathRef> {
    if g.created(root) > t {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut stack = vec![PathRef::single(root)];
    while let Some(p) = stack.pop() {
        let kids: Vec<NodeId> = children_at(g, p.last(), t).filter(|&c| keep(c)).collect();
        if kids.is_empty() {
            out.push(p);
        } else {
            stack.extend(kids.into_iter().rev().map(|c| p.extended(c)));
        }
    }
    out
}

/// Honest paths as of round `t`: from the honest root, following only
/// correctly constructed children, to a node with none of those.
pub fn honest_paths(g: &ProtocolGraph, truth: &History, t: Round) -> Vec<PathRef> {
    match honest_root(g, truth) {
        Some(root) => paths_from(g, root, t, &|c| truth.is_correct(g.node(c))),
        None => Vec::new(),
    }
}

/// All nodes on honest paths, in discovery order.
pub fn honest_tree(g: &ProtocolGraph, truth: &History, t: Round) -> Vec<NodeId> {
    let mut seen = Vec::new();
    for p in honest_paths(g, truth, t) {
        for v in p.nodes {
            if !seen.contains(&v) {
                seen.push(v);
            }
        }
    }
    seen
}

/// The confirmation rule evaluated from scratch: in the first round where
/// any root reaches β ≥ T, a unique such root wins, several mean none.
pub fn oracle_winner(g: &ProtocolGraph, up_to: Round) -> (Winner, Option<Round>) {
    let threshold = g.params().threshold;
    for t in 1..=up_to {
        let oracle = Oracle::new(g, t);
        let confirmed: Vec<NodeId> = g
            .roots()
            .iter()
            .copied()
            .filter(|&r| g.created(r) <= t && oracle.beta(r) >= threshold)
            .collect();
        match confirmed.as_slice() {
            [] => continue,
            [r] => return (Winner::Root(*r), Some(t)),
            _ => return (Winner::None, Some(t)),
        }
    }
    (Winner::Undecided, None)
}

/// N* = T + C_max + (δ+1)(k_L+L+1), plus (δ+1)(k_L+L) for the update phase.
pub fn round_bound(params: &ProtocolParams, with_updates: bool) -> Round {
    bound_for(&params.levels, params.threshold, params.delta, params.c_max, with_updates)
}

pub fn bound_for(cfg: &LevelConfig, threshold: u64, delta: u64, c_max: u64, with_updates: bool) -> Round {
    let depth = u64::from(cfg.k_max() + cfg.levels());
    let mut n = threshold + c_max + (delta + 1) * (depth + 1);
    if with_updates {
        n += (delta + 1) * depth;
    }
    n
}

/// Smallest threshold strictly above the adversary's reachable weight,
/// `C_max + (δ+1)(k_L+L+1) + (δ+1)(k_L+L) + 1`.
pub fn safe_threshold(cfg: &LevelConfig, delta: u64, c_max: u64) -> u64 {
    bound_for(cfg, 0, delta, c_max, true) + 1
}
