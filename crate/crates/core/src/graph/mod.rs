//! The referee: protocol DAG, move validation and execution, rival
//! bookkeeping and on-demand winner declaration.

mod moves;
mod node;
mod params;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use moves::{Event, Move, MoveKind, Outcome, ProofBundle};
pub use node::{Context, Node, NodeId, Party};
pub use params::{LevelConfig, ProtocolParams, MAX_K};

use crate::commitment::{base_path_len, derive_right_base, hash_pair, verify_rightmost};
use crate::vm::verify_step;
use crate::{ExtNat, Round};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub child: NodeId,
    pub round: Round,
}

#[derive(Debug, Clone)]
pub struct NodeRecord {
    pub node: Node,
    pub created: Round,
    pub creator: Party,
    pub children: Vec<Edge>,
    pub parents: Vec<NodeId>,
    pub estimate: ExtNat,
    pub depth: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state", content = "root")]
pub enum Winner {
    Undecided,
    Root(NodeId),
    None,
}

#[derive(Debug, Clone)]
pub struct ProtocolGraph {
    params: ProtocolParams,
    records: Vec<NodeRecord>,
    index: HashMap<Node, NodeId>,
    cohorts: HashMap<Context, Vec<NodeId>>,
    rival_time: HashMap<Context, Round>,
    roots: Vec<NodeId>,
    winner: Winner,
    winning_round: Option<Round>,
    depth_conflicts: u64,
    log: Vec<Event>,
}

enum Verdict {
    Applied { created: Vec<NodeId>, cohort: Option<u64>, estimate: Option<ExtNat> },
    Redundant,
    Invalid(String),
}

impl ProtocolGraph {
    pub fn new(params: ProtocolParams) -> Self {
        ProtocolGraph {
            params,
            records: Vec::new(),
            index: HashMap::new(),
            cohorts: HashMap::new(),
            rival_time: HashMap::new(),
            roots: Vec::new(),
            winner: Winner::Undecided,
            winning_round: None,
            depth_conflicts: 0,
            log: Vec::new(),
        }
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn cfg(&self) -> &LevelConfig {
        &self.params.levels
    }

    /// A copy without the event log, for planners that simulate their own moves.
    pub fn fork(&self) -> ProtocolGraph {
        ProtocolGraph {
            params: self.params.clone(),
            records: self.records.clone(),
            index: self.index.clone(),
            cohorts: self.cohorts.clone(),
            rival_time: self.rival_time.clone(),
            roots: self.roots.clone(),
            winner: self.winner,
            winning_round: self.winning_round,
            depth_conflicts: self.depth_conflicts,
            log: Vec::new(),
        }
    }

    // ---- queries ----

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.records.len() as u32).map(NodeId)
    }

    pub fn record(&self, id: NodeId) -> &NodeRecord {
        &self.records[id.index()]
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.records[id.index()].node
    }

    pub fn id_of(&self, node: &Node) -> Option<NodeId> {
        self.index.get(node).copied()
    }

    pub fn contains(&self, node: &Node) -> bool {
        self.index.contains_key(node)
    }

    pub fn children(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.records[id.index()].children.iter().map(|e| e.child)
    }

    pub fn edges(&self, id: NodeId) -> &[Edge] {
        &self.records[id.index()].children
    }

    pub fn parents(&self, id: NodeId) -> &[NodeId] {
        &self.records[id.index()].parents
    }

    pub fn has_children(&self, id: NodeId) -> bool {
        !self.records[id.index()].children.is_empty()
    }

    pub fn depth(&self, id: NodeId) -> u32 {
        self.records[id.index()].depth
    }

    pub fn created(&self, id: NodeId) -> Round {
        self.records[id.index()].created
    }

    pub fn estimate(&self, id: NodeId) -> ExtNat {
        self.records[id.index()].estimate
    }

    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    /// Nodes sharing `id`'s context, itself included. Empty for proof nodes.
    pub fn cohort(&self, id: NodeId) -> &[NodeId] {
        let node = self.node(id);
        if node.is_proof() {
            return &[];
        }
        self.cohorts.get(&node.context()).map_or(&[], Vec::as_slice)
    }

    pub fn rivals(&self, id: NodeId) -> Vec<NodeId> {
        self.cohort(id).iter().copied().filter(|&r| r != id).collect()
    }

    pub fn is_rivaled(&self, id: NodeId) -> bool {
        self.cohort(id).len() >= 2
    }

    /// First round at which the context of `id` held two distinct nodes.
    pub fn rival_time_of(&self, id: NodeId) -> Option<Round> {
        let node = self.node(id);
        if node.is_proof() {
            return None;
        }
        self.rival_time.get(&node.context()).copied()
    }

    pub fn winner(&self) -> Winner {
        self.winner
    }

    pub fn winning_round(&self) -> Option<Round> {
        self.winning_round
    }

    /// Number of coalesced nodes reached at a depth different from their first one.
    pub fn depth_conflicts(&self) -> u64 {
        self.depth_conflicts
    }

    pub fn log(&self) -> &[Event] {
        &self.log
    }

    /// λ_v(t) from the recorded creation and rival rounds.
    pub fn local_timer(&self, id: NodeId, t: Round) -> ExtNat {
        let rec = &self.records[id.index()];
        if rec.node.is_proof() {
            return if rec.created <= t { ExtNat::Inf } else { ExtNat::ZERO };
        }
        let rt = self.rival_time_of(id).unwrap_or(Round::MAX);
        ExtNat::Fin(t.min(rt).saturating_sub(rec.created))
    }

    // ---- execution ----

    /// Validates and applies `mv`, appending the result to the log.
    pub fn execute(&mut self, mv: &Move, mover: Party, round: Round) -> &Event {
        let verdict = match mv {
            Move::CreateRoot { span } => self.create_root(*span, mover, round),
            Move::Bisect { node, span_l, span_r } => self.bisect(node, span_l, span_r, mover, round),
            Move::Prove { node, proof } => self.prove(node, proof, mover, round),
            Move::Refine { node, span_star, path } => self.refine(node, span_star, path, mover, round),
            Move::Update {
                node,
                beta_star,
                child,
            } => self.update(node, *beta_star, child.as_ref(), round),
        };
        let (outcome, reason, created, cohort, estimate) = match verdict {
            Verdict::Applied {
                created,
                cohort,
                estimate,
            } => (Outcome::Applied, None, created, cohort, estimate),
            Verdict::Redundant => (Outcome::Redundant, None, Vec::new(), None, None),
            Verdict::Invalid(r) => (Outcome::Invalid, Some(r), Vec::new(), None, None),
        };
        self.log.push(Event {
            seq: self.log.len() as u64,
            round,
            mover,
            mv: mv.clone(),
            outcome,
            reason,
            created,
            cohort,
            estimate,
        });
        self.log.last().expect("just pushed")
    }

    fn insert(&mut self, node: Node, round: Round, creator: Party, depth: u32) -> (NodeId, bool) {
        if let Some(&id) = self.index.get(&node) {
            if self.records[id.index()].depth != depth {
                self.depth_conflicts += 1;
            }
            return (id, false);
        }
        let id = NodeId(self.records.len() as u32);
        if node.is_regular() {
            let members = self.cohorts.entry(node.context()).or_default();
            members.push(id);
            if members.len() == 2 {
                self.rival_time.insert(node.context(), round);
            }
        }
        self.index.insert(node.clone(), id);
        self.records.push(NodeRecord {
            node,
            created: round,
            creator,
            children: Vec::new(),
            parents: Vec::new(),
            estimate: ExtNat::ZERO,
            depth,
        });
        (id, true)
    }

    fn link(&mut self, parent: NodeId, child: NodeId, round: Round) {
        self.records[parent.index()].children.push(Edge { child, round });
        self.records[child.index()].parents.push(parent);
    }

    fn lookup(&self, node: &Node) -> Result<NodeId, Verdict> {
        self.id_of(node)
            .ok_or_else(|| Verdict::Invalid("target node does not exist".into()))
    }

    fn create_root(&mut self, span: crate::commitment::Digest, mover: Party, round: Round) -> Verdict {
        let cfg = self.cfg();
        let level = cfg.levels();
        let node = Node {
            level,
            lbase: 0,
            lspan: cfg.n_at(level),
            base: self.params.h0,
            span,
        };
        let (id, fresh) = self.insert(node, round, mover, 0);
        if !fresh {
            return Verdict::Redundant;
        }
        self.roots.push(id);
        Verdict::Applied {
            created: vec![id],
            cohort: Some(self.cohort(id).len() as u64),
            estimate: None,
        }
    }

    fn bisect(
        &mut self,
        target: &Node,
        span_l: &crate::commitment::Digest,
        span_r: &crate::commitment::Digest,
        mover: Party,
        round: Round,
    ) -> Verdict {
        let v = match self.lookup(target) {
            Ok(v) => v,
            Err(e) => return e,
        };
        if !target.is_regular() || target.lspan < 2 {
            return Verdict::Invalid("only regular nonterminal nodes can be bisected".into());
        }
        if hash_pair(span_l, span_r) != target.span {
            return Verdict::Invalid("span halves do not hash to the node span".into());
        }
        let half = target.lspan / 2;
        let left = Node {
            level: target.level,
            lbase: target.lbase,
            lspan: half,
            base: target.base,
            span: *span_l,
        };
        let right = Node {
            level: target.level,
            lbase: target.lbase + half,
            lspan: half,
            base: derive_right_base(&target.base, span_l),
            span: *span_r,
        };
        if self.has_children(v) {
            let same = [&left, &right]
                .iter()
                .all(|c| self.id_of(c).is_some_and(|id| self.children(v).any(|x| x == id)));
            return if same {
                Verdict::Redundant
            } else {
                Verdict::Invalid("node already has children".into())
            };
        }
        if !self.is_rivaled(v) {
            return Verdict::Invalid("node is not rivaled".into());
        }
        let depth = self.depth(v) + 1;
        let mut created = Vec::new();
        for child in [left, right] {
            let (id, fresh) = self.insert(child, round, mover, depth);
            if fresh {
                created.push(id);
            }
            self.link(v, id, round);
        }
        Verdict::Applied {
            created,
            cohort: None,
            estimate: None,
        }
    }

    fn prove(&mut self, target: &Node, bundle: &ProofBundle, mover: Party, round: Round) -> Verdict {
        let v = match self.lookup(target) {
            Ok(v) => v,
            Err(e) => return e,
        };
        if target.level != 1 || target.lspan != 1 {
            return Verdict::Invalid("only level-1 terminal nodes can be proven".into());
        }
        let proof_node = Node {
            level: 0,
            ..target.clone()
        };
        if self.has_children(v) {
            let same = self
                .id_of(&proof_node)
                .is_some_and(|id| self.children(v).any(|x| x == id));
            return if same {
                Verdict::Redundant
            } else {
                Verdict::Invalid("node already has children".into())
            };
        }
        if !self.is_rivaled(v) {
            return Verdict::Invalid("node is not rivaled".into());
        }
        let expected_len = base_path_len(self.cfg(), target.lbase);
        if bundle.base_path.siblings.len() != expected_len {
            return Verdict::Invalid(format!(
                "base path has {} siblings, expected {expected_len}",
                bundle.base_path.siblings.len()
            ));
        }
        if bundle.base_path.fold(&bundle.state_commitment) != target.base {
            return Verdict::Invalid("base path does not open the node base".into());
        }
        if !verify_step(&bundle.state_commitment, &target.span, &bundle.step) {
            return Verdict::Invalid("one-step proof rejected".into());
        }
        let depth = self.depth(v) + 1;
        let (id, _) = self.insert(proof_node, round, mover, depth);
        self.link(v, id, round);
        Verdict::Applied {
            created: vec![id],
            cohort: None,
            estimate: None,
        }
    }

    fn refine(
        &mut self,
        target: &Node,
        span_star: &crate::commitment::Digest,
        path: &crate::commitment::RightmostPath,
        mover: Party,
        round: Round,
    ) -> Verdict {
        let v = match self.lookup(target) {
            Ok(v) => v,
            Err(e) => return e,
        };
        if target.level < 2 || target.lspan != 1 {
            return Verdict::Invalid("only terminal nodes above level 1 can be refined".into());
        }
        let below = target.level - 1;
        let window = self.cfg().n_at(below);
        let child = Node {
            level: below,
            lbase: target.lbase * window,
            lspan: window,
            base: target.base,
            span: *span_star,
        };
        if let Some(c) = self.id_of(&child) {
            if self.children(v).any(|x| x == c) {
                return Verdict::Redundant;
            }
        }
        if !self.is_rivaled(v) {
            return Verdict::Invalid("node is not rivaled".into());
        }
        if !verify_rightmost(span_star, &target.span, path, window) {
            return Verdict::Invalid("refinement path does not end at the parent span".into());
        }
        let depth = self.depth(v) + 1;
        let (id, fresh) = self.insert(child, round, mover, depth);
        self.link(v, id, round);
        Verdict::Applied {
            created: if fresh { vec![id] } else { Vec::new() },
            cohort: fresh.then(|| self.cohort(id).len() as u64),
            estimate: None,
        }
    }

    fn update(&mut self, target: &Node, beta_star: ExtNat, child: Option<&Node>, round: Round) -> Verdict {
        let v = match self.lookup(target) {
            Ok(v) => v,
            Err(e) => return e,
        };
        if !target.is_regular() {
            return Verdict::Invalid("proof nodes carry no estimate".into());
        }
        let old = self.estimate(v);
        if old >= beta_star {
            return Verdict::Redundant;
        }
        let lambda = self.local_timer(v, round);
        let new = if target.is_terminal() && target.level == 1 {
            if child.is_some() {
                return Verdict::Invalid("child hint only applies above level 1".into());
            }
            if self.has_children(v) {
                ExtNat::Inf
            } else {
                lambda
            }
        } else if target.is_terminal() {
            match child {
                Some(c) => {
                    let Some(cid) = self.id_of(c).filter(|cid| self.children(v).any(|x| x == *cid)) else {
                        return Verdict::Invalid("hinted child is not a child of the node".into());
                    };
                    old.max(lambda + self.estimate(cid))
                }
                None => old.max(lambda),
            }
        } else {
            if child.is_some() {
                return Verdict::Invalid("child hint only applies to terminal nodes".into());
            }
            let min_child = self.children(v).map(|c| self.estimate(c)).min().unwrap_or(ExtNat::ZERO);
            lambda + min_child
        };
        self.records[v.index()].estimate = new;
        if target.is_root(self.cfg())
            && new >= self.params.threshold
            && self.winner == Winner::Undecided
        {
            self.winner = Winner::Root(v);
            self.winning_round = Some(round);
        }
        Verdict::Applied {
            created: Vec::new(),
            cohort: None,
            estimate: Some(new),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commitment::{Digest, SpanTree};

    fn d(x: u64) -> Digest {
        Digest::leaf(&x.to_be_bytes())
    }

    fn params(ks: Vec<u32>, t: u64) -> ProtocolParams {
        ProtocolParams::new(LevelConfig::new(ks).unwrap(), t, 0, 0, d(0)).unwrap()
    }

    fn root_node(g: &ProtocolGraph, span: Digest) -> Node {
        let cfg = g.cfg();
        Node {
            level: cfg.levels(),
            lbase: 0,
            lspan: cfg.n_at(cfg.levels()),
            base: g.params().h0,
            span,
        }
    }

    #[test]
    fn root_creation_and_rivalry() {
        let mut g = ProtocolGraph::new(params(vec![2], 10));
        let e = g.execute(&Move::CreateRoot { span: d(1) }, Party::Honest, 5);
        assert_eq!(e.outcome, Outcome::Applied);
        let honest = g.roots()[0];
        assert_eq!(g.created(honest), 5);
        assert_eq!(g.execute(&Move::CreateRoot { span: d(1) }, Party::Honest, 6).outcome, Outcome::Redundant);
        assert!(!g.is_rivaled(honest));
        g.execute(&Move::CreateRoot { span: d(2) }, Party::Adversary, 12);
        assert_eq!(g.rival_time_of(honest), Some(12));
        assert_eq!(g.rivals(honest).len(), 1);
        assert_eq!(g.local_timer(honest, 12), ExtNat::Fin(7));
        assert_eq!(g.local_timer(honest, 40), ExtNat::Fin(7));
    }

    #[test]
    fn bisection_children_and_coalescing() {
        let mut g = ProtocolGraph::new(params(vec![2], 10));
        let (a, b) = (d(10), d(11));
        let root = root_node(&g, hash_pair(&a, &b));
        let lone = Move::Bisect {
            node: root.clone(),
            span_l: a,
            span_r: b,
        };
        g.execute(&Move::CreateRoot { span: root.span }, Party::Honest, 1);
        assert_eq!(g.execute(&lone, Party::Honest, 2).outcome, Outcome::Invalid);

        let (a2, b2) = (a, d(12));
        let rival = root_node(&g, hash_pair(&a2, &b2));
        g.execute(&Move::CreateRoot { span: rival.span }, Party::Adversary, 3);
        assert_eq!(g.execute(&lone, Party::Honest, 4).outcome, Outcome::Applied);
        let rid = g.id_of(&root).unwrap();
        let kids: Vec<_> = g.children(rid).map(|c| g.node(c).clone()).collect();
        assert_eq!(kids[0], Node { level: 1, lbase: 0, lspan: 2, base: d(0), span: a });
        assert_eq!(kids[1], Node { level: 1, lbase: 2, lspan: 2, base: hash_pair(&d(0), &a), span: b });

        // The rival shares the left half, so its left child coalesces.
        let before = g.len();
        let e = g.execute(&Move::Bisect { node: rival.clone(), span_l: a2, span_r: b2 }, Party::Adversary, 5);
        assert_eq!(e.created.len(), 1);
        assert_eq!(g.len(), before + 1);
        let shared = g.id_of(&kids[0]).unwrap();
        assert_eq!(g.parents(shared).len(), 2);
        assert!(g.is_rivaled(g.id_of(&kids[1]).unwrap()));
        assert!(!g.is_rivaled(shared));

        // Replaying the same bisection is redundant, a different one invalid.
        assert_eq!(g.execute(&lone, Party::Honest, 6).outcome, Outcome::Redundant);
        let len = g.len();
        assert_eq!(g.len(), len);
        let wrong = Move::Bisect { node: root, span_l: b, span_r: a };
        assert_eq!(g.execute(&wrong, Party::Adversary, 6).outcome, Outcome::Invalid);
    }

    #[test]
    fn update_rules() {
        let mut g = ProtocolGraph::new(params(vec![2], 10));
        g.execute(&Move::CreateRoot { span: d(1) }, Party::Honest, 5);
        let root = root_node(&g, d(1));
        let up = |beta: u64| Move::Update { node: root.clone(), beta_star: ExtNat::Fin(beta), child: None };
        let e = g.execute(&up(10), Party::Honest, 15).clone();
        assert_eq!(e.estimate, Some(ExtNat::Fin(10)));
        assert_eq!(g.winner(), Winner::Root(g.roots()[0]));
        assert_eq!(g.winning_round(), Some(15));
        assert_eq!(g.execute(&up(10), Party::Adversary, 16).outcome, Outcome::Redundant);
        assert_eq!(g.execute(&up(3), Party::Adversary, 16).outcome, Outcome::Redundant);
    }

    #[test]
    fn terminal_max_rule_with_child_hint() {
        // L=2, k=(1,2): level-2 window of 2, level-1 windows of 2.
        let mut g = ProtocolGraph::new(params(vec![1, 2], 100));
        let (x, y, y2) = (d(20), d(21), d(22));
        let root = root_node(&g, hash_pair(&x, &y));
        g.execute(&Move::CreateRoot { span: root.span }, Party::Honest, 1);
        g.execute(&Move::CreateRoot { span: hash_pair(&x, &y2) }, Party::Adversary, 1);
        g.execute(&Move::Bisect { node: root.clone(), span_l: x, span_r: y }, Party::Honest, 2);
        g.execute(&Move::Bisect { node: root_node(&g, hash_pair(&x, &y2)), span_l: x, span_r: y2 }, Party::Adversary, 2);
        let term = Node { level: 2, lbase: 1, lspan: 1, base: hash_pair(&d(0), &x), span: y };
        let tid = g.id_of(&term).unwrap();
        assert!(g.is_rivaled(tid));

        // Two refinement children whose right-most leaf is the parent span.
        let mk = |first: Digest| {
            let t = SpanTree::build(&[first, y]).unwrap();
            (t.root(), t.rightmost_path())
        };
        let (s1, p1) = mk(d(30));
        let (s2, p2) = mk(d(31));
        g.execute(&Move::Refine { node: term.clone(), span_star: s1, path: p1.clone() }, Party::Honest, 3);
        let e = g.execute(&Move::Refine { node: term.clone(), span_star: s2, path: p2 }, Party::Adversary, 5).clone();
        assert_eq!(e.cohort, Some(2));
        let c1 = Node { level: 1, lbase: 2, lspan: 2, base: term.base, span: s1 };
        let c2 = Node { level: 1, lbase: 2, lspan: 2, base: term.base, span: s2 };
        let (id1, id2) = (g.id_of(&c1).unwrap(), g.id_of(&c2).unwrap());
        assert_eq!(g.rivals(id1), vec![id2]);
        assert_eq!(g.execute(&Move::Refine { node: term.clone(), span_star: s1, path: p1 }, Party::Honest, 6).outcome, Outcome::Redundant);

        // Child estimates 0 and 9: the max rule picks the hinted 9-child.
        g.records[id2.index()].estimate = ExtNat::Fin(9);
        let lam = g.local_timer(tid, 10);
        assert_eq!(lam, ExtNat::Fin(0));
        // Give the terminal an unrivaled timer of 3 by construction.
        g.records[tid.index()].created = 0;
        g.rival_time.insert(term.context(), 3);
        let e = g.execute(&Move::Update { node: term.clone(), beta_star: ExtNat::Inf, child: Some(c2.clone()) }, Party::Honest, 10).clone();
        assert_eq!(e.estimate, Some(ExtNat::Fin(12)));
        let bogus = Node { span: d(99), ..c2 };
        assert_eq!(g.execute(&Move::Update { node: term, beta_star: ExtNat::Inf, child: Some(bogus) }, Party::Honest, 11).outcome, Outcome::Invalid);
    }

    #[test]
    fn refinement_rejects_non_rightmost_path() {
        let mut g = ProtocolGraph::new(params(vec![1, 2], 100));
        let (x, y, y2) = (d(20), d(21), d(22));
        g.execute(&Move::CreateRoot { span: hash_pair(&x, &y) }, Party::Honest, 1);
        g.execute(&Move::CreateRoot { span: hash_pair(&x, &y2) }, Party::Adversary, 1);
        let root = root_node(&g, hash_pair(&x, &y));
        g.execute(&Move::Bisect { node: root, span_l: x, span_r: y }, Party::Honest, 2);
        g.execute(&Move::Bisect { node: root_node(&g, hash_pair(&x, &y2)), span_l: x, span_r: y2 }, Party::Adversary, 2);
        let term = Node { level: 2, lbase: 1, lspan: 1, base: hash_pair(&d(0), &x), span: y };
        // A tree whose first leaf is the parent span: its path is not right-most.
        let t = SpanTree::build(&[y, d(40)]).unwrap();
        let path = crate::commitment::RightmostPath { siblings: vec![d(40)] };
        let e = g.execute(&Move::Refine { node: term, span_star: t.root(), path }, Party::Adversary, 3);
        assert_eq!(e.outcome, Outcome::Invalid);
    }
}
