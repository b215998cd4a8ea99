//! The engine behind every shipped non-passive strategy: contest honest
//! nodes with incorrect roots, bisect every rivaled incorrect node it owns
//! as early as possible, optionally spam refinements under honest terminal
//! nodes, and spend censorship and delay according to policy.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;

use crate::commitment::Digest;
use crate::config::{CensorPolicy, ReleasePolicy};
use crate::graph::{Move, NodeId, Outcome, Party, ProtocolGraph};
use crate::history::History;
use crate::Round;

use super::{Adversary, AdversaryAction, AdversaryView, ExecItem};

#[derive(Debug, Clone)]
pub struct ContesterOptions {
    pub name: String,
    /// Creation round for the root of each history.
    pub root_rounds: Vec<Round>,
    pub censor: CensorPolicy,
    pub censor_start: Option<Round>,
    pub release: ReleasePolicy,
    pub rush_updates: bool,
    /// Refine its own rivaled terminal nodes above level 1.
    pub refine_own: bool,
    /// Spam refinements under rivaled honest terminals; index = child level - 1.
    pub spam_counts: Vec<u32>,
    pub seed: u64,
}

#[derive(Debug, Default, Clone)]
struct Tracking {
    scanned: usize,
    /// Incorrect nodes built from one of our histories.
    owned: BTreeMap<NodeId, usize>,
    /// Correct terminal nodes above level 1.
    honest_terminals: BTreeSet<NodeId>,
}

pub struct Contester {
    opts: ContesterOptions,
    truth: Arc<History>,
    histories: Vec<Arc<History>>,
    track: Tracking,
    spammed: HashSet<NodeId>,
    acted: HashSet<Move>,
    rushed: HashSet<u64>,
    censor_from: Option<Round>,
}

impl Contester {
    pub fn new(opts: ContesterOptions, truth: Arc<History>, histories: Vec<Arc<History>>) -> Self {
        assert_eq!(opts.root_rounds.len(), histories.len(), "one root round per history");
        Contester {
            censor_from: match opts.censor {
                CensorPolicy::FrontLoad => Some(opts.censor_start.unwrap_or(1)),
                CensorPolicy::BackLoad => opts.censor_start,
                _ => None,
            },
            opts,
            truth,
            histories,
            track: Tracking::default(),
            spammed: HashSet::new(),
            acted: HashSet::new(),
            rushed: HashSet::new(),
        }
    }

    fn classify(&self, track: &mut Tracking, g: &ProtocolGraph, id: NodeId) {
        let node = g.node(id);
        if node.is_proof() {
            return;
        }
        if self.truth.is_correct(node) {
            if node.is_terminal() && node.level > 1 {
                track.honest_terminals.insert(id);
            }
            return;
        }
        if let Some(i) = self.histories.iter().position(|h| h.is_correct(node)) {
            track.owned.insert(id, i);
        }
    }

    fn scan(&self, track: &mut Tracking, g: &ProtocolGraph) {
        for i in track.scanned..g.len() {
            self.classify(track, g, NodeId(i as u32));
        }
        track.scanned = g.len();
    }

    /// A history agreeing with the truth except at the interior leaves of
    /// the refinement window under `term`, so its right-most leaf still
    /// opens the honest terminal span.
    fn frenemy_history(&self, g: &ProtocolGraph, term: NodeId, copy: u32) -> History {
        let node = g.node(term);
        let cfg = self.truth.cfg();
        let below = node.level - 1;
        let (n_b, d_b) = (cfg.n_at(below), cfg.delta(below));
        let mut overrides = BTreeMap::new();
        for j in 1..n_b {
            let idx = (node.lbase * n_b + j) * d_b;
            let tag = [
                self.opts.seed.to_be_bytes(),
                u64::from(term.0).to_be_bytes(),
                u64::from(copy).to_be_bytes(),
                j.to_be_bytes(),
            ]
            .concat();
            overrides.insert(idx, Digest::leaf(&tag));
        }
        History::patched(self.truth.clone(), overrides)
    }

    fn wants_censor(&mut self, view: &AdversaryView<'_>) -> bool {
        if view.budget_left == 0 {
            return false;
        }
        let honest_pending = view.pool.iter().any(|p| p.submitter == Party::Honest);
        match self.opts.censor {
            CensorPolicy::None => false,
            CensorPolicy::Reactive => honest_pending,
            CensorPolicy::FrontLoad => self.censor_from.is_some_and(|s| view.round >= s),
            CensorPolicy::BackLoad => {
                if self.censor_from.is_none()
                    && view
                        .pool
                        .iter()
                        .any(|p| p.submitter == Party::Honest && matches!(p.mv, Move::Update { .. }))
                {
                    self.censor_from = Some(view.round);
                }
                self.censor_from.is_some_and(|s| view.round >= s)
            }
        }
    }
}

impl Adversary for Contester {
    fn name(&self) -> &str {
        &self.opts.name
    }

    fn histories(&self) -> Vec<Arc<History>> {
        self.histories.clone()
    }

    fn act(&mut self, view: &AdversaryView<'_>) -> AdversaryAction {
        let t = view.round;
        let mut track = std::mem::take(&mut self.track);
        self.scan(&mut track, view.graph);
        self.track = track.clone();

        let mut own: Vec<Move> = Vec::new();
        let mut sandbox: Option<ProtocolGraph> = None;
        let mut pending: Vec<(Move, usize)> = self
            .opts
            .root_rounds
            .iter()
            .enumerate()
            .filter(|&(_, &r)| r == t)
            .map(|(i, _)| (Move::CreateRoot { span: self.histories[i].root().span }, i))
            .collect();

        loop {
            if !pending.is_empty() {
                let sb = sandbox.get_or_insert_with(|| view.graph.fork());
                for (mv, _) in pending.drain(..) {
                    if sb.execute(&mv, Party::Adversary, t).outcome == Outcome::Applied {
                        own.push(mv);
                    }
                }
                self.scan(&mut track, sb);
            }
            let g = sandbox.as_ref().unwrap_or(view.graph);
            for (&id, &i) in &track.owned {
                if g.has_children(id) || !g.is_rivaled(id) {
                    continue;
                }
                let node = g.node(id);
                let mv = if !node.is_terminal() {
                    self.histories[i].bisect_move(node)
                } else if node.level > 1 && self.opts.refine_own {
                    self.histories[i].refine_move(node)
                } else {
                    continue;
                };
                if self.acted.insert(mv.clone()) {
                    pending.push((mv, i));
                }
            }
            if !self.opts.spam_counts.is_empty() {
                let ready: Vec<NodeId> = track
                    .honest_terminals
                    .iter()
                    .copied()
                    .filter(|&v| g.is_rivaled(v) && !self.spammed.contains(&v))
                    .collect();
                for v in ready {
                    self.spammed.insert(v);
                    let level = g.node(v).level;
                    let count = self.opts.spam_counts[level as usize - 2];
                    for copy in 0..count {
                        let h = Arc::new(self.frenemy_history(g, v, copy));
                        let mv = h.refine_move(g.node(v));
                        self.histories.push(h);
                        if self.acted.insert(mv.clone()) {
                            pending.push((mv, self.histories.len() - 1));
                        }
                    }
                }
            }
            if pending.is_empty() {
                break;
            }
        }

        let censor = self.wants_censor(view);
        let mut exec = Vec::new();
        if self.opts.rush_updates {
            for p in view.pool {
                if p.submitter == Party::Honest && matches!(p.mv, Move::Update { .. }) && self.rushed.insert(p.id) {
                    exec.push(ExecItem::Own(p.mv.clone()));
                }
            }
        }
        exec.extend(own.into_iter().map(ExecItem::Own));
        let bump = u64::from(censor);
        for p in view.pool {
            let release = match self.opts.release {
                ReleasePolicy::Immediate => true,
                ReleasePolicy::WhenDue => p.due + bump <= t,
            };
            if release {
                exec.push(ExecItem::Pooled(p.id));
            }
        }
        AdversaryAction { censor, exec }
    }
}
