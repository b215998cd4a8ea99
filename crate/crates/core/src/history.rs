//! Claimed execution histories: a commitment for every step `0..=n`, from
//! which every node a party would build is derived. The honest history and
//! mutated-state adversarial histories carry full machine states; patched
//! histories only override commitments.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use crate::commitment::{derive_right_base, Digest, RightmostPath, SpanTree};
use crate::graph::{LevelConfig, Move, Node, ProofBundle};
use crate::vm::{self, MachineState};

#[derive(Debug)]
enum Source {
    States(Vec<MachineState>),
    Patched {
        parent: Arc<History>,
        overrides: BTreeMap<u64, Digest>,
    },
}

/// A party's view of `S_0..S_n`, with lazily built per-window span trees.
#[derive(Debug)]
pub struct History {
    cfg: LevelConfig,
    source: Source,
    commits: Vec<OnceLock<Digest>>,
    trees: Vec<Vec<OnceLock<SpanTree>>>,
    bases: Vec<Vec<OnceLock<Digest>>>,
}

fn lowbit(x: u64) -> u64 {
    x & x.wrapping_neg()
}

impl History {
    fn with_source(cfg: LevelConfig, source: Source) -> History {
        let n = cfg.n();
        let trees = (1..=cfg.levels())
            .map(|l| (0..cfg.leaves_at(l) / cfg.n_at(l)).map(|_| OnceLock::new()).collect())
            .collect();
        let bases = (1..=cfg.levels())
            .map(|l| (0..cfg.leaves_at(l)).map(|_| OnceLock::new()).collect())
            .collect();
        History {
            commits: (0..=n).map(|_| OnceLock::new()).collect(),
            cfg,
            source,
            trees,
            bases,
        }
    }

    /// The true history `S_0, F(S_0), ..., F^n(S_0)`.
    pub fn honest(cfg: LevelConfig, s0: MachineState) -> History {
        let mut states = vec![s0];
        states.extend(vm::run(s0, cfg.n()));
        History::with_source(cfg, Source::States(states))
    }

    /// Agrees with `truth` up to `S_divergence`, then flips bits of `acc` in
    /// the next state (`mask` must be nonzero) and runs F forward from there.
    pub fn diverged(truth: &History, divergence: u64, mask: u64) -> History {
        assert!(mask != 0, "a zero mask does not diverge");
        assert!(divergence < truth.n(), "divergence must lie in [0, n)");
        let mut states: Vec<MachineState> = (0..=divergence)
            .map(|i| *truth.state(i).expect("truth carries states"))
            .collect();
        let mut cur = states[divergence as usize].step();
        cur.acc ^= mask;
        states.push(cur);
        while (states.len() as u64) <= truth.n() {
            cur = cur.step();
            states.push(cur);
        }
        History::with_source(truth.cfg.clone(), Source::States(states))
    }

    /// `parent` with some step commitments replaced.
    pub fn patched(parent: Arc<History>, overrides: BTreeMap<u64, Digest>) -> History {
        let cfg = parent.cfg.clone();
        History::with_source(cfg, Source::Patched { parent, overrides })
    }

    pub fn cfg(&self) -> &LevelConfig {
        &self.cfg
    }

    pub fn n(&self) -> u64 {
        self.cfg.n()
    }

    pub fn state(&self, i: u64) -> Option<&MachineState> {
        match &self.source {
            Source::States(s) => s.get(i as usize),
            Source::Patched { .. } => None,
        }
    }

    /// `Com(S_i)` as claimed by this history.
    pub fn commitment(&self, i: u64) -> Digest {
        *self.commits[i as usize].get_or_init(|| match &self.source {
            Source::States(s) => s[i as usize].commit(),
            Source::Patched { parent, overrides } => {
                overrides.get(&i).copied().unwrap_or_else(|| parent.commitment(i))
            }
        })
    }

    pub fn h0(&self) -> Digest {
        self.commitment(0)
    }

    /// Span tree of the `w`-th level-ℓ window (`n_ℓ` leaves).
    pub fn window_tree(&self, level: u32, w: u64) -> &SpanTree {
        self.trees[level as usize - 1][w as usize].get_or_init(|| {
            let n_l = self.cfg.n_at(level);
            let delta = self.cfg.delta(level);
            let leaves: Vec<Digest> = (1..=n_l).map(|j| self.commitment((w * n_l + j) * delta)).collect();
            SpanTree::build(&leaves).expect("window size is a power of two")
        })
    }

    pub fn span(&self, level: u32, lbase: u64, lspan: u64) -> Digest {
        let n_l = self.cfg.n_at(level);
        self.window_tree(level, lbase / n_l)
            .subtree_root((lbase % n_l) as usize, lspan as usize)
            .expect("aligned position")
    }

    /// Base commitment of every level-ℓ node whose window offset is `lbase`.
    pub fn base(&self, level: u32, lbase: u64) -> Digest {
        if lbase == 0 {
            return self.h0();
        }
        if let Some(d) = self.bases[level as usize - 1][lbase as usize].get() {
            return *d;
        }
        let n_l = self.cfg.n_at(level);
        let d = if lbase % n_l == 0 {
            self.base(level + 1, lbase / n_l)
        } else {
            let s = lowbit(lbase);
            derive_right_base(&self.base(level, lbase - s), &self.span(level, lbase - s, s))
        };
        *self.bases[level as usize - 1][lbase as usize].get_or_init(|| d)
    }

    pub fn node(&self, level: u32, lbase: u64, lspan: u64) -> Node {
        Node {
            level,
            lbase,
            lspan,
            base: self.base(level, lbase),
            span: self.span(level, lbase, lspan),
        }
    }

    pub fn root(&self) -> Node {
        let l = self.cfg.levels();
        self.node(l, 0, self.cfg.n_at(l))
    }

    pub fn proof_node(&self, lbase: u64) -> Node {
        Node {
            level: 0,
            ..self.node(1, lbase, 1)
        }
    }

    /// The refinement child this history would attach under `(level, lbase)`.
    pub fn refinement_node(&self, level: u32, lbase: u64) -> Node {
        let below = level - 1;
        let n_b = self.cfg.n_at(below);
        self.node(below, lbase * n_b, n_b)
    }

    /// Whether `node` is exactly what this history builds at its position.
    pub fn is_correct(&self, node: &Node) -> bool {
        if !node.well_formed(&self.cfg) {
            return false;
        }
        let expected = if node.is_proof() {
            self.proof_node(node.lbase)
        } else {
            self.node(node.level, node.lbase, node.lspan)
        };
        expected == *node
    }

    pub fn bisect_move(&self, node: &Node) -> Move {
        let half = node.lspan / 2;
        Move::Bisect {
            node: node.clone(),
            span_l: self.span(node.level, node.lbase, half),
            span_r: self.span(node.level, node.lbase + half, half),
        }
    }

    pub fn refine_move(&self, node: &Node) -> Move {
        let tree = self.window_tree(node.level - 1, node.lbase);
        Move::Refine {
            node: node.clone(),
            span_star: tree.root(),
            path: tree.rightmost_path(),
        }
    }

    /// Right-most path from `Com(S_lbase)` up to the level-1 base at `lbase`.
    pub fn base_path(&self, lbase: u64) -> RightmostPath {
        if lbase == 0 {
            return RightmostPath::default();
        }
        let z = lbase.trailing_zeros();
        let level = (1..=self.cfg.levels())
            .find(|&l| z < self.cfg.k(l))
            .unwrap_or(self.cfg.levels());
        let b = lbase >> self.cfg.k(level - 1);
        let s = lowbit(b);
        let parent = b - s;
        let n_l = self.cfg.n_at(level);
        let mut path = self
            .window_tree(level, parent / n_l)
            .subtree_rightmost_path((parent % n_l) as usize, s as usize)
            .expect("aligned position");
        path.siblings.push(self.base(level, parent));
        path
    }

    /// One-step proof for the level-1 terminal at `lbase`, if states are known.
    pub fn prove_move(&self, lbase: u64) -> Option<Move> {
        let pre = self.state(lbase)?;
        Some(Move::Prove {
            node: self.node(1, lbase, 1),
            proof: ProofBundle {
                state_commitment: self.commitment(lbase),
                base_path: self.base_path(lbase),
                step: vm::prove_step(pre),
            },
        })
    }

    /// Renders `node` as `[S0 S1][S2* S3*]`, starring steps where this
    /// history departs from `truth`. Long windows are abbreviated.
    pub fn label(&self, node: &Node, truth: &History) -> String {
        let level = node.level.max(1);
        let delta = self.cfg.delta(level);
        let fmt = |range: Vec<u64>| -> String {
            let tag = |i: u64| {
                let star = if self.commitment(i) != truth.commitment(i) { "*" } else { "" };
                format!("S{i}{star}")
            };
            if range.len() <= 8 {
                range.into_iter().map(tag).collect::<Vec<_>>().join(" ")
            } else {
                format!("{} .. {}", tag(range[0]), tag(*range.last().expect("non-empty")))
            }
        };
        let base: Vec<u64> = (0..=node.lbase).map(|i| i * delta).collect();
        let span: Vec<u64> = (node.lbase + 1..=node.lbase + node.lspan).map(|i| i * delta).collect();
        let body = format!("[{}][{}]", fmt(base), fmt(span));
        match node.level {
            0 => format!("proof{body}"),
            l if self.cfg.levels() > 1 => format!("L{l}{body}"),
            _ => body,
        }
    }
}
