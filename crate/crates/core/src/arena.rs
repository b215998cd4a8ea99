//! The round game. Each round the honest party submits from the previous
//! round's graph, the adversary picks a censor flag and an execution order,
//! and the referee applies it. The arena enforces the pool rules: due
//! dates, the censorship budget and forced inclusion of due moves.

use std::sync::Arc;

use serde::Serialize;

use crate::accounting::{reimburse, tally, CostReport, Inference, Ledger, ReimburseInput};
use crate::adversary::{self, Adversary, AdversaryView, ExecItem, PendingMove};
use crate::config::{ScenarioConfig, StakeSchedule};
use crate::graph::{MoveKind, Node, NodeId, Outcome, Party, ProtocolGraph, Winner};
use crate::history::History;
use crate::honest::HonestParty;
use crate::timers::{honest_tree, round_bound};
use crate::{Result, Round};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExecRecord {
    pub seq: u64,
    pub mover: Party,
    pub kind: MoveKind,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pooled: Option<u64>,
    /// Due but omitted by the adversary; appended by the arena.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub forced: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundLog {
    pub round: Round,
    pub censored: bool,
    pub submitted: Vec<u64>,
    pub executed: Vec<ExecRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WinnerKind {
    Honest,
    Adversary,
    None,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub seed: u64,
    pub strategy: String,
    pub n_a: u32,
    pub ks: Vec<u32>,
    pub threshold: u64,
    pub delta: u64,
    pub c_max: u64,
    pub static_mode: bool,
    pub winner: WinnerKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub winner_node: Option<NodeId>,
    pub winning_round: Option<Round>,
    pub round_bound: Round,
    pub rounds_run: Round,
    pub censored_rounds: u64,
    pub violations: u64,
    pub t_star: Option<Round>,
    pub honest_tree_size: usize,
    pub graph_nodes: usize,
    pub moves_executed: usize,
    pub costs: CostReport,
    pub ledger: Ledger,
}

impl ScenarioReport {
    /// The honest root won no later than the round bound.
    pub fn liveness_ok(&self) -> bool {
        self.winner == WinnerKind::Honest && self.winning_round.is_some_and(|r| r <= self.round_bound)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub struct Arena {
    config: ScenarioConfig,
    truth: Arc<History>,
    graph: ProtocolGraph,
    honest: HonestParty,
    adversary: Box<dyn Adversary>,
    stakes: StakeSchedule,
    pool: Vec<PendingMove>,
    next_id: u64,
    round: Round,
    censored: u64,
    violations: u64,
    logs: Vec<RoundLog>,
    static_mode: bool,
}

impl Arena {
    pub fn new(config: &ScenarioConfig) -> Result<Arena> {
        config.validate()?;
        let truth = Arc::new(config.honest_history()?);
        let adversary = adversary::build(config, truth.clone())?;
        Arena::assemble(config, truth, adversary)
    }

    /// An arena with a caller-supplied adversary.
    pub fn with_adversary(config: &ScenarioConfig, adversary: Box<dyn Adversary>) -> Result<Arena> {
        config.validate()?;
        let truth = Arc::new(config.honest_history()?);
        Arena::assemble(config, truth, adversary)
    }

    fn assemble(config: &ScenarioConfig, truth: Arc<History>, adversary: Box<dyn Adversary>) -> Result<Arena> {
        let params = config.params(truth.h0())?;
        let threshold = params.threshold;
        Ok(Arena {
            config: config.clone(),
            graph: ProtocolGraph::new(params),
            honest: HonestParty::new(truth.clone(), threshold, config.honest.minimal_subtree),
            truth,
            adversary,
            stakes: config.stakes()?,
            pool: Vec::new(),
            next_id: 0,
            round: 0,
            censored: 0,
            violations: 0,
            logs: Vec::new(),
            static_mode: false,
        })
    }

    /// Static play: the honest party never updates and ignores winners.
    pub fn set_static(&mut self, on: bool) {
        self.static_mode = on;
        self.honest.set_static(on);
    }

    pub fn graph(&self) -> &ProtocolGraph {
        &self.graph
    }

    pub fn truth(&self) -> &Arc<History> {
        &self.truth
    }

    pub fn honest(&self) -> &HonestParty {
        &self.honest
    }

    pub fn adversary(&self) -> &dyn Adversary {
        &*self.adversary
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn round(&self) -> Round {
        self.round
    }

    pub fn logs(&self) -> &[RoundLog] {
        &self.logs
    }

    pub fn pool(&self) -> &[PendingMove] {
        &self.pool
    }

    pub fn censored_rounds(&self) -> u64 {
        self.censored
    }

    pub fn violations(&self) -> u64 {
        self.violations
    }

    /// Plays one round and returns its log.
    pub fn step(&mut self) -> &RoundLog {
        let t = self.round + 1;
        self.round = t;
        let delta = self.graph.params().delta;
        let c_max = self.graph.params().c_max;

        let submitted: Vec<u64> = self
            .honest
            .plan(&self.graph, t)
            .into_iter()
            .map(|mv| {
                let id = self.next_id;
                self.next_id += 1;
                self.pool.push(PendingMove {
                    id,
                    mv,
                    submitter: Party::Honest,
                    submitted: t,
                    due: t + delta,
                });
                id
            })
            .collect();

        let action = self.adversary.act(&AdversaryView {
            round: t,
            graph: &self.graph,
            pool: &self.pool,
            budget_left: c_max - self.censored,
            delta,
        });

        let mut violations = Vec::new();
        let mut censored = action.censor;
        if censored && self.censored >= c_max {
            censored = false;
            violations.push("censorship budget exhausted; round not censored".to_string());
        }
        if censored {
            self.censored += 1;
            for p in &mut self.pool {
                p.due += 1;
            }
        }

        let mut executed = Vec::new();
        for item in action.exec {
            match item {
                ExecItem::Own(mv) => {
                    let ev = self.graph.execute(&mv, Party::Adversary, t);
                    executed.push(ExecRecord {
                        seq: ev.seq,
                        mover: Party::Adversary,
                        kind: mv.kind(),
                        outcome: ev.outcome,
                        pooled: None,
                        forced: false,
                    });
                }
                ExecItem::Pooled(id) => match self.pool.iter().position(|p| p.id == id) {
                    Some(i) => {
                        let p = self.pool.remove(i);
                        executed.push(self.execute_pooled(p, t, false));
                    }
                    None => violations.push(format!("pooled move {id} is not pending")),
                },
            }
        }
        let (due, rest): (Vec<PendingMove>, Vec<PendingMove>) =
            std::mem::take(&mut self.pool).into_iter().partition(|p| p.due <= t);
        self.pool = rest;
        for p in due {
            violations.push(format!("pooled move {} was due and omitted", p.id));
            executed.push(self.execute_pooled(p, t, true));
        }

        self.violations += violations.len() as u64;
        self.logs.push(RoundLog {
            round: t,
            censored,
            submitted,
            executed,
            violations,
        });
        self.logs.last().expect("just pushed")
    }

    fn execute_pooled(&mut self, p: PendingMove, t: Round, forced: bool) -> ExecRecord {
        let ev = self.graph.execute(&p.mv, p.submitter, t);
        let rec = ExecRecord {
            seq: ev.seq,
            mover: p.submitter,
            kind: p.mv.kind(),
            outcome: ev.outcome,
            pooled: Some(p.id),
            forced,
        };
        if p.submitter == Party::Honest {
            self.honest.notify(&p.mv);
        }
        rec
    }

    /// Plays until a winner is declared or the round cap is hit.
    pub fn run_to_end(&mut self) -> Result<()> {
        let cap = self.config.max_rounds()?;
        while self.graph.winner() == Winner::Undecided && self.round < cap {
            self.step();
        }
        Ok(())
    }

    /// Plays exactly the static bound of rounds.
    pub fn run_static_rounds(&mut self) {
        self.set_static(true);
        let n = round_bound(self.graph.params(), false);
        while self.round < n {
            self.step();
        }
    }

    /// The label of `node` under whichever known history builds it.
    pub fn label(&self, node: &Node) -> String {
        let truth = &*self.truth;
        let own = self.adversary.histories();
        let h = std::iter::once(truth)
            .chain(own.iter().map(|h| &**h))
            .find(|h| h.is_correct(node))
            .unwrap_or(truth);
        h.label(node, truth)
    }

    pub fn report(&self) -> Result<ScenarioReport> {
        let cfg = &self.config;
        let g = &self.graph;
        let costs = tally(g, &self.truth, &cfg.gas, &self.stakes);
        let ledger = reimburse(&ReimburseInput {
            graph: g,
            truth: &self.truth,
            gas: &cfg.gas,
            stakes: &self.stakes,
            costs: &costs,
            minimal_subtree: cfg.honest.minimal_subtree,
            inference: Inference::StateAware,
        });
        let (winner, winner_node) = match g.winner() {
            Winner::Root(r) if self.truth.is_correct(g.node(r)) => (WinnerKind::Honest, Some(r)),
            Winner::Root(r) => (WinnerKind::Adversary, Some(r)),
            Winner::None => (WinnerKind::None, None),
            Winner::Undecided => (WinnerKind::Undecided, None),
        };
        Ok(ScenarioReport {
            name: cfg.name.clone(),
            seed: cfg.seed,
            strategy: self.adversary.name().to_string(),
            n_a: cfg.adversary.n_a(),
            ks: cfg.ks.clone(),
            threshold: g.params().threshold,
            delta: cfg.delta,
            c_max: cfg.c_max,
            static_mode: self.static_mode,
            winner,
            winner_node,
            winning_round: g.winning_round(),
            round_bound: round_bound(g.params(), true),
            rounds_run: self.round,
            censored_rounds: self.censored,
            violations: self.violations,
            t_star: self.honest.t_star(),
            honest_tree_size: honest_tree(g, &self.truth, self.round).len(),
            graph_nodes: g.len(),
            moves_executed: g.log().len(),
            costs,
            ledger,
        })
    }
}

/// Runs a scenario until a winner or the round cap.
pub fn run(config: &ScenarioConfig) -> Result<ScenarioReport> {
    let mut arena = Arena::new(config)?;
    arena.run_to_end()?;
    arena.report()
}

/// Runs a scenario for exactly the static round bound with the static
/// honest strategy.
pub fn run_static(config: &ScenarioConfig) -> Result<ScenarioReport> {
    let mut arena = Arena::new(config)?;
    arena.run_static_rounds();
    arena.report()
}
