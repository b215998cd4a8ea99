mod common;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use bold_core::accounting::{reimburse, tally, Inference, ReimburseInput};
use bold_core::adversary::{Adversary, AdversaryAction, AdversaryView, ExecItem};
use bold_core::arena::{self, Arena, WinnerKind};
use bold_core::commitment::Digest;
use bold_core::config::{stake_floor, CensorPolicy, ScenarioConfig, StakeSchedule, StrategyKind, StrategyParams};
use bold_core::graph::{LevelConfig, Move, Outcome, Party, ProtocolGraph, ProtocolParams};
use bold_core::history::History;
use bold_core::timers::Oracle;
use bold_core::vm::MachineState;
use bold_core::ExtNat;
use common::*;

fn with_strategy(ks: &[u32], kind: StrategyKind, n_a: Option<u32>) -> ScenarioConfig {
    let mut c = ScenarioConfig::new(ks.to_vec());
    c.delta = 1;
    c.c_max = 3;
    c.adversary = StrategyParams::new(kind);
    c.adversary.n_a = n_a;
    c
}

#[test]
fn passive_adversary_spends_nothing() {
    for ks in [&[2][..], &[1, 2], &[1, 2, 3]] {
        let r = arena::run(&with_strategy(ks, StrategyKind::Passive, None)).unwrap();
        assert_eq!(r.winner, WinnerKind::Honest);
        assert!(r.liveness_ok());
        assert_eq!(r.censored_rounds, 0);
        assert_eq!(r.costs.adversary.gas, 0);
        assert_eq!(r.costs.g_h, 0);
        assert!(r.costs.ratio.is_infinite());
    }
}

#[test]
fn front_loaded_censorship_delays_the_honest_root_by_at_most_the_budget() {
    for c_max in [0, 1, 4, 9] {
        let mut c = with_strategy(&[3], StrategyKind::BudgetBurner, Some(1));
        c.c_max = c_max;
        c.adversary.censor = Some(CensorPolicy::FrontLoad);
        let mut a = Arena::new(&c).unwrap();
        a.run_to_end().unwrap();
        let g = a.graph();
        let root = g.id_of(&a.truth().root()).unwrap();
        assert!(g.created(root) <= c_max + c.delta + 1, "c_max={c_max}: root at {}", g.created(root));
        assert_eq!(a.censored_rounds(), c_max);
        assert_eq!(a.violations(), 0);
    }
}

/// Asks to censor every round and never releases anything.
struct Greedy;

impl Adversary for Greedy {
    fn name(&self) -> &str {
        "greedy"
    }

    fn act(&mut self, _view: &AdversaryView<'_>) -> AdversaryAction {
        AdversaryAction {
            censor: true,
            exec: Vec::new(),
        }
    }

    fn histories(&self) -> Vec<Arc<History>> {
        Vec::new()
    }
}

#[test]
fn arena_clamps_censorship_past_the_budget_and_forces_due_moves() {
    let mut c = ScenarioConfig::new(vec![2]);
    c.delta = 2;
    c.c_max = 3;
    let mut a = Arena::with_adversary(&c, Box::new(Greedy)).unwrap();
    for _ in 0..8 {
        a.step();
    }
    assert_eq!(a.censored_rounds(), 3);
    let logs = a.logs();
    assert!(logs[..3].iter().all(|l| l.censored));
    // Round 4 is the first clamp; the root submitted in round 1 comes due
    // at 1 + δ + 3 censored rounds = 6 and is forced in.
    assert!(!logs[3].censored && !logs[3].violations.is_empty());
    let forced: Vec<_> = logs.iter().flat_map(|l| l.executed.iter().filter(|e| e.forced).map(move |e| (l.round, e.kind))).collect();
    assert_eq!(forced.first().map(|f| f.0), Some(6));
    assert!(a.violations() >= 5);
}

#[test]
fn unknown_pooled_ids_are_logged_not_executed() {
    struct Bogus;
    impl Adversary for Bogus {
        fn name(&self) -> &str {
            "bogus"
        }
        fn act(&mut self, v: &AdversaryView<'_>) -> AdversaryAction {
            let mut exec = vec![ExecItem::Pooled(999)];
            exec.extend(v.pool.iter().map(|p| ExecItem::Pooled(p.id)));
            AdversaryAction { censor: false, exec }
        }
        fn histories(&self) -> Vec<Arc<History>> {
            Vec::new()
        }
    }
    let c = ScenarioConfig::new(vec![1]);
    let mut a = Arena::with_adversary(&c, Box::new(Bogus)).unwrap();
    let log = a.step().clone();
    assert_eq!(log.executed.len(), 1);
    assert_eq!(log.violations.len(), 1);
}

#[test]
fn honest_moves_land_by_their_due_round() {
    for cell in matrix(2).iter().step_by(7) {
        let mut a = Arena::new(cell).unwrap();
        a.run_to_end().unwrap();
        let delta = cell.delta;
        let mut submitted = HashMap::new();
        for l in a.logs() {
            for id in &l.submitted {
                submitted.insert(*id, l.round);
            }
        }
        let censored: Vec<bool> = a.logs().iter().map(|l| l.censored).collect();
        for l in a.logs() {
            for e in l.executed.iter().filter(|e| e.mover == Party::Honest) {
                let s = submitted[&e.pooled.unwrap()];
                let bumps = censored[s as usize - 1..l.round as usize].iter().filter(|&&c| c).count() as u64;
                assert!(l.round <= s + delta + bumps, "{}: move {:?} late", cell.name, e.pooled);
            }
        }
    }
}

#[test]
fn reports_are_deterministic() {
    for name in ["fig1", "two-level", "three-level", "ratio-rho10", "horizontal-staking"] {
        let c = bundled(name);
        let a = arena::run(&c).unwrap().to_json();
        let b = arena::run(&c).unwrap().to_json();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn horizontal_stakes_grow_with_the_cohort() {
    let mut c = with_strategy(&[2], StrategyKind::RootSpammer, Some(3));
    c.c_max = 0;
    c.stakes = Some(StakeSchedule::Horizontal { base: 7 });
    let r = arena::run(&c).unwrap();
    assert_eq!(r.costs.adversary.stake, 7 + 14 + 21);
    assert_eq!(r.costs.honest.stake, 4 * 7);
}

#[test]
fn marginal_gas_single_root_counts_sibling_updates() {
    // k=2, one adversarial root: two bisections, one proof and the four
    // non-root updates along the honest path and its siblings.
    let mut c = with_strategy(&[2], StrategyKind::RootSpammer, Some(1));
    c.c_max = 0;
    let r = arena::run(&c).unwrap();
    let g = &c.gas;
    assert_eq!(r.costs.g_h, 2 * g.bisect + g.proof + 4 * g.update);
    // The per-root count assumes k+1 updates and is k-1 updates short.
    let per_root = 2 * g.bisect + g.proof + 3 * g.update;
    assert_eq!(r.costs.g_h - per_root, g.update);
}

#[test]
fn marginal_gas_within_bound_for_several_roots() {
    for n_a in [2, 4, 8] {
        let mut c = with_strategy(&[2], StrategyKind::RootSpammer, Some(n_a));
        c.c_max = 0;
        let r = arena::run(&c).unwrap();
        let g = &c.gas;
        assert!(r.costs.g_h <= n_a as u64 * (2 * g.bisect + g.proof + 3 * g.update), "n_a={n_a}: {}", r.costs.g_h);
    }
}

#[test]
fn two_roots_at_the_floor_are_fully_reimbursed() {
    let mut c = with_strategy(&[3], StrategyKind::RootSpammer, Some(2));
    c.c_max = 0;
    let s = stake_floor(&c.levels().unwrap(), &c.gas, 1);
    let r = arena::run(&c).unwrap();
    assert_eq!(r.ledger.confiscated, 2 * s);
    assert!(r.ledger.complete);
    assert!(r.ledger.paid_honest >= r.costs.g_h);
}

#[test]
fn rushed_updates_are_credited_to_the_rusher() {
    let mut c = with_strategy(&[3], StrategyKind::RootSpammer, Some(2));
    c.c_max = 0;
    c.adversary.rush_updates = true;
    let mut a = Arena::new(&c).unwrap();
    a.run_to_end().unwrap();
    let r = a.report().unwrap();
    assert_eq!(r.winner, WinnerKind::Honest);
    let g = a.graph();
    let rushed: Vec<_> = g
        .log()
        .iter()
        .filter(|e| e.mover == Party::Adversary && matches!(e.mv, Move::Update { .. }) && e.outcome == Outcome::Applied)
        .collect();
    assert!(!rushed.is_empty());
    // The honest copies replay as no-ops.
    let noops = g
        .log()
        .iter()
        .filter(|e| e.mover == Party::Honest && matches!(e.mv, Move::Update { .. }) && e.outcome == Outcome::Redundant)
        .count();
    assert!(noops > 0);
    assert!(r.ledger.credits.iter().any(|cr| cr.mover == Party::Adversary));
    assert!(r.ledger.paid_adversary > 0);
    assert_eq!(r.ledger.confiscated_honest, 0);
}

#[test]
fn state_aware_inference_resolves_frenemies() {
    let mut c = with_strategy(&[2, 4], StrategyKind::Frenemy, Some(1));
    c.c_max = 4;
    c.adversary.spam_counts = vec![2];
    let mut a = Arena::new(&c).unwrap();
    a.run_to_end().unwrap();
    let g = a.graph();
    let stakes = c.stakes().unwrap();
    let costs = tally(g, a.truth(), &c.gas, &stakes);
    let run = |inference| {
        reimburse(&ReimburseInput {
            graph: g,
            truth: a.truth(),
            gas: &c.gas,
            stakes: &stakes,
            costs: &costs,
            minimal_subtree: false,
            inference,
        })
    };
    let aware = run(Inference::StateAware);
    let naive = run(Inference::HistoryOnly);
    assert!(aware.misattributed.is_empty());
    assert_eq!(aware.confiscated_honest, 0);
    assert!(!naive.misattributed.is_empty(), "history-only should pick a frenemy");
}

#[test]
fn frenemy_ticking_before_the_honest_refinement_triggers_the_max_rule() {
    // L=2, k=(1,2): two level-2 leaves of two steps each.
    let cfg = LevelConfig::new(vec![1, 2]).unwrap();
    let truth = Arc::new(History::honest(cfg.clone(), MachineState::new(0x5eed, cfg.n())));
    let bad = History::diverged(&truth, 3, 0xbad);
    let params = ProtocolParams::new(cfg.clone(), 100, 0, 0, truth.h0()).unwrap();
    let mut g = ProtocolGraph::new(params);
    let (hr, br) = (truth.root(), bad.root());
    g.execute(&Move::CreateRoot { span: hr.span }, Party::Honest, 1);
    g.execute(&Move::CreateRoot { span: br.span }, Party::Adversary, 1);
    g.execute(&bad.bisect_move(&br), Party::Adversary, 2);
    g.execute(&truth.bisect_move(&hr), Party::Honest, 2);
    let term = truth.node(2, 1, 1);
    let tid = g.id_of(&term).unwrap();
    assert_eq!(g.rival_time_of(tid), Some(2));

    // A frenemy agreeing with the truth except at the interior leaf.
    let mut overrides = BTreeMap::new();
    overrides.insert(3, Digest::leaf(b"frenemy"));
    let fr = History::patched(truth.clone(), overrides);
    assert_eq!(g.execute(&fr.refine_move(&term), Party::Adversary, 5).outcome, Outcome::Applied);
    assert_eq!(g.execute(&truth.refine_move(&term), Party::Honest, 8).outcome, Outcome::Applied);
    let honest_child = g.id_of(&truth.refinement_node(2, 1)).unwrap();
    let frenemy_child = g.id_of(&fr.refinement_node(2, 1)).unwrap();
    assert_ne!(honest_child, frenemy_child);
    assert_eq!(g.rival_time_of(honest_child), Some(8));

    // Frenemy ticked 5..8; the honest child never ticked; the terminal was
    // rivaled on creation. Max rule: 0 + max(3, 0) = 3.
    let o = Oracle::new(&g, 10);
    assert_eq!(o.beta(frenemy_child), ExtNat::Fin(3));
    assert_eq!(o.beta(honest_child), ExtNat::Fin(0));
    assert_eq!(o.beta(tid), ExtNat::Fin(3));
}

#[test]
fn every_shipped_strategy_wins_for_honest_on_bundled_shapes() {
    for ks in [&[3][..], &[2, 4], &[1, 2, 3]] {
        for kind in shipped(ks.len()) {
            for seed in 0..3 {
                let c = scenario(ks, 1, 5, kind, seed);
                let r = arena::run(&c).unwrap();
                assert!(r.liveness_ok(), "{}", c.name);
                assert_eq!(r.violations, 0, "{}", c.name);
            }
        }
    }
}
