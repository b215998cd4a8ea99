mod common;

use bold_core::arena::{Arena, WinnerKind};
use bold_core::config::{ScenarioConfig, StrategyKind};
use bold_core::graph::{Move, Outcome, Party};
use bold_core::timers::Oracle;
use common::*;
use proptest::prelude::*;

fn any_scenario() -> impl Strategy<Value = ScenarioConfig> {
    (0..KS.len(), 0u64..3, 0u64..8, 0usize..5, any::<u64>()).prop_map(|(ki, delta, c_max, si, seed)| {
        let ks = KS[ki];
        let kinds = shipped(ks.len());
        scenario(ks, delta, c_max, kinds[si % kinds.len()], seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn honest_root_wins_within_the_bound(c in any_scenario()) {
        let r = bold_core::arena::run(&c).unwrap();
        prop_assert_eq!(&r.winner, &WinnerKind::Honest);
        prop_assert!(r.liveness_ok());
        prop_assert_eq!(r.violations, 0);
        prop_assert!(r.censored_rounds <= c.c_max);
        prop_assert!(r.costs.sums_hold());
    }

    #[test]
    fn honest_work_never_exceeds_adversary_bisections(c in any_scenario()) {
        // Per level: honest bisections, proofs and refinements of
        // non-initial nodes are matched by adversarial bisections.
        let mut a = Arena::new(&c).unwrap();
        a.run_to_end().unwrap();
        let g = a.graph();
        let cfg = g.cfg().clone();
        let levels = cfg.levels() as usize;
        let (mut honest, mut adv) = (vec![0u64; levels + 1], vec![0u64; levels + 1]);
        for e in g.log().iter().filter(|e| e.outcome == Outcome::Applied) {
            let Some(node) = e.mv.target() else { continue };
            match (&e.mv, e.mover) {
                (Move::Bisect { .. }, Party::Adversary) => adv[node.level as usize] += 1,
                (Move::Bisect { .. } | Move::Prove { .. } | Move::Refine { .. }, Party::Honest)
                    if !node.is_initial(&cfg) => honest[node.level as usize] += 1,
                _ => {}
            }
        }
        for l in 1..=levels {
            prop_assert!(honest[l] <= adv[l], "level {}: {} > {}", l, honest[l], adv[l]);
        }
    }

    #[test]
    fn estimates_never_exceed_the_oracle(c in any_scenario()) {
        let mut a = Arena::new(&c).unwrap();
        let cap = c.max_rounds().unwrap();
        while a.graph().winner() == bold_core::graph::Winner::Undecided && a.round() < cap {
            a.step();
            let g = a.graph();
            let o = Oracle::new(g, a.round());
            for v in g.ids() {
                prop_assert!(g.estimate(v) <= o.beta(v));
            }
        }
    }

    #[test]
    fn reports_round_trip_through_json(c in any_scenario()) {
        let r = bold_core::arena::run(&c).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        prop_assert_eq!(v["costs"]["g_h"].as_u64(), Some(r.costs.g_h));
        prop_assert_eq!(v["rounds_run"].as_u64(), Some(r.rounds_run));
    }

    #[test]
    fn configs_round_trip(c in any_scenario()) {
        let back = ScenarioConfig::from_json(&c.to_json()).unwrap();
        prop_assert_eq!(back, c);
    }
}

#[test]
fn ratio_grows_with_root_count_under_horizontal_stakes() {
    use bold_core::config::{stake_floor, StakeSchedule};
    let mut prev = None;
    for n_a in [2u32, 4, 8, 16] {
        let mut c = scenario(&[2], 0, 0, StrategyKind::RootSpammer, 0);
        c.adversary.n_a = Some(n_a);
        c.adversary.root_rounds = None;
        let base = stake_floor(&c.levels().unwrap(), &c.gas, 1);
        c.stakes = Some(StakeSchedule::Horizontal { base });
        let r = bold_core::arena::run(&c).unwrap().costs.ratio;
        if let Some(p) = prev {
            assert!(!r.lt(&p), "ratio fell at n_a={n_a}");
        }
        prev = Some(r);
    }
}
