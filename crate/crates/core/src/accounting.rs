//! Post-hoc cost analysis over the referee log: gas and stake charges,
//! per-level tallies, the resource ratio, stake-schedule validation and
//! reimbursement from confiscated stakes.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::config::{stake_floor, GasSchedule, StakeSchedule};
use crate::graph::{Event, LevelConfig, Move, Node, NodeId, Outcome, Party, ProtocolGraph, Winner};
use crate::history::History;
use crate::honest::{threshold_reached_with, update_batches_with};
use crate::timers::{children_at, local_timer, paths_from};
use crate::{Error, Result, Round};

/// Gas and stake paid for one executed move.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Charge {
    pub gas: u64,
    pub stake: u64,
}

/// Nominal gas for a move, or `G_noop` when it was redundant. Stakes are
/// due only for applied moves that create an initial node.
pub fn charge(ev: &Event, g: &ProtocolGraph, gas: &GasSchedule, stakes: &StakeSchedule) -> Charge {
    let levels = g.cfg().levels();
    let nominal = match &ev.mv {
        Move::CreateRoot { .. } => gas.root,
        Move::Bisect { .. } => gas.bisect,
        Move::Prove { .. } => gas.proof,
        Move::Refine { node, .. } => gas.refine_at(node.level.saturating_sub(1), levels),
        Move::Update { .. } => gas.update,
    };
    let gas_paid = if ev.outcome == Outcome::Redundant { gas.noop } else { nominal };
    let stake = match (ev.outcome, ev.cohort, ev.created.first()) {
        (Outcome::Applied, Some(cohort), Some(&id)) => stakes.stake(g.node(id).level, cohort),
        _ => 0,
    };
    Charge { gas: gas_paid, stake }
}

/// Exact nonnegative rational; a zero denominator reads as ∞.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn is_infinite(&self) -> bool {
        self.den == 0
    }

    pub fn value(&self) -> f64 {
        if self.den == 0 {
            f64::INFINITY
        } else {
            self.num as f64 / self.den as f64
        }
    }

    /// `num / den ≥ rho`, exactly.
    pub fn at_least(&self, rho: u64) -> bool {
        u128::from(self.num) >= u128::from(rho) * u128::from(self.den)
    }

    pub fn lt(&self, other: &Ratio) -> bool {
        match (self.den, other.den) {
            (_, 0) => self.den != 0,
            (0, _) => false,
            _ => u128::from(self.num) * u128::from(other.den) < u128::from(other.num) * u128::from(self.den),
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{:.4}", self.value())
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Ratio", 3)?;
        st.serialize_field("num", &self.num)?;
        st.serialize_field("den", &self.den)?;
        if self.is_infinite() {
            st.serialize_field("value", "inf")?;
        } else {
            st.serialize_field("value", &self.value())?;
        }
        st.end()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PartyCosts {
    pub gas: u64,
    pub stake: u64,
    pub moves: u64,
    pub invalid: u64,
    pub redundant: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelCosts {
    pub level: u32,
    /// Adversary gas for moves that create level-ℓ nodes, plus its updates there.
    pub adv_gas: u64,
    pub adv_stake: u64,
    /// Honest marginal gas for work on level-ℓ nodes.
    pub honest_gas: u64,
    /// As `honest_gas`, with bisections of initial nodes moved one level up.
    pub honest_gas_adjusted: u64,
    /// Stake for honest refinements of level-ℓ terminals.
    pub honest_stake: u64,
    /// Incorrect initial nodes at this level.
    pub adv_initial: u64,
    pub ratio: Ratio,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostReport {
    pub honest: PartyCosts,
    pub adversary: PartyCosts,
    /// Honest gas except the root creation and the confirming root update.
    pub g_h: u64,
    /// Honest stake except the root stake.
    pub s_h: u64,
    pub g_a: u64,
    pub s_a: u64,
    /// `(G_A + S_A) / (G_H + S_H)`.
    pub ratio: Ratio,
    /// Applied honest bisections, the honest root's excluded.
    pub honest_bisections: u64,
    pub levels: Vec<LevelCosts>,
}

impl CostReport {
    /// Every level column sums to its total.
    pub fn sums_hold(&self) -> bool {
        let sum = |f: fn(&LevelCosts) -> u64| self.levels.iter().map(f).sum::<u64>();
        sum(|l| l.adv_gas) == self.g_a
            && sum(|l| l.adv_stake) == self.s_a
            && sum(|l| l.honest_gas_adjusted) == self.g_h
            && sum(|l| l.honest_gas) == self.g_h
            && sum(|l| l.honest_stake) == self.s_h
    }

    pub fn n_a(&self) -> u64 {
        self.levels.last().map_or(0, |l| l.adv_initial)
    }
}

/// Level a move is attributed to: the level of the nodes it creates (the
/// target's level for updates). Honest work on a terminal counts at the
/// terminal's level.
fn creation_level(mv: &Move, levels: u32) -> u32 {
    match mv {
        Move::CreateRoot { .. } => levels,
        Move::Bisect { node, .. } | Move::Update { node, .. } => node.level,
        Move::Prove { .. } => 1,
        Move::Refine { node, .. } => node.level - 1,
    }
}

fn work_level(mv: &Move, levels: u32) -> u32 {
    match mv {
        Move::Refine { node, .. } => node.level,
        other => creation_level(other, levels),
    }
}

fn is_honest_root(g: &ProtocolGraph, truth: &History, node: &Node) -> bool {
    node.is_root(g.cfg()) && truth.is_correct(node)
}

/// Sequence number of the applied honest update that the tally treats as
/// the non-marginal confirming one.
fn confirming_update(g: &ProtocolGraph, truth: &History) -> Option<u64> {
    g.log()
        .iter()
        .rev()
        .find(|e| {
            e.mover == Party::Honest
                && e.outcome == Outcome::Applied
                && matches!(&e.mv, Move::Update { node, .. } if is_honest_root(g, truth, node))
        })
        .map(|e| e.seq)
}

pub fn tally(g: &ProtocolGraph, truth: &History, gas: &GasSchedule, stakes: &StakeSchedule) -> CostReport {
    let cfg = g.cfg();
    let levels = cfg.levels();
    let mut per: Vec<LevelCosts> = (1..=levels)
        .map(|level| LevelCosts {
            level,
            adv_gas: 0,
            adv_stake: 0,
            honest_gas: 0,
            honest_gas_adjusted: 0,
            honest_stake: 0,
            adv_initial: 0,
            ratio: Ratio { num: 0, den: 0 },
        })
        .collect();
    let at = |l: u32| (l.clamp(1, levels) - 1) as usize;
    let confirming = confirming_update(g, truth);
    let (mut honest, mut adversary) = (PartyCosts::default(), PartyCosts::default());
    let mut b = 0;
    for ev in g.log() {
        let c = charge(ev, g, gas, stakes);
        let party = if ev.mover == Party::Honest { &mut honest } else { &mut adversary };
        party.gas += c.gas;
        party.stake += c.stake;
        party.moves += 1;
        party.invalid += u64::from(ev.outcome == Outcome::Invalid);
        party.redundant += u64::from(ev.outcome == Outcome::Redundant);
        let created = creation_level(&ev.mv, levels);
        match ev.mover {
            Party::Adversary => {
                per[at(created)].adv_gas += c.gas;
                per[at(created)].adv_stake += c.stake;
            }
            Party::Honest => {
                if matches!(ev.mv, Move::CreateRoot { .. }) || Some(ev.seq) == confirming {
                    continue;
                }
                let work = work_level(&ev.mv, levels);
                per[at(work)].honest_gas += c.gas;
                let adjusted = match &ev.mv {
                    Move::Bisect { node, .. } if node.is_initial(cfg) && node.level < levels => node.level + 1,
                    _ => work,
                };
                per[at(adjusted)].honest_gas_adjusted += c.gas;
                per[at(work)].honest_stake += c.stake;
                if let Move::Bisect { node, .. } = &ev.mv {
                    if ev.outcome == Outcome::Applied && !is_honest_root(g, truth, node) {
                        b += 1;
                    }
                }
            }
        }
    }
    for id in g.ids() {
        let node = g.node(id);
        if node.is_initial(cfg) && !truth.is_correct(node) {
            per[at(node.level)].adv_initial += 1;
        }
    }
    for l in &mut per {
        l.ratio = Ratio {
            num: l.adv_gas + l.adv_stake,
            den: l.honest_gas_adjusted + l.honest_stake,
        };
    }
    let g_a = per.iter().map(|l| l.adv_gas).sum();
    let s_a = per.iter().map(|l| l.adv_stake).sum();
    let g_h = per.iter().map(|l| l.honest_gas).sum();
    let s_h = per.iter().map(|l| l.honest_stake).sum();
    CostReport {
        honest,
        adversary,
        g_h,
        s_h,
        g_a,
        s_a,
        ratio: Ratio {
            num: g_a + s_a,
            den: g_h + s_h,
        },
        honest_bisections: b,
        levels: per,
    }
}

/// Upper bound on honest marginal gas per adversarial initial node at `level`:
/// `K_ℓ·G_bisect + G_refine[ℓ-1] + (K_ℓ+1)·G_update`.
pub fn marginal_gas_bound(cfg: &LevelConfig, gas: &GasSchedule, level: u32) -> u64 {
    stake_floor(cfg, gas, level)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelSlack {
    pub level: u32,
    /// Left side minus right side of the ratio condition.
    pub ratio_slack: i128,
    /// Stake minus the reimbursement floor.
    pub floor_slack: i128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScheduleCheck {
    pub rho: u64,
    pub pass: bool,
    pub levels: Vec<LevelSlack>,
}

/// Right-hand side of the ratio condition at `level` given `S_{ℓ-1}`.
fn ratio_rhs(cfg: &LevelConfig, gas: &GasSchedule, rho: u64, level: u32, s_below: u64) -> u128 {
    let levels = cfg.levels();
    let k = u128::from(cfg.k_step(level));
    let (rho, gb, gu) = (u128::from(rho), u128::from(gas.bisect), u128::from(gas.update));
    let below = u128::from(s_below) + u128::from(gas.refine_at(level - 1, levels));
    if levels == 1 {
        // Single level: the extra bisection count is bounded by k itself.
        rho * (below + (k + 1) * gu + gb) + (rho - 1) * k * gb
    } else {
        let bisects = u128::from(level == levels) + u128::from(level != 1);
        rho * (below + (k + 1) * gu + bisects * gb) + (rho - 1) * (k + 1) * gb
    }
}

fn per_level_stakes(stakes: &StakeSchedule, levels: u32) -> Vec<u64> {
    match stakes {
        StakeSchedule::Fixed { per_level } => per_level.clone(),
        // Cohort stakes are never below the base.
        StakeSchedule::Horizontal { base } => vec![*base; levels as usize],
    }
}

/// Checks the ratio condition for `rho` and the reimbursement floor at every level.
pub fn validate_schedule(gas: &GasSchedule, stakes: &StakeSchedule, cfg: &LevelConfig, rho: u64) -> Result<ScheduleCheck> {
    if rho == 0 {
        return Err(Error::invalid("rho must be at least 1"));
    }
    stakes.validate(cfg)?;
    let s = per_level_stakes(stakes, cfg.levels());
    let levels: Vec<LevelSlack> = (1..=cfg.levels())
        .map(|l| {
            let s_l = s[l as usize - 1];
            let s_below = if l == 1 { 0 } else { s[l as usize - 2] };
            let lhs = i128::from(s_l) + i128::from(gas.refine_at(l, cfg.levels()));
            LevelSlack {
                level: l,
                ratio_slack: lhs - ratio_rhs(cfg, gas, rho, l, s_below) as i128,
                floor_slack: i128::from(s_l) - i128::from(stake_floor(cfg, gas, l)),
            }
        })
        .collect();
    Ok(ScheduleCheck {
        rho,
        pass: levels.iter().all(|l| l.ratio_slack >= 0 && l.floor_slack >= 0),
        levels,
    })
}

/// The smallest fixed per-level stakes that pass [`validate_schedule`].
pub fn min_stakes(cfg: &LevelConfig, gas: &GasSchedule, rho: u64) -> StakeSchedule {
    let mut per_level = Vec::new();
    for l in 1..=cfg.levels() {
        let s_below = per_level.last().copied().unwrap_or(0);
        let need = ratio_rhs(cfg, gas, rho.max(1), l, s_below)
            .saturating_sub(u128::from(gas.refine_at(l, cfg.levels()))) as u64;
        per_level.push(need.max(stake_floor(cfg, gas, l)));
    }
    StakeSchedule::Fixed { per_level }
}

/// How the reimburser decides which nodes are honest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Inference {
    /// Recompute correct construction from the initial state.
    StateAware,
    /// Only the log: below a terminal, trust the refinement child whose
    /// path from the root weighs most, i.e. the largest local timer.
    HistoryOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Credit {
    pub seq: u64,
    pub round: Round,
    pub mover: Party,
    pub amount: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Settlement {
    /// A root won; stakes settled.
    Settled,
    /// No unique winner: every stake stays locked.
    Frozen,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ledger {
    pub inference: Inference,
    pub settlement: Settlement,
    pub honest_root_won: bool,
    pub confiscated: u64,
    pub returned_honest: u64,
    pub returned_adversary: u64,
    /// Honest stake (root included) that was confiscated.
    pub confiscated_honest: u64,
    pub credits: Vec<Credit>,
    pub paid_honest: u64,
    pub paid_adversary: u64,
    /// Claims left unpaid once the confiscated pool ran dry.
    pub unpaid: u64,
    /// Marginal honest gas the ledger should cover.
    pub owed_honest: u64,
    /// Nodes treated as honest that are not correctly constructed.
    pub misattributed: Vec<NodeId>,
    /// Honest gas paid in full and every honest stake returned.
    pub complete: bool,
}

impl Ledger {
    fn frozen(inference: Inference, owed: u64) -> Ledger {
        Ledger {
            inference,
            settlement: Settlement::Frozen,
            honest_root_won: false,
            confiscated: 0,
            returned_honest: 0,
            returned_adversary: 0,
            confiscated_honest: 0,
            credits: Vec::new(),
            paid_honest: 0,
            paid_adversary: 0,
            unpaid: 0,
            owed_honest: owed,
            misattributed: Vec::new(),
            complete: false,
        }
    }
}

/// The nodes a log-only observer would call honest below `root`.
fn history_only_set(g: &ProtocolGraph, root: NodeId, t: Round) -> HashSet<NodeId> {
    let mut keep = HashSet::new();
    let mut stack = vec![root];
    keep.insert(root);
    while let Some(v) = stack.pop() {
        let node = g.node(v);
        let kids: Vec<NodeId> = children_at(g, v, t).collect();
        let chosen: Vec<NodeId> = if node.is_terminal() && node.level > 1 {
            kids.iter()
                .copied()
                .max_by_key(|&c| (local_timer(g, c, t), std::cmp::Reverse(c)))
                .into_iter()
                .collect()
        } else {
            kids
        };
        for c in chosen {
            if keep.insert(c) {
                stack.push(c);
            }
        }
    }
    keep
}

/// Settles a finished game: stakes on honest nodes go back to whoever
/// posted them, the rest is confiscated and pays for the moves the honest
/// strategy calls for, credited to whoever executed each one first.
pub struct ReimburseInput<'a> {
    pub graph: &'a ProtocolGraph,
    pub truth: &'a History,
    pub gas: &'a GasSchedule,
    pub stakes: &'a StakeSchedule,
    pub costs: &'a CostReport,
    pub minimal_subtree: bool,
    pub inference: Inference,
}

pub fn reimburse(input: &ReimburseInput<'_>) -> Ledger {
    let ReimburseInput {
        graph: g,
        truth,
        gas,
        stakes,
        costs,
        minimal_subtree,
        inference,
    } = *input;
    let owed = costs.g_h;
    let Winner::Root(root) = g.winner() else {
        return Ledger::frozen(inference, owed);
    };
    let end = g.log().last().map_or(0, |e| e.round);
    let naive = history_only_set(g, root, end);
    let keep: Box<dyn Fn(NodeId) -> bool + '_> = match inference {
        Inference::StateAware => Box::new(|c| truth.is_correct(g.node(c))),
        Inference::HistoryOnly => Box::new(|c| naive.contains(&c)),
    };
    let tree: BTreeSet<NodeId> = paths_from(g, root, end, &*keep)
        .into_iter()
        .flat_map(|p| p.nodes)
        .collect();

    let mut ledger = Ledger::frozen(inference, owed);
    ledger.settlement = Settlement::Settled;
    ledger.honest_root_won = truth.is_correct(g.node(root));
    ledger.misattributed = tree.iter().copied().filter(|&v| !truth.is_correct(g.node(v))).collect();

    for ev in g.log() {
        let c = charge(ev, g, gas, stakes);
        if c.stake == 0 {
            continue;
        }
        let node = ev.created[0];
        match (tree.contains(&node), ev.mover) {
            (true, Party::Honest) => ledger.returned_honest += c.stake,
            (true, Party::Adversary) => ledger.returned_adversary += c.stake,
            (false, mover) => {
                ledger.confiscated += c.stake;
                if mover == Party::Honest {
                    ledger.confiscated_honest += c.stake;
                }
            }
        }
    }

    // Moves the honest strategy makes: one response per honest node with
    // honest children, then the update batches computed at t*.
    let mut wanted: Vec<(Move, Round)> = Vec::new();
    for &v in &tree {
        for c in children_at(g, v, end).filter(|&c| keep(c)) {
            if let Some(ev) = g.log().iter().find(|e| {
                e.outcome == Outcome::Applied
                    && e.mv.target() == Some(g.node(v))
                    && !matches!(e.mv, Move::Update { .. })
                    && created_child(g, &e.mv) == Some(c)
            }) {
                if !wanted.iter().any(|w| w.0 == ev.mv) {
                    wanted.push((ev.mv.clone(), 0));
                }
            }
        }
    }
    let threshold = g.params().threshold;
    if let Some(t_star) = (1..=end).find(|&t| threshold_reached_with(g, root, &*keep, threshold, t)) {
        for mv in update_batches_with(g, root, &*keep, threshold, t_star, minimal_subtree)
            .into_iter()
            .flatten()
        {
            let is_root = matches!(&mv, Move::Update { node, .. } if node.is_root(g.cfg()));
            if !is_root {
                wanted.push((mv, t_star + 1));
            }
        }
    }
    let mut credits: Vec<Credit> = wanted
        .iter()
        .filter_map(|(mv, from)| {
            g.log()
                .iter()
                .find(|e| e.round >= *from && e.outcome == Outcome::Applied && e.mv == *mv)
                .map(|e| Credit {
                    seq: e.seq,
                    round: e.round,
                    mover: e.mover,
                    amount: charge(e, g, gas, stakes).gas + gas.offchain_rate,
                })
        })
        .collect();
    credits.sort_by_key(|c| c.seq);

    let mut pool = ledger.confiscated;
    for c in &credits {
        let pay = c.amount.min(pool);
        pool -= pay;
        ledger.unpaid += c.amount - pay;
        match c.mover {
            Party::Honest => ledger.paid_honest += pay,
            Party::Adversary => ledger.paid_adversary += pay,
        }
    }
    ledger.credits = credits;
    ledger.complete = ledger.honest_root_won && ledger.paid_honest >= owed && ledger.confiscated_honest == 0;
    ledger
}

/// The node a bisect/prove/refine payload links under its target; for a
/// bisection, the left child (either child identifies the move).
fn created_child(g: &ProtocolGraph, mv: &Move) -> Option<NodeId> {
    let cfg = g.cfg();
    let node = match mv {
        Move::Bisect { node, span_l, .. } => Node {
            lspan: node.lspan / 2,
            span: *span_l,
            ..node.clone()
        },
        Move::Prove { node, .. } => Node {
            level: 0,
            ..node.clone()
        },
        Move::Refine { node, span_star, .. } => {
            let n_b = cfg.n_at(node.level - 1);
            Node {
                level: node.level - 1,
                lbase: node.lbase * n_b,
                lspan: n_b,
                base: node.base,
                span: *span_star,
            }
        }
        _ => return None,
    };
    g.id_of(&node)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_schedules() {
        let cfg = LevelConfig::new(vec![5]).unwrap();
        let gas = GasSchedule::default();
        assert_eq!(min_stakes(&cfg, &gas, 1), StakeSchedule::Fixed { per_level: vec![41] });
        // The ratio part alone for rho = 1 asks for S >= 19; the floor is higher.
        assert_eq!(ratio_rhs(&cfg, &gas, 1, 1, 0) - 10, 19);
        assert_eq!(ratio_rhs(&cfg, &gas, 10, 1, 0) - 10, 415);
        let ok = validate_schedule(&gas, &StakeSchedule::Fixed { per_level: vec![415] }, &cfg, 10).unwrap();
        assert!(ok.pass);
        assert_eq!(ok.levels[0].ratio_slack, 0);
        let bad = validate_schedule(&gas, &StakeSchedule::Fixed { per_level: vec![414] }, &cfg, 10).unwrap();
        assert!(!bad.pass);
        assert_eq!(bad.levels[0].ratio_slack, -1);
    }

    #[test]
    fn multi_level_conditions_chain() {
        let cfg = LevelConfig::new(vec![2, 4]).unwrap();
        let gas = GasSchedule::default();
        let StakeSchedule::Fixed { per_level } = min_stakes(&cfg, &gas, 1) else { unreachable!() };
        // Level 1: S1 + 5 >= 20 + 3 + 3 (one bisect for l != 1 is absent at l = 1), floor 29.
        assert_eq!(per_level[0], 29);
        // Level 2: S2 + 10 >= S1 + 5 + 3 + 2*3.
        assert_eq!(per_level[1], 29 + 5 + 3 + 6 - 10);
        assert!(validate_schedule(&gas, &StakeSchedule::Fixed { per_level }, &cfg, 1).unwrap().pass);
    }

    #[test]
    fn ratio_compare() {
        let r = Ratio { num: 20, den: 2 };
        assert!(r.at_least(10));
        assert!(!r.at_least(11));
        assert!(Ratio { num: 1, den: 0 }.at_least(u64::MAX));
        assert!(Ratio { num: 1, den: 2 }.lt(&Ratio { num: 2, den: 3 }));
        assert!(Ratio { num: 5, den: 1 }.lt(&Ratio { num: 0, den: 0 }));
        assert_eq!(Ratio { num: 0, den: 0 }.to_string(), "inf");
    }
}
