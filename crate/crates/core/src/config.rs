//! Scenario configuration: a versioned JSON document that fixes the level
//! structure, timing, adversary, gas and stake schedules.

use serde::{Deserialize, Serialize};

use crate::graph::{LevelConfig, ProtocolParams};
use crate::history::History;
use crate::timers::{bound_for, safe_threshold};
use crate::vm::MachineState;
use crate::{Error, Result, Round};

pub const SCHEMA: &str = "bold-arena/scenario/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    #[default]
    Passive,
    RootSpammer,
    PathFighter,
    Frenemy,
    BudgetBurner,
    /// Replays a fixed list of actions; used for hand-built schedules.
    Scripted,
}

impl StrategyKind {
    pub const SHIPPED: [StrategyKind; 5] = [
        StrategyKind::Passive,
        StrategyKind::RootSpammer,
        StrategyKind::PathFighter,
        StrategyKind::Frenemy,
        StrategyKind::BudgetBurner,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Passive => "passive",
            StrategyKind::RootSpammer => "root_spammer",
            StrategyKind::PathFighter => "path_fighter",
            StrategyKind::Frenemy => "frenemy",
            StrategyKind::BudgetBurner => "budget_burner",
            StrategyKind::Scripted => "scripted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CensorPolicy {
    None,
    /// All of C_max in consecutive rounds starting at round 1.
    FrontLoad,
    /// All of C_max in consecutive rounds starting at `censor_start`, or at
    /// the first round an honest update is pooled.
    BackLoad,
    /// One censored round whenever an honest move is pooled.
    Reactive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReleasePolicy {
    /// Execute pooled honest moves in the round they arrive.
    Immediate,
    /// Hold pooled honest moves until their due date.
    WhenDue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptAction {
    CreateRoot,
    Bisect,
    ReleaseAll,
    Censor,
}

/// One scripted adversary action. `history` indexes the adversary's
/// histories; `at` is `[level, lbase, lspan]` (the root when absent).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptStep {
    pub round: Round,
    pub action: ScriptAction,
    #[serde(default)]
    pub history: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<[u64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyParams {
    #[serde(default)]
    pub strategy: StrategyKind,
    /// Number of adversarial roots. Defaults to 0 for passive, else 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_a: Option<u32>,
    /// Divergence step shared by all adversarial histories.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence: Option<u64>,
    /// Per-root divergence steps; overrides `divergence`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergences: Option<Vec<u64>>,
    /// Rounds at which each root is created (default: all in round 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root_rounds: Option<Vec<Round>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub censor: Option<CensorPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub censor_start: Option<Round>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub release: Option<ReleasePolicy>,
    /// Copy pooled honest updates and execute them first.
    #[serde(default)]
    pub rush_updates: bool,
    /// Frenemy refinements per honest terminal, indexed by child level 1..L-1.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spam_counts: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub script: Vec<ScriptStep>,
}

impl StrategyParams {
    pub fn new(strategy: StrategyKind) -> Self {
        StrategyParams {
            strategy,
            ..Default::default()
        }
    }

    pub fn n_a(&self) -> u32 {
        if let Some(d) = &self.divergences {
            return self.n_a.unwrap_or(d.len() as u32);
        }
        self.n_a.unwrap_or(match self.strategy {
            StrategyKind::Passive => 0,
            _ => 1,
        })
    }

    pub fn censor(&self) -> CensorPolicy {
        self.censor.unwrap_or(match self.strategy {
            StrategyKind::PathFighter => CensorPolicy::Reactive,
            StrategyKind::BudgetBurner => CensorPolicy::FrontLoad,
            _ => CensorPolicy::None,
        })
    }

    pub fn release(&self) -> ReleasePolicy {
        self.release.unwrap_or(match self.strategy {
            StrategyKind::Passive => ReleasePolicy::Immediate,
            _ => ReleasePolicy::WhenDue,
        })
    }

    pub fn spam_count(&self, child_level: u32) -> u32 {
        self.spam_counts.get(child_level as usize - 1).copied().unwrap_or(1)
    }
}

fn d_root() -> u64 {
    10
}
fn d_bisect() -> u64 {
    3
}
fn d_proof() -> u64 {
    20
}
fn d_one() -> u64 {
    1
}

pub const DEFAULT_REFINE_GAS: u64 = 5;

/// Abstract gas units per move kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasSchedule {
    #[serde(default = "d_root")]
    pub root: u64,
    #[serde(default = "d_bisect")]
    pub bisect: u64,
    #[serde(default = "d_proof")]
    pub proof: u64,
    #[serde(default = "d_one")]
    pub update: u64,
    /// Cost of creating a refinement node at level 1..L-1; missing entries
    /// take the default.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub refine: Vec<u64>,
    /// Charged for a redundant re-execution.
    #[serde(default = "d_one")]
    pub noop: u64,
    /// Offchain compute credited per reimbursed move.
    #[serde(default)]
    pub offchain_rate: u64,
}

impl Default for GasSchedule {
    fn default() -> Self {
        GasSchedule {
            root: d_root(),
            bisect: d_bisect(),
            proof: d_proof(),
            update: d_one(),
            refine: Vec::new(),
            noop: d_one(),
            offchain_rate: 0,
        }
    }
}

impl GasSchedule {
    /// Cost of creating an initial node at `level`: the proof at 0, a
    /// refinement in between, the root at L.
    pub fn refine_at(&self, level: u32, levels: u32) -> u64 {
        if level == 0 {
            self.proof
        } else if level >= levels {
            self.root
        } else {
            self.refine.get(level as usize - 1).copied().unwrap_or(DEFAULT_REFINE_GAS)
        }
    }

    pub fn validate(&self, cfg: &LevelConfig) -> Result<()> {
        let named = [
            ("gas.root", self.root),
            ("gas.bisect", self.bisect),
            ("gas.proof", self.proof),
            ("gas.update", self.update),
            ("gas.noop", self.noop),
        ];
        for (field, v) in named {
            if v == 0 {
                return Err(Error::config(field, "gas costs must be positive"));
            }
        }
        if self.refine.len() > cfg.levels() as usize - 1 {
            return Err(Error::config(
                "gas.refine",
                format!("at most {} entries for {} levels", cfg.levels() - 1, cfg.levels()),
            ));
        }
        for (i, &v) in self.refine.iter().enumerate() {
            if v == 0 {
                return Err(Error::config(format!("gas.refine[{i}]"), "gas costs must be positive"));
            }
        }
        let least = named
            .iter()
            .map(|p| p.1)
            .chain((1..cfg.levels()).map(|l| self.refine_at(l, cfg.levels())))
            .min()
            .expect("non-empty");
        if self.noop > least {
            return Err(Error::config("gas.noop", "a redundant move may not cost more than any real move"));
        }
        Ok(())
    }
}

/// How initial nodes are staked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StakeSchedule {
    /// `per_level[ℓ-1]` for every initial node at level ℓ.
    Fixed { per_level: Vec<u64> },
    /// `base` times the node's cohort size at creation.
    Horizontal { base: u64 },
}

impl StakeSchedule {
    /// Smallest fixed stakes from which confiscation covers the honest
    /// marginal gas, level by level.
    pub fn floor(cfg: &LevelConfig, gas: &GasSchedule) -> StakeSchedule {
        StakeSchedule::Fixed {
            per_level: (1..=cfg.levels()).map(|l| stake_floor(cfg, gas, l)).collect(),
        }
    }

    /// Stake for a new initial node at `level` whose cohort now has `cohort` members.
    pub fn stake(&self, level: u32, cohort: u64) -> u64 {
        match self {
            StakeSchedule::Fixed { per_level } => {
                if level == 0 {
                    0
                } else {
                    per_level[level as usize - 1]
                }
            }
            StakeSchedule::Horizontal { base } => base * cohort,
        }
    }

    pub fn validate(&self, cfg: &LevelConfig) -> Result<()> {
        if let StakeSchedule::Fixed { per_level } = self {
            if per_level.len() != cfg.levels() as usize {
                return Err(Error::config(
                    "stakes.per_level",
                    format!("expected {} entries, got {}", cfg.levels(), per_level.len()),
                ));
            }
        }
        Ok(())
    }
}

/// `K_ℓ·G_bisect + G_refine[ℓ-1] + (K_ℓ+1)·G_update`.
pub fn stake_floor(cfg: &LevelConfig, gas: &GasSchedule, level: u32) -> u64 {
    let k = u64::from(cfg.k_step(level));
    k * gas.bisect + gas.refine_at(level - 1, cfg.levels()) + (k + 1) * gas.update
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HonestOptions {
    /// Update only the minimal-length subtree reaching the threshold.
    #[serde(default)]
    pub minimal_subtree: bool,
}

fn d_schema() -> String {
    SCHEMA.to_string()
}
fn d_acc() -> u64 {
    0x5eed
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "d_schema")]
    pub schema: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub ks: Vec<u32>,
    /// Confirmation threshold T; defaults to the smallest safe value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<u64>,
    #[serde(default)]
    pub delta: u64,
    #[serde(default)]
    pub c_max: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_acc")]
    pub initial_acc: u64,
    /// Steps before the machine halts; defaults to n.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program_length: Option<u64>,
    #[serde(default)]
    pub adversary: StrategyParams,
    #[serde(default)]
    pub gas: GasSchedule,
    /// Defaults to the per-level floor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stakes: Option<StakeSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rounds: Option<Round>,
    #[serde(default)]
    pub honest: HonestOptions,
}

impl ScenarioConfig {
    pub fn new(ks: Vec<u32>) -> Self {
        ScenarioConfig {
            schema: d_schema(),
            name: String::new(),
            ks,
            threshold: None,
            delta: 0,
            c_max: 0,
            seed: 0,
            initial_acc: d_acc(),
            program_length: None,
            adversary: StrategyParams::default(),
            gas: GasSchedule::default(),
            stakes: None,
            max_rounds: None,
            honest: HonestOptions::default(),
        }
    }

    /// Parses and validates. Errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let field = match path.as_str() {
                "." | "" => inner
                    .to_string()
                    .split('`')
                    .nth(1)
                    .unwrap_or("<document>")
                    .to_string(),
                p => p.to_string(),
            };
            Error::config(field, inner.to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn levels(&self) -> Result<LevelConfig> {
        LevelConfig::new(self.ks.clone()).map_err(|e| Error::config("ks", e.to_string()))
    }

    pub fn threshold(&self) -> Result<u64> {
        let cfg = self.levels()?;
        Ok(self
            .threshold
            .unwrap_or_else(|| safe_threshold(&cfg, self.delta, self.c_max)))
    }

    pub fn round_bound(&self) -> Result<Round> {
        Ok(bound_for(&self.levels()?, self.threshold()?, self.delta, self.c_max, true))
    }

    pub fn max_rounds(&self) -> Result<Round> {
        Ok(self.max_rounds.unwrap_or(self.round_bound()?))
    }

    pub fn stakes(&self) -> Result<StakeSchedule> {
        let cfg = self.levels()?;
        Ok(self.stakes.clone().unwrap_or_else(|| StakeSchedule::floor(&cfg, &self.gas)))
    }

    pub fn initial_state(&self) -> Result<MachineState> {
        let cfg = self.levels()?;
        Ok(MachineState::new(self.initial_acc, self.program_length.unwrap_or(cfg.n())))
    }

    pub fn honest_history(&self) -> Result<History> {
        Ok(History::honest(self.levels()?, self.initial_state()?))
    }

    pub fn params(&self, h0: crate::commitment::Digest) -> Result<ProtocolParams> {
        ProtocolParams::new(self.levels()?, self.threshold()?, self.delta, self.c_max, h0)
            .map_err(|e| Error::config("threshold", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(Error::config("schema", format!("expected \"{SCHEMA}\"")));
        }
        let cfg = self.levels()?;
        let n = cfg.n();
        if self.threshold == Some(0) {
            return Err(Error::config("threshold", "must be at least 1"));
        }
        if let Some(p) = self.program_length {
            if p > n {
                return Err(Error::config("program_length", format!("must not exceed n = {n}")));
            }
        }
        self.gas.validate(&cfg)?;
        if let Some(s) = &self.stakes {
            s.validate(&cfg)?;
        }
        if let Some(m) = self.max_rounds {
            let bound = self.round_bound()?;
            if m < bound {
                return Err(Error::config("max_rounds", format!("must be at least the round bound {bound}")));
            }
        }
        let adv = &self.adversary;
        let check_div = |field: String, d: u64| {
            if d >= n {
                Err(Error::config(field, format!("divergence must lie in [0, {n})")))
            } else {
                Ok(())
            }
        };
        if let Some(d) = adv.divergence {
            check_div("adversary.divergence".into(), d)?;
        }
        if let Some(ds) = &adv.divergences {
            for (i, &d) in ds.iter().enumerate() {
                check_div(format!("adversary.divergences[{i}]"), d)?;
            }
            if ds.len() != adv.n_a() as usize {
                return Err(Error::config("adversary.divergences", "one entry per adversarial root"));
            }
        }
        if let Some(rr) = &adv.root_rounds {
            if rr.len() != adv.n_a() as usize || rr.contains(&0) {
                return Err(Error::config(
                    "adversary.root_rounds",
                    "one round (at least 1) per adversarial root",
                ));
            }
        }
        match adv.strategy {
            StrategyKind::Frenemy if cfg.levels() < 2 => {
                return Err(Error::config("adversary.strategy", "frenemy needs at least two levels"));
            }
            StrategyKind::PathFighter if adv.n_a() != 1 => {
                return Err(Error::config("adversary.n_a", "path_fighter contests exactly one path"));
            }
            StrategyKind::Passive if adv.n_a() != 0 => {
                return Err(Error::config("adversary.n_a", "passive creates no roots"));
            }
            StrategyKind::Scripted if adv.divergences.is_none() => {
                return Err(Error::config("adversary.divergences", "scripted adversaries list their histories"));
            }
            _ => {}
        }
        if adv.spam_counts.len() > cfg.levels().saturating_sub(1) as usize {
            return Err(Error::config("adversary.spam_counts", "one entry per level below L"));
        }
        for (i, step) in adv.script.iter().enumerate() {
            if step.round == 0 {
                return Err(Error::config(format!("adversary.script[{i}].round"), "rounds start at 1"));
            }
            if step.history >= adv.n_a() as usize {
                return Err(Error::config(format!("adversary.script[{i}].history"), "no such history"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c = ScenarioConfig::from_json(r#"{"schema":"bold-arena/scenario/v1","ks":[5]}"#).unwrap();
        assert_eq!(c.gas, GasSchedule::default());
        assert_eq!(c.threshold().unwrap(), 14);
        assert_eq!(c.adversary.n_a(), 0);
        assert_eq!(c.stakes().unwrap(), StakeSchedule::Fixed { per_level: vec![5 * 3 + 20 + 6] });
    }

    #[test]
    fn unknown_field_is_named() {
        let err = ScenarioConfig::from_json(r#"{"ks":[2],"bogus":1}"#).unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "bogus"),
            e => panic!("{e}"),
        }
        let err = ScenarioConfig::from_json(r#"{"ks":[2],"gas":{"root":"x"}}"#).unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "gas.root"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn semantic_validation() {
        let bad = [
            (r#"{"ks":[2,2]}"#, "ks"),
            (r#"{"ks":[2],"schema":"v0"}"#, "schema"),
            (r#"{"ks":[2],"adversary":{"strategy":"frenemy"}}"#, "adversary.strategy"),
            (r#"{"ks":[2],"adversary":{"strategy":"root_spammer","divergence":4}}"#, "adversary.divergence"),
            (r#"{"ks":[2],"gas":{"noop":2}}"#, "gas.noop"),
            (r#"{"ks":[2],"max_rounds":3}"#, "max_rounds"),
            (r#"{"ks":[2,3],"stakes":{"kind":"fixed","per_level":[1]}}"#, "stakes.per_level"),
        ];
        for (text, want) in bad {
            match ScenarioConfig::from_json(text) {
                Err(Error::Config { field, .. }) => assert_eq!(field, want, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn round_trip() {
        let mut c = ScenarioConfig::new(vec![2, 4]);
        c.adversary = StrategyParams::new(StrategyKind::Frenemy);
        c.adversary.spam_counts = vec![2];
        c.stakes = Some(StakeSchedule::Horizontal { base: 7 });
        let back = ScenarioConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn floor_per_level() {
        let cfg = LevelConfig::new(vec![2, 4]).unwrap();
        let g = GasSchedule::default();
        // Level 1: 2 bisections, a proof, 3 updates. Level 2: same with a refinement.
        assert_eq!(stake_floor(&cfg, &g, 1), 6 + 20 + 3);
        assert_eq!(stake_floor(&cfg, &g, 2), 6 + 5 + 3);
    }
}
