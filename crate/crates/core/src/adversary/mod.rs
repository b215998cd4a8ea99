//! Adversary strategies. Each round an adversary sees the graph as of the
//! previous round, the pool of pending honest moves and its remaining
//! censorship budget, and answers with a censor flag and an execution
//! order mixing pooled moves with its own.

mod contester;
mod scripted;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use contester::{Contester, ContesterOptions};
pub use scripted::Scripted;

use crate::config::{ScenarioConfig, StrategyKind};
use crate::graph::{Move, Party, ProtocolGraph};
use crate::history::History;
use crate::{Result, Round};

/// A move waiting in the pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingMove {
    pub id: u64,
    pub mv: Move,
    pub submitter: Party,
    pub submitted: Round,
    pub due: Round,
}

pub struct AdversaryView<'a> {
    pub round: Round,
    /// State after every move of the previous round.
    pub graph: &'a ProtocolGraph,
    /// Pending moves, this round's submissions included, with due dates
    /// before any censorship bump for this round.
    pub pool: &'a [PendingMove],
    pub budget_left: u64,
    pub delta: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExecItem {
    Pooled(u64),
    Own(Move),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AdversaryAction {
    pub censor: bool,
    pub exec: Vec<ExecItem>,
}

pub trait Adversary: Send {
    fn name(&self) -> &str;

    fn act(&mut self, view: &AdversaryView<'_>) -> AdversaryAction;

    /// Histories this adversary commits to, for labelling and analysis.
    fn histories(&self) -> Vec<Arc<History>> {
        Vec::new()
    }
}

/// Never censors, releases everything at once, submits nothing.
#[derive(Debug, Default)]
pub struct Passive;

impl Adversary for Passive {
    fn name(&self) -> &str {
        "passive"
    }

    fn act(&mut self, view: &AdversaryView<'_>) -> AdversaryAction {
        AdversaryAction {
            censor: false,
            exec: view.pool.iter().map(|p| ExecItem::Pooled(p.id)).collect(),
        }
    }
}

/// Seeded incorrect histories, one per adversarial root: each agrees with
/// the truth up to its divergence step and is internally consistent after.
pub fn divergent_histories(config: &ScenarioConfig, truth: &History) -> Vec<Arc<History>> {
    let adv = &config.adversary;
    let n_a = adv.n_a() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0xad7e_5a11);
    let mut masks: Vec<u64> = Vec::with_capacity(n_a);
    (0..n_a)
        .map(|i| {
            let d = adv
                .divergences
                .as_ref()
                .map(|ds| ds[i])
                .or(adv.divergence)
                .unwrap_or_else(|| rng.gen_range(0..truth.n()));
            let mask = loop {
                let m: u64 = rng.gen();
                if m != 0 && !masks.contains(&m) {
                    break m;
                }
            };
            masks.push(mask);
            Arc::new(History::diverged(truth, d, mask))
        })
        .collect()
}

/// Builds the configured strategy.
pub fn build(config: &ScenarioConfig, truth: Arc<History>) -> Result<Box<dyn Adversary>> {
    config.validate()?;
    let adv = &config.adversary;
    Ok(match adv.strategy {
        StrategyKind::Passive => Box::new(Passive),
        StrategyKind::Scripted => Box::new(Scripted::new(
            adv.script.clone(),
            divergent_histories(config, &truth),
            adv.release(),
        )),
        kind => {
            let histories = divergent_histories(config, &truth);
            let root_rounds = adv.root_rounds.clone().unwrap_or_else(|| vec![1; histories.len()]);
            let opts = ContesterOptions {
                name: kind.name().to_string(),
                root_rounds,
                censor: adv.censor(),
                censor_start: adv.censor_start,
                release: adv.release(),
                rush_updates: adv.rush_updates,
                refine_own: kind != StrategyKind::Frenemy,
                spam_counts: if kind == StrategyKind::Frenemy {
                    (1..config.ks.len() as u32).map(|l| adv.spam_count(l)).collect()
                } else {
                    Vec::new()
                },
                seed: config.seed,
            };
            Box::new(Contester::new(opts, truth, histories))
        }
    })
}
