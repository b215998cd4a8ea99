//! A fixed list of actions keyed by round, for reproducing hand-built
//! schedules exactly.

use std::sync::Arc;

use crate::config::{ReleasePolicy, ScriptAction, ScriptStep};
use crate::graph::Move;
use crate::history::History;

use super::{Adversary, AdversaryAction, AdversaryView, ExecItem};

pub struct Scripted {
    steps: Vec<ScriptStep>,
    histories: Vec<Arc<History>>,
    release: ReleasePolicy,
}

impl Scripted {
    pub fn new(steps: Vec<ScriptStep>, histories: Vec<Arc<History>>, release: ReleasePolicy) -> Self {
        Scripted {
            steps,
            histories,
            release,
        }
    }
}

impl Adversary for Scripted {
    fn name(&self) -> &str {
        "scripted"
    }

    fn histories(&self) -> Vec<Arc<History>> {
        self.histories.clone()
    }

    fn act(&mut self, view: &AdversaryView<'_>) -> AdversaryAction {
        let t = view.round;
        let mut action = AdversaryAction::default();
        let mut release_all = self.release == ReleasePolicy::Immediate;
        for step in self.steps.iter().filter(|s| s.round == t) {
            let h = &self.histories[step.history];
            match step.action {
                ScriptAction::CreateRoot => action.exec.push(ExecItem::Own(Move::CreateRoot { span: h.root().span })),
                ScriptAction::Bisect => {
                    let node = match step.at {
                        Some([level, lbase, lspan]) => h.node(level as u32, lbase, lspan),
                        None => h.root(),
                    };
                    action.exec.push(ExecItem::Own(h.bisect_move(&node)));
                }
                ScriptAction::ReleaseAll => release_all = true,
                ScriptAction::Censor => action.censor = view.budget_left > 0,
            }
        }
        let bump = u64::from(action.censor);
        for p in view.pool {
            if release_all || p.due + bump <= t {
                action.exec.push(ExecItem::Pooled(p.id));
            }
        }
        action
    }
}
