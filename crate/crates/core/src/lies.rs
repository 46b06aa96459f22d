//! Classification of state claims at a true state: the truth,
//! other-refutable, self-refutable, and nonrefutable lies.
//!
//! An article refutes a state when the state lies outside its member set.
//! From agent `i`'s perspective the four categories partition the state
//! space; `NRL` is agent-independent and stored once.

use crate::env::Environment;
use crate::states::{StateId, StateSet};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiePartition {
    pub true_state: StateId,
    /// Lies no article of any agent can refute at the true state.
    pub nonrefutable: StateSet,
    /// Per agent: lies refutable by that agent at the true state.
    pub refutable: Vec<StateSet>,
    /// Per agent: lies refutable by some other agent.
    pub other_refutable: Vec<StateSet>,
    /// Per agent: lies refutable only by the agent itself.
    pub self_refutable: Vec<StateSet>,
    /// States equivalent to the true state (if the measurability gate was
    /// bypassed); classified as nonrefutable, flagged here.
    pub equivalent_warning: StateSet,
}

/// Lies agent `i` can refute at `true_state`: claims excluded by at least
/// one article the agent holds there.
pub fn refutable_lies(env: &Environment, agent: usize, true_state: StateId) -> StateSet {
    let ev = &env.evidence[agent];
    let mut out = StateSet::empty();
    for s in env.states.ids() {
        if s == true_state {
            continue;
        }
        if ev
            .endowed_at(true_state)
            .iter()
            .any(|&a| !ev.article(a).members.contains(s))
        {
            out.insert(s);
        }
    }
    out
}

pub fn classify(env: &Environment, true_state: StateId) -> LiePartition {
    let lies: StateSet = env
        .states
        .ids()
        .filter(|&s| s != true_state)
        .collect();
    let refutable: Vec<StateSet> = env
        .agent_ids()
        .map(|i| refutable_lies(env, i, true_state))
        .collect();

    let any_refutable = refutable
        .iter()
        .fold(StateSet::empty(), |acc, r| acc.union(r));
    let nonrefutable = StateSet(lies.0 & !any_refutable.0);

    let other_refutable: Vec<StateSet> = env
        .agent_ids()
        .map(|i| {
            refutable
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .fold(StateSet::empty(), |acc, (_, r)| acc.union(r))
        })
        .collect();
    let self_refutable: Vec<StateSet> = env
        .agent_ids()
        .map(|i| StateSet(refutable[i].0 & !other_refutable[i].0))
        .collect();

    let equivalent_warning: StateSet = lies
        .iter()
        .filter(|&s| env.states_equivalent(s, true_state))
        .collect();

    LiePartition {
        true_state,
        nonrefutable,
        refutable,
        other_refutable,
        self_refutable,
        equivalent_warning,
    }
}

impl LiePartition {
    /// `{s*} ∪ ORL_i ∪ SRL_i ∪ NRL = S`, pairwise disjoint, for agent `i`.
    pub fn partition_holds(&self, env: &Environment, agent: usize) -> bool {
        let t = StateSet::singleton(self.true_state);
        let orl = self.other_refutable[agent];
        let srl = self.self_refutable[agent];
        let nrl = self.nonrefutable;
        let parts = [t, orl, srl, nrl];
        let mut union = StateSet::empty();
        for (k, p) in parts.iter().enumerate() {
            for q in parts.iter().skip(k + 1) {
                if !p.intersect(q).is_empty() {
                    return false;
                }
            }
            union = union.union(p);
        }
        union == env.states.full_set()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LieError {
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("axiom system bug: no witness article refuting the truth at a nonrefutable lie")]
    WitnessMissing,
}

/// On axiom-valid environments, an agent who cannot refute `other` at
/// `true_state` holds every article of `true_state` at `other` as well.
/// Returns that inclusion; it must be `true` for every admissible input.
pub fn endowment_nesting_holds(
    env: &Environment,
    true_state: StateId,
    other: StateId,
    agent: usize,
) -> Result<bool, LieError> {
    if refutable_lies(env, agent, true_state).contains(other) {
        return Err(LieError::PreconditionViolated(format!(
            "agent {} refutes {} at {}",
            agent + 1,
            env.states.label(other),
            env.states.label(true_state)
        )));
    }
    let ev = &env.evidence[agent];
    Ok(ev
        .endowed_at(true_state)
        .iter()
        .all(|&a| ev.has_at(a, other)))
}

/// For a nonrefutable lie `other` at `true_state`, some agent must hold an
/// article at `other` that refutes `true_state`. Returns that witness.
pub fn counter_evidence_witness(
    env: &Environment,
    true_state: StateId,
    other: StateId,
) -> Result<(usize, crate::env::ArticleId), LieError> {
    let partition = classify(env, true_state);
    if !partition.nonrefutable.contains(other) {
        return Err(LieError::PreconditionViolated(format!(
            "{} is not a nonrefutable lie at {}",
            env.states.label(other),
            env.states.label(true_state)
        )));
    }
    if env.states_equivalent(other, true_state) {
        return Err(LieError::PreconditionViolated(format!(
            "{} is equivalent to {}; no evidence separates them",
            env.states.label(other),
            env.states.label(true_state)
        )));
    }
    for j in env.agent_ids() {
        let ev = &env.evidence[j];
        for &a in ev.endowed_at(other) {
            if !ev.article(a).members.contains(true_state) {
                return Ok((j, a));
            }
        }
    }
    Err(LieError::WitnessMissing)
}

/// JSON shape for the `classify` subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct LiePartitionReport {
    pub truth: String,
    #[serde(rename = "NRL")]
    pub nrl: Vec<String>,
    pub per_agent: std::collections::BTreeMap<String, AgentLies>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub equivalent_to_truth: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AgentLies {
    #[serde(rename = "ORL")]
    pub orl: Vec<String>,
    #[serde(rename = "SRL")]
    pub srl: Vec<String>,
}

impl LiePartition {
    pub fn report(&self, env: &Environment) -> LiePartitionReport {
        let labels = |set: &StateSet| env.states.set_labels(set);
        LiePartitionReport {
            truth: env.states.label(self.true_state).to_string(),
            nrl: labels(&self.nonrefutable),
            per_agent: env
                .agent_ids()
                .map(|i| {
                    (
                        (i + 1).to_string(),
                        AgentLies {
                            orl: labels(&self.other_refutable[i]),
                            srl: labels(&self.self_refutable[i]),
                        },
                    )
                })
                .collect(),
            equivalent_to_truth: labels(&self.equivalent_warning),
        }
    }
}
