//! Mechanism representation: message domains, outcome rules, transfer rules.
//!
//! A mechanism is a total function from message profiles to an outcome
//! (possibly a lottery) and one exact rational transfer per agent.
//! Feasibility of messages (which articles an agent actually holds at the
//! true state) is *not* the mechanism's business; the game engine enforces
//! it when inducing strategies.

use crate::env::{ArticleId, Environment, UtilityProfile};
use crate::rational::Q;
use crate::states::{OutcomeId, StateId};
use num_traits::Zero;
use serde::Serialize;

/// One state claim plus one article of evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct DirectMessage {
    pub claim: StateId,
    pub article: ArticleId,
}

/// Direct message extended with a chain of per-round state reports
/// (the small-transfer mechanism). `rounds.len() == K + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StagedMessage {
    pub base: DirectMessage,
    pub rounds: Vec<StateId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Message {
    Direct(DirectMessage),
    Staged(StagedMessage),
}

impl Message {
    pub fn direct(&self) -> &DirectMessage {
        match self {
            Message::Direct(m) => m,
            Message::Staged(m) => &m.base,
        }
    }

    pub fn label(&self, env: &Environment, agent: usize) -> String {
        let d = self.direct();
        let mut s = format!(
            "({},{})",
            env.states.label(d.claim),
            env.article(agent, d.article).name(&env.states)
        );
        if let Message::Staged(m) = self {
            let rounds: Vec<&str> =
                m.rounds.iter().map(|&r| env.states.label(r)).collect();
            s.push_str(&format!("[{}]", rounds.join(",")));
        }
        s
    }
}

/// Deterministic outcome or an explicit finite lottery (weights sum to one).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutcomeDist {
    Pure(OutcomeId),
    Lottery(Vec<(OutcomeId, Q)>),
}

impl OutcomeDist {
    pub fn uniform(n_outcomes: usize) -> OutcomeDist {
        let w = Q::new(1.into(), (n_outcomes as i64).into());
        OutcomeDist::Lottery((0..n_outcomes).map(|a| (OutcomeId(a), w.clone())).collect())
    }

    pub fn scaled_mix(parts: Vec<(Q, OutcomeDist)>) -> OutcomeDist {
        let mut weights: std::collections::BTreeMap<OutcomeId, Q> = Default::default();
        for (scale, dist) in parts {
            match dist {
                OutcomeDist::Pure(a) => {
                    *weights.entry(a).or_insert_with(Q::zero) += scale;
                }
                OutcomeDist::Lottery(terms) => {
                    for (a, w) in terms {
                        *weights.entry(a).or_insert_with(Q::zero) += &scale * w;
                    }
                }
            }
        }
        weights.retain(|_, w| !w.is_zero());
        let mut terms: Vec<(OutcomeId, Q)> = weights.into_iter().collect();
        if terms.len() == 1 && terms[0].1 == Q::from_integer(1.into()) {
            return OutcomeDist::Pure(terms.remove(0).0);
        }
        OutcomeDist::Lottery(terms)
    }

    /// Degenerate distribution check: the mass sits on one outcome.
    pub fn as_pure(&self) -> Option<OutcomeId> {
        match self {
            OutcomeDist::Pure(a) => Some(*a),
            OutcomeDist::Lottery(terms) => {
                let one = Q::from_integer(1.into());
                match &terms[..] {
                    [(a, w)] if *w == one => Some(*a),
                    _ => None,
                }
            }
        }
    }

    pub fn expected_value(&self, v: &UtilityProfile, agent: usize, state: StateId) -> Q {
        match self {
            OutcomeDist::Pure(a) => v.value(agent, *a, state).clone(),
            OutcomeDist::Lottery(terms) => terms
                .iter()
                .map(|(a, w)| w * v.value(agent, *a, state))
                .fold(Q::zero(), |acc, x| acc + x),
        }
    }
}

/// Outcome, total transfers, and the per-rule breakdown used for
/// diagnostics and for reproducing deviation-table arithmetic in tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub outcome: OutcomeDist,
    pub transfers: Vec<Q>,
    pub components: Vec<(&'static str, Vec<Q>)>,
}

impl Evaluation {
    pub fn from_components(
        outcome: OutcomeDist,
        agents: usize,
        components: Vec<(&'static str, Vec<Q>)>,
    ) -> Evaluation {
        let mut transfers = vec![Q::zero(); agents];
        for (_, vals) in &components {
            for (t, v) in transfers.iter_mut().zip(vals) {
                *t += v;
            }
        }
        Evaluation { outcome, transfers, components }
    }

    pub fn transfers_are_zero(&self) -> bool {
        self.transfers.iter().all(|t| t.is_zero())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MechError {
    #[error("message out of domain for agent {agent}: {reason}")]
    MessageOutOfDomain { agent: usize, reason: String },
    #[error("profile has {got} messages but the environment has {want} agents")]
    WrongProfileLength { got: usize, want: usize },
}

pub fn check_profile_shape(env: &Environment, profile: &[Message]) -> Result<(), MechError> {
    if profile.len() != env.agents {
        return Err(MechError::WrongProfileLength { got: profile.len(), want: env.agents });
    }
    for (i, m) in profile.iter().enumerate() {
        let d = m.direct();
        if d.claim.0 >= env.n_states() {
            return Err(MechError::MessageOutOfDomain {
                agent: i + 1,
                reason: format!("state index {} out of range", d.claim.0),
            });
        }
        if d.article.0 >= env.evidence[i].articles.len() {
            return Err(MechError::MessageOutOfDomain {
                agent: i + 1,
                reason: format!("article index {} out of range", d.article.0),
            });
        }
    }
    Ok(())
}

/// Tightest-evidence lookup table, shared by the hard-evidence mechanisms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TightTable {
    /// `mask[agent][state]` = intersection of the agent's endowment there.
    pub mask: Vec<Vec<crate::states::StateSet>>,
    /// Designated endowed article realizing the intersection (normality).
    pub article: Vec<Vec<Option<ArticleId>>>,
}

impl TightTable {
    pub fn build(env: &Environment) -> TightTable {
        let mask = env
            .agent_ids()
            .map(|i| env.states.ids().map(|s| env.tightest_evidence(i, s)).collect())
            .collect();
        let article = env
            .agent_ids()
            .map(|i| env.states.ids().map(|s| env.tightest_article(i, s)).collect())
            .collect();
        TightTable { mask, article }
    }

    /// Does `article` (as presented by `agent`) support the claim `state`,
    /// i.e. establish at least the tightest event for that claim?
    pub fn supports(&self, env: &Environment, agent: usize, article: ArticleId, state: StateId) -> bool {
        env.article(agent, article)
            .members
            .is_subset_of(&self.mask[agent][state.0])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthesisError {
    #[error("evidence structure violates (e1)/(e2); run validate for the full report")]
    AxiomsViolated,
    #[error("SCF is not measurable: states {0} and {1} carry identical evidence but distinct outcomes")]
    NotMeasurable(String, String),
    #[error("evidence structure is not normal: agent {agent} cannot present the tightest evidence in state {state}")]
    NotNormal { agent: usize, state: String },
    #[error("variant requires at least {need} agents, environment has {got}")]
    TooFewAgents { need: usize, got: usize },
    #[error("variant supports exactly {need} agents, environment has {got}")]
    TooManyAgents { need: usize, got: usize },
    #[error("epsilon must lie strictly between 0 and 1")]
    BadEpsilon,
    #[error("no round count K ≤ {cap} satisfies the transfer-bound inequalities")]
    InfeasibleBound { cap: usize },
    #[error("environment carries no cost table")]
    NoCostTable,
    #[error("agent {agent} has no finite-cost article in state {state}")]
    NoFiniteCost { agent: usize, state: String },
    #[error("some finite cost reaches the bound C")]
    CostExceedsBound,
    #[error("SCF is not evidence-monotonic under constant preferences (violating pair {0}, {1})")]
    NotEvidenceMonotonic(String, String),
    #[error("evidence-monotonicity search hit the combination cap; verdict incomplete")]
    EvidenceMonotonicityIncomplete,
    #[error("SCF does not satisfy the cheapest-set variation condition (violating pair {0}, {1})")]
    NotEmStar(String, String),
    #[error("pairwise refutation conditions fail; see the report")]
    ConditionsFail,
    #[error("challenge reward preselection: {0}")]
    PreconditionViolated(String),
}
