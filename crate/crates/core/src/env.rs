//! Social choice environments: states, agents, outcomes, evidence
//! endowments, the social choice function, and optional presentation costs.
//!
//! Articles of evidence are identified with subsets of the state space and
//! stored as bitmasks. Opaque articles (the costly-evidence model, where an
//! article carries no subset semantics) are represented as labelled articles
//! whose member set is the full space: they refute nothing and are told apart
//! by cost variation alone.

use crate::rational::{Cost, Q};
use crate::states::{OutcomeId, StateId, StateSet, StateSpace, StateSpaceError};
use num_traits::Zero;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ArticleId(pub usize);

/// One article of evidence. `members` is the event the article proves;
/// a `label` marks an opaque costly article (member set = full space).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Article {
    pub members: StateSet,
    pub label: Option<String>,
}

impl Article {
    pub fn subset(members: StateSet) -> Self {
        Article { members, label: None }
    }

    pub fn opaque(label: impl Into<String>, full: StateSet) -> Self {
        Article { members: full, label: Some(label.into()) }
    }

    /// Canonical display name, used as the key in cost tables.
    pub fn name(&self, states: &StateSpace) -> String {
        match &self.label {
            Some(l) => l.clone(),
            None => states.set_name(&self.members),
        }
    }
}

/// One agent's article universe plus the per-state endowment listing.
/// Articles are kept in canonical order (member mask ascending, opaque
/// articles after subset articles of the same mask, then by label).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentEvidence {
    pub articles: Vec<Article>,
    /// `endowed[s]` = sorted article ids available in state `s`.
    pub endowed: Vec<Vec<ArticleId>>,
}

impl AgentEvidence {
    pub fn article(&self, a: ArticleId) -> &Article {
        &self.articles[a.0]
    }

    pub fn endowed_at(&self, s: StateId) -> &[ArticleId] {
        &self.endowed[s.0]
    }

    pub fn has_at(&self, a: ArticleId, s: StateId) -> bool {
        self.endowed[s.0].binary_search(&a).is_ok()
    }

    pub fn universe(&self) -> impl Iterator<Item = ArticleId> {
        (0..self.articles.len()).map(ArticleId)
    }
}

/// Per-agent, per-article, per-state presentation cost with the global
/// bound `C`. Finite entries are strictly below the bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostTable {
    /// `entries[agent][article][state]`
    pub entries: Vec<Vec<Vec<Cost>>>,
    pub bound: Q,
}

impl CostTable {
    pub fn cost(&self, agent: usize, article: ArticleId, state: StateId) -> &Cost {
        &self.entries[agent][article.0][state.0]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scf {
    pub outcome_by_state: Vec<OutcomeId>,
}

impl Scf {
    pub fn outcome(&self, s: StateId) -> OutcomeId {
        self.outcome_by_state[s.0]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Environment {
    pub states: StateSpace,
    pub outcomes: Vec<String>,
    pub agents: usize,
    pub evidence: Vec<AgentEvidence>,
    pub scf: Scf,
    pub costs: Option<CostTable>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnvError {
    #[error(transparent)]
    States(#[from] StateSpaceError),
    #[error("at least two agents are required, got {0}")]
    TooFewAgents(usize),
    #[error("outcome list must be nonempty and free of duplicates")]
    BadOutcomes,
    #[error("agent {agent} has an article with an empty member set")]
    EmptyArticle { agent: usize },
    #[error("agent {agent} has an empty endowment in state {state}")]
    EmptyEndowment { agent: usize, state: String },
    #[error("SCF must assign an outcome to every state; missing {state}")]
    PartialScf { state: String },
    #[error("cost table: {0}")]
    BadCosts(String),
    #[error("utility out of range [0,1): agent {agent}, outcome {outcome}, state {state}")]
    UtilityOutOfRange { agent: usize, outcome: String, state: String },
}

impl Environment {
    /// Validates cross-references and hard invariants (agent count, nonempty
    /// articles and endowments, total SCF, cost bound). Axioms (e1)/(e2) are
    /// *not* enforced here; they are report content for [`validate_structure`].
    pub fn new(
        states: StateSpace,
        outcomes: Vec<String>,
        agents: usize,
        evidence: Vec<AgentEvidence>,
        scf: Scf,
        costs: Option<CostTable>,
    ) -> Result<Self, EnvError> {
        if agents < 2 {
            return Err(EnvError::TooFewAgents(agents));
        }
        if outcomes.is_empty()
            || (1..outcomes.len()).any(|i| outcomes[..i].contains(&outcomes[i]))
        {
            return Err(EnvError::BadOutcomes);
        }
        assert_eq!(evidence.len(), agents, "one evidence table per agent");
        assert_eq!(scf.outcome_by_state.len(), states.len(), "SCF must be total");
        for (i, ev) in evidence.iter().enumerate() {
            assert_eq!(ev.endowed.len(), states.len());
            for art in &ev.articles {
                if art.members.is_empty() {
                    return Err(EnvError::EmptyArticle { agent: i + 1 });
                }
            }
            for s in states.ids() {
                if ev.endowed[s.0].is_empty() {
                    return Err(EnvError::EmptyEndowment {
                        agent: i + 1,
                        state: states.label(s).to_string(),
                    });
                }
            }
        }
        for s in states.ids() {
            if scf.outcome(s).0 >= outcomes.len() {
                return Err(EnvError::PartialScf { state: states.label(s).to_string() });
            }
        }
        if let Some(table) = &costs {
            if table.bound <= Q::zero() {
                return Err(EnvError::BadCosts("bound C must be positive".into()));
            }
            for (i, ev) in evidence.iter().enumerate() {
                for a in ev.universe() {
                    for s in states.ids() {
                        let c = table.cost(i, a, s);
                        match c {
                            Cost::Finite(v) => {
                                if v >= &table.bound {
                                    return Err(EnvError::BadCosts(format!(
                                        "cost of {} for agent {} in state {} is not below C",
                                        ev.article(a).name(&states),
                                        i + 1,
                                        states.label(s),
                                    )));
                                }
                                if !ev.has_at(a, s) {
                                    return Err(EnvError::BadCosts(format!(
                                        "article {} has finite cost in state {} but is not endowed there (agent {})",
                                        ev.article(a).name(&states),
                                        states.label(s),
                                        i + 1,
                                    )));
                                }
                            }
                            Cost::Infinite => {
                                if ev.has_at(a, s) {
                                    return Err(EnvError::BadCosts(format!(
                                        "article {} is endowed in state {} but has infinite cost (agent {})",
                                        ev.article(a).name(&states),
                                        states.label(s),
                                        i + 1,
                                    )));
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(Environment { states, outcomes, agents, evidence, scf, costs })
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn agent_ids(&self) -> impl Iterator<Item = usize> {
        0..self.agents
    }

    pub fn article(&self, agent: usize, a: ArticleId) -> &Article {
        self.evidence[agent].article(a)
    }

    /// Intersection of every article the agent holds in `state`
    /// (the event established by presenting all evidence at once).
    pub fn tightest_evidence(&self, agent: usize, state: StateId) -> StateSet {
        let ev = &self.evidence[agent];
        let mut set = self.states.full_set();
        for &a in ev.endowed_at(state) {
            set = set.intersect(&ev.article(a).members);
        }
        set
    }

    /// Lowest-index endowed article whose member set equals the tightest
    /// evidence, when one exists (always, under normality).
    pub fn tightest_article(&self, agent: usize, state: StateId) -> Option<ArticleId> {
        let target = self.tightest_evidence(agent, state);
        let ev = &self.evidence[agent];
        ev.endowed_at(state)
            .iter()
            .copied()
            .find(|&a| ev.article(a).members == target)
    }

    /// Normality: every agent's tightest evidence is itself endowed.
    /// Returns the first failing `(agent, state)` as witness.
    pub fn normality_witness(&self) -> Option<(usize, StateId)> {
        for i in self.agent_ids() {
            for s in self.states.ids() {
                if self.tightest_article(i, s).is_none() {
                    return Some((i, s));
                }
            }
        }
        None
    }

    pub fn is_normal(&self) -> bool {
        self.normality_witness().is_none()
    }

    /// Partition of states into classes with identical endowments for every
    /// agent, each class sorted and classes ordered by least state index.
    pub fn equivalent_states(&self) -> Vec<Vec<StateId>> {
        let mut classes: Vec<Vec<StateId>> = Vec::new();
        'next: for s in self.states.ids() {
            for class in classes.iter_mut() {
                let rep = class[0];
                if self.states_equivalent(rep, s) {
                    class.push(s);
                    continue 'next;
                }
            }
            classes.push(vec![s]);
        }
        classes
    }

    pub fn states_equivalent(&self, a: StateId, b: StateId) -> bool {
        self.evidence
            .iter()
            .all(|ev| ev.endowed[a.0] == ev.endowed[b.0])
    }

    /// Measurability: the SCF is constant on every equivalence class.
    /// Returns the first violating pair `(s, s')` with `s ~ s'` and
    /// `f(s) != f(s')`.
    pub fn measurability_witness(&self) -> Option<(StateId, StateId)> {
        for class in self.equivalent_states() {
            let rep = class[0];
            for &s in &class[1..] {
                if self.scf.outcome(s) != self.scf.outcome(rep) {
                    return Some((rep, s));
                }
            }
        }
        None
    }

    pub fn is_measurable(&self) -> bool {
        self.measurability_witness().is_none()
    }

    /// Presentation cost of an article; zero when no cost table is attached
    /// and the article is endowed, infinite when it is not.
    pub fn cost(&self, agent: usize, article: ArticleId, state: StateId) -> Cost {
        match &self.costs {
            Some(t) => t.cost(agent, article, state).clone(),
            None => {
                if self.evidence[agent].has_at(article, state) {
                    Cost::zero()
                } else {
                    Cost::Infinite
                }
            }
        }
    }

    /// Drops the cost table, keeping only finite-cost availability
    /// (the hard-evidence projection of a costly environment).
    pub fn hard_projection(&self) -> Environment {
        let mut out = self.clone();
        out.costs = None;
        out
    }
}

/// Structural-axiom report: evidence that purports to refute its own state
/// ((e1)) and articles whose availability does not propagate to every member
/// state ((e2)). An empty report means the axioms hold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct ValidationReport {
    pub e1: Vec<E1Violation>,
    pub e2: Vec<E2Violation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct E1Violation {
    pub agent: usize,
    pub state: String,
    pub article: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct E2Violation {
    pub agent: usize,
    pub article: String,
    pub state: String,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.e1.is_empty() && self.e2.is_empty()
    }
}

/// Checks (e1) and (e2) over the full endowment listing, localizing every
/// violation exactly. Violations are report content, not errors.
pub fn validate_structure(env: &Environment) -> ValidationReport {
    let mut report = ValidationReport::default();
    for i in env.agent_ids() {
        let ev = &env.evidence[i];
        for s in env.states.ids() {
            for &a in ev.endowed_at(s) {
                if !ev.article(a).members.contains(s) {
                    report.e1.push(E1Violation {
                        agent: i + 1,
                        state: env.states.label(s).to_string(),
                        article: ev.article(a).name(&env.states),
                    });
                }
            }
        }
        for a in ev.universe() {
            let held_somewhere = env.states.ids().any(|s| ev.has_at(a, s));
            if !held_somewhere {
                continue;
            }
            for s in ev.article(a).members.iter() {
                if s.0 < env.n_states() && !ev.has_at(a, s) {
                    report.e2.push(E2Violation {
                        agent: i + 1,
                        article: ev.article(a).name(&env.states),
                        state: env.states.label(s).to_string(),
                    });
                }
            }
        }
    }
    report
}

/// Bounded utilities `v_i(a, s)` in `[0, 1)`, exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtilityProfile {
    agents: usize,
    outcomes: usize,
    states: usize,
    values: Vec<Q>,
}

impl UtilityProfile {
    pub fn from_fn(
        env: &Environment,
        mut f: impl FnMut(usize, OutcomeId, StateId) -> Q,
    ) -> Result<Self, EnvError> {
        let (agents, outcomes, states) = (env.agents, env.n_outcomes(), env.n_states());
        let mut values = Vec::with_capacity(agents * outcomes * states);
        for i in 0..agents {
            for a in 0..outcomes {
                for s in 0..states {
                    let v = f(i, OutcomeId(a), StateId(s));
                    if v < Q::zero() || v >= Q::from_integer(1.into()) {
                        return Err(EnvError::UtilityOutOfRange {
                            agent: i + 1,
                            outcome: env.outcomes[a].clone(),
                            state: env.states.label(StateId(s)).to_string(),
                        });
                    }
                    values.push(v);
                }
            }
        }
        Ok(UtilityProfile { agents, outcomes, states, values })
    }

    /// State- and outcome-independent preferences (every deviation incentive
    /// must then come from transfers and evidence alone).
    pub fn constant(env: &Environment) -> Self {
        UtilityProfile {
            agents: env.agents,
            outcomes: env.n_outcomes(),
            states: env.n_states(),
            values: vec![Q::zero(); env.agents * env.n_outcomes() * env.n_states()],
        }
    }

    pub fn value(&self, agent: usize, outcome: OutcomeId, state: StateId) -> &Q {
        &self.values[(agent * self.outcomes + outcome.0) * self.states + state.0]
    }

    pub fn is_state_independent(&self) -> bool {
        (0..self.agents).all(|i| {
            (0..self.outcomes).all(|a| {
                let first = self.value(i, OutcomeId(a), StateId(0));
                (1..self.states).all(|s| self.value(i, OutcomeId(a), StateId(s)) == first)
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::q;

    #[test]
    fn env_a_passes_axioms_and_is_measurable() {
        let env = fixtures::env_a();
        let report = validate_structure(&env);
        assert!(report.is_clean());
        assert!(env.is_normal());
        assert!(env.is_measurable());
        let classes = env.equivalent_states();
        assert_eq!(classes, vec![vec![StateId(0)], vec![StateId(1)]]);
    }

    #[test]
    fn env_a_tightest_evidence() {
        let env = fixtures::env_a();
        let s2 = env.states.find("s2").unwrap();
        let s1 = env.states.find("s1").unwrap();
        assert_eq!(env.tightest_evidence(0, s2), StateSet::singleton(s2));
        assert_eq!(env.tightest_evidence(1, s1), env.states.full_set());
        let tight = env.tightest_article(0, s2).unwrap();
        assert_eq!(env.article(0, tight).members, StateSet::singleton(s2));
    }

    #[test]
    fn env_b_is_one_class_and_not_measurable() {
        let env = fixtures::env_b();
        assert!(validate_structure(&env).is_clean());
        assert_eq!(env.equivalent_states().len(), 1);
        let pair = env.measurability_witness().unwrap();
        assert_eq!(pair, (StateId(0), StateId(1)));
    }

    #[test]
    fn env_c_has_singleton_classes_and_tight_s4() {
        let env = fixtures::env_c();
        assert!(validate_structure(&env).is_clean());
        assert!(env.hard_projection().is_normal());
        assert_eq!(env.equivalent_states().len(), 4);
        assert!(env.is_measurable());
        let s4 = env.states.find("s4").unwrap();
        assert_eq!(env.tightest_evidence(0, s4), StateSet::singleton(s4));
    }

    #[test]
    fn e1_violation_is_localized() {
        // agent 1 endowed with {s2} in state s1
        let states = StateSpace::new(vec!["s1".into(), "s2".into()]).unwrap();
        let full = states.full_set();
        let s2 = StateSet::singleton(StateId(1));
        let ev1 = AgentEvidence {
            articles: vec![Article::subset(s2), Article::subset(full)],
            endowed: vec![vec![ArticleId(0), ArticleId(1)], vec![ArticleId(0), ArticleId(1)]],
        };
        let ev2 = AgentEvidence {
            articles: vec![Article::subset(full)],
            endowed: vec![vec![ArticleId(0)], vec![ArticleId(0)]],
        };
        let env = Environment::new(
            states,
            vec!["a".into(), "b".into()],
            2,
            vec![ev1, ev2],
            Scf { outcome_by_state: vec![OutcomeId(0), OutcomeId(1)] },
            None,
        )
        .unwrap();
        let report = validate_structure(&env);
        assert_eq!(report.e1.len(), 1);
        assert_eq!(report.e1[0].agent, 1);
        assert_eq!(report.e1[0].state, "s1");
        assert_eq!(report.e1[0].article, "{s2}");
        assert!(report.e2.is_empty());
    }

    #[test]
    fn e2_violation_is_localized() {
        // {s1,s2} endowed at s1 but not at s2
        let states = StateSpace::new(vec!["s1".into(), "s2".into()]).unwrap();
        let full = states.full_set();
        let s2 = StateSet::singleton(StateId(1));
        let ev1 = AgentEvidence {
            articles: vec![Article::subset(s2), Article::subset(full)],
            endowed: vec![vec![ArticleId(1)], vec![ArticleId(0)]],
        };
        let ev2 = AgentEvidence {
            articles: vec![Article::subset(full)],
            endowed: vec![vec![ArticleId(0)], vec![ArticleId(0)]],
        };
        let env = Environment::new(
            states,
            vec!["a".into(), "b".into()],
            2,
            vec![ev1, ev2],
            Scf { outcome_by_state: vec![OutcomeId(0), OutcomeId(1)] },
            None,
        )
        .unwrap();
        let report = validate_structure(&env);
        assert!(report.e1.is_empty());
        assert_eq!(report.e2.len(), 1);
        assert_eq!(report.e2[0].article, "{s1,s2}");
        assert_eq!(report.e2[0].state, "s2");
    }

    #[test]
    fn non_normal_env_yields_witness() {
        // E(s1) = {{s1,s2},{s1,s3}} over three states: intersection {s1} not endowed
        let states =
            StateSpace::new(vec!["s1".into(), "s2".into(), "s3".into()]).unwrap();
        let m12 = StateSet::from_iter([StateId(0), StateId(1)]);
        let m13 = StateSet::from_iter([StateId(0), StateId(2)]);
        let ev1 = AgentEvidence {
            articles: vec![Article::subset(m12), Article::subset(m13)],
            endowed: vec![
                vec![ArticleId(0), ArticleId(1)],
                vec![ArticleId(0)],
                vec![ArticleId(1)],
            ],
        };
        let full = states.full_set();
        let ev2 = AgentEvidence {
            articles: vec![Article::subset(full)],
            endowed: vec![vec![ArticleId(0)]; 3],
        };
        let env = Environment::new(
            states,
            vec!["a".into()],
            2,
            vec![ev1, ev2],
            Scf { outcome_by_state: vec![OutcomeId(0); 3] },
            None,
        )
        .unwrap();
        assert_eq!(env.normality_witness(), Some((0, StateId(0))));
    }

    #[test]
    fn utilities_must_stay_below_one() {
        let env = fixtures::env_a();
        assert!(UtilityProfile::from_fn(&env, |_, _, _| q(1, 1)).is_err());
        let v = UtilityProfile::from_fn(&env, |_, _, _| q(1, 2)).unwrap();
        assert!(v.is_state_independent());
    }
}
