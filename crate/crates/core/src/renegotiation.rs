//! Pairwise refutation conditions for renegotiation-proof bilateral
//! implementation, the balanced two-transfer mechanism they license, and the
//! adversarial utility construction used when they fail.

use crate::env::{Environment, UtilityProfile};
use crate::mech::{DirectMessage, Evaluation, OutcomeDist, SynthesisError, TightTable};
use crate::rational::{qi, Q};
use crate::states::StateId;
use num_traits::{One, Zero};
use serde::Serialize;

/// Does `agent` hold, at `at`, an article refuting `target`?
pub fn refutes(env: &Environment, agent: usize, at: StateId, target: StateId) -> bool {
    let ev = &env.evidence[agent];
    ev.endowed_at(at)
        .iter()
        .any(|&a| !ev.article(a).members.contains(target))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailCase {
    /// One agent refutes one direction, the other agent the other direction.
    CrossRefutation,
    /// One direction is nonrefutable, the other has a single refuter.
    OneSidedRefuter,
    /// Neither direction is refutable: the states carry identical evidence,
    /// so the pair already violates measurability.
    EquivalentPair,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PairVerdict {
    /// A single agent refutes both directions.
    CondA { agent: usize },
    /// Both agents refute `refutable -> other`, nobody refutes the reverse.
    CondB { refutable_at: String },
    Fail { case: FailCase },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairReport {
    pub s: String,
    pub s_prime: String,
    #[serde(flatten)]
    pub verdict: PairVerdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RpReport {
    pub pairs: Vec<PairReport>,
}

impl RpReport {
    pub fn passes(&self) -> bool {
        self.pairs
            .iter()
            .all(|p| !matches!(p.verdict, PairVerdict::Fail { .. }))
    }

    pub fn first_fail(&self) -> Option<&PairReport> {
        self.pairs
            .iter()
            .find(|p| matches!(p.verdict, PairVerdict::Fail { .. }))
    }
}

/// Classifies every unordered pair of states with distinct outcomes by its
/// refutability pattern. Both orientations are checked.
pub fn check_rp_conditions(env: &Environment) -> Result<RpReport, SynthesisError> {
    if env.agents != 2 {
        return Err(SynthesisError::TooManyAgents { need: 2, got: env.agents });
    }
    let mut pairs = Vec::new();
    for s in env.states.ids() {
        for t in env.states.ids().skip(s.0 + 1) {
            if env.scf.outcome(s) == env.scf.outcome(t) {
                continue;
            }
            pairs.push(PairReport {
                s: env.states.label(s).to_string(),
                s_prime: env.states.label(t).to_string(),
                verdict: classify_pair(env, s, t),
            });
        }
    }
    Ok(RpReport { pairs })
}

pub fn classify_pair(env: &Environment, s: StateId, t: StateId) -> PairVerdict {
    let at_s: Vec<bool> = env.agent_ids().map(|i| refutes(env, i, s, t)).collect();
    let at_t: Vec<bool> = env.agent_ids().map(|i| refutes(env, i, t, s)).collect();

    if let Some(agent) = (0..2).find(|&i| at_s[i] && at_t[i]) {
        return PairVerdict::CondA { agent: agent + 1 };
    }
    if at_s.iter().all(|&x| x) && at_t.iter().all(|&x| !x) {
        return PairVerdict::CondB { refutable_at: env.states.label(s).to_string() };
    }
    if at_t.iter().all(|&x| x) && at_s.iter().all(|&x| !x) {
        return PairVerdict::CondB { refutable_at: env.states.label(t).to_string() };
    }
    let n_s = at_s.iter().filter(|&&x| x).count();
    let n_t = at_t.iter().filter(|&&x| x).count();
    let case = match (n_s, n_t) {
        (0, 0) => FailCase::EquivalentPair,
        (0, _) | (_, 0) => FailCase::OneSidedRefuter,
        _ => FailCase::CrossRefutation,
    };
    PairVerdict::Fail { case }
}

/// Balanced two-transfer mechanism: a one-dollar fine for a claim the agent
/// cannot support, a two-dollar fine for a claim the other agent's article
/// refutes, each paid to the other agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RpMechanism {
    pub tight: TightTable,
}

impl RpMechanism {
    pub fn evaluate_direct(&self, env: &Environment, profile: &[DirectMessage]) -> Evaluation {
        let mut unsupported = vec![Q::zero(); 2];
        let mut unsupported_rebate = vec![Q::zero(); 2];
        let mut refuted = vec![Q::zero(); 2];
        let mut refuted_rebate = vec![Q::zero(); 2];
        for i in 0..2 {
            let j = 1 - i;
            if !self.tight.supports(env, i, profile[i].article, profile[i].claim) {
                unsupported[i] -= Q::one();
                unsupported_rebate[j] += Q::one();
            }
            if !env
                .article(j, profile[j].article)
                .members
                .contains(profile[i].claim)
            {
                refuted[i] -= qi(2);
                refuted_rebate[j] += qi(2);
            }
        }
        Evaluation::from_components(
            OutcomeDist::Pure(env.scf.outcome(profile[0].claim)),
            2,
            vec![
                ("unsupported", unsupported),
                ("unsupported_rebate", unsupported_rebate),
                ("refuted", refuted),
                ("refuted_rebate", refuted_rebate),
            ],
        )
    }
}

pub fn synthesize_rp(env: &Environment) -> Result<RpMechanism, SynthesisError> {
    let report = check_rp_conditions(env)?;
    if !report.passes() {
        return Err(SynthesisError::ConditionsFail);
    }
    if !crate::env::validate_structure(env).is_clean() {
        return Err(SynthesisError::AxiomsViolated);
    }
    if let Some((agent, state)) = env.normality_witness() {
        return Err(SynthesisError::NotNormal {
            agent: agent + 1,
            state: env.states.label(state).to_string(),
        });
    }
    Ok(RpMechanism { tight: TightTable::build(env) })
}

/// State-independent profile from the necessity construction: agent 1 values
/// `f(s')` at `1 - eta` and `f(s)` at zero, agent 2 mirrored, every other
/// outcome split evenly so values sum to `1 - eta`.
pub fn adversarial_profile(
    env: &Environment,
    pair: (StateId, StateId),
    case: FailCase,
    eta: &Q,
) -> Result<UtilityProfile, SynthesisError> {
    if env.agents != 2 {
        return Err(SynthesisError::TooManyAgents { need: 2, got: env.agents });
    }
    let (s, t) = pair;
    let verdict = classify_pair(env, s, t);
    if verdict != (PairVerdict::Fail { case }) {
        return Err(SynthesisError::PreconditionViolated(format!(
            "pair ({}, {}) does not fail with the given case; verdict {:?}",
            env.states.label(s),
            env.states.label(t),
            verdict
        )));
    }
    if eta <= &Q::zero() || eta >= &Q::one() {
        return Err(SynthesisError::BadEpsilon);
    }
    let top = Q::one() - eta;
    let split = &top / qi(2);
    let f_s = env.scf.outcome(s);
    let f_t = env.scf.outcome(t);
    UtilityProfile::from_fn(env, |agent, outcome, _state| {
        if outcome == f_t {
            if agent == 0 {
                top.clone()
            } else {
                Q::zero()
            }
        } else if outcome == f_s {
            if agent == 0 {
                Q::zero()
            } else {
                top.clone()
            }
        } else {
            split.clone()
        }
    })
    .map_err(|_| SynthesisError::BadEpsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::q;

    #[test]
    fn env_d_fails_with_one_sided_refuter() {
        let env = fixtures::env_d();
        let report = check_rp_conditions(&env).unwrap();
        assert_eq!(report.pairs.len(), 1);
        assert_eq!(
            report.pairs[0].verdict,
            PairVerdict::Fail { case: FailCase::OneSidedRefuter }
        );
        assert!(!report.passes());
    }

    #[test]
    fn modified_env_d_passes_via_condition_a() {
        let env = fixtures::env_d_modified();
        let report = check_rp_conditions(&env).unwrap();
        assert_eq!(report.pairs[0].verdict, PairVerdict::CondA { agent: 1 });
        assert!(report.passes());
    }

    #[test]
    fn cross_refutation_is_case_c() {
        // agent 1 refutes s2 at s1, agent 2 refutes s1 at s2
        let env = fixtures::hard_env(
            &["s1", "s2"],
            &["a", "b"],
            &["a", "b"],
            &[&[&["s1", "s2"], &["s1"]], &[&["s1", "s2"], &["s2"]]],
        );
        let report = check_rp_conditions(&env).unwrap();
        assert_eq!(
            report.pairs[0].verdict,
            PairVerdict::Fail { case: FailCase::CrossRefutation }
        );
    }

    #[test]
    fn rp_pass_implies_measurable_on_corpus() {
        let cfg = fixtures::RandomEnvConfig {
            agents: (2, 2),
            ..Default::default()
        };
        for env in fixtures::random_corpus(40, 23, &cfg) {
            if check_rp_conditions(&env).unwrap().passes() {
                assert!(env.is_measurable());
            }
        }
    }

    #[test]
    fn adversarial_profile_matches_construction() {
        let env = fixtures::env_d();
        let (phi, theta) = (StateId(0), StateId(1));
        let v = adversarial_profile(&env, (phi, theta), FailCase::OneSidedRefuter, &q(1, 10))
            .unwrap();
        let f_theta = env.scf.outcome(theta);
        let f_phi = env.scf.outcome(phi);
        assert_eq!(v.value(0, f_theta, phi), &q(9, 10));
        assert_eq!(v.value(0, f_phi, phi), &Q::zero());
        assert_eq!(v.value(1, f_phi, theta), &q(9, 10));
        assert_eq!(v.value(1, f_theta, theta), &Q::zero());
        assert!(v.is_state_independent());
        // wrong case tag is rejected
        assert!(adversarial_profile(&env, (phi, theta), FailCase::CrossRefutation, &q(1, 10))
            .is_err());
    }
}
