//! Canonical fixture environments and the seeded random generator.
//!
//! Hard-evidence fixtures are "closure environments": each agent is given an
//! article universe, and an article is endowed exactly at its member states.
//! Built that way, (e1) and (e2) hold by construction.

use crate::env::{AgentEvidence, Article, ArticleId, CostTable, Environment, Scf};
use crate::rational::{q, Cost, Q};
use crate::states::{OutcomeId, StateId, StateSet, StateSpace};
use num_traits::Zero;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Canonical article order: member mask ascending, subset articles before
/// opaque ones with the same mask, then label.
fn sort_articles(articles: &mut Vec<Article>) {
    articles.sort_by(|a, b| {
        (a.members, a.label.is_some(), &a.label).cmp(&(b.members, b.label.is_some(), &b.label))
    });
    articles.dedup();
}

/// Endows every article at each of its member states ((e2)-closure).
pub fn closure_evidence(states: &StateSpace, mut articles: Vec<Article>) -> AgentEvidence {
    sort_articles(&mut articles);
    let endowed = states
        .ids()
        .map(|s| {
            articles
                .iter()
                .enumerate()
                .filter(|(_, art)| art.members.contains(s))
                .map(|(k, _)| ArticleId(k))
                .collect()
        })
        .collect();
    AgentEvidence { articles, endowed }
}

fn mask(states: &StateSpace, members: &[&str]) -> StateSet {
    members
        .iter()
        .map(|l| states.find(l).unwrap_or_else(|| panic!("unknown state {l}")))
        .collect()
}

fn subset(states: &StateSpace, members: &[&str]) -> Article {
    Article::subset(mask(states, members))
}

/// Hard-evidence closure environment from per-agent article lists.
pub fn hard_env(
    state_labels: &[&str],
    outcome_labels: &[&str],
    scf: &[&str],
    articles_per_agent: &[&[&[&str]]],
) -> Environment {
    let states = StateSpace::new(state_labels.iter().map(|s| s.to_string()).collect()).unwrap();
    let outcomes: Vec<String> = outcome_labels.iter().map(|s| s.to_string()).collect();
    let scf = Scf {
        outcome_by_state: scf
            .iter()
            .map(|o| OutcomeId(outcomes.iter().position(|x| x == o).unwrap()))
            .collect(),
    };
    let evidence = articles_per_agent
        .iter()
        .map(|arts| {
            closure_evidence(&states, arts.iter().map(|a| subset(&states, a)).collect())
        })
        .collect::<Vec<_>>();
    let agents = evidence.len();
    Environment::new(states, outcomes, agents, evidence, scf, None).unwrap()
}

/// Two states; agent 1 can single out `s2` there, agent 2 holds only the
/// trivial article. Measurable, normal.
pub fn env_a() -> Environment {
    hard_env(
        &["s1", "s2"],
        &["a", "b"],
        &["a", "b"],
        &[&[&["s1", "s2"], &["s2"]], &[&["s1", "s2"]]],
    )
}

/// Two equivalent states mapped to distinct outcomes: the non-measurable
/// negative control.
pub fn env_b() -> Environment {
    hard_env(
        &["s1", "s2"],
        &["a", "b"],
        &["a", "b"],
        &[&[&["s1", "s2"]], &[&["s1", "s2"]]],
    )
}

/// Four states; agent 1's endowment grows toward `s4`, every available
/// article is costless except `{s4}`, which costs 1/10. Measurable for any
/// injective SCF, yet not evidence-monotonic under constant preferences.
pub fn env_c() -> Environment {
    let mut env = hard_env(
        &["s1", "s2", "s3", "s4"],
        &["a1", "a2", "a3", "a4"],
        &["a1", "a2", "a3", "a4"],
        &[
            &[
                &["s1", "s2", "s3", "s4"],
                &["s2", "s4"],
                &["s3", "s4"],
                &["s4"],
            ],
            &[&["s1", "s2", "s3", "s4"]],
        ],
    );
    let s4_article = StateSet::singleton(env.states.find("s4").unwrap());
    let costs = availability_costs(&env, q(1, 1), |agent, article, _state| {
        if agent == 0 && article.members == s4_article {
            Cost::Finite(q(1, 10))
        } else {
            Cost::zero()
        }
    });
    env.costs = Some(costs);
    env
}

/// Buyer/seller fixture: at `theta` only the buyer can refute `phi`, while
/// `theta` is nonrefutable at `phi`. Renegotiation-proof contracting fails.
pub fn env_d() -> Environment {
    hard_env(
        &["phi", "theta"],
        &["x", "y"],
        &["x", "y"],
        &[&[&["phi", "theta"], &["theta"]], &[&["phi", "theta"]]],
    )
}

/// `env_d` with the buyer also able to prove `phi`; the pairwise refutation
/// conditions then pass.
pub fn env_d_modified() -> Environment {
    hard_env(
        &["phi", "theta"],
        &["x", "y"],
        &["x", "y"],
        &[&[&["phi", "theta"], &["theta"], &["phi"]], &[&["phi", "theta"]]],
    )
}

/// Honesty-style costly fixture: two opaque articles available everywhere,
/// with the cheap one different in each state. Every SCF is
/// evidence-monotonic here, but only constant ones are measurable.
pub fn env_e() -> Environment {
    let states = StateSpace::new(vec!["s1".into(), "s2".into()]).unwrap();
    let full = states.full_set();
    let articles = vec![Article::opaque("h1", full), Article::opaque("h2", full)];
    let evidence: Vec<AgentEvidence> = (0..2)
        .map(|_| closure_evidence(&states, articles.clone()))
        .collect();
    let outcomes = vec!["a".to_string(), "b".to_string()];
    let scf = Scf { outcome_by_state: vec![OutcomeId(0), OutcomeId(1)] };
    let mut env = Environment::new(states, outcomes, 2, evidence, scf, None).unwrap();
    let costs = availability_costs(&env, q(1, 1), |_agent, article, state| {
        let honest = match article.label.as_deref() {
            Some("h1") => StateId(0),
            Some("h2") => StateId(1),
            _ => unreachable!(),
        };
        if state == honest {
            Cost::zero()
        } else {
            Cost::Finite(q(1, 10))
        }
    });
    env.costs = Some(costs);
    env
}

/// `env_e` with a third agent sharing the same article costs.
pub fn env_e3() -> Environment {
    let states = StateSpace::new(vec!["s1".into(), "s2".into()]).unwrap();
    let full = states.full_set();
    let articles = vec![Article::opaque("h1", full), Article::opaque("h2", full)];
    let evidence: Vec<AgentEvidence> = (0..3)
        .map(|_| closure_evidence(&states, articles.clone()))
        .collect();
    let outcomes = vec!["a".to_string(), "b".to_string()];
    let scf = Scf { outcome_by_state: vec![OutcomeId(0), OutcomeId(1)] };
    let mut env = Environment::new(states, outcomes, 3, evidence, scf, None).unwrap();
    let costs = availability_costs(&env, q(1, 1), |_agent, article, state| {
        let honest = match article.label.as_deref() {
            Some("h1") => StateId(0),
            Some("h2") => StateId(1),
            _ => unreachable!(),
        };
        if state == honest {
            Cost::zero()
        } else {
            Cost::Finite(q(1, 10))
        }
    });
    env.costs = Some(costs);
    env
}

/// Three-agent hard fixture used for budget-balance and small-transfer runs.
pub fn env_3() -> Environment {
    hard_env(
        &["s1", "s2"],
        &["a", "b"],
        &["a", "b"],
        &[
            &[&["s1", "s2"], &["s2"]],
            &[&["s1", "s2"], &["s1"]],
            &[&["s1", "s2"]],
        ],
    )
}

/// Two-state, two-agent costly fixture for the cost-robust mechanism:
/// agent 1's tight article at `s2` costs 1/4, everything else endowed is free.
pub fn env_costly_2state() -> Environment {
    let mut env = hard_env(
        &["s1", "s2"],
        &["a", "b"],
        &["a", "b"],
        &[&[&["s1", "s2"], &["s2"]], &[&["s1", "s2"]]],
    );
    let s2_article = StateSet::singleton(env.states.find("s2").unwrap());
    let costs = availability_costs(&env, q(1, 1), |agent, article, _state| {
        if agent == 0 && article.members == s2_article {
            Cost::Finite(q(1, 4))
        } else {
            Cost::zero()
        }
    });
    env.costs = Some(costs);
    env
}

/// Builds a cost table that is consistent with the endowment listing:
/// endowed entries get `finite(agent, article, state)`, everything else is
/// infinite.
pub fn availability_costs(
    env: &Environment,
    bound: Q,
    mut finite: impl FnMut(usize, &Article, StateId) -> Cost,
) -> CostTable {
    let entries = env
        .agent_ids()
        .map(|i| {
            let ev = &env.evidence[i];
            ev.universe()
                .map(|a| {
                    env.states
                        .ids()
                        .map(|s| {
                            if ev.has_at(a, s) {
                                let c = finite(i, ev.article(a), s);
                                assert!(c.is_finite(), "endowed article must have finite cost");
                                c
                            } else {
                                Cost::Infinite
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    CostTable { entries, bound }
}

#[derive(Debug, Clone)]
pub struct RandomEnvConfig {
    pub agents: (usize, usize),
    pub states: (usize, usize),
    pub outcomes: (usize, usize),
    /// Extra random articles per agent (the trivial full article is always
    /// included so endowments are never empty).
    pub articles: (usize, usize),
    /// Close each agent's article family under intersection, which enforces
    /// normality.
    pub normal: bool,
    /// Assign outcomes per equivalence class, which enforces measurability.
    pub measurable: bool,
}

impl Default for RandomEnvConfig {
    fn default() -> Self {
        RandomEnvConfig {
            agents: (2, 3),
            states: (2, 4),
            outcomes: (2, 3),
            articles: (1, 3),
            normal: false,
            measurable: false,
        }
    }
}

impl RandomEnvConfig {
    pub fn normal_measurable() -> Self {
        RandomEnvConfig { normal: true, measurable: true, ..Default::default() }
    }
}

/// Seeded random closure environment. Articles are random nonempty subsets;
/// (e1)/(e2) hold by construction, normality and measurability optionally by
/// post-processing.
pub fn random_env(seed: u64, cfg: &RandomEnvConfig) -> Environment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_states = rng.random_range(cfg.states.0..=cfg.states.1);
    let n_agents = rng.random_range(cfg.agents.0..=cfg.agents.1);
    let n_outcomes = rng.random_range(cfg.outcomes.0..=cfg.outcomes.1);
    let states =
        StateSpace::new((1..=n_states).map(|k| format!("s{k}")).collect()).unwrap();
    let full = states.full_set();

    let evidence: Vec<AgentEvidence> = (0..n_agents)
        .map(|_| {
            let extra = rng.random_range(cfg.articles.0..=cfg.articles.1);
            let mut masks = vec![full];
            for _ in 0..extra {
                let bits = rng.random_range(1..(1u64 << n_states));
                masks.push(StateSet(bits));
            }
            if cfg.normal {
                intersection_close(&mut masks);
            }
            masks.sort();
            masks.dedup();
            closure_evidence(&states, masks.into_iter().map(Article::subset).collect())
        })
        .collect();

    let outcomes: Vec<String> = (1..=n_outcomes).map(|k| format!("a{k}")).collect();
    let mut env = Environment::new(
        states,
        outcomes,
        n_agents,
        evidence,
        Scf { outcome_by_state: vec![OutcomeId(0); n_states] },
        None,
    )
    .unwrap();

    let assignment: Vec<OutcomeId> = if cfg.measurable {
        let mut by_state = vec![OutcomeId(0); n_states];
        for class in env.equivalent_states() {
            let o = OutcomeId(rng.random_range(0..n_outcomes));
            for s in class {
                by_state[s.0] = o;
            }
        }
        by_state
    } else {
        (0..n_states)
            .map(|_| OutcomeId(rng.random_range(0..n_outcomes)))
            .collect()
    };
    env.scf = Scf { outcome_by_state: assignment };
    env
}

/// Random but consistent cost table on top of a closure environment:
/// endowed articles draw costs from `{0, 1/8, ..., 7/8}`, bound `C = 1`.
pub fn random_costs(env: &Environment, seed: u64) -> CostTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    let mut draws: Vec<Cost> = Vec::new();
    for i in env.agent_ids() {
        for a in env.evidence[i].universe() {
            for s in env.states.ids() {
                if env.evidence[i].has_at(a, s) {
                    draws.push(Cost::Finite(q(rng.random_range(0..8), 8)));
                }
            }
        }
    }
    let mut k = 0;
    availability_costs(env, q(1, 1), |_, _, _| {
        let c = draws[k].clone();
        k += 1;
        c
    })
}

fn intersection_close(masks: &mut Vec<StateSet>) {
    loop {
        let mut added = false;
        let snapshot = masks.clone();
        for (i, a) in snapshot.iter().enumerate() {
            for b in snapshot.iter().skip(i + 1) {
                let c = a.intersect(b);
                if !c.is_empty() && !masks.contains(&c) {
                    masks.push(c);
                    added = true;
                }
            }
        }
        if !added {
            break;
        }
    }
}

/// Mutates one endowed article so that it excludes its own state:
/// exactly one (e1) violation, at a known coordinate.
pub fn inject_e1_break(env: &Environment, seed: u64) -> Option<(Environment, usize, StateId, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sites: Vec<(usize, StateId, ArticleId)> = Vec::new();
    for i in env.agent_ids() {
        for s in env.states.ids() {
            for &a in env.evidence[i].endowed_at(s) {
                if env.evidence[i].article(a).members.len() > 1 {
                    sites.push((i, s, a));
                }
            }
        }
    }
    let &(agent, state, article) = sites.choose(&mut rng)?;
    let mut out = env.clone();
    let mut shrunk = out.evidence[agent].articles[article.0].members;
    shrunk.remove(state);
    // keep other endowment sites consistent with the shrunk member set
    for s in out.states.ids() {
        if s != state && !shrunk.contains(s) {
            out.evidence[agent].endowed[s.0].retain(|&x| x != article);
        }
    }
    out.evidence[agent].articles[article.0].members = shrunk;
    if out
        .states
        .ids()
        .any(|s| out.evidence[agent].endowed[s.0].is_empty())
    {
        return None;
    }
    let name = out.evidence[agent].articles[article.0].name(&out.states);
    Some((out, agent + 1, state, name))
}

/// Removes one article from the endowment at one of its member states:
/// exactly one (e2) violation, at a known coordinate.
pub fn inject_e2_break(env: &Environment, seed: u64) -> Option<(Environment, usize, String, StateId)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sites: Vec<(usize, StateId, ArticleId)> = Vec::new();
    for i in env.agent_ids() {
        for s in env.states.ids() {
            if env.evidence[i].endowed_at(s).len() < 2 {
                continue;
            }
            for &a in env.evidence[i].endowed_at(s) {
                if env.evidence[i].article(a).members.len() > 1 {
                    sites.push((i, s, a));
                }
            }
        }
    }
    let &(agent, state, article) = sites.choose(&mut rng)?;
    let mut out = env.clone();
    out.evidence[agent].endowed[state.0].retain(|&x| x != article);
    let name = out.evidence[agent].articles[article.0].name(&out.states);
    Some((out, agent + 1, name, state))
}

/// The 50-environment axiom corpus plus the named fixtures, as used by the
/// acceptance suite and the `corpus` subcommand.
pub fn named_fixtures() -> Vec<(&'static str, Environment)> {
    vec![
        ("env_a", env_a()),
        ("env_b", env_b()),
        ("env_c", env_c()),
        ("env_d", env_d()),
        ("env_d_modified", env_d_modified()),
        ("env_e", env_e()),
        ("env_3", env_3()),
        ("env_costly_2state", env_costly_2state()),
    ]
}

pub fn random_corpus(count: usize, base_seed: u64, cfg: &RandomEnvConfig) -> Vec<Environment> {
    (0..count as u64)
        .map(|k| random_env(base_seed.wrapping_add(k), cfg))
        .collect()
}

pub fn is_zero(v: &Q) -> bool {
    v.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::validate_structure;

    #[test]
    fn closure_envs_satisfy_axioms() {
        for (name, env) in named_fixtures() {
            let report = validate_structure(&env);
            assert!(report.is_clean(), "{name} should pass (e1)/(e2)");
        }
    }

    #[test]
    fn random_corpus_is_axiom_valid() {
        for (k, env) in random_corpus(50, 42, &RandomEnvConfig::default())
            .into_iter()
            .enumerate()
        {
            assert!(validate_structure(&env).is_clean(), "fixture {k}");
        }
    }

    #[test]
    fn normal_corpus_is_normal_and_measurable() {
        for env in random_corpus(20, 7, &RandomEnvConfig::normal_measurable()) {
            assert!(env.is_normal());
            assert!(env.is_measurable());
        }
    }

    #[test]
    fn injected_breaks_are_detected_exactly() {
        let env = env_a();
        let (broken, agent, state, article) = inject_e1_break(&env, 3).unwrap();
        let report = validate_structure(&broken);
        assert_eq!(report.e1.len(), 1);
        assert_eq!(report.e1[0].agent, agent);
        assert_eq!(report.e1[0].state, broken.states.label(state));
        assert_eq!(report.e1[0].article, article);

        let (broken, agent, article, state) = inject_e2_break(&env, 5).unwrap();
        let report = validate_structure(&broken);
        assert!(report.e1.is_empty());
        assert_eq!(report.e2.len(), 1);
        assert_eq!(report.e2[0].agent, agent);
        assert_eq!(report.e2[0].article, article);
        assert_eq!(report.e2[0].state, broken.states.label(state));
    }

    #[test]
    fn env_e_cheapest_article_flips_between_states() {
        let env = env_e();
        let costs = env.costs.as_ref().unwrap();
        let h1 = ArticleId(0);
        let (s1, s2) = (StateId(0), StateId(1));
        assert_eq!(costs.cost(0, h1, s1), &Cost::zero());
        assert_eq!(costs.cost(0, h1, s2), &Cost::Finite(q(1, 10)));
        assert!(!env.is_measurable());
    }
}
