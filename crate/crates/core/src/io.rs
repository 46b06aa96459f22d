//! Environment file schema, canonical JSON serialization, and mechanism
//! export.
//!
//! Environments are JSON objects with `states`, `agents`, `outcomes`,
//! `evidence` (agent -> state -> array of state-subsets or opaque article
//! labels), `scf`, and optional `costs` / `cost_bound`. Rationals travel as
//! strings `"p/q"`; unavailable articles cost `"inf"`. Unknown keys are
//! rejected. Serialization is canonical (sorted keys, articles in mask
//! order), so reports and fixtures diff cleanly.

use crate::env::{
    AgentEvidence, Article, ArticleId, CostTable, Environment, EnvError, Scf,
};
use crate::rational::{format_q, parse_q, Cost, Q};
use crate::states::{OutcomeId, StateSet, StateSpace};
use crate::variant::Mechanism;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvFile {
    states: Vec<String>,
    agents: usize,
    outcomes: Vec<String>,
    evidence: BTreeMap<String, BTreeMap<String, Vec<ArticleSpec>>>,
    scf: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    costs: Option<BTreeMap<String, BTreeMap<String, BTreeMap<String, String>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cost_bound: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum ArticleSpec {
    Subset(Vec<String>),
    Opaque(String),
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Env(#[from] EnvError),
    #[error("{0}")]
    Schema(String),
}

fn schema_err<T>(msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::Schema(msg.into()))
}

pub fn parse_environment(text: &str) -> Result<Environment, ParseError> {
    let file: EnvFile = serde_json::from_str(text)?;
    let states = StateSpace::new(file.states.clone()).map_err(EnvError::from)?;

    if file.evidence.len() != file.agents {
        return schema_err(format!(
            "evidence lists {} agents, header says {}",
            file.evidence.len(),
            file.agents
        ));
    }

    let mut evidence = Vec::with_capacity(file.agents);
    for agent in 1..=file.agents {
        let key = agent.to_string();
        let Some(per_state) = file.evidence.get(&key) else {
            return schema_err(format!("evidence for agent {key} is missing"));
        };
        // collect the agent's article universe
        let mut articles: Vec<Article> = Vec::new();
        let resolve = |spec: &ArticleSpec| -> Result<Article, ParseError> {
            match spec {
                ArticleSpec::Subset(labels) => {
                    let mut mask = StateSet::empty();
                    for l in labels {
                        match states.find(l) {
                            Some(s) => mask.insert(s),
                            None => return schema_err(format!("unknown state {l:?}")),
                        }
                    }
                    if mask.is_empty() {
                        return schema_err(format!(
                            "agent {agent} presents an article proving the empty event"
                        ));
                    }
                    Ok(Article::subset(mask))
                }
                ArticleSpec::Opaque(label) => {
                    if label.starts_with('{') {
                        return schema_err(format!(
                            "opaque article label {label:?} may not start with '{{'"
                        ));
                    }
                    Ok(Article::opaque(label.clone(), states.full_set()))
                }
            }
        };
        let mut endow_specs: Vec<(usize, Vec<Article>)> = Vec::new();
        for s in states.ids() {
            let label = states.label(s);
            let Some(list) = per_state.get(label) else {
                return Err(EnvError::EmptyEndowment {
                    agent,
                    state: label.to_string(),
                }
                .into());
            };
            let mut resolved = Vec::with_capacity(list.len());
            for spec in list {
                let art = resolve(spec)?;
                if !articles.contains(&art) {
                    articles.push(art.clone());
                }
                resolved.push(art);
            }
            endow_specs.push((s.0, resolved));
        }
        for key in per_state.keys() {
            if states.find(key).is_none() {
                return schema_err(format!("evidence of agent {agent}: unknown state {key:?}"));
            }
        }
        articles.sort_by(|a, b| {
            (a.members, a.label.is_some(), &a.label)
                .cmp(&(b.members, b.label.is_some(), &b.label))
        });
        let endowed: Vec<Vec<ArticleId>> = endow_specs
            .iter()
            .map(|(_, list)| {
                let mut ids: Vec<ArticleId> = list
                    .iter()
                    .map(|art| ArticleId(articles.iter().position(|x| x == art).unwrap()))
                    .collect();
                ids.sort();
                ids.dedup();
                ids
            })
            .collect();
        evidence.push(AgentEvidence { articles, endowed });
    }

    let mut scf = vec![OutcomeId(0); states.len()];
    for s in states.ids() {
        let label = states.label(s);
        let Some(outcome) = file.scf.get(label) else {
            return Err(EnvError::PartialScf { state: label.to_string() }.into());
        };
        let Some(o) = file.outcomes.iter().position(|x| x == outcome) else {
            return schema_err(format!("scf maps {label:?} to unknown outcome {outcome:?}"));
        };
        scf[s.0] = OutcomeId(o);
    }
    for key in file.scf.keys() {
        if states.find(key).is_none() {
            return schema_err(format!("scf: unknown state {key:?}"));
        }
    }

    let costs = match (&file.costs, &file.cost_bound) {
        (None, None) => None,
        (entries, bound) => {
            let mut table: Vec<Vec<Vec<Cost>>> = evidence
                .iter()
                .map(|ev| {
                    ev.articles
                        .iter()
                        .enumerate()
                        .map(|(a, _)| {
                            states
                                .ids()
                                .map(|s| {
                                    if ev.has_at(ArticleId(a), s) {
                                        Cost::zero()
                                    } else {
                                        Cost::Infinite
                                    }
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect();
            if let Some(entries) = entries {
                for (agent_key, per_article) in entries {
                    let agent: usize = match agent_key.parse::<usize>() {
                        Ok(a) if 1 <= a && a <= file.agents => a - 1,
                        _ => return schema_err(format!("costs: bad agent key {agent_key:?}")),
                    };
                    for (article_name, per_state) in per_article {
                        let Some(article) = evidence[agent]
                            .articles
                            .iter()
                            .position(|art| &art.name(&states) == article_name)
                        else {
                            return schema_err(format!(
                                "costs: agent {agent_key} has no article named {article_name:?}"
                            ));
                        };
                        for (state_label, value) in per_state {
                            let Some(s) = states.find(state_label) else {
                                return schema_err(format!(
                                    "costs: unknown state {state_label:?}"
                                ));
                            };
                            let cost = Cost::parse(value).map_err(|e| {
                                ParseError::Schema(format!("costs: {e}"))
                            })?;
                            let endowed = evidence[agent].has_at(ArticleId(article), s);
                            match (&cost, endowed) {
                                (Cost::Finite(_), false) => {
                                    return schema_err(format!(
                                        "costs: article {article_name:?} has finite cost in state {state_label:?} but is not endowed there"
                                    ))
                                }
                                (Cost::Infinite, true) => {
                                    return schema_err(format!(
                                        "costs: article {article_name:?} is endowed in state {state_label:?} but marked unavailable"
                                    ))
                                }
                                _ => {}
                            }
                            table[agent][article][s.0] = cost;
                        }
                    }
                }
            }
            let max_finite = table
                .iter()
                .flatten()
                .flatten()
                .filter_map(|c| c.as_finite())
                .max()
                .cloned()
                .unwrap_or_else(Q::zero);
            let bound = match bound {
                Some(b) => parse_q(b).map_err(|e| ParseError::Schema(format!("cost_bound: {e}")))?,
                None => max_finite + Q::one(),
            };
            Some(CostTable { entries: table, bound })
        }
    };

    Ok(Environment::new(
        states,
        file.outcomes,
        file.agents,
        evidence,
        Scf { outcome_by_state: scf },
        costs,
    )?)
}

pub fn serialize_environment(env: &Environment) -> String {
    let evidence: BTreeMap<String, BTreeMap<String, Vec<ArticleSpec>>> = env
        .agent_ids()
        .map(|i| {
            let per_state: BTreeMap<String, Vec<ArticleSpec>> = env
                .states
                .ids()
                .map(|s| {
                    let specs = env.evidence[i]
                        .endowed_at(s)
                        .iter()
                        .map(|&a| {
                            let art = env.article(i, a);
                            match &art.label {
                                Some(l) => ArticleSpec::Opaque(l.clone()),
                                None => ArticleSpec::Subset(env.states.set_labels(&art.members)),
                            }
                        })
                        .collect();
                    (env.states.label(s).to_string(), specs)
                })
                .collect();
            ((i + 1).to_string(), per_state)
        })
        .collect();

    let scf: BTreeMap<String, String> = env
        .states
        .ids()
        .map(|s| {
            (
                env.states.label(s).to_string(),
                env.outcomes[env.scf.outcome(s).0].clone(),
            )
        })
        .collect();

    let (costs, cost_bound) = match &env.costs {
        None => (None, None),
        Some(table) => {
            let mut out: BTreeMap<String, BTreeMap<String, BTreeMap<String, String>>> =
                BTreeMap::new();
            for i in env.agent_ids() {
                for a in env.evidence[i].universe() {
                    for s in env.states.ids() {
                        let endowed = env.evidence[i].has_at(a, s);
                        let c = table.cost(i, a, s);
                        let default = if endowed { Cost::zero() } else { Cost::Infinite };
                        if *c != default {
                            out.entry((i + 1).to_string())
                                .or_default()
                                .entry(env.article(i, a).name(&env.states))
                                .or_default()
                                .insert(env.states.label(s).to_string(), c.to_string());
                        }
                    }
                }
            }
            (
                if out.is_empty() { None } else { Some(out) },
                Some(format_q(&table.bound)),
            )
        }
    };

    let file = EnvFile {
        states: env.states.labels().to_vec(),
        agents: env.agents,
        outcomes: env.outcomes.clone(),
        evidence,
        scf,
        costs,
        cost_bound,
    };
    let mut text = serde_json::to_string_pretty(&file).expect("environment serializes");
    text.push('\n');
    text
}

/// Mechanism description for `synthesize -o mech.json`: variant tag,
/// solved parameters, and optionally the full evaluated table.
pub fn mechanism_json(env: &Environment, mech: &Mechanism, extensional: bool) -> serde_json::Value {
    let parameters = match mech {
        Mechanism::Hard(m) => json!({
            "refutation": format_q(&m.scale.refutation),
            "unsupported": format_q(&m.scale.unsupported),
            "disagreement": format_q(&m.scale.disagreement),
            "cardinality": format_q(&m.scale.cardinality),
            "balanced": m.balanced,
        }),
        Mechanism::Staged(m) => json!({
            "rounds": m.params.rounds,
            "epsilon": format_q(&m.params.epsilon),
            "alpha": format_q(&m.params.alpha),
            "beta": format_q(&m.params.beta),
            "gamma": format_q(&m.params.gamma),
            "transfer_bound": format_q(&m.params.delta_bar),
        }),
        Mechanism::CostRobust(m) => json!({
            "t1": format_q(&m.params.t1),
            "t2": format_q(&m.params.t2),
            "t3": format_q(&m.params.t3),
            "t4": format_q(&m.params.t4),
            "epsilon": format_q(&m.params.epsilon),
            "cost_bound": format_q(&m.params.cost_bound),
        }),
        Mechanism::Challenge(m) => challenge_params(env, &m.tables),
        Mechanism::MultiChallenge(m) => challenge_params(env, &m.tables),
        Mechanism::EmStar(m) => json!({
            "max_cheapest_cardinality": m.n_max,
            "min_cost_gap": m.gamma_gap.to_string(),
            "eps_reward": format_q(&m.eps_reward),
            "challenge_reward": format_q(&m.reward),
            "noncheapest_fine": format_q(&m.noncheapest_fine),
        }),
        Mechanism::Rp(_) => json!({
            "unsupported_fine": "1",
            "refuted_fine": "2",
        }),
    };

    let mut value = json!({
        "variant": mech.tag(),
        "parameters": parameters,
    });

    if extensional {
        let mut rows = Vec::new();
        let n_states = env.n_states();
        let universes: Vec<Vec<crate::mech::Message>> = env
            .agent_ids()
            .map(|i| {
                let mut msgs = Vec::new();
                for claim in env.states.ids() {
                    for article in env.evidence[i].universe() {
                        let base = crate::mech::DirectMessage { claim, article };
                        match mech.staged_rounds() {
                            None => msgs.push(crate::mech::Message::Direct(base)),
                            Some(k) => {
                                for rounds in all_chains(n_states, k + 1) {
                                    msgs.push(crate::mech::Message::Staged(
                                        crate::mech::StagedMessage { base, rounds },
                                    ));
                                }
                            }
                        }
                    }
                }
                msgs
            })
            .collect();
        let mut digits = vec![0usize; env.agents];
        'table: loop {
            let profile: Vec<crate::mech::Message> = digits
                .iter()
                .enumerate()
                .map(|(i, &d)| universes[i][d].clone())
                .collect();
            let eval = mech.evaluate(env, &profile).expect("universe profile");
            rows.push(json!({
                "profile": profile
                    .iter()
                    .enumerate()
                    .map(|(i, m)| m.label(env, i))
                    .collect::<Vec<_>>(),
                "outcome": outcome_label(env, &eval.outcome),
                "transfers": eval.transfers.iter().map(format_q).collect::<Vec<_>>(),
            }));
            let mut k = env.agents;
            loop {
                if k == 0 {
                    break 'table;
                }
                k -= 1;
                if digits[k] + 1 < universes[k].len() {
                    digits[k] += 1;
                    break;
                }
                digits[k] = 0;
            }
        }
        value["extensional"] = serde_json::Value::Array(rows);
    }
    value
}

fn all_chains(n: usize, len: usize) -> Vec<Vec<crate::states::StateId>> {
    let mut out = Vec::new();
    let mut chain = vec![crate::states::StateId(0); len];
    loop {
        out.push(chain.clone());
        let mut k = len;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if chain[k].0 + 1 < n {
                chain[k] = crate::states::StateId(chain[k].0 + 1);
                break;
            }
            chain[k] = crate::states::StateId(0);
        }
    }
}

fn challenge_params(env: &Environment, tables: &crate::variation::ChallengeTables) -> serde_json::Value {
    let designation: BTreeMap<String, BTreeMap<String, String>> = env
        .agent_ids()
        .map(|i| {
            (
                (i + 1).to_string(),
                env.states
                    .ids()
                    .map(|s| {
                        (
                            env.states.label(s).to_string(),
                            env.article(i, tables.designation.of(i, s)).name(&env.states),
                        )
                    })
                    .collect(),
            )
        })
        .collect();
    let mut challenges = Vec::new();
    for i in env.agent_ids() {
        for claimed in env.states.ids() {
            for at in env.states.ids() {
                if let Some(e) = &tables.entry[i][claimed.0][at.0] {
                    challenges.push(json!({
                        "agent": i + 1,
                        "claimed": env.states.label(claimed),
                        "at": env.states.label(at),
                        "evidence": env.article(i, e.evidence).name(&env.states),
                        "reward": format_q(&e.reward),
                    }));
                }
            }
        }
    }
    json!({ "designation": designation, "challenges": challenges })
}

pub fn outcome_label(env: &Environment, dist: &crate::mech::OutcomeDist) -> String {
    match dist {
        crate::mech::OutcomeDist::Pure(a) => env.outcomes[a.0].clone(),
        crate::mech::OutcomeDist::Lottery(terms) => {
            let parts: Vec<String> = terms
                .iter()
                .map(|(a, w)| format!("{}:{}", env.outcomes[a.0], format_q(w)))
                .collect();
            format!("lottery[{}]", parts.join(","))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn round_trip_is_byte_identical_on_fixtures() {
        for (name, env) in fixtures::named_fixtures() {
            let text = serialize_environment(&env);
            let parsed = parse_environment(&text).unwrap_or_else(|e| {
                panic!("{name} should parse back: {e}")
            });
            assert_eq!(parsed, env, "{name} round trip");
            assert_eq!(serialize_environment(&parsed), text, "{name} canonical form");
        }
    }

    #[test]
    fn round_trip_on_random_corpus() {
        for env in fixtures::random_corpus(25, 5, &Default::default()) {
            let text = serialize_environment(&env);
            assert_eq!(parse_environment(&text).unwrap(), env);
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = serialize_environment(&fixtures::env_a());
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["surprise"] = serde_json::json!(1);
        assert!(matches!(
            parse_environment(&v.to_string()),
            Err(ParseError::Json(_))
        ));
    }

    #[test]
    fn empty_articles_and_endowments_fail_to_parse() {
        let mut v: serde_json::Value =
            serde_json::from_str(&serialize_environment(&fixtures::env_a())).unwrap();
        v["evidence"]["1"]["s1"] = serde_json::json!([[]]);
        assert!(parse_environment(&v.to_string()).is_err());

        let mut v: serde_json::Value =
            serde_json::from_str(&serialize_environment(&fixtures::env_a())).unwrap();
        v["evidence"]["1"]["s1"] = serde_json::json!([]);
        assert!(matches!(
            parse_environment(&v.to_string()),
            Err(ParseError::Env(EnvError::EmptyEndowment { .. }))
        ));
    }

    #[test]
    fn inconsistent_costs_fail_to_parse() {
        let mut v: serde_json::Value =
            serde_json::from_str(&serialize_environment(&fixtures::env_c())).unwrap();
        v["costs"]["1"]["{s4}"]["s1"] = serde_json::json!("1/2"); // not endowed at s1
        assert!(matches!(
            parse_environment(&v.to_string()),
            Err(ParseError::Schema(_))
        ));
    }

    #[test]
    fn cost_entries_above_the_bound_are_rejected() {
        let mut v: serde_json::Value =
            serde_json::from_str(&serialize_environment(&fixtures::env_c())).unwrap();
        v["costs"]["1"]["{s4}"]["s4"] = serde_json::json!("2");
        assert!(parse_environment(&v.to_string()).is_err());
    }

    #[test]
    fn mechanism_json_carries_variant_and_parameters() {
        let env = fixtures::env_a();
        let mech = crate::variant::synthesize(&env, &crate::variant::VariantRequest::Theorem1)
            .unwrap();
        let v = mechanism_json(&env, &mech, true);
        assert_eq!(v["variant"], "theorem1");
        assert_eq!(v["parameters"]["refutation"], "5");
        // universe profiles: (2 states x 2 articles) x (2 states x 1 article)
        assert_eq!(v["extensional"].as_array().unwrap().len(), 8);
    }
}
