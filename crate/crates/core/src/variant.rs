//! The umbrella mechanism type: one enum over every synthesized variant,
//! with a shared evaluation entry point, message domains, and feasibility.

use crate::costly::CostRobustMechanism;
use crate::env::{ArticleId, Environment};
use crate::hard::{HardMechanism, StagedMechanism};
use crate::mech::{
    check_profile_shape, DirectMessage, Evaluation, MechError, Message, StagedMessage,
    SynthesisError,
};
use crate::rational::{format_q, Q};
use crate::renegotiation::RpMechanism;
use crate::states::StateId;
use crate::variation::{ChallengeMechanism, CheapestSets, EmStarMechanism, MultiChallengeMechanism};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mechanism {
    /// Base large-transfer hard mechanism, or its budget-balanced
    /// modification when the inner flag is set.
    Hard(HardMechanism),
    /// Small-transfer staged mechanism.
    Staged(StagedMechanism),
    /// Cost-robust mechanism (hard rule shapes, solved scales, costly play).
    CostRobust(CostRobustMechanism),
    /// Two-agent challenge mechanism under cost variation.
    Challenge(ChallengeMechanism),
    /// Multi-agent challenge mechanism.
    MultiChallenge(MultiChallengeMechanism),
    /// Cheapest-evidence reward mechanism (mixed-strategy costly setting).
    EmStar(EmStarMechanism),
    /// Renegotiation-proof balanced two-transfer mechanism.
    Rp(RpMechanism),
}

/// What to synthesize, with variant-specific parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VariantRequest {
    Theorem1,
    Balanced,
    Small { delta_bar: Q },
    SmallTruncated { rounds: usize },
    Theorem3 { epsilon: Q },
    Theorem4,
    Theorem4Multi,
    EmStar { eps_reward: Q },
    Rp,
}

pub const DEFAULT_K_MAX: usize = 1_000_000;

impl VariantRequest {
    /// Parses a variant tag: `theorem1`, `balanced`, `small:<dbar>`,
    /// `small-trunc:<rounds>`, `theorem3[:<eps>]`, `theorem4`,
    /// `theorem4multi`, `emstar:<eps>`, `rp`.
    pub fn parse(spec: &str) -> Result<VariantRequest, String> {
        let q = |s: &str| crate::rational::parse_q(s).map_err(|e| e.to_string());
        Ok(match spec {
            "theorem1" => VariantRequest::Theorem1,
            "balanced" => VariantRequest::Balanced,
            "theorem3" => VariantRequest::Theorem3 { epsilon: crate::rational::q(1, 2) },
            "theorem4" => VariantRequest::Theorem4,
            "theorem4multi" => VariantRequest::Theorem4Multi,
            "rp" => VariantRequest::Rp,
            _ => {
                if let Some(rest) = spec.strip_prefix("small-trunc:") {
                    VariantRequest::SmallTruncated {
                        rounds: rest.parse::<usize>().map_err(|e| e.to_string())?,
                    }
                } else if let Some(rest) = spec.strip_prefix("small:") {
                    VariantRequest::Small { delta_bar: q(rest)? }
                } else if let Some(rest) = spec.strip_prefix("theorem3:") {
                    VariantRequest::Theorem3 { epsilon: q(rest)? }
                } else if let Some(rest) = spec.strip_prefix("emstar:") {
                    VariantRequest::EmStar { eps_reward: q(rest)? }
                } else {
                    return Err(format!("unknown variant {spec:?}"));
                }
            }
        })
    }
}

pub fn synthesize(env: &Environment, request: &VariantRequest) -> Result<Mechanism, SynthesisError> {
    Ok(match request {
        VariantRequest::Theorem1 => Mechanism::Hard(crate::hard::synthesize_base(env)?),
        VariantRequest::Balanced => Mechanism::Hard(crate::hard::synthesize_balanced(env)?),
        VariantRequest::Small { delta_bar } => {
            Mechanism::Staged(crate::hard::synthesize_small(env, delta_bar, DEFAULT_K_MAX)?)
        }
        VariantRequest::SmallTruncated { rounds } => {
            Mechanism::Staged(crate::hard::synthesize_small_truncated(env, *rounds)?)
        }
        VariantRequest::Theorem3 { epsilon } => {
            Mechanism::CostRobust(crate::costly::synthesize_cost_robust(env, epsilon)?)
        }
        VariantRequest::Theorem4 => {
            Mechanism::Challenge(crate::variation::synthesize_challenge(env)?)
        }
        VariantRequest::Theorem4Multi => {
            Mechanism::MultiChallenge(crate::variation::synthesize_multi_challenge(env)?)
        }
        VariantRequest::EmStar { eps_reward } => {
            Mechanism::EmStar(crate::variation::synthesize_em_star(env, eps_reward)?)
        }
        VariantRequest::Rp => Mechanism::Rp(crate::renegotiation::synthesize_rp(env)?),
    })
}

/// Builds the requested rules without the synthesis gates (measurability,
/// normality, evidence monotonicity, pairwise conditions). Diagnostic only:
/// the point is to watch verification fail on environments the gates refuse.
pub fn synthesize_unchecked(
    env: &Environment,
    request: &VariantRequest,
) -> Result<Mechanism, SynthesisError> {
    use crate::hard::{base_rules_unchecked, SmallTransferParams, StagedMechanism};
    use crate::mech::TightTable;
    Ok(match request {
        VariantRequest::Theorem1 => Mechanism::Hard(base_rules_unchecked(env)),
        VariantRequest::Balanced => {
            let mut m = base_rules_unchecked(env);
            m.balanced = true;
            Mechanism::Hard(m)
        }
        VariantRequest::Small { delta_bar } => {
            let params = SmallTransferParams::solve(delta_bar, env.agents, DEFAULT_K_MAX)?;
            Mechanism::Staged(StagedMechanism::new(env, params))
        }
        VariantRequest::SmallTruncated { rounds } => {
            let params = SmallTransferParams::with_rounds(*rounds, env.agents)?;
            Mechanism::Staged(StagedMechanism::new(env, params))
        }
        VariantRequest::Theorem3 { epsilon } => {
            let table = env.costs.as_ref().ok_or(SynthesisError::NoCostTable)?;
            let params = crate::costly::solve_robust_params(
                &table.bound,
                env.n_states(),
                env.agents,
                epsilon,
            )?;
            Mechanism::CostRobust(crate::costly::CostRobustMechanism {
                inner: crate::hard::HardMechanism {
                    scale: params.scale(),
                    tight: TightTable::build(env),
                    balanced: false,
                },
                params,
            })
        }
        VariantRequest::Theorem4 => {
            let cheapest = crate::variation::cheapest_sets(env)?;
            let tables =
                crate::variation::ChallengeTables::build(env, cheapest.default_designation())?;
            Mechanism::Challenge(crate::variation::ChallengeMechanism { tables })
        }
        VariantRequest::Theorem4Multi => {
            let cheapest = crate::variation::cheapest_sets(env)?;
            let tables =
                crate::variation::ChallengeTables::build(env, cheapest.default_designation())?;
            Mechanism::MultiChallenge(crate::variation::MultiChallengeMechanism { tables })
        }
        VariantRequest::EmStar { eps_reward } => {
            let cheapest = crate::variation::cheapest_sets(env)?;
            let n_max = cheapest.max_cardinality();
            let gamma_gap = cheapest.min_gap(env);
            let capped = match &gamma_gap {
                crate::rational::Cost::Finite(g) => std::cmp::min(g.clone(), eps_reward.clone()),
                crate::rational::Cost::Infinite => eps_reward.clone(),
            };
            let reward = capped / crate::rational::qi(2 * env.agents as i64);
            Mechanism::EmStar(crate::variation::EmStarMechanism {
                cheapest,
                n_max,
                gamma_gap,
                eps_reward: eps_reward.clone(),
                reward,
                noncheapest_fine: crate::rational::qi(2 * n_max as i64 * env.agents as i64),
            })
        }
        VariantRequest::Rp => Mechanism::Rp(crate::renegotiation::RpMechanism {
            tight: TightTable::build(env),
        }),
    })
}

impl Mechanism {
    pub fn tag(&self) -> String {
        match self {
            Mechanism::Hard(m) if m.balanced => "balanced".into(),
            Mechanism::Hard(_) => "theorem1".into(),
            Mechanism::Staged(m) => format!("small:{}", format_q(&m.params.delta_bar)),
            Mechanism::CostRobust(_) => "theorem3".into(),
            Mechanism::Challenge(_) => "theorem4".into(),
            Mechanism::MultiChallenge(_) => "theorem4multi".into(),
            Mechanism::EmStar(m) => format!("emstar:{}", format_q(&m.eps_reward)),
            Mechanism::Rp(_) => "rp".into(),
        }
    }

    /// Costly variants: articles are feasible when affordable at the true
    /// state, and the induced game deducts presentation costs from payoffs.
    pub fn costly(&self) -> bool {
        matches!(
            self,
            Mechanism::CostRobust(_)
                | Mechanism::Challenge(_)
                | Mechanism::MultiChallenge(_)
                | Mechanism::EmStar(_)
        )
    }

    /// Cost-variation implementation additionally requires on-path evidence
    /// to come from the cheapest sets at the true state.
    pub fn cheapest_on_path(&self) -> Option<&CheapestSets> {
        match self {
            Mechanism::Challenge(m) => Some(&m.tables.cheapest),
            Mechanism::MultiChallenge(m) => Some(&m.tables.cheapest),
            Mechanism::EmStar(m) => Some(&m.cheapest),
            _ => None,
        }
    }

    pub fn staged_rounds(&self) -> Option<usize> {
        match self {
            Mechanism::Staged(m) => Some(m.params.rounds),
            _ => None,
        }
    }

    pub fn evaluate(&self, env: &Environment, profile: &[Message]) -> Result<Evaluation, MechError> {
        match self {
            Mechanism::Staged(m) => crate::hard::evaluate_staged_profile(m, env, profile),
            _ => {
                check_profile_shape(env, profile)?;
                let bases: Vec<DirectMessage> = profile.iter().map(|m| *m.direct()).collect();
                Ok(self.evaluate_bases(env, &bases))
            }
        }
    }

    /// Direct-message evaluation for every non-staged variant.
    pub fn evaluate_bases(&self, env: &Environment, bases: &[DirectMessage]) -> Evaluation {
        match self {
            Mechanism::Hard(m) => m.evaluate_direct(env, bases),
            Mechanism::CostRobust(m) => m.inner.evaluate_direct(env, bases),
            Mechanism::Challenge(m) => m.evaluate_direct(env, bases),
            Mechanism::MultiChallenge(m) => m.evaluate_direct(env, bases),
            Mechanism::EmStar(m) => m.evaluate_direct(env, bases),
            Mechanism::Rp(m) => m.evaluate_direct(env, bases),
            Mechanism::Staged(_) => unreachable!("staged profiles carry round reports"),
        }
    }

    fn feasible_articles(&self, env: &Environment, agent: usize, state: StateId) -> Vec<ArticleId> {
        if self.costly() {
            env.evidence[agent]
                .universe()
                .filter(|&a| env.cost(agent, a, state).is_finite())
                .collect()
        } else {
            env.evidence[agent].endowed_at(state).to_vec()
        }
    }

    /// Number of feasible messages per agent at the true state, without
    /// enumerating them.
    pub fn feasible_counts(&self, env: &Environment, state: StateId) -> Vec<u128> {
        let rounds = self.staged_rounds();
        env.agent_ids()
            .map(|i| {
                let arts = self.feasible_articles(env, i, state).len() as u128;
                let claims = env.n_states() as u128;
                let chain = match rounds {
                    Some(k) => (env.n_states() as u128)
                        .checked_pow(k as u32 + 1)
                        .unwrap_or(u128::MAX),
                    None => 1,
                };
                claims.saturating_mul(arts).saturating_mul(chain)
            })
            .collect()
    }

    /// Feasible message list for one agent at the true state: every state
    /// claim, the articles held (affordable) there, and, for the staged
    /// mechanism, every chain of round reports.
    pub fn feasible_messages(
        &self,
        env: &Environment,
        agent: usize,
        state: StateId,
    ) -> Vec<Message> {
        let articles = self.feasible_articles(env, agent, state);
        let mut out = Vec::new();
        for claim in env.states.ids() {
            for &article in &articles {
                let base = DirectMessage { claim, article };
                match self.staged_rounds() {
                    None => out.push(Message::Direct(base)),
                    Some(k) => {
                        for rounds in state_chains(env.n_states(), k + 1) {
                            out.push(Message::Staged(StagedMessage {
                                base,
                                rounds,
                            }));
                        }
                    }
                }
            }
        }
        out
    }
}

/// All chains of `len` state ids over `n` states, lexicographic.
fn state_chains(n: usize, len: usize) -> Vec<Vec<StateId>> {
    let mut out = Vec::with_capacity(n.pow(len as u32));
    let mut chain = vec![StateId(0); len];
    loop {
        out.push(chain.clone());
        let mut k = len;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if chain[k].0 + 1 < n {
                chain[k] = StateId(chain[k].0 + 1);
                break;
            }
            chain[k] = StateId(0);
        }
    }
}
