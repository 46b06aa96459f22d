//! Hard-evidence mechanisms: the base large-transfer direct mechanism, its
//! budget-balanced modification (three or more agents), and the staged
//! small-transfer augmentation.
//!
//! All three share the same four rule shapes:
//!   refutation    — an agent whose claim is refuted pays the refuter;
//!   unsupported   — an agent is fined when his claim is not supported by
//!                   everyone's evidence;
//!   disagreement  — an agent is fined per peer whose claim implies a
//!                   different tightest article for him;
//!   cardinality   — when any claim is unsupported, every agent is fined in
//!                   proportion to the size of the event he presented.

use crate::env::Environment;
use crate::mech::{
    check_profile_shape, DirectMessage, Evaluation, Message, OutcomeDist, SynthesisError,
    TightTable,
};
use crate::rational::{q, qi, Q};
use crate::states::StateId;
use num_traits::{One, Signed, Zero};

/// Magnitudes of the four rules. The base mechanism uses
/// `(2I+1, I, 1, 1)`; the cost-robust variant substitutes its solved scales.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PenaltyScale {
    pub refutation: Q,
    pub unsupported: Q,
    pub disagreement: Q,
    pub cardinality: Q,
}

impl PenaltyScale {
    pub fn base(agents: usize) -> PenaltyScale {
        PenaltyScale {
            refutation: qi(2 * agents as i64 + 1),
            unsupported: qi(agents as i64),
            disagreement: Q::one(),
            cardinality: Q::one(),
        }
    }

    /// Largest total transfer magnitude any agent can face under these
    /// scales (every fine active at once plus every refutation reward).
    pub fn max_total(&self, agents: usize) -> Q {
        let peers = qi(agents as i64 - 1);
        &peers * &self.refutation
            + &self.unsupported
            + &peers * &self.disagreement
            + &self.cardinality
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardMechanism {
    pub scale: PenaltyScale,
    pub tight: TightTable,
    /// Redistribute every fine so transfers sum to zero (needs I >= 3).
    pub balanced: bool,
}

pub(crate) struct HardFacts {
    /// claim of agent i is supported by every agent's presented article
    pub claim_supported: Vec<bool>,
    pub any_unsupported: bool,
}

impl HardMechanism {
    pub(crate) fn facts(&self, env: &Environment, profile: &[DirectMessage]) -> HardFacts {
        let claim_supported: Vec<bool> = profile
            .iter()
            .map(|mi| {
                profile
                    .iter()
                    .enumerate()
                    .all(|(j, mj)| self.tight.supports(env, j, mj.article, mi.claim))
            })
            .collect();
        let any_unsupported = claim_supported.iter().any(|s| !s);
        HardFacts { claim_supported, any_unsupported }
    }

    pub fn evaluate_direct(&self, env: &Environment, profile: &[DirectMessage]) -> Evaluation {
        let n = env.agents;
        let facts = self.facts(env, profile);
        let zero = vec![Q::zero(); n];

        let mut refutation = zero.clone();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let i_refutes_j =
                    !env.article(i, profile[i].article).members.contains(profile[j].claim);
                let j_refutes_i =
                    !env.article(j, profile[j].article).members.contains(profile[i].claim);
                if i_refutes_j && !j_refutes_i {
                    refutation[i] += &self.scale.refutation;
                } else if j_refutes_i && !i_refutes_j {
                    refutation[i] -= &self.scale.refutation;
                }
            }
        }

        let mut unsupported = zero.clone();
        let mut unsupported_rebate = zero.clone();
        for i in 0..n {
            if !facts.claim_supported[i] {
                unsupported[i] -= &self.scale.unsupported;
                if self.balanced {
                    let supporters: Vec<usize> = (0..n)
                        .filter(|&j| {
                            j != i
                                && self.tight.supports(
                                    env,
                                    j,
                                    profile[j].article,
                                    profile[i].claim,
                                )
                        })
                        .collect();
                    let recipients: Vec<usize> = if supporters.is_empty() {
                        (0..n).filter(|&j| j != i).collect()
                    } else {
                        supporters
                    };
                    let share =
                        &self.scale.unsupported / qi(recipients.len() as i64);
                    for j in recipients {
                        unsupported_rebate[j] += &share;
                    }
                }
            }
        }

        let mut disagreement = zero.clone();
        let mut disagreement_rebate = zero.clone();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                if self.tight.mask[i][profile[i].claim.0] != self.tight.mask[i][profile[j].claim.0]
                {
                    disagreement[i] -= &self.scale.disagreement;
                    if self.balanced {
                        let share = &self.scale.disagreement / qi(n as i64 - 1);
                        for k in (0..n).filter(|&k| k != i) {
                            disagreement_rebate[k] += &share;
                        }
                    }
                }
            }
        }

        let mut cardinality = zero.clone();
        let mut cardinality_rebate = zero.clone();
        if facts.any_unsupported {
            let mut pot = Q::zero();
            for i in 0..n {
                let size = qi(env.article(i, profile[i].article).members.len() as i64);
                let fine = &self.scale.cardinality * &size / qi(env.n_states() as i64);
                cardinality[i] -= &fine;
                pot += fine;
            }
            if self.balanced {
                let unsupported_claimants: Vec<usize> =
                    (0..n).filter(|&i| !facts.claim_supported[i]).collect();
                let share = &pot / qi(unsupported_claimants.len() as i64);
                for i in unsupported_claimants {
                    cardinality_rebate[i] += &share;
                }
            }
        }

        let outcome = OutcomeDist::Pure(env.scf.outcome(profile[0].claim));
        let mut components = vec![
            ("refutation", refutation),
            ("unsupported", unsupported),
            ("disagreement", disagreement),
            ("cardinality", cardinality),
        ];
        if self.balanced {
            components.push(("unsupported_rebate", unsupported_rebate));
            components.push(("disagreement_rebate", disagreement_rebate));
            components.push(("cardinality_rebate", cardinality_rebate));
        }
        Evaluation::from_components(outcome, n, components)
    }
}

/// Shared synthesis gate: axioms, normality, measurability.
pub fn gate_hard(env: &Environment) -> Result<(), SynthesisError> {
    if !crate::env::validate_structure(env).is_clean() {
        return Err(SynthesisError::AxiomsViolated);
    }
    if let Some((agent, state)) = env.normality_witness() {
        return Err(SynthesisError::NotNormal {
            agent: agent + 1,
            state: env.states.label(state).to_string(),
        });
    }
    if let Some((s, t)) = env.measurability_witness() {
        return Err(SynthesisError::NotMeasurable(
            env.states.label(s).to_string(),
            env.states.label(t).to_string(),
        ));
    }
    Ok(())
}

pub fn synthesize_base(env: &Environment) -> Result<HardMechanism, SynthesisError> {
    gate_hard(env)?;
    Ok(base_rules_unchecked(env))
}

/// The base rules without the measurability/normality gate. Used for
/// negative controls (showing verification fail on non-measurable inputs).
pub fn base_rules_unchecked(env: &Environment) -> HardMechanism {
    HardMechanism {
        scale: PenaltyScale::base(env.agents),
        tight: TightTable::build(env),
        balanced: false,
    }
}

pub fn synthesize_balanced(env: &Environment) -> Result<HardMechanism, SynthesisError> {
    if env.agents < 3 {
        return Err(SynthesisError::TooFewAgents { need: 3, got: env.agents });
    }
    gate_hard(env)?;
    Ok(HardMechanism {
        scale: PenaltyScale::base(env.agents),
        tight: TightTable::build(env),
        balanced: true,
    })
}

/// Parameters of the staged small-transfer mechanism: `K` agreement rounds,
/// base transfers scaled by `epsilon`, and the three agreement fines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmallTransferParams {
    pub rounds: usize,
    pub epsilon: Q,
    pub alpha: Q,
    pub beta: Q,
    pub gamma: Q,
    pub delta_bar: Q,
}

impl SmallTransferParams {
    /// Constructive parameter recipe: with `delta = delta_bar / 2`, take
    /// `gamma = delta/(3K)`, `beta = 1/K + delta_bar/(3K)`, `alpha = delta/3`,
    /// and the smallest `K` making `alpha > beta`. The total of the staged
    /// fines then stays strictly below `delta_bar`, and `epsilon` is sized so
    /// the scaled base transfers fit in the remaining slack.
    pub fn solve(delta_bar: &Q, agents: usize, k_max: usize) -> Result<Self, SynthesisError> {
        if delta_bar <= &Q::zero() {
            return Err(SynthesisError::BadEpsilon);
        }
        let delta = delta_bar / qi(2);
        // smallest integer K with K > (3 + delta_bar) / delta
        let threshold = (qi(3) + delta_bar) / &delta;
        let k: num_bigint::BigInt = threshold.floor().to_integer() + 1;
        let k: usize = match k.try_into() {
            Ok(v) => v,
            Err(_) => return Err(SynthesisError::InfeasibleBound { cap: k_max }),
        };
        if k > k_max {
            return Err(SynthesisError::InfeasibleBound { cap: k_max });
        }
        Self::with_rounds_and_bound(k, delta_bar.clone(), agents)
    }

    /// Fixes the round count and picks a feasible transfer bound for it
    /// (used to keep acceptance-scale message spaces small).
    pub fn with_rounds(k: usize, agents: usize) -> Result<Self, SynthesisError> {
        if k < 3 {
            return Err(SynthesisError::InfeasibleBound { cap: k });
        }
        let delta_bar = qi(6) / qi(k as i64 - 2) + Q::one();
        Self::with_rounds_and_bound(k, delta_bar, agents)
    }

    fn with_rounds_and_bound(
        k: usize,
        delta_bar: Q,
        agents: usize,
    ) -> Result<Self, SynthesisError> {
        let delta = &delta_bar / qi(2);
        let kq = qi(k as i64);
        let gamma = &delta / (qi(3) * &kq);
        let beta = Q::one() / &kq + &delta_bar / (qi(3) * &kq);
        let alpha = &delta / qi(3);
        let staged_total = &alpha + &beta + &kq * &gamma;
        if !(gamma > Q::zero() && beta > Q::one() / &kq + &gamma && alpha > beta) {
            return Err(SynthesisError::InfeasibleBound { cap: k });
        }
        let slack = &delta_bar - &staged_total;
        debug_assert!(slack > Q::zero());
        let base_max = PenaltyScale::base(agents).max_total(agents);
        let epsilon = std::cmp::min(q(1, 2), slack / (qi(2) * base_max));
        Ok(SmallTransferParams { rounds: k, epsilon, alpha, beta, gamma, delta_bar })
    }

    /// The four recipe inequalities, exact.
    pub fn invariants_hold(&self) -> bool {
        let kq = qi(self.rounds as i64);
        self.gamma > Q::zero()
            && self.beta > Q::one() / &kq + &self.gamma
            && self.alpha > self.beta
            && &self.alpha + &self.beta + &kq * &self.gamma < self.delta_bar
    }

    /// Worst-case total transfer magnitude to one agent, scaled base rules
    /// included.
    pub fn transfer_ceiling(&self, agents: usize) -> Q {
        &self.epsilon * PenaltyScale::base(agents).max_total(agents)
            + &self.alpha
            + &self.beta
            + qi(self.rounds as i64) * &self.gamma
    }
}

/// Staged mechanism: the base mechanism scaled down by `epsilon`, plus
/// `K + 1` extra per-agent state reports that must echo a unanimous truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StagedMechanism {
    pub params: SmallTransferParams,
    pub inner: HardMechanism,
    /// state -> representative of its evidence-equivalence class
    class_rep: Vec<usize>,
}

impl StagedMechanism {
    pub fn new(env: &Environment, params: SmallTransferParams) -> StagedMechanism {
        let mut class_rep = vec![usize::MAX; env.n_states()];
        for class in env.equivalent_states() {
            let rep = class[0].0;
            for s in class {
                class_rep[s.0] = rep;
            }
        }
        StagedMechanism { params, inner: base_rules_unchecked(env), class_rep }
    }

    fn same_class(&self, a: StateId, b: StateId) -> bool {
        self.class_rep[a.0] == self.class_rep[b.0]
    }

    /// Outcome of one agreement round: the social outcome of a state at
    /// least `I - 1` agents named, otherwise the uniform filler lottery.
    fn round_outcome(&self, env: &Environment, reports: &[StateId]) -> OutcomeDist {
        let n = reports.len();
        let mut votes = vec![0usize; env.n_states()];
        for r in reports {
            votes[r.0] += 1;
        }
        let winner = (0..env.n_states())
            .filter(|&s| votes[s] + 1 >= n) // votes >= I - 1
            .max_by_key(|&s| (votes[s], std::cmp::Reverse(s)));
        match winner {
            Some(s) => OutcomeDist::Pure(env.scf.outcome(StateId(s))),
            None => OutcomeDist::uniform(env.n_outcomes()),
        }
    }

    pub fn evaluate_staged(
        &self,
        env: &Environment,
        profile: &[crate::mech::StagedMessage],
    ) -> Evaluation {
        let n = env.agents;
        let k = self.params.rounds;
        debug_assert!(profile.iter().all(|m| m.rounds.len() == k + 1));

        let bases: Vec<DirectMessage> = profile.iter().map(|m| m.base).collect();
        let base_eval = self.inner.evaluate_direct(env, &bases);

        let eps = &self.params.epsilon;
        let mut components: Vec<(&'static str, Vec<Q>)> = base_eval
            .components
            .into_iter()
            .map(|(rule, vals)| (rule, vals.into_iter().map(|v| eps * v).collect()))
            .collect();

        // outcome: eps * base + (1-eps)/K * sum of round outcomes
        let mut parts = vec![(eps.clone(), base_eval.outcome)];
        let share = (Q::one() - eps) / qi(k as i64);
        for r in 1..=k {
            let reports: Vec<StateId> = profile.iter().map(|m| m.rounds[r]).collect();
            parts.push((share.clone(), self.round_outcome(env, &reports)));
        }
        let outcome = OutcomeDist::scaled_mix(parts);

        // chain mismatch: agent i's first report vs agent i+1's base claim
        // (equivalence, not equality; the agent index wraps cyclically)
        let mut chain = vec![Q::zero(); n];
        for i in 0..n {
            let next = (i + 1) % n;
            if !self.same_class(profile[i].rounds[0], profile[next].base.claim) {
                chain[i] -= &self.params.alpha;
            }
        }
        components.push(("chain_mismatch", chain));

        // first deviation from a unanimous first report: the lone fine goes
        // to the earliest deviating round, lowest agent index
        let mut first_dev = vec![Q::zero(); n];
        let unanimous = profile
            .iter()
            .all(|m| m.rounds[0] == profile[0].rounds[0])
            .then(|| profile[0].rounds[0]);
        if let Some(s) = unanimous {
            'rounds: for r in 1..=k {
                for (i, m) in profile.iter().enumerate() {
                    if m.rounds[r] != s {
                        first_dev[i] -= &self.params.beta;
                        break 'rounds;
                    }
                }
            }
        }
        components.push(("first_deviation", first_dev));

        // lone deviation from an otherwise-unanimous round, fined per round
        let mut lone = vec![Q::zero(); n];
        for r in 1..=k {
            for i in 0..n {
                let mut others = (0..n).filter(|&j| j != i);
                let Some(j0) = others.next() else { continue };
                let s = profile[j0].rounds[r];
                if profile[i].rounds[r] != s && others.all(|j| profile[j].rounds[r] == s) {
                    lone[i] -= &self.params.gamma;
                }
            }
        }
        components.push(("lone_deviation", lone));

        Evaluation::from_components(outcome, n, components)
    }
}

pub fn synthesize_small(
    env: &Environment,
    delta_bar: &Q,
    k_max: usize,
) -> Result<StagedMechanism, SynthesisError> {
    if env.agents < 3 {
        return Err(SynthesisError::TooFewAgents { need: 3, got: env.agents });
    }
    gate_hard(env)?;
    let params = SmallTransferParams::solve(delta_bar, env.agents, k_max)?;
    Ok(StagedMechanism::new(env, params))
}

/// Small-transfer mechanism truncated to `k` rounds with a bound re-solved
/// for that truncation; keeps induced games at desk scale.
pub fn synthesize_small_truncated(
    env: &Environment,
    k: usize,
) -> Result<StagedMechanism, SynthesisError> {
    if env.agents < 3 {
        return Err(SynthesisError::TooFewAgents { need: 3, got: env.agents });
    }
    gate_hard(env)?;
    let params = SmallTransferParams::with_rounds(k, env.agents)?;
    Ok(StagedMechanism::new(env, params))
}

/// Truthful profile with every agent presenting the designated tightest
/// article (and, in the staged mechanism, echoing the truth in every round).
pub fn truthful_profile(
    env: &Environment,
    tight: &TightTable,
    true_state: StateId,
    rounds: Option<usize>,
) -> Vec<Message> {
    env.agent_ids()
        .map(|i| {
            let article = tight.article[i][true_state.0]
                .expect("truthful profile requires normality");
            let base = DirectMessage { claim: true_state, article };
            match rounds {
                None => Message::Direct(base),
                Some(k) => Message::Staged(crate::mech::StagedMessage {
                    base,
                    rounds: vec![true_state; k + 1],
                }),
            }
        })
        .collect()
}

/// Evaluation entry point shared by the umbrella enum.
pub fn evaluate_hard_profile(
    mech: &HardMechanism,
    env: &Environment,
    profile: &[Message],
) -> Result<Evaluation, crate::mech::MechError> {
    check_profile_shape(env, profile)?;
    let bases: Vec<DirectMessage> = profile.iter().map(|m| *m.direct()).collect();
    Ok(mech.evaluate_direct(env, &bases))
}

pub fn evaluate_staged_profile(
    mech: &StagedMechanism,
    env: &Environment,
    profile: &[Message],
) -> Result<Evaluation, crate::mech::MechError> {
    check_profile_shape(env, profile)?;
    let mut staged = Vec::with_capacity(profile.len());
    for (i, m) in profile.iter().enumerate() {
        match m {
            Message::Staged(sm) if sm.rounds.len() == mech.params.rounds + 1 => {
                staged.push(sm.clone())
            }
            _ => {
                return Err(crate::mech::MechError::MessageOutOfDomain {
                    agent: i + 1,
                    reason: format!(
                        "staged mechanism expects {} round reports",
                        mech.params.rounds + 1
                    ),
                })
            }
        }
    }
    Ok(mech.evaluate_staged(env, &staged))
}

/// Check the restated tightening lemma on one profile: replacing an agent's
/// article with any subset of it (same claim) never lowers that agent's
/// transfer.
pub fn tightening_never_hurts(
    mech: &HardMechanism,
    env: &Environment,
    profile: &[DirectMessage],
) -> bool {
    let base = mech.evaluate_direct(env, profile);
    for i in env.agent_ids() {
        let held = env.article(i, profile[i].article).members;
        for a in env.evidence[i].universe() {
            if !env.article(i, a).members.is_subset_of(&held) {
                continue;
            }
            let mut alt = profile.to_vec();
            alt[i].article = a;
            let eval = mech.evaluate_direct(env, &alt);
            if eval.transfers[i] < base.transfers[i] {
                return false;
            }
        }
    }
    true
}

pub fn is_zero_vector(v: &[Q]) -> bool {
    v.iter().all(|x| x.is_zero())
}

pub fn budget_is_balanced(eval: &Evaluation) -> bool {
    eval.transfers.iter().fold(Q::zero(), |acc, t| acc + t).is_zero()
}

pub fn transfer_magnitude_total(eval: &Evaluation) -> Q {
    eval.transfers
        .iter()
        .map(|t| t.abs())
        .fold(Q::zero(), |acc, x| std::cmp::max(acc, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mech::{DirectMessage, StagedMessage};
    use crate::rational::q;
    use crate::states::StateId;
    use num_traits::One;

    fn msg(env: &Environment, agent: usize, claim: &str, members: &[&str]) -> DirectMessage {
        let claim = env.states.find(claim).unwrap();
        let target: crate::states::StateSet =
            members.iter().map(|l| env.states.find(l).unwrap()).collect();
        let article = env.evidence[agent]
            .universe()
            .find(|&a| env.article(agent, a).members == target)
            .unwrap();
        DirectMessage { claim, article }
    }

    #[test]
    fn truthful_tight_profile_is_zero_on_truth() {
        let env = fixtures::env_a();
        let mech = synthesize_base(&env).unwrap();
        let s2 = env.states.find("s2").unwrap();
        let profile = vec![msg(&env, 0, "s2", &["s2"]), msg(&env, 1, "s2", &["s1", "s2"])];
        let eval = mech.evaluate_direct(&env, &profile);
        assert_eq!(eval.outcome, crate::mech::OutcomeDist::Pure(env.scf.outcome(s2)));
        assert!(eval.transfers_are_zero());
    }

    #[test]
    fn refutation_pays_two_i_plus_one() {
        let env = fixtures::env_a();
        let mech = synthesize_base(&env).unwrap();
        assert_eq!(mech.scale.refutation, qi(5));
        assert_eq!(mech.scale.unsupported, qi(2));
        assert_eq!(mech.scale.disagreement, Q::one());
    }

    #[test]
    fn worked_refutation_profile_matches_tables() {
        // agent 1 presents {s2}, refuting agent 2's claim s1
        let env = fixtures::env_a();
        let mech = synthesize_base(&env).unwrap();
        let profile = vec![msg(&env, 0, "s2", &["s2"]), msg(&env, 1, "s1", &["s1", "s2"])];
        let eval = mech.evaluate_direct(&env, &profile);
        let refutation = &eval.components.iter().find(|(r, _)| *r == "refutation").unwrap().1;
        assert_eq!(refutation[0], qi(5));
        assert_eq!(refutation[1], qi(-5));
    }

    #[test]
    fn unsupported_profile_activates_cardinality_fines() {
        let env = fixtures::env_a();
        let mech = synthesize_base(&env).unwrap();
        // both claim s2 but agent 1 withholds the tight article
        let profile = vec![
            msg(&env, 0, "s2", &["s1", "s2"]),
            msg(&env, 1, "s2", &["s1", "s2"]),
        ];
        let eval = mech.evaluate_direct(&env, &profile);
        let unsupported = &eval.components.iter().find(|(r, _)| *r == "unsupported").unwrap().1;
        assert_eq!(unsupported[0], qi(-2));
        assert_eq!(unsupported[1], qi(-2));
        let cardinality = &eval.components.iter().find(|(r, _)| *r == "cardinality").unwrap().1;
        assert_eq!(cardinality[0], qi(-1)); // |E| / |S| = 2/2
        assert_eq!(cardinality[1], qi(-1));
    }

    fn all_direct_profiles(env: &Environment) -> Vec<Vec<DirectMessage>> {
        let mut acc: Vec<Vec<DirectMessage>> = vec![vec![]];
        for i in env.agent_ids() {
            let mut next = Vec::new();
            for partial in &acc {
                for claim in env.states.ids() {
                    for article in env.evidence[i].universe() {
                        let mut p = partial.clone();
                        p.push(DirectMessage { claim, article });
                        next.push(p);
                    }
                }
            }
            acc = next;
        }
        acc
    }

    #[test]
    fn refutation_component_is_antisymmetric_pairwise() {
        let env = fixtures::env_a();
        let mech = synthesize_base(&env).unwrap();
        for profile in all_direct_profiles(&env) {
            let eval = mech.evaluate_direct(&env, &profile);
            let refutation =
                &eval.components.iter().find(|(r, _)| *r == "refutation").unwrap().1;
            let total: Q = refutation.iter().fold(Q::zero(), |a, x| a + x);
            assert!(total.is_zero());
        }
    }

    #[test]
    fn tightening_never_lowers_own_transfer() {
        let env = fixtures::env_a();
        let mech = synthesize_base(&env).unwrap();
        for profile in all_direct_profiles(&env) {
            assert!(tightening_never_hurts(&mech, &env, &profile));
        }
        for seed in 0..8 {
            let env = fixtures::random_env(
                seed,
                &fixtures::RandomEnvConfig::normal_measurable(),
            );
            let mech = synthesize_base(&env).unwrap();
            for profile in all_direct_profiles(&env).into_iter().take(800) {
                assert!(tightening_never_hurts(&mech, &env, &profile));
            }
        }
    }

    #[test]
    fn balanced_variant_sums_to_zero_on_every_profile() {
        let env = fixtures::env_3();
        let mech = synthesize_balanced(&env).unwrap();
        for profile in all_direct_profiles(&env) {
            let eval = mech.evaluate_direct(&env, &profile);
            assert!(budget_is_balanced(&eval), "profile {profile:?}");
        }
        let tight = truthful_profile(&env, &mech.tight, StateId(0), None);
        let eval = crate::hard::evaluate_hard_profile(&mech, &env, &tight).unwrap();
        assert!(eval.transfers_are_zero());
    }

    #[test]
    fn unsupported_fine_flows_to_the_sole_supporter() {
        let env = fixtures::env_3();
        let mech = synthesize_balanced(&env).unwrap();
        let profile = vec![
            msg(&env, 0, "s1", &["s1", "s2"]),
            msg(&env, 1, "s2", &["s1", "s2"]),
            msg(&env, 2, "s2", &["s1", "s2"]),
        ];
        let eval = mech.evaluate_direct(&env, &profile);
        let rebate = &eval
            .components
            .iter()
            .find(|(r, _)| *r == "unsupported_rebate")
            .unwrap()
            .1;
        assert_eq!(rebate.clone(), vec![Q::zero(), qi(3), qi(6)]);
    }

    #[test]
    fn balanced_needs_three_agents() {
        let env = fixtures::env_a();
        assert_eq!(
            synthesize_balanced(&env).unwrap_err(),
            SynthesisError::TooFewAgents { need: 3, got: 2 }
        );
    }

    #[test]
    fn small_transfer_recipe_solves_to_63_rounds() {
        let p = SmallTransferParams::solve(&q(1, 10), 3, 1_000_000).unwrap();
        assert_eq!(p.rounds, 63);
        assert_eq!(p.alpha, q(1, 60));
        assert_eq!(p.beta, Q::one() / qi(63) + q(1, 10) / qi(189));
        assert!(p.invariants_hold());
        assert!(p.transfer_ceiling(3) < q(1, 10));
        // 62 rounds would make alpha equal beta, not exceed it
        assert!(SmallTransferParams::with_rounds_and_bound(62, q(1, 10), 3).is_err());
    }

    #[test]
    fn truncated_params_stay_feasible() {
        let p = SmallTransferParams::with_rounds(3, 3).unwrap();
        assert_eq!(p.rounds, 3);
        assert!(p.invariants_hold());
        assert!(p.transfer_ceiling(3) < p.delta_bar);
        assert!(SmallTransferParams::with_rounds(2, 3).is_err());
    }

    #[test]
    fn staged_truthful_profile_collapses_to_the_scf_outcome() {
        let env = fixtures::env_3();
        let mech = synthesize_small_truncated(&env, 3).unwrap();
        let s1 = StateId(0);
        let profile = truthful_profile(&env, &mech.inner.tight, s1, Some(3));
        let eval = evaluate_staged_profile(&mech, &env, &profile).unwrap();
        assert_eq!(eval.outcome.as_pure(), Some(env.scf.outcome(s1)));
        assert!(eval.transfers_are_zero());
    }

    #[test]
    fn staged_fines_trigger_as_specified() {
        let env = fixtures::env_3();
        let mech = synthesize_small_truncated(&env, 3).unwrap();
        let s1 = StateId(0);
        let s2 = StateId(1);
        let tight = |i: usize| mech.inner.tight.article[i][s1.0].unwrap();
        let base = |i: usize| DirectMessage { claim: s1, article: tight(i) };
        // agent 0 breaks the chain: first report disagrees with agent 1's base claim
        let mut rounds0 = vec![s1; 4];
        rounds0[0] = s2;
        let profile = vec![
            Message::Staged(StagedMessage { base: base(0), rounds: rounds0 }),
            Message::Staged(StagedMessage { base: base(1), rounds: vec![s1; 4] }),
            Message::Staged(StagedMessage { base: base(2), rounds: vec![s1; 4] }),
        ];
        let eval = evaluate_staged_profile(&mech, &env, &profile).unwrap();
        let chain = &eval.components.iter().find(|(r, _)| *r == "chain_mismatch").unwrap().1;
        assert_eq!(chain[0], -mech.params.alpha.clone());
        assert!(chain[1].is_zero() && chain[2].is_zero());

        // unanimous first reports, agent 1 deviates alone in round 2:
        // only the first deviation fine plus one lone-deviation fine
        let mut rounds1 = vec![s1; 4];
        rounds1[2] = s2;
        let profile = vec![
            Message::Staged(StagedMessage { base: base(0), rounds: vec![s1; 4] }),
            Message::Staged(StagedMessage { base: base(1), rounds: rounds1 }),
            Message::Staged(StagedMessage { base: base(2), rounds: vec![s1; 4] }),
        ];
        let eval = evaluate_staged_profile(&mech, &env, &profile).unwrap();
        let first = &eval.components.iter().find(|(r, _)| *r == "first_deviation").unwrap().1;
        assert_eq!(first[1], -mech.params.beta.clone());
        let lone = &eval.components.iter().find(|(r, _)| *r == "lone_deviation").unwrap().1;
        assert_eq!(lone[1], -mech.params.gamma.clone());
        // outcome mixes the filler lottery for the broken round; weights sum to one
        if let crate::mech::OutcomeDist::Lottery(terms) = &eval.outcome {
            let total: Q = terms.iter().map(|(_, w)| w.clone()).fold(Q::zero(), |a, x| a + x);
            assert!(total.is_one());
        }
    }

    #[test]
    fn simultaneous_deviants_fine_only_the_lowest_agent_index() {
        let env = fixtures::env_3();
        let mech = synthesize_small_truncated(&env, 3).unwrap();
        let s1 = StateId(0);
        let s2 = StateId(1);
        let tight = |i: usize| mech.inner.tight.article[i][s1.0].unwrap();
        let base = |i: usize| DirectMessage { claim: s1, article: tight(i) };
        let mut rounds = vec![s1; 4];
        rounds[1] = s2;
        let profile = vec![
            Message::Staged(StagedMessage { base: base(0), rounds: vec![s1; 4] }),
            Message::Staged(StagedMessage { base: base(1), rounds: rounds.clone() }),
            Message::Staged(StagedMessage { base: base(2), rounds }),
        ];
        let eval = evaluate_staged_profile(&mech, &env, &profile).unwrap();
        let first = &eval.components.iter().find(|(r, _)| *r == "first_deviation").unwrap().1;
        assert!(first[0].is_zero());
        assert_eq!(first[1], -mech.params.beta.clone());
        assert!(first[2].is_zero());
    }
}
