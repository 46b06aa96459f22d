//! Implementation verdicts: equilibrium enumeration across sampled utility
//! profiles, margin certificates quantifying over *all* admissible profiles,
//! and the report format the CLI emits.
//!
//! The universal quantifier over bounded utilities is operationalized as a
//! margin certificate where obtainable (valid for every admissible profile,
//! pure strategies), plus seeded sampling and the constant-preference
//! profile for mixed coverage. A verdict never claims more than what ran.

use crate::env::{Environment, UtilityProfile};
use crate::game::{
    equilibrium_verifies, mixed_nash_2p, pure_nash, GameError, GameLimits, InducedGame,
    InducedSkeleton,
};
use crate::mech::{Message, OutcomeDist};
use crate::rational::{format_q, q, sample_unit_q, Q};
use crate::renegotiation::{check_rp_conditions, classify_pair, PairVerdict};
use crate::states::StateId;
use crate::variant::Mechanism;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub samples: usize,
    pub seed: u64,
    pub max_support: usize,
    pub limits: GameLimits,
    pub max_denominator: u32,
    /// eta for the adversarial profiles attached on two-agent environments
    /// with failing pairwise refutation conditions.
    pub adversarial_eta: Q,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            samples: 20,
            seed: 0xE71D,
            max_support: 3,
            limits: GameLimits::default(),
            max_denominator: 128,
            adversarial_eta: q(1, 10),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Implements,
    CertifiedAllV,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct FailureWitness {
    pub utility_profile: String,
    pub kind: String,
    pub profile: Vec<String>,
    pub outcome: String,
    pub transfers: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MixedCoverage {
    BoundedSupport { max_support: usize },
    PureOnly { reason: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateSummary {
    pub profiles_covered: usize,
    pub scope: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub variant: String,
    pub state: String,
    pub verdict: Verdict,
    pub utility_profiles_checked: usize,
    pub seed: u64,
    pub pure_equilibria: usize,
    pub mixed_equilibria: usize,
    pub mixed_coverage: MixedCoverage,
    pub degenerate: bool,
    pub truthful_equilibrium: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<FailureWitness>,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Implements | Verdict::CertifiedAllV => 0,
            Verdict::Fails => 1,
            Verdict::Inconclusive => 2,
        }
    }
}

/// The truthful message profile the mechanism is meant to elicit at the true
/// state: the tightest article for hard variants, the designated cheapest
/// for cost-variation ones, and echoed truth in every round when staged.
pub fn truthful_messages(
    mech: &Mechanism,
    env: &Environment,
    state: StateId,
) -> Option<Vec<Message>> {
    match mech {
        Mechanism::Hard(m) => direct_profile(env, |i| m.tight.article[i][state.0], state, None),
        Mechanism::CostRobust(m) => {
            direct_profile(env, |i| m.inner.tight.article[i][state.0], state, None)
        }
        Mechanism::Rp(m) => direct_profile(env, |i| m.tight.article[i][state.0], state, None),
        Mechanism::Staged(m) => direct_profile(
            env,
            |i| m.inner.tight.article[i][state.0],
            state,
            Some(m.params.rounds),
        ),
        Mechanism::Challenge(m) => {
            direct_profile(env, |i| Some(m.tables.designation.of(i, state)), state, None)
        }
        Mechanism::MultiChallenge(m) => {
            direct_profile(env, |i| Some(m.tables.designation.of(i, state)), state, None)
        }
        Mechanism::EmStar(m) => {
            direct_profile(env, |i| Some(m.cheapest.sets[i][state.0][0]), state, None)
        }
    }
}

fn direct_profile(
    env: &Environment,
    mut article: impl FnMut(usize) -> Option<crate::env::ArticleId>,
    state: StateId,
    rounds: Option<usize>,
) -> Option<Vec<Message>> {
    env.agent_ids()
        .map(|i| {
            let base = crate::mech::DirectMessage { claim: state, article: article(i)? };
            Some(match rounds {
                None => Message::Direct(base),
                Some(k) => Message::Staged(crate::mech::StagedMessage {
                    base,
                    rounds: vec![state; k + 1],
                }),
            })
        })
        .collect()
}

/// Utility profiles a verification run checks: the constant-preference
/// profile, seeded samples, and (on two-agent environments with failing
/// pairwise conditions) the adversarial constructions.
pub fn utility_battery(env: &Environment, cfg: &VerifyConfig) -> Vec<(String, UtilityProfile)> {
    let mut out = vec![("constant".to_string(), UtilityProfile::constant(env))];
    for k in 0..cfg.samples {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(k as u64));
        let v = UtilityProfile::from_fn(env, |_, _, _| {
            sample_unit_q(&mut rng, cfg.max_denominator)
        })
        .expect("sampled values lie in [0,1)");
        out.push((format!("sample-{k}"), v));
    }
    if env.agents == 2 {
        if let Ok(report) = check_rp_conditions(env) {
            for pr in &report.pairs {
                if let PairVerdict::Fail { case } = pr.verdict {
                    let s = env.states.find(&pr.s).unwrap();
                    let t = env.states.find(&pr.s_prime).unwrap();
                    if classify_pair(env, s, t) == (PairVerdict::Fail { case }) {
                        if let Ok(v) = crate::renegotiation::adversarial_profile(
                            env,
                            (s, t),
                            case,
                            &cfg.adversarial_eta,
                        ) {
                            out.push((format!("adversarial-{}-{}", pr.s, pr.s_prime), v));
                        }
                    }
                }
            }
        }
    }
    out
}

/// One certified deviation per unacceptable pure profile: the transfer gain
/// alone strictly beats the worst admissible outcome swing, so the profile
/// is no equilibrium under *any* utility profile in `[0,1)`.
#[derive(Debug, Clone)]
pub struct MarginCertificate {
    pub state: StateId,
    pub entries: Vec<CertEntry>,
}

#[derive(Debug, Clone)]
pub struct CertEntry {
    pub profile: usize,
    pub agent: usize,
    pub deviation: usize,
    pub transfer_gain: Q,
    pub outcome_changed: bool,
}

/// A profile is acceptable when it realizes the SCF outcome at the true
/// state with zero transfers (and, under cost-variation implementation,
/// cheapest evidence).
pub fn profile_acceptable(
    mech: &Mechanism,
    env: &Environment,
    sk: &InducedSkeleton,
    idx: usize,
) -> bool {
    let target = env.scf.outcome(sk.true_state);
    if sk.outcome[idx].as_pure() != Some(target) {
        return false;
    }
    if !sk.transfers[idx].iter().all(|t| t.is_zero()) {
        return false;
    }
    if let Some(cheapest) = mech.cheapest_on_path() {
        let digits = sk.digits(idx);
        for (i, &d) in digits.iter().enumerate() {
            let article = sk.messages[i][d].direct().article;
            if !cheapest.contains(i, sk.true_state, article) {
                return false;
            }
        }
    }
    true
}

/// Attempts the utility-independent certificate over all pure profiles.
/// `None` when some unacceptable profile lacks a qualifying deviation or the
/// mechanism's outcomes are not deterministic transfers-dominant.
pub fn margin_certificate(
    mech: &Mechanism,
    env: &Environment,
    sk: &InducedSkeleton,
) -> Option<MarginCertificate> {
    if mech.costly() || mech.staged_rounds().is_some() {
        return None;
    }
    let one = Q::from_integer(1.into());
    let mut entries = Vec::new();
    for idx in 0..sk.n_profiles {
        if profile_acceptable(mech, env, sk, idx) {
            continue;
        }
        let digits = sk.digits(idx);
        let mut found = None;
        'search: for agent in 0..env.agents {
            for alt in 0..sk.counts[agent] {
                if alt == digits[agent] {
                    continue;
                }
                let alt_idx = idx - digits[agent] * sk.strides[agent] + alt * sk.strides[agent];
                let gain = &sk.transfers[alt_idx][agent] - &sk.transfers[idx][agent];
                let changed = sk.outcome[alt_idx] != sk.outcome[idx];
                let qualifies = if changed { gain >= one } else { gain > Q::zero() };
                if qualifies {
                    found = Some(CertEntry {
                        profile: idx,
                        agent,
                        deviation: alt,
                        transfer_gain: gain,
                        outcome_changed: changed,
                    });
                    break 'search;
                }
            }
        }
        match found {
            Some(e) => entries.push(e),
            None => return None,
        }
    }
    Some(MarginCertificate { state: sk.true_state, entries })
}

pub fn verify_implementation(
    mech: &Mechanism,
    env: &Environment,
    state: StateId,
    cfg: &VerifyConfig,
) -> VerificationReport {
    let mut notes = Vec::new();
    let sk = match InducedSkeleton::build(mech, env, state, &cfg.limits) {
        Ok(sk) => sk,
        Err(e @ GameError::SizeLimit { .. }) => {
            return VerificationReport {
                variant: mech.tag(),
                state: env.states.label(state).to_string(),
                verdict: Verdict::Inconclusive,
                utility_profiles_checked: 0,
                seed: cfg.seed,
                pure_equilibria: 0,
                mixed_equilibria: 0,
                mixed_coverage: MixedCoverage::PureOnly { reason: e.to_string() },
                degenerate: false,
                truthful_equilibrium: false,
                certificate: None,
                witness: None,
                notes: vec![e.to_string()],
            }
        }
        Err(e) => panic!("domain mismatch: {e}"),
    };

    let certificate = margin_certificate(mech, env, &sk).map(|c| CertificateSummary {
        profiles_covered: c.entries.len(),
        scope: "all bounded utility profiles, pure strategies".to_string(),
    });
    if certificate.is_none() {
        notes.push("no margin certificate; verdict rests on sampled utilities".to_string());
    }

    let battery = utility_battery(env, cfg);
    let truthful_idx = truthful_messages(mech, env, state).map(|msgs| {
        msgs.iter()
            .enumerate()
            .map(|(i, m)| sk.find_message(i, m).expect("truthful message is feasible"))
            .collect::<Vec<_>>()
    });

    let mixed_possible = env.agents == 2;
    let mixed_coverage = if mixed_possible {
        MixedCoverage::BoundedSupport { max_support: cfg.max_support }
    } else {
        MixedCoverage::PureOnly {
            reason: "support enumeration is limited to two players".to_string(),
        }
    };

    let mut pure_total = 0usize;
    let mut mixed_total = 0usize;
    let mut degenerate = false;
    let mut truthful_everywhere = truthful_idx.is_some();
    let mut witness: Option<FailureWitness> = None;

    'battery: for (label, v) in &battery {
        let game = InducedGame::build(&sk, env, v);
        let pure = pure_nash(&game);
        pure_total += pure.len();
        if let Some(t) = &truthful_idx {
            if !pure.contains(&sk.index_of(t)) {
                truthful_everywhere = false;
            }
        }
        for idx in &pure {
            if !profile_acceptable(mech, env, &sk, *idx) {
                witness = Some(make_witness(env, &sk, label, "pure equilibrium", *idx));
                break 'battery;
            }
        }
        if mixed_possible {
            let mixed = mixed_nash_2p(&game, cfg.max_support);
            for eq in &mixed {
                debug_assert!(equilibrium_verifies(&game, eq));
                degenerate |= eq.degenerate;
                if eq.is_pure() {
                    continue; // already covered by the exhaustive pure scan
                }
                mixed_total += 1;
                for idx in eq.support_profiles(&sk) {
                    if !profile_acceptable(mech, env, &sk, idx) {
                        witness = Some(make_witness(
                            env,
                            &sk,
                            label,
                            "mixed equilibrium support",
                            idx,
                        ));
                        break 'battery;
                    }
                }
            }
        }
    }

    let verdict = if witness.is_some() {
        Verdict::Fails
    } else if certificate.is_some() {
        Verdict::CertifiedAllV
    } else {
        Verdict::Implements
    };

    VerificationReport {
        variant: mech.tag(),
        state: env.states.label(state).to_string(),
        verdict,
        utility_profiles_checked: battery.len(),
        seed: cfg.seed,
        pure_equilibria: pure_total,
        mixed_equilibria: mixed_total,
        mixed_coverage,
        degenerate,
        truthful_equilibrium: truthful_everywhere,
        certificate,
        witness,
        notes,
    }
}

fn make_witness(
    env: &Environment,
    sk: &InducedSkeleton,
    label: &str,
    kind: &str,
    idx: usize,
) -> FailureWitness {
    let outcome = match &sk.outcome[idx] {
        OutcomeDist::Pure(a) => env.outcomes[a.0].clone(),
        OutcomeDist::Lottery(terms) => {
            let parts: Vec<String> = terms
                .iter()
                .map(|(a, w)| format!("{}:{}", env.outcomes[a.0], format_q(w)))
                .collect();
            format!("lottery[{}]", parts.join(","))
        }
    };
    FailureWitness {
        utility_profile: label.to_string(),
        kind: kind.to_string(),
        profile: sk.profile_labels(env, idx),
        outcome,
        transfers: sk.transfers[idx].iter().map(format_q).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::variant::{synthesize, VariantRequest};

    fn quick_cfg() -> VerifyConfig {
        VerifyConfig { samples: 6, ..Default::default() }
    }

    #[test]
    fn base_mechanism_is_certified_on_env_a() {
        let env = fixtures::env_a();
        let mech = synthesize(&env, &VariantRequest::Theorem1).unwrap();
        for s in env.states.ids() {
            let report = verify_implementation(&mech, &env, s, &quick_cfg());
            assert_eq!(report.verdict, Verdict::CertifiedAllV, "state {s:?}: {report:?}");
            assert!(report.truthful_equilibrium);
            assert!(report.witness.is_none());
        }
    }

    #[test]
    fn non_measurable_negative_control_fails() {
        let env = fixtures::env_b();
        let mech = crate::variant::Mechanism::Hard(crate::hard::base_rules_unchecked(&env));
        let report = verify_implementation(&mech, &env, StateId(0), &quick_cfg());
        assert_eq!(report.verdict, Verdict::Fails);
        let w = report.witness.unwrap();
        assert!(w.kind.contains("equilibrium"));
    }

    #[test]
    fn rp_mechanism_is_certified_on_the_modified_buyer_seller_fixture() {
        let env = fixtures::env_d_modified();
        let mech = synthesize(&env, &VariantRequest::Rp).unwrap();
        for s in env.states.ids() {
            let report = verify_implementation(&mech, &env, s, &quick_cfg());
            assert_eq!(report.verdict, Verdict::CertifiedAllV, "state {s:?}");
        }
    }

    #[test]
    fn challenge_mechanism_implements_on_env_e_in_pure_strategies() {
        let env = fixtures::env_e();
        let mech = synthesize(&env, &VariantRequest::Theorem4).unwrap();
        for s in env.states.ids() {
            let report = verify_implementation(&mech, &env, s, &quick_cfg());
            assert!(
                matches!(report.verdict, Verdict::Implements),
                "state {s:?}: {report:?}"
            );
            assert!(report.truthful_equilibrium);
        }
    }

    #[test]
    fn cost_robust_mechanism_implements_on_the_costly_fixture() {
        let env = fixtures::env_costly_2state();
        let mech = synthesize(
            &env,
            &VariantRequest::Theorem3 { epsilon: q(1, 2) },
        )
        .unwrap();
        for s in env.states.ids() {
            let report = verify_implementation(&mech, &env, s, &quick_cfg());
            assert!(
                matches!(report.verdict, Verdict::Implements),
                "state {s:?}: {report:?}"
            );
        }
    }

    #[test]
    fn em_star_mechanism_implements_on_env_e() {
        let env = fixtures::env_e();
        let mech = synthesize(&env, &VariantRequest::EmStar { eps_reward: q(1, 2) }).unwrap();
        for s in env.states.ids() {
            let report = verify_implementation(&mech, &env, s, &quick_cfg());
            assert!(
                matches!(report.verdict, Verdict::Implements),
                "state {s:?}: {report:?}"
            );
        }
    }

    #[test]
    fn battery_includes_constant_and_adversarial_profiles() {
        let env = fixtures::env_d();
        let battery = utility_battery(&env, &quick_cfg());
        assert!(battery.iter().any(|(l, _)| l == "constant"));
        assert!(battery.iter().any(|(l, _)| l.starts_with("adversarial-")));
        let labels: Vec<&String> = battery.iter().map(|(l, _)| l).collect();
        assert_eq!(labels.len(), 8); // constant + 6 samples + 1 adversarial
    }
}
