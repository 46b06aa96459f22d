//! Cost-variation machinery: cheapest-evidence sets, the challenge relation,
//! challenge evidence and reward preselection, evidence-monotonicity checks,
//! and the mechanisms built on them (two-agent, multi-agent, and the
//! mixed-strategy cheapest-reward mechanism).
//!
//! A challenge is a cost reversal: an article that is cheap relative to the
//! designated selection at the challenger's state but expensive at the
//! claimed state. The preselected reward makes mounting it profitable
//! exactly when the claimed state is false.

use crate::env::{ArticleId, Environment};
use crate::mech::{DirectMessage, Evaluation, OutcomeDist, SynthesisError};
use crate::rational::{diff_lt, qi, Cost, Q};
use crate::states::StateId;
use num_traits::{One, Zero};

/// Per-agent, per-state cost-minimizing articles, with a designated
/// selection (lowest article index by default).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheapestSets {
    /// `sets[agent][state]` — sorted argmin articles.
    pub sets: Vec<Vec<Vec<ArticleId>>>,
    /// `min_cost[agent][state]` — the attained minimum (finite).
    pub min_cost: Vec<Vec<Q>>,
}

impl CheapestSets {
    pub fn contains(&self, agent: usize, state: StateId, article: ArticleId) -> bool {
        self.sets[agent][state.0].binary_search(&article).is_ok()
    }

    pub fn size(&self, agent: usize, state: StateId) -> usize {
        self.sets[agent][state.0].len()
    }

    pub fn default_designation(&self) -> Designation {
        Designation {
            article: self
                .sets
                .iter()
                .map(|per_state| per_state.iter().map(|set| set[0]).collect())
                .collect(),
        }
    }

    /// Largest cheapest-set cardinality over agents and states.
    pub fn max_cardinality(&self) -> usize {
        self.sets
            .iter()
            .flat_map(|per_state| per_state.iter().map(|s| s.len()))
            .max()
            .unwrap_or(0)
    }

    /// Minimum cost gap between a non-cheapest article and the cheapest cost
    /// at the same state, across all agents and states. Infinite when every
    /// non-cheapest article is unavailable (or none exists).
    pub fn min_gap(&self, env: &Environment) -> Cost {
        let mut best = Cost::Infinite;
        for i in env.agent_ids() {
            for s in env.states.ids() {
                for a in env.evidence[i].universe() {
                    if self.contains(i, s, a) {
                        continue;
                    }
                    if let Cost::Finite(c) = env.cost(i, a, s) {
                        let gap = Cost::Finite(c - &self.min_cost[i][s.0]);
                        best = std::cmp::min(best, gap);
                    }
                }
            }
        }
        best
    }
}

/// One designated cheapest article per agent and state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Designation {
    pub article: Vec<Vec<ArticleId>>,
}

impl Designation {
    pub fn of(&self, agent: usize, state: StateId) -> ArticleId {
        self.article[agent][state.0]
    }
}

pub fn cheapest_sets(env: &Environment) -> Result<CheapestSets, SynthesisError> {
    let mut sets = Vec::with_capacity(env.agents);
    let mut min_cost = Vec::with_capacity(env.agents);
    for i in env.agent_ids() {
        let mut per_state_sets = Vec::with_capacity(env.n_states());
        let mut per_state_min = Vec::with_capacity(env.n_states());
        for s in env.states.ids() {
            let mut best: Option<Q> = None;
            for a in env.evidence[i].universe() {
                if let Cost::Finite(c) = env.cost(i, a, s) {
                    best = Some(match best {
                        None => c,
                        Some(b) => std::cmp::min(b, c),
                    });
                }
            }
            let Some(best) = best else {
                return Err(SynthesisError::NoFiniteCost {
                    agent: i + 1,
                    state: env.states.label(s).to_string(),
                });
            };
            let argmin: Vec<ArticleId> = env.evidence[i]
                .universe()
                .filter(|&a| env.cost(i, a, s).as_finite() == Some(&best))
                .collect();
            per_state_sets.push(argmin);
            per_state_min.push(best);
        }
        sets.push(per_state_sets);
        min_cost.push(per_state_min);
    }
    Ok(CheapestSets { sets, min_cost })
}

/// The defining cost reversal: presenting `article` instead of the
/// designated selection for `claimed` is relatively cheaper at `at` than at
/// `claimed`.
pub fn challenge_inequality(
    env: &Environment,
    designation: &Designation,
    agent: usize,
    claimed: StateId,
    at: StateId,
    article: ArticleId,
) -> bool {
    let base = designation.of(agent, claimed);
    let c_art_at = env.cost(agent, article, at);
    let c_base_at = env.cost(agent, base, at);
    let c_art_claimed = env.cost(agent, article, claimed);
    let c_base_claimed = env.cost(agent, base, claimed);
    // c(E, at) - c(E*, at) < c(E, claimed) - c(E*, claimed)
    diff_lt(&c_art_at, &c_base_at, &c_art_claimed, &c_base_claimed)
}

/// Can `agent` challenge the claim `claimed` at state `at`? Irreflexive by
/// construction.
pub fn can_challenge(
    env: &Environment,
    designation: &Designation,
    agent: usize,
    claimed: StateId,
    at: StateId,
) -> bool {
    env.evidence[agent]
        .universe()
        .any(|a| challenge_inequality(env, designation, agent, claimed, at, a))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Challenge {
    pub agent: usize,
    pub challenged: StateId,
    pub at: StateId,
    pub evidence: ArticleId,
    pub reward: Q,
}

/// Picks the slack-maximizing challenge article (ties to the lowest index)
/// and a reward in the defining half-open interval, then re-verifies both
/// inequalities exactly.
pub fn select_challenge(
    env: &Environment,
    designation: &Designation,
    agent: usize,
    claimed: StateId,
    at: StateId,
) -> Result<Challenge, SynthesisError> {
    let base = designation.of(agent, claimed);
    let mut best: Option<(Cost, ArticleId)> = None;
    for a in env.evidence[agent].universe() {
        if !challenge_inequality(env, designation, agent, claimed, at, a) {
            continue;
        }
        // slack = [c(E,claimed) - c(E*,claimed)] - [c(E,at) - c(E*,at)];
        // the witness inequality makes c(E,at), c(E*,claimed) finite
        let c_art_claimed = env.cost(agent, a, claimed);
        let c_base_at = env.cost(agent, base, at);
        let c_art_at = env
            .cost(agent, a, at)
            .as_finite()
            .expect("challenge article is affordable at the challenger state")
            .clone();
        let c_base_claimed = env
            .cost(agent, base, claimed)
            .as_finite()
            .expect("designated article is affordable at its own state")
            .clone();
        let slack = match &c_art_claimed + &c_base_at {
            Cost::Finite(hi) => Cost::Finite(hi - (c_art_at + c_base_claimed)),
            Cost::Infinite => Cost::Infinite,
        };
        let better = match &best {
            None => true,
            Some((s, _)) => &slack > s,
        };
        if better {
            best = Some((slack, a));
        }
    }
    let Some((_, evidence)) = best else {
        return Err(SynthesisError::PreconditionViolated(format!(
            "agent {} cannot challenge {} at {}",
            agent + 1,
            env.states.label(claimed),
            env.states.label(at)
        )));
    };

    // reward interval ( c(Eγ,at) - c(E*,at),  c(Eγ,claimed) - c(E*,claimed) ]
    let lo = match (env.cost(agent, evidence, at), env.cost(agent, base, at)) {
        (Cost::Finite(a), Cost::Finite(b)) => Some(a - b),
        (Cost::Finite(_), Cost::Infinite) => None, // lower end open at -inf
        _ => unreachable!("challenge article is affordable at the challenger state"),
    };
    let hi = match (env.cost(agent, evidence, claimed), env.cost(agent, base, claimed)) {
        (Cost::Finite(a), Cost::Finite(b)) => Some(a - b),
        (Cost::Infinite, Cost::Finite(_)) => None, // upper end at +inf
        _ => unreachable!("designated article is affordable at its own state"),
    };
    let reward = match (lo, hi) {
        (Some(lo), Some(hi)) => (&lo + &hi) / qi(2),
        (None, Some(hi)) => hi - Q::one(),
        (Some(lo), None) => lo + Q::one(),
        (None, None) => Q::zero(),
    };

    let ch = Challenge { agent, challenged: claimed, at, evidence, reward };
    debug_assert!(challenge_reversal_holds(env, designation, &ch));
    Ok(ch)
}

/// Both defining inequalities of a selected challenge, exact:
/// `c(E*, claimed) <= c(Eγ, claimed) - t` and `c(E*, at) > c(Eγ, at) - t`.
pub fn challenge_reversal_holds(
    env: &Environment,
    designation: &Designation,
    ch: &Challenge,
) -> bool {
    let base = designation.of(ch.agent, ch.challenged);
    let c_base_claimed = env
        .cost(ch.agent, base, ch.challenged)
        .as_finite()
        .expect("designated article affordable at its state")
        .clone();
    let first = match env.cost(ch.agent, ch.evidence, ch.challenged) {
        Cost::Infinite => true,
        Cost::Finite(c) => c_base_claimed <= c - &ch.reward,
    };
    let second = match (
        env.cost(ch.agent, base, ch.at),
        env.cost(ch.agent, ch.evidence, ch.at),
    ) {
        (Cost::Infinite, Cost::Finite(_)) => true,
        (Cost::Finite(b), Cost::Finite(c)) => b > c - &ch.reward,
        (_, Cost::Infinite) => false,
    };
    first && second
}

/// Evidence monotonicity under constant preferences: existence of a
/// designated cheapest selection such that every outcome change across
/// states admits a challenge against it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmVerdict {
    Holds(Designation),
    Fails { pair: (StateId, StateId) },
    /// The selection search hit the combination cap before finding a
    /// witness or exhausting the space.
    Incomplete,
}

pub const EM_SEARCH_CAP: u64 = 1_000_000;

pub fn is_evidence_monotonic_cp(env: &Environment) -> Result<EmVerdict, SynthesisError> {
    let cheapest = cheapest_sets(env)?;
    let mut slots: Vec<(usize, StateId)> = Vec::new();
    for i in env.agent_ids() {
        for s in env.states.ids() {
            slots.push((i, s));
        }
    }
    let pairs: Vec<(StateId, StateId)> = env
        .states
        .ids()
        .flat_map(|s| env.states.ids().map(move |t| (s, t)))
        .filter(|&(s, t)| s != t && env.scf.outcome(s) != env.scf.outcome(t))
        .collect();

    let mut digits = vec![0usize; slots.len()];
    let mut first_violation: Option<(StateId, StateId)> = None;
    let mut examined: u64 = 0;
    loop {
        examined += 1;
        if examined > EM_SEARCH_CAP {
            return Ok(EmVerdict::Incomplete);
        }
        let designation = Designation {
            article: {
                let mut art: Vec<Vec<ArticleId>> =
                    vec![vec![ArticleId(0); env.n_states()]; env.agents];
                for (k, &(i, s)) in slots.iter().enumerate() {
                    art[i][s.0] = cheapest.sets[i][s.0][digits[k]];
                }
                art
            },
        };
        let violation = pairs.iter().find(|&&(s, t)| {
            !env.agent_ids().any(|i| can_challenge(env, &designation, i, s, t))
        });
        match violation {
            None => return Ok(EmVerdict::Holds(designation)),
            Some(&pair) => {
                if first_violation.is_none() {
                    first_violation = Some(pair);
                }
            }
        }
        // odometer over selection digits
        let mut k = slots.len();
        loop {
            if k == 0 {
                let pair = first_violation.expect("no violation recorded implies Holds");
                return Ok(EmVerdict::Fails { pair });
            }
            k -= 1;
            let (i, s) = slots[k];
            if digits[k] + 1 < cheapest.sets[i][s.0].len() {
                digits[k] += 1;
                break;
            }
            digits[k] = 0;
        }
    }
}

/// Stronger directional condition: for every pair of states with distinct
/// outcomes, some agent has a cheapest article at the first state that is no
/// longer cheapest at the second.
pub fn is_evidence_monotonic_star(
    env: &Environment,
) -> Result<Result<(), (StateId, StateId)>, SynthesisError> {
    let cheapest = cheapest_sets(env)?;
    for s in env.states.ids() {
        for t in env.states.ids() {
            if s == t || env.scf.outcome(s) == env.scf.outcome(t) {
                continue;
            }
            let witnessed = env.agent_ids().any(|i| {
                cheapest.sets[i][s.0]
                    .iter()
                    .any(|&a| !cheapest.contains(i, t, a))
            });
            if !witnessed {
                return Ok(Err((s, t)));
            }
        }
    }
    Ok(Ok(()))
}

/// When exactly one agent can challenge the lie `lie` at `truth`, no other
/// agent's designated article for `lie` mounts a challenge of `truth` back.
/// Holds on every admissible input; a `false` here is an axiom-system bug.
pub fn lemma2_check(
    env: &Environment,
    designation: &Designation,
    truth: StateId,
    lie: StateId,
) -> Result<bool, SynthesisError> {
    let challengers: Vec<usize> = env
        .agent_ids()
        .filter(|&i| can_challenge(env, designation, i, lie, truth))
        .collect();
    let [only] = challengers[..] else {
        return Err(SynthesisError::PreconditionViolated(format!(
            "{} is challengeable at {} by {} agents, expected exactly one",
            env.states.label(lie),
            env.states.label(truth),
            challengers.len()
        )));
    };
    for j in env.agent_ids().filter(|&j| j != only) {
        let article = designation.of(j, lie);
        if challenge_inequality(env, designation, j, truth, lie, article) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChallengeEntry {
    pub evidence: ArticleId,
    pub reward: Q,
}

/// Precomputed challenge relation and designated challenge evidence/reward
/// for every (agent, claimed, at) with a possible challenge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChallengeTables {
    pub cheapest: CheapestSets,
    pub designation: Designation,
    /// `entry[agent][claimed][at]`
    pub entry: Vec<Vec<Vec<Option<ChallengeEntry>>>>,
}

impl ChallengeTables {
    pub fn build(env: &Environment, designation: Designation) -> Result<Self, SynthesisError> {
        let cheapest = cheapest_sets(env)?;
        let mut entry =
            vec![vec![vec![None; env.n_states()]; env.n_states()]; env.agents];
        for i in env.agent_ids() {
            for claimed in env.states.ids() {
                for at in env.states.ids() {
                    if can_challenge(env, &designation, i, claimed, at) {
                        let ch = select_challenge(env, &designation, i, claimed, at)?;
                        entry[i][claimed.0][at.0] = Some(ChallengeEntry {
                            evidence: ch.evidence,
                            reward: ch.reward,
                        });
                    }
                }
            }
        }
        Ok(ChallengeTables { cheapest, designation, entry })
    }

    pub fn can(&self, agent: usize, claimed: StateId, at: StateId) -> bool {
        self.entry[agent][claimed.0][at.0].is_some()
    }

    fn get(&self, agent: usize, claimed: StateId, at: StateId) -> Option<&ChallengeEntry> {
        self.entry[agent][claimed.0][at.0].as_ref()
    }
}

/// Two-agent challenge mechanism. The second agent's challenges take
/// priority; challenge validity requires the designated challenge article
/// exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChallengeMechanism {
    pub tables: ChallengeTables,
}

impl ChallengeMechanism {
    pub fn evaluate_direct(&self, env: &Environment, profile: &[DirectMessage]) -> Evaluation {
        let [m1, m2] = profile else {
            panic!("two-agent mechanism evaluated on {} messages", profile.len())
        };
        let t = &self.tables;
        let ch2 = t.get(1, m1.claim, m2.claim);
        let ch2_possible = ch2.is_some();
        let ch2_valid = ch2.is_some_and(|e| e.evidence == m2.article);
        let ch1 = t.get(0, m2.claim, m1.claim);
        let ch1_valid = ch1.is_some_and(|e| e.evidence == m1.article);

        let outcome_state = if ch2_valid {
            m1.claim
        } else if !ch2_possible && ch1_valid {
            m2.claim
        } else {
            m1.claim
        };

        let mut challenged = vec![Q::zero(); 2];
        if ch2_valid {
            challenged[0] -= Q::one();
        }

        let mut disagreement = vec![Q::zero(); 2];
        for (i, (mi, mj)) in [(m1, m2), (m2, m1)].into_iter().enumerate() {
            let agrees =
                mi.claim == mj.claim && mi.article == t.designation.of(i, mj.claim);
            let challenges = t
                .get(i, mj.claim, mi.claim)
                .is_some_and(|e| e.evidence == mi.article);
            if !agrees && !challenges {
                disagreement[i] -= Q::one();
            }
        }

        let mut reward = vec![Q::zero(); 2];
        if ch2_valid {
            reward[1] += &ch2.unwrap().reward;
        } else if !ch2_possible && ch1_valid {
            reward[0] += &ch1.unwrap().reward;
        }

        Evaluation::from_components(
            OutcomeDist::Pure(env.scf.outcome(outcome_state)),
             2,
            vec![
                ("challenged_fine", challenged),
                ("disagreement", disagreement),
                ("challenge_reward", reward),
            ],
        )
    }
}

/// Multi-agent extension: challenges by agents other than 1 are prioritized,
/// validity goes by the presented article satisfying the cost reversal, and
/// the first agent is fined once per valid challenger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiChallengeMechanism {
    pub tables: ChallengeTables,
}

impl MultiChallengeMechanism {
    fn valid_challenge(
        &self,
        env: &Environment,
        agent: usize,
        claimed: StateId,
        message: &DirectMessage,
    ) -> bool {
        challenge_inequality(
            env,
            &self.tables.designation,
            agent,
            claimed,
            message.claim,
            message.article,
        )
    }

    pub fn evaluate_direct(&self, env: &Environment, profile: &[DirectMessage]) -> Evaluation {
        let n = env.agents;
        let t = &self.tables;
        let s1 = profile[0].claim;

        let challengers: Vec<usize> = (1..n)
            .filter(|&i| self.valid_challenge(env, i, s1, &profile[i]))
            .collect();
        let first_challenger = challengers.first().copied();

        let others_common: Option<StateId> = {
            let s = profile[1].claim;
            (1..n).all(|i| profile[i].claim == s).then_some(s)
        };
        // agent 1 challenging the others' common claim at his own claim
        let agent1_challenges = others_common.is_some_and(|s| {
            s != s1 && self.valid_challenge(env, 0, s, &profile[0])
        });

        let outcome_state = if !challengers.is_empty() {
            s1
        } else if let (Some(s), true) = (others_common, agent1_challenges) {
            s
        } else {
            s1
        };

        let mut challenged = vec![Q::zero(); n];
        challenged[0] -= qi(challengers.len() as i64);

        // agent 1 fined for standing apart from a unanimous report without
        // mounting a challenge against it
        let mut agreement = vec![Q::zero(); n];
        if let Some(s) = others_common {
            let matches = profile[0].claim == s
                && profile[0].article == t.designation.of(0, s);
            if !matches && !self.valid_challenge(env, 0, s, &profile[0]) {
                agreement[0] -= Q::one();
            }
        }

        // agents beyond 1 follow the first challenger, or agent 1's claim
        // with designated evidence when nobody challenges
        let mut follow = vec![Q::zero(); n];
        for i in 1..n {
            match first_challenger {
                Some(j) => {
                    if profile[i].claim != profile[j].claim {
                        follow[i] -= Q::one();
                    }
                }
                None => {
                    let expected = DirectMessage {
                        claim: s1,
                        article: t.designation.of(i, s1),
                    };
                    if profile[i] != expected {
                        follow[i] -= Q::one();
                    }
                }
            }
        }

        let mut reward = vec![Q::zero(); n];
        for &i in &challengers {
            if let Some(e) = t.get(i, s1, profile[i].claim) {
                reward[i] += &e.reward;
            }
        }
        if challengers.is_empty() && agent1_challenges {
            let s = others_common.unwrap();
            if let Some(e) = t.get(0, s, s1) {
                reward[0] += &e.reward;
            }
        }

        Evaluation::from_components(
            OutcomeDist::Pure(env.scf.outcome(outcome_state)),
            n,
            vec![
                ("challenged_fine", challenged),
                ("agreement_fine", agreement),
                ("follow_fine", follow),
                ("challenge_reward", reward),
            ],
        )
    }
}

fn gate_em(env: &Environment) -> Result<Designation, SynthesisError> {
    if !crate::env::validate_structure(env).is_clean() {
        return Err(SynthesisError::AxiomsViolated);
    }
    match is_evidence_monotonic_cp(env)? {
        EmVerdict::Holds(designation) => Ok(designation),
        EmVerdict::Fails { pair: (s, t) } => Err(SynthesisError::NotEvidenceMonotonic(
            env.states.label(s).to_string(),
            env.states.label(t).to_string(),
        )),
        EmVerdict::Incomplete => Err(SynthesisError::EvidenceMonotonicityIncomplete),
    }
}

pub fn synthesize_challenge(env: &Environment) -> Result<ChallengeMechanism, SynthesisError> {
    if env.agents != 2 {
        return Err(SynthesisError::TooManyAgents { need: 2, got: env.agents });
    }
    let designation = gate_em(env)?;
    Ok(ChallengeMechanism { tables: ChallengeTables::build(env, designation)? })
}

pub fn synthesize_multi_challenge(
    env: &Environment,
) -> Result<MultiChallengeMechanism, SynthesisError> {
    let designation = gate_em(env)?;
    Ok(MultiChallengeMechanism { tables: ChallengeTables::build(env, designation)? })
}

/// Mixed-strategy mechanism rewarding challenges by non-cheapest evidence,
/// with fines scaled by cheapest-set cardinalities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmStarMechanism {
    pub cheapest: CheapestSets,
    pub n_max: usize,
    pub gamma_gap: Cost,
    pub eps_reward: Q,
    /// `min(gamma_gap, eps_reward) / (2 I)`
    pub reward: Q,
    /// `2 N I`
    pub noncheapest_fine: Q,
}

impl EmStarMechanism {
    pub fn evaluate_direct(&self, env: &Environment, profile: &[DirectMessage]) -> Evaluation {
        let n = env.agents;
        let ch = &self.cheapest;

        let mut noncheapest = vec![Q::zero(); n];
        for i in 0..n {
            if (0..n)
                .any(|j| j != i && !ch.contains(j, profile[i].claim, profile[j].article))
            {
                noncheapest[i] -= &self.noncheapest_fine;
            }
        }

        let mut claim_gap = vec![Q::zero(); n];
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                if profile[i].claim != profile[j].claim {
                    claim_gap[i] -= qi(2 * ch.size(j, profile[i].claim) as i64);
                }
            }
        }

        let mut mismatch = vec![Q::zero(); n];
        for i in 0..n {
            if (0..n).any(|j| {
                j != i && ch.sets[i][profile[i].claim.0] != ch.sets[i][profile[j].claim.0]
            }) {
                mismatch[i] -= Q::one();
            }
        }

        let mut reward = vec![Q::zero(); n];
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                if !ch.contains(i, profile[j].claim, profile[i].article) {
                    reward[i] += &self.reward;
                }
            }
        }

        Evaluation::from_components(
            OutcomeDist::Pure(env.scf.outcome(profile[0].claim)),
            n,
            vec![
                ("noncheapest_fine", noncheapest),
                ("claim_gap_fine", claim_gap),
                ("cheapest_mismatch_fine", mismatch),
                ("challenge_reward", reward),
            ],
        )
    }
}

pub fn synthesize_em_star(
    env: &Environment,
    eps_reward: &Q,
) -> Result<EmStarMechanism, SynthesisError> {
    if !crate::env::validate_structure(env).is_clean() {
        return Err(SynthesisError::AxiomsViolated);
    }
    if eps_reward <= &Q::zero() {
        return Err(SynthesisError::BadEpsilon);
    }
    if let Err((s, t)) = is_evidence_monotonic_star(env)? {
        return Err(SynthesisError::NotEmStar(
            env.states.label(s).to_string(),
            env.states.label(t).to_string(),
        ));
    }
    let cheapest = cheapest_sets(env)?;
    let n_max = cheapest.max_cardinality();
    let gamma_gap = cheapest.min_gap(env);
    let capped = match &gamma_gap {
        Cost::Finite(g) => std::cmp::min(g.clone(), eps_reward.clone()),
        Cost::Infinite => eps_reward.clone(),
    };
    let reward = capped / qi(2 * env.agents as i64);
    Ok(EmStarMechanism {
        cheapest,
        n_max,
        gamma_gap,
        eps_reward: eps_reward.clone(),
        reward,
        noncheapest_fine: qi(2 * n_max as i64 * env.agents as i64),
    })
}
