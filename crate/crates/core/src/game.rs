//! Induced finite games and exact equilibrium enumeration.
//!
//! The skeleton of a game (feasible messages, outcome distribution, and
//! transfers per profile) is utility-independent and built once; attaching a
//! utility profile then costs one expected-value pass. Pure equilibria are
//! found by exhaustive best-response scan, two-player mixed equilibria by
//! support enumeration with exact linear algebra, falling back to a
//! max-min linear program on degenerate supports.

use crate::env::{Environment, UtilityProfile};
use crate::mech::Message;
use crate::rational::Q;
use crate::simplex::{Lp, LpOutcome};
use crate::states::StateId;
use crate::variant::Mechanism;
use num_traits::{One, Zero};

#[derive(Debug, Clone, Copy)]
pub struct GameLimits {
    pub profile_cap: u128,
}

impl Default for GameLimits {
    fn default() -> Self {
        GameLimits { profile_cap: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GameError {
    #[error("induced game has {size} profiles, over the cap of {cap}")]
    SizeLimit { size: u128, cap: u128 },
    #[error("mechanism does not match the environment: {0}")]
    DomainMismatch(String),
}

/// Utility-independent part of an induced game at one true state.
#[derive(Debug, Clone)]
pub struct InducedSkeleton {
    pub true_state: StateId,
    pub messages: Vec<Vec<Message>>,
    pub counts: Vec<usize>,
    pub strides: Vec<usize>,
    pub n_profiles: usize,
    pub outcome: Vec<crate::mech::OutcomeDist>,
    /// `transfers[profile][agent]`
    pub transfers: Vec<Vec<Q>>,
    /// `msg_cost[agent][message]` — evidence cost at the true state
    /// (zero for hard-evidence mechanisms).
    pub msg_cost: Vec<Vec<Q>>,
}

impl InducedSkeleton {
    pub fn build(
        mech: &Mechanism,
        env: &Environment,
        true_state: StateId,
        limits: &GameLimits,
    ) -> Result<InducedSkeleton, GameError> {
        let sizes = mech.feasible_counts(env, true_state);
        let size: u128 = sizes.iter().product();
        if size == 0 {
            return Err(GameError::DomainMismatch(
                "an agent has no feasible message".into(),
            ));
        }
        if size > limits.profile_cap {
            return Err(GameError::SizeLimit { size, cap: limits.profile_cap });
        }

        let messages: Vec<Vec<Message>> = env
            .agent_ids()
            .map(|i| mech.feasible_messages(env, i, true_state))
            .collect();
        let counts: Vec<usize> = messages.iter().map(|m| m.len()).collect();
        let mut strides = vec![1usize; counts.len()];
        for i in (0..counts.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * counts[i + 1];
        }
        let n_profiles = size as usize;

        let costly = mech.costly();
        let msg_cost: Vec<Vec<Q>> = messages
            .iter()
            .enumerate()
            .map(|(i, msgs)| {
                msgs.iter()
                    .map(|m| {
                        if costly {
                            env.cost(i, m.direct().article, true_state)
                                .as_finite()
                                .expect("feasible messages are affordable")
                                .clone()
                        } else {
                            Q::zero()
                        }
                    })
                    .collect()
            })
            .collect();

        let mut outcome = Vec::with_capacity(n_profiles);
        let mut transfers = Vec::with_capacity(n_profiles);
        let mut digits = vec![0usize; counts.len()];
        let mut profile: Vec<Message> = digits
            .iter()
            .enumerate()
            .map(|(i, &d)| messages[i][d].clone())
            .collect();
        loop {
            let eval = mech
                .evaluate(env, &profile)
                .expect("feasible messages are in domain");
            outcome.push(eval.outcome);
            transfers.push(eval.transfers);

            let mut k = counts.len();
            loop {
                if k == 0 {
                    return Ok(InducedSkeleton {
                        true_state,
                        messages,
                        counts,
                        strides,
                        n_profiles,
                        outcome,
                        transfers,
                        msg_cost,
                    });
                }
                k -= 1;
                if digits[k] + 1 < counts[k] {
                    digits[k] += 1;
                    profile[k] = messages[k][digits[k]].clone();
                    break;
                }
                digits[k] = 0;
                profile[k] = messages[k][0].clone();
            }
        }
    }

    /// Bare skeleton over synthetic message lists, for feeding the solvers a
    /// raw payoff tensor (solver self-consistency checks, textbook games).
    pub fn synthetic(counts: &[usize]) -> InducedSkeleton {
        let n_profiles: usize = counts.iter().product();
        let mut strides = vec![1usize; counts.len()];
        for i in (0..counts.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * counts[i + 1];
        }
        InducedSkeleton {
            true_state: StateId(0),
            messages: counts
                .iter()
                .map(|&c| {
                    (0..c)
                        .map(|k| {
                            Message::Direct(crate::mech::DirectMessage {
                                claim: StateId(0),
                                article: crate::env::ArticleId(k),
                            })
                        })
                        .collect()
                })
                .collect(),
            counts: counts.to_vec(),
            strides,
            n_profiles,
            outcome: vec![crate::mech::OutcomeDist::Pure(crate::states::OutcomeId(0)); n_profiles],
            transfers: vec![vec![Q::zero(); counts.len()]; n_profiles],
            msg_cost: counts.iter().map(|&c| vec![Q::zero(); c]).collect(),
        }
    }

    pub fn digits(&self, idx: usize) -> Vec<usize> {
        self.strides
            .iter()
            .zip(&self.counts)
            .map(|(&st, &ct)| (idx / st) % ct)
            .collect()
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.strides)
            .map(|(&d, &s)| d * s)
            .sum()
    }

    pub fn profile_labels(&self, env: &Environment, idx: usize) -> Vec<String> {
        self.digits(idx)
            .iter()
            .enumerate()
            .map(|(i, &d)| self.messages[i][d].label(env, i))
            .collect()
    }

    pub fn find_message(&self, agent: usize, msg: &Message) -> Option<usize> {
        self.messages[agent].iter().position(|m| m == msg)
    }
}

/// Skeleton plus payoffs for one utility profile:
/// `u_i = E_v[outcome] + transfer_i - cost_i`.
pub struct InducedGame<'a> {
    pub skeleton: &'a InducedSkeleton,
    /// `payoffs[agent][profile]`
    pub payoffs: Vec<Vec<Q>>,
}

impl<'a> InducedGame<'a> {
    /// Raw payoff tensor game over a synthetic skeleton. `payoffs[agent]` is
    /// profile-major with the last agent's message varying fastest.
    pub fn from_payoffs(skeleton: &'a InducedSkeleton, payoffs: Vec<Vec<Q>>) -> InducedGame<'a> {
        assert!(payoffs.iter().all(|p| p.len() == skeleton.n_profiles));
        InducedGame { skeleton, payoffs }
    }

    pub fn build(
        skeleton: &'a InducedSkeleton,
        env: &Environment,
        v: &UtilityProfile,
    ) -> InducedGame<'a> {
        let n = env.agents;
        let s = skeleton.true_state;
        let mut payoffs = vec![Vec::with_capacity(skeleton.n_profiles); n];
        for idx in 0..skeleton.n_profiles {
            let digits = skeleton.digits(idx);
            for i in 0..n {
                let u = skeleton.outcome[idx].expected_value(v, i, s)
                    + &skeleton.transfers[idx][i]
                    - &skeleton.msg_cost[i][digits[i]];
                payoffs[i].push(u);
            }
        }
        InducedGame { skeleton, payoffs }
    }

    /// Payoff tensors at two states coincide (used by the non-measurability
    /// control: equivalent states induce identical games under
    /// state-independent utilities).
    pub fn same_tensor(&self, other: &InducedGame<'_>) -> bool {
        self.payoffs == other.payoffs
    }
}

/// Exhaustive pure-equilibrium scan: a profile survives iff no unilateral
/// deviation strictly improves the deviator's exact payoff.
pub fn pure_nash(game: &InducedGame<'_>) -> Vec<usize> {
    let sk = game.skeleton;
    let n = sk.counts.len();
    // best[i][context] = max over agent i's own messages
    let mut best: Vec<Vec<Option<Q>>> = (0..n)
        .map(|i| vec![None; sk.n_profiles / sk.counts[i]])
        .collect();
    for idx in 0..sk.n_profiles {
        for i in 0..n {
            let ctx = context_index(sk, i, idx);
            let u = &game.payoffs[i][idx];
            match &mut best[i][ctx] {
                slot @ None => *slot = Some(u.clone()),
                Some(b) => {
                    if u > b {
                        *b = u.clone();
                    }
                }
            }
        }
    }
    (0..sk.n_profiles)
        .filter(|&idx| {
            (0..n).all(|i| {
                best[i][context_index(sk, i, idx)].as_ref() == Some(&game.payoffs[i][idx])
            })
        })
        .collect()
}

fn context_index(sk: &InducedSkeleton, agent: usize, idx: usize) -> usize {
    let block = sk.strides[agent] * sk.counts[agent];
    (idx / block) * sk.strides[agent] + idx % sk.strides[agent]
}

/// A mixed equilibrium: per-agent supports with exact probabilities.
/// `degenerate` marks supports where the indifference system was
/// underdetermined (one witness from a continuum).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedEquilibrium {
    pub support: Vec<Vec<usize>>,
    pub probs: Vec<Vec<Q>>,
    pub degenerate: bool,
}

impl MixedEquilibrium {
    pub fn is_pure(&self) -> bool {
        self.support.iter().all(|s| s.len() == 1)
    }

    /// Cartesian product of the per-agent supports.
    pub fn support_profiles(&self, sk: &InducedSkeleton) -> Vec<usize> {
        let mut acc = vec![0usize];
        for (i, supp) in self.support.iter().enumerate() {
            let mut next = Vec::with_capacity(acc.len() * supp.len());
            for &partial in &acc {
                for &m in supp {
                    next.push(partial + m * sk.strides[i]);
                }
            }
            acc = next;
        }
        acc
    }
}

enum LinSolve {
    Inconsistent,
    Unique(Vec<Q>),
    Underdetermined,
}

fn solve_linear(mut rows: Vec<(Vec<Q>, Q)>, n: usize) -> LinSolve {
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col)
    let mut rank_row = 0usize;
    for col in 0..n {
        let Some(pr) = (rank_row..rows.len()).find(|&r| !rows[r].0[col].is_zero()) else {
            continue;
        };
        rows.swap(rank_row, pr);
        let inv = rows[rank_row].0[col].clone();
        for v in rows[rank_row].0.iter_mut() {
            *v /= &inv;
        }
        rows[rank_row].1 /= &inv;
        for r in 0..rows.len() {
            if r != rank_row && !rows[r].0[col].is_zero() {
                let f = rows[r].0[col].clone();
                let (head, tail) = if r < rank_row {
                    let (a, b) = rows.split_at_mut(rank_row);
                    (&mut a[r], &b[0])
                } else {
                    let (a, b) = rows.split_at_mut(r);
                    (&mut b[0], &a[rank_row])
                };
                for (v, pv) in head.0.iter_mut().zip(tail.0.iter()) {
                    *v -= &f * pv;
                }
                head.1 -= &f * &tail.1;
            }
        }
        pivots.push((rank_row, col));
        rank_row += 1;
    }
    // inconsistent: zero row with nonzero rhs
    for (r, row) in rows.iter().enumerate() {
        if r >= rank_row && !row.1.is_zero() {
            return LinSolve::Inconsistent;
        }
    }
    if rank_row < n {
        return LinSolve::Underdetermined;
    }
    let mut x = vec![Q::zero(); n];
    for &(r, c) in &pivots {
        x[c] = rows[r].1.clone();
    }
    LinSolve::Unique(x)
}

/// Strategy for the opponent of the "chooser": probabilities over `support`
/// columns making the chooser indifferent across `own_support` rows, with no
/// outside row doing better. `payoff(row, col)` is the chooser's payoff.
fn support_strategy(
    own_support: &[usize],
    support: &[usize],
    own_total: usize,
    payoff: &dyn Fn(usize, usize) -> Q,
) -> Option<(Vec<Q>, bool)> {
    let nc = support.len();
    let r0 = own_support[0];
    let mut rows: Vec<(Vec<Q>, Q)> = Vec::new();
    for &r in &own_support[1..] {
        let coeffs: Vec<Q> = support
            .iter()
            .map(|&c| payoff(r0, c) - payoff(r, c))
            .collect();
        rows.push((coeffs, Q::zero()));
    }
    rows.push((vec![Q::one(); nc], Q::one()));

    let verify = |y: &[Q]| -> bool {
        if y.iter().any(|p| p <= &Q::zero()) {
            return false;
        }
        let value = |r: usize| -> Q {
            support
                .iter()
                .zip(y)
                .map(|(&c, p)| p * payoff(r, c))
                .fold(Q::zero(), |acc, x| acc + x)
        };
        let u = value(r0);
        (0..own_total).all(|r| value(r) <= u)
    };

    match solve_linear(rows.clone(), nc) {
        LinSolve::Inconsistent => None,
        LinSolve::Unique(y) => verify(&y).then_some((y, false)),
        LinSolve::Underdetermined => {
            // max-min LP over the solution polytope: variables y_0..y_{nc-1}, t
            let mut le: Vec<(Vec<Q>, Q)> = Vec::new();
            for r in 0..own_total {
                if own_support.contains(&r) {
                    continue;
                }
                let coeffs: Vec<Q> = support
                    .iter()
                    .map(|&c| payoff(r, c) - payoff(r0, c))
                    .chain(std::iter::once(Q::zero()))
                    .collect();
                le.push((coeffs, Q::zero()));
            }
            for k in 0..nc {
                let mut coeffs = vec![Q::zero(); nc + 1];
                coeffs[k] = -Q::one();
                coeffs[nc] = Q::one();
                le.push((coeffs, Q::zero()));
            }
            let eq: Vec<(Vec<Q>, Q)> = rows
                .into_iter()
                .map(|(mut coeffs, rhs)| {
                    coeffs.push(Q::zero());
                    (coeffs, rhs)
                })
                .collect();
            let mut objective = vec![Q::zero(); nc + 1];
            objective[nc] = Q::one();
            match (Lp { objective, eq, le }).solve() {
                LpOutcome::Optimal(x) => {
                    if x[nc] > Q::zero() {
                        let y = x[..nc].to_vec();
                        debug_assert!(verify(&y));
                        Some((y, true))
                    } else {
                        None
                    }
                }
                _ => None,
            }
        }
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] + 1 <= n - (k - i) {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Two-player support enumeration up to `max_support` messages per side.
/// Exact throughout; exactly one witness is reported per support pair.
pub fn mixed_nash_2p(game: &InducedGame<'_>, max_support: usize) -> Vec<MixedEquilibrium> {
    let sk = game.skeleton;
    assert_eq!(sk.counts.len(), 2, "support enumeration is two-player only");
    let (n0, n1) = (sk.counts[0], sk.counts[1]);
    let a = |r: usize, c: usize| game.payoffs[0][r * n1 + c].clone();
    let b = |r: usize, c: usize| game.payoffs[1][r * n1 + c].clone();

    // conditional strict dominance prune: a supported row must not be
    // strictly beaten on the column support by any single other row
    let row_dominated = |r: usize, cols: &[usize]| {
        (0..n0).any(|r2| r2 != r && cols.iter().all(|&c| a(r2, c) > a(r, c)))
    };
    let col_dominated = |c: usize, rows: &[usize]| {
        (0..n1).any(|c2| c2 != c && rows.iter().all(|&r| b(r, c2) > b(r, c)))
    };

    let mut out = Vec::new();
    for k0 in 1..=max_support.min(n0) {
        for rows in combinations(n0, k0) {
            for k1 in 1..=max_support.min(n1) {
                'pair: for cols in combinations(n1, k1) {
                    for &r in &rows {
                        if row_dominated(r, &cols) {
                            continue 'pair;
                        }
                    }
                    for &c in &cols {
                        if col_dominated(c, &rows) {
                            continue 'pair;
                        }
                    }
                    let Some((y, deg_y)) = support_strategy(&rows, &cols, n0, &a) else {
                        continue;
                    };
                    let bt = |c: usize, r: usize| b(r, c);
                    let Some((x, deg_x)) = support_strategy(&cols, &rows, n1, &bt) else {
                        continue;
                    };
                    out.push(MixedEquilibrium {
                        support: vec![rows.clone(), cols.clone()],
                        probs: vec![x, y],
                        degenerate: deg_y || deg_x,
                    });
                }
            }
        }
    }
    out
}

/// Re-verification of the defining inequalities for a reported mixed
/// equilibrium, exact, zero tolerance.
pub fn equilibrium_verifies(game: &InducedGame<'_>, eq: &MixedEquilibrium) -> bool {
    let sk = game.skeleton;
    if sk.counts.len() != 2 {
        return false;
    }
    let n1 = sk.counts[1];
    for player in 0..2 {
        let opp = 1 - player;
        let expected = |own_msg: usize| -> Q {
            eq.support[opp]
                .iter()
                .zip(&eq.probs[opp])
                .map(|(&om, p)| {
                    let (r, c) = if player == 0 { (own_msg, om) } else { (om, own_msg) };
                    p * &game.payoffs[player][r * n1 + c]
                })
                .fold(Q::zero(), |acc, x| acc + x)
        };
        let support_values: Vec<Q> =
            eq.support[player].iter().map(|&m| expected(m)).collect();
        let u = &support_values[0];
        if support_values.iter().any(|x| x != u) {
            return false;
        }
        if (0..sk.counts[player]).any(|m| &expected(m) > u) {
            return false;
        }
        if eq.probs[player].iter().any(|p| p <= &Q::zero()) {
            return false;
        }
        let total: Q = eq.probs[player].iter().fold(Q::zero(), |acc, p| acc + p);
        if !(total - Q::one()).is_zero() {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::{q, qi};
    use crate::variant::{synthesize, VariantRequest};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_player(rows: Vec<Vec<i64>>, cols: Vec<Vec<i64>>) -> (InducedSkeleton, Vec<Vec<Q>>) {
        let (m, n) = (rows.len(), rows[0].len());
        let sk = InducedSkeleton::synthetic(&[m, n]);
        let flat = |t: Vec<Vec<i64>>| -> Vec<Q> {
            t.into_iter().flatten().map(qi).collect()
        };
        (sk, vec![flat(rows), flat(cols)])
    }

    #[test]
    fn matching_pennies_has_the_unique_half_half_equilibrium() {
        let (sk, payoffs) =
            two_player(vec![vec![1, -1], vec![-1, 1]], vec![vec![-1, 1], vec![1, -1]]);
        let game = InducedGame::from_payoffs(&sk, payoffs);
        assert!(pure_nash(&game).is_empty());
        let mixed = mixed_nash_2p(&game, 2);
        assert_eq!(mixed.len(), 1);
        let eq = &mixed[0];
        assert_eq!(eq.support, vec![vec![0, 1], vec![0, 1]]);
        assert_eq!(eq.probs[0], vec![q(1, 2), q(1, 2)]);
        assert_eq!(eq.probs[1], vec![q(1, 2), q(1, 2)]);
        assert!(equilibrium_verifies(&game, eq));
    }

    #[test]
    fn prisoners_dilemma_has_mutual_defection_only() {
        // message 1 = defect
        let (sk, payoffs) =
            two_player(vec![vec![3, 0], vec![5, 1]], vec![vec![3, 5], vec![0, 1]]);
        let game = InducedGame::from_payoffs(&sk, payoffs);
        let pure = pure_nash(&game);
        assert_eq!(pure, vec![3]); // (defect, defect)
        let mixed = mixed_nash_2p(&game, 2);
        assert_eq!(mixed.len(), 1);
        assert_eq!(mixed[0].support, vec![vec![1], vec![1]]);
    }

    #[test]
    fn all_equal_payoffs_yield_degenerate_full_support_witness() {
        let (sk, payoffs) =
            two_player(vec![vec![1, 1], vec![1, 1]], vec![vec![1, 1], vec![1, 1]]);
        let game = InducedGame::from_payoffs(&sk, payoffs);
        assert_eq!(pure_nash(&game).len(), 4);
        let mixed = mixed_nash_2p(&game, 2);
        let full = mixed
            .iter()
            .find(|e| e.support == vec![vec![0, 1], vec![0, 1]])
            .expect("full-support witness");
        assert!(full.degenerate);
        assert!(equilibrium_verifies(&game, full));
    }

    #[test]
    fn pure_and_mixed_agree_on_singleton_supports() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let m = rng.random_range(2..=3);
            let n = rng.random_range(2..=3);
            let sk = InducedSkeleton::synthetic(&[m, n]);
            let payoffs: Vec<Vec<Q>> = (0..2)
                .map(|_| {
                    (0..m * n)
                        .map(|_| q(rng.random_range(-8..=8), rng.random_range(1..=4)))
                        .collect()
                })
                .collect();
            let game = InducedGame::from_payoffs(&sk, payoffs);
            let pure: std::collections::BTreeSet<usize> =
                pure_nash(&game).into_iter().collect();
            let singleton: std::collections::BTreeSet<usize> = mixed_nash_2p(&game, 1)
                .into_iter()
                .map(|e| sk.index_of(&[e.support[0][0], e.support[1][0]]))
                .collect();
            assert_eq!(pure, singleton);
        }
    }

    #[test]
    fn env_a_induced_counts_and_feasibility() {
        let env = fixtures::env_a();
        let mech = synthesize(&env, &VariantRequest::Theorem1).unwrap();
        let s2 = env.states.find("s2").unwrap();
        let sk = InducedSkeleton::build(&mech, &env, s2, &GameLimits::default()).unwrap();
        assert_eq!(sk.counts, vec![4, 2]); // 2 states x 2 articles, 2 states x 1 article
        let s1 = env.states.find("s1").unwrap();
        let sk1 = InducedSkeleton::build(&mech, &env, s1, &GameLimits::default()).unwrap();
        assert_eq!(sk1.counts, vec![2, 2]); // {s2} not endowed at s1
        for msgs in &sk1.messages {
            for m in msgs {
                assert!(env.evidence[0].articles.len() >= m.direct().article.0);
            }
        }
    }

    #[test]
    fn env_b_equivalent_states_induce_identical_tensors() {
        let env = fixtures::env_b();
        let mech = Mechanism::Hard(crate::hard::base_rules_unchecked(&env));
        let v = crate::env::UtilityProfile::constant(&env);
        let sk1 =
            InducedSkeleton::build(&mech, &env, StateId(0), &GameLimits::default()).unwrap();
        let sk2 =
            InducedSkeleton::build(&mech, &env, StateId(1), &GameLimits::default()).unwrap();
        let g1 = InducedGame::build(&sk1, &env, &v);
        let g2 = InducedGame::build(&sk2, &env, &v);
        assert!(g1.same_tensor(&g2));
    }

    #[test]
    fn size_limit_reports_inconclusive_material() {
        let env = fixtures::env_3();
        let mech = synthesize(&env, &VariantRequest::SmallTruncated { rounds: 3 }).unwrap();
        let err = InducedSkeleton::build(
            &mech,
            &env,
            StateId(0),
            &GameLimits { profile_cap: 100 },
        )
        .unwrap_err();
        assert!(matches!(err, GameError::SizeLimit { .. }));
    }
}
