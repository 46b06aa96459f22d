//! Cost-robust mechanism: the four hard-evidence rule shapes with penalty
//! scales solved against the cost bound `C`, so that implementation survives
//! any cost table bounded by `C`. The designer reads only the bound; actual
//! costs enter the induced game, not the transfer rules.

use crate::env::Environment;
use crate::hard::{gate_hard, HardMechanism, PenaltyScale};
use crate::mech::{SynthesisError, TightTable};
use crate::rational::{qi, Q};
use num_traits::{One, Zero};

/// Solved penalty scales `T1..T4` for bound `C`, state count, agent count,
/// and the probability split `epsilon`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RobustParams {
    pub t1: Q,
    pub t2: Q,
    pub t3: Q,
    pub t4: Q,
    pub epsilon: Q,
    pub cost_bound: Q,
    pub n_states: usize,
    pub agents: usize,
}

impl RobustParams {
    /// The five defining inequalities, exact, zero tolerance:
    /// `T1 > C|S|/eps`, `T1 >= 1 + T2 + (I-1)T3 + T4`, `T2 >= 1 + (I-1)T3`,
    /// `T3 >= 1`, `T4 > C|S|/(1-eps)`.
    pub fn inequalities_hold(&self) -> bool {
        let cn = &self.cost_bound * qi(self.n_states as i64);
        let peers = qi(self.agents as i64 - 1);
        self.t1 > &cn / &self.epsilon
            && self.t1 >= Q::one() + &self.t2 + &peers * &self.t3 + &self.t4
            && self.t2 >= Q::one() + &peers * &self.t3
            && self.t3 >= Q::one()
            && self.t4 > &cn / (Q::one() - &self.epsilon)
    }

    /// Reward margin for refuting a lie told with probability `eps/|S|`:
    /// strictly exceeds the worst-case evidence cost.
    pub fn refutation_margin(&self) -> Q {
        &self.epsilon / qi(self.n_states as i64) * &self.t1 - &self.cost_bound
    }

    /// Margin making the tightest presentation worthwhile when the
    /// cardinality fine is active with probability `1 - eps`.
    pub fn tightening_margin(&self) -> Q {
        (Q::one() - &self.epsilon) * &self.t4 / qi(self.n_states as i64) - &self.cost_bound
    }

    pub fn scale(&self) -> PenaltyScale {
        PenaltyScale {
            refutation: self.t1.clone(),
            unsupported: self.t2.clone(),
            disagreement: self.t3.clone(),
            cardinality: self.t4.clone(),
        }
    }
}

/// Constructive solution of the inequality system:
/// `T4 = C|S|/(1-eps) + eps`, `T3 = 1`, `T2 = 1 + (I-1)T3`, and
/// `T1 = max(1 + T2 + (I-1)T3 + T4, C|S|/eps + 1)`.
pub fn solve_robust_params(
    cost_bound: &Q,
    n_states: usize,
    agents: usize,
    epsilon: &Q,
) -> Result<RobustParams, SynthesisError> {
    if epsilon <= &Q::zero() || epsilon >= &Q::one() {
        return Err(SynthesisError::BadEpsilon);
    }
    assert!(cost_bound > &Q::zero(), "cost bound must be positive");
    assert!(n_states >= 1 && agents >= 2);
    let cn = cost_bound * qi(n_states as i64);
    let peers = qi(agents as i64 - 1);
    let t4 = &cn / (Q::one() - epsilon) + epsilon;
    let t3 = Q::one();
    let t2 = Q::one() + &peers * &t3;
    let t1 = std::cmp::max(
        Q::one() + &t2 + &peers * &t3 + &t4,
        &cn / epsilon + Q::one(),
    );
    let params = RobustParams {
        t1,
        t2,
        t3,
        t4,
        epsilon: epsilon.clone(),
        cost_bound: cost_bound.clone(),
        n_states,
        agents,
    };
    debug_assert!(params.inequalities_hold());
    Ok(params)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostRobustMechanism {
    pub params: RobustParams,
    pub inner: HardMechanism,
}

pub fn synthesize_cost_robust(
    env: &Environment,
    epsilon: &Q,
) -> Result<CostRobustMechanism, SynthesisError> {
    let table = env.costs.as_ref().ok_or(SynthesisError::NoCostTable)?;
    gate_hard(env)?;
    for i in env.agent_ids() {
        for a in env.evidence[i].universe() {
            for s in env.states.ids() {
                if let Some(v) = table.cost(i, a, s).as_finite() {
                    if v >= &table.bound {
                        return Err(SynthesisError::CostExceedsBound);
                    }
                }
            }
        }
    }
    let params = solve_robust_params(&table.bound, env.n_states(), env.agents, epsilon)?;
    let inner = HardMechanism {
        scale: params.scale(),
        tight: TightTable::build(env),
        balanced: false,
    };
    Ok(CostRobustMechanism { params, inner })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn recipe_matches_worked_example() {
        // C = 2, |S| = 3, I = 2, eps = 1/2
        let p = solve_robust_params(&qi(2), 3, 2, &q(1, 2)).unwrap();
        assert_eq!(p.t4, q(25, 2));
        assert_eq!(p.t3, qi(1));
        assert_eq!(p.t2, qi(2));
        assert_eq!(p.t1, q(33, 2));
        assert!(p.inequalities_hold());
        assert!(p.refutation_margin() > Q::zero());
        assert!(p.tightening_margin() > Q::zero());
    }

    #[test]
    fn degenerate_epsilon_is_rejected() {
        assert_eq!(
            solve_robust_params(&qi(2), 3, 2, &Q::zero()),
            Err(SynthesisError::BadEpsilon)
        );
        assert_eq!(
            solve_robust_params(&qi(2), 3, 2, &Q::one()),
            Err(SynthesisError::BadEpsilon)
        );
    }

    #[test]
    fn inequalities_hold_on_a_grid() {
        for c in [q(1, 2), qi(1), qi(2), qi(5)] {
            for n in [1usize, 2, 3, 5] {
                for agents in [2usize, 3, 4] {
                    for eps in [q(1, 4), q(1, 2), q(3, 4)] {
                        let p = solve_robust_params(&c, n, agents, &eps).unwrap();
                        assert!(p.inequalities_hold(), "C={c} n={n} I={agents} eps={eps}");
                    }
                }
            }
        }
    }
}
