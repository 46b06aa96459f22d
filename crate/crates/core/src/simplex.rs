//! Dense two-phase simplex over exact rationals, Bland's rule.
//!
//! Small and unapologetically simple: the support-enumeration solver hands it
//! systems with a handful of variables, and exactness matters more than
//! speed. Right-hand sides must be nonnegative.

use crate::rational::Q;
use num_traits::Zero;

pub struct Lp {
    /// objective coefficients (maximization)
    pub objective: Vec<Q>,
    /// equality rows `(coefficients, rhs)`
    pub eq: Vec<(Vec<Q>, Q)>,
    /// `<=` rows `(coefficients, rhs)`
    pub le: Vec<(Vec<Q>, Q)>,
}

pub enum LpOutcome {
    Optimal(Vec<Q>),
    Infeasible,
    Unbounded,
}

impl Lp {
    pub fn solve(&self) -> LpOutcome {
        let n = self.objective.len();
        let m = self.eq.len() + self.le.len();
        let n_slack = self.le.len();
        let n_art = self.eq.len();
        let total = n + n_slack + n_art;

        // tableau[r] = coefficients + rhs
        let mut tab: Vec<Vec<Q>> = Vec::with_capacity(m);
        let mut basis: Vec<usize> = Vec::with_capacity(m);
        for (k, (coeffs, rhs)) in self.eq.iter().enumerate() {
            assert!(!rhs.is_negative_lp(), "rhs must be nonnegative");
            let mut row = vec![Q::zero(); total + 1];
            row[..n].clone_from_slice(coeffs);
            row[n + n_slack + k] = Q::from_integer(1.into());
            row[total] = rhs.clone();
            basis.push(n + n_slack + k);
            tab.push(row);
        }
        for (k, (coeffs, rhs)) in self.le.iter().enumerate() {
            assert!(!rhs.is_negative_lp(), "rhs must be nonnegative");
            let mut row = vec![Q::zero(); total + 1];
            row[..n].clone_from_slice(coeffs);
            row[n + k] = Q::from_integer(1.into());
            row[total] = rhs.clone();
            basis.push(n + k);
            tab.push(row);
        }

        if n_art > 0 {
            // phase 1: maximize minus the sum of artificials
            let mut phase1 = vec![Q::zero(); total];
            for k in 0..n_art {
                phase1[n + n_slack + k] = -Q::from_integer(1.into());
            }
            match run_simplex(&mut tab, &mut basis, &phase1, total) {
                SimplexEnd::Optimal(value) => {
                    if !value.is_zero() {
                        return LpOutcome::Infeasible;
                    }
                }
                SimplexEnd::Unbounded => unreachable!("phase 1 objective is bounded"),
            }
            // pivot out any artificial still basic at zero
            for r in 0..m {
                if basis[r] >= n + n_slack {
                    if let Some(c) = (0..n + n_slack).find(|&c| !tab[r][c].is_zero()) {
                        pivot(&mut tab, &mut basis, r, c);
                    }
                }
            }
        }

        let mut objective = self.objective.clone();
        objective.resize(total, Q::zero());
        // forbid artificial re-entry
        let usable = n + n_slack;
        match run_simplex_restricted(&mut tab, &mut basis, &objective, total, usable) {
            SimplexEnd::Optimal(_) => {
                let mut x = vec![Q::zero(); n];
                for (r, &b) in basis.iter().enumerate() {
                    if b < n {
                        x[b] = tab[r][total].clone();
                    }
                }
                LpOutcome::Optimal(x)
            }
            SimplexEnd::Unbounded => LpOutcome::Unbounded,
        }
    }
}

trait NegCheck {
    fn is_negative_lp(&self) -> bool;
}

impl NegCheck for Q {
    fn is_negative_lp(&self) -> bool {
        self < &Q::zero()
    }
}

enum SimplexEnd {
    Optimal(Q),
    Unbounded,
}

fn run_simplex(tab: &mut Vec<Vec<Q>>, basis: &mut Vec<usize>, objective: &[Q], total: usize) -> SimplexEnd {
    run_simplex_restricted(tab, basis, objective, total, objective.len())
}

fn run_simplex_restricted(
    tab: &mut Vec<Vec<Q>>,
    basis: &mut Vec<usize>,
    objective: &[Q],
    total: usize,
    usable: usize,
) -> SimplexEnd {
    loop {
        // reduced costs: c_j - c_B . B^-1 A_j, computed from the tableau
        let reduced = |j: usize| -> Q {
            let mut r = objective.get(j).cloned().unwrap_or_else(Q::zero);
            for (row, &b) in tab.iter().zip(basis.iter()) {
                let cb = objective.get(b).cloned().unwrap_or_else(Q::zero);
                if !cb.is_zero() && !row[j].is_zero() {
                    r -= cb * &row[j];
                }
            }
            r
        };
        // Bland: lowest-index improving column
        let entering = (0..usable)
            .filter(|&j| !basis.contains(&j))
            .find(|&j| reduced(j) > Q::zero());
        let Some(col) = entering else {
            let mut value = Q::zero();
            for (row, &b) in tab.iter().zip(basis.iter()) {
                let cb = objective.get(b).cloned().unwrap_or_else(Q::zero);
                if !cb.is_zero() {
                    value += cb * &row[total];
                }
            }
            return SimplexEnd::Optimal(value);
        };
        // ratio test, ties to the lowest basis index (Bland)
        let mut leave: Option<(usize, Q)> = None;
        for r in 0..tab.len() {
            if tab[r][col] > Q::zero() {
                let ratio = &tab[r][total] / &tab[r][col];
                let better = match &leave {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < *lratio || (ratio == *lratio && basis[r] < basis[*lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((row, _)) = leave else {
            return SimplexEnd::Unbounded;
        };
        pivot(tab, basis, row, col);
    }
}

fn pivot(tab: &mut Vec<Vec<Q>>, basis: &mut Vec<usize>, row: usize, col: usize) {
    let p = tab[row][col].clone();
    for v in tab[row].iter_mut() {
        *v /= &p;
    }
    for r in 0..tab.len() {
        if r != row && !tab[r][col].is_zero() {
            let factor = tab[r][col].clone();
            let pivot_row = tab[row].clone();
            for (v, pv) in tab[r].iter_mut().zip(pivot_row.iter()) {
                *v -= &factor * pv;
            }
        }
    }
    basis[row] = col;
}
