//! Two-phase primal simplex over exact rationals.
//!
//! Bland's rule on both the entering and leaving choice guarantees
//! termination without perturbation, and exact arithmetic removes the usual
//! tolerance knobs. Problem sizes here are small (tens of variables), so a
//! dense tableau is the right trade.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { objective: Rat, solution: Vec<Rat> },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Result<(Rat, Vec<Rat>)> {
        match self {
            LpOutcome::Optimal { objective, solution } => Ok((objective, solution)),
            LpOutcome::Infeasible => {
                Err(Error::InfeasibleInput("linear program is infeasible".into()))
            }
            LpOutcome::Unbounded => {
                Err(Error::Internal("linear program is unbounded".into()))
            }
        }
    }
}

/// Maximize `objective . x` subject to the stated rows and `x >= 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    n_vars: usize,
    objective: Vec<Rat>,
    rows: Vec<(Vec<Rat>, Cmp, Rat)>,
}

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        LinearProgram { n_vars, objective: vec![Rat::zero(); n_vars], rows: Vec::new() }
    }

    pub fn maximize(&mut self, objective: Vec<Rat>) -> &mut Self {
        assert_eq!(objective.len(), self.n_vars);
        self.objective = objective;
        self
    }

    pub fn set_objective(&mut self, var: usize, coeff: Rat) -> &mut Self {
        self.objective[var] = coeff;
        self
    }

    pub fn constraint(&mut self, coeffs: Vec<Rat>, cmp: Cmp, rhs: Rat) -> &mut Self {
        assert_eq!(coeffs.len(), self.n_vars);
        self.rows.push((coeffs, cmp, rhs));
        self
    }

    /// Sparse constraint: unspecified coefficients are zero.
    pub fn constraint_sparse(
        &mut self,
        terms: &[(usize, Rat)],
        cmp: Cmp,
        rhs: Rat,
    ) -> &mut Self {
        let mut coeffs = vec![Rat::zero(); self.n_vars];
        for (var, c) in terms {
            coeffs[*var] = c.clone();
        }
        self.rows.push((coeffs, cmp, rhs));
        self
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        let mut t = Tableau::build(self)?;

        if t.first_artificial < t.width {
            // Phase 1: maximize minus the artificial sum, priced out over
            // the rows where an artificial starts basic.
            for j in t.first_artificial..t.width {
                t.obj[j] = -Rat::one();
            }
            for r in 0..t.rows.len() {
                if t.basis[r] >= t.first_artificial {
                    let row = t.rows[r].clone();
                    for (x, p) in t.obj.iter_mut().zip(&row) {
                        *x += p;
                    }
                }
            }
            if !t.optimize(|_| true) {
                return Err(Error::Internal("phase one cannot be unbounded".into()));
            }
            // The rhs of the objective row carries the negated value, so a
            // positive entry means some artificial is still positive.
            if t.obj[t.width] > Rat::zero() {
                return Ok(LpOutcome::Infeasible);
            }
            t.evict_artificials();
        }

        // Phase 2: the real objective, priced out over the current basis,
        // with artificial columns barred from entering.
        t.obj = vec![Rat::zero(); t.width + 1];
        t.obj[..self.n_vars].clone_from_slice(&self.objective);
        for r in 0..t.rows.len() {
            let coeff = t.obj[t.basis[r]].clone();
            if !coeff.is_zero() {
                let row = t.rows[r].clone();
                for (x, p) in t.obj.iter_mut().zip(&row) {
                    *x -= &coeff * p;
                }
            }
        }
        let first_art = t.first_artificial;
        if !t.optimize(|j| j < first_art) {
            return Ok(LpOutcome::Unbounded);
        }

        let mut solution = vec![Rat::zero(); self.n_vars];
        for (r, &b) in t.basis.iter().enumerate() {
            if b < self.n_vars {
                solution[b] = t.rows[r][t.width].clone();
            }
        }
        // Objective row holds -(current value) in the rhs after pricing out.
        let objective = -t.obj[t.width].clone();
        Ok(LpOutcome::Optimal { objective, solution })
    }
}

struct Tableau {
    /// rows[r] holds `width` coefficient columns followed by the rhs.
    rows: Vec<Vec<Rat>>,
    obj: Vec<Rat>,
    basis: Vec<usize>,
    width: usize,
    first_artificial: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Result<Tableau> {
        let m = lp.rows.len();
        let n = lp.n_vars;
        let n_slack = lp.rows.iter().filter(|(_, cmp, _)| *cmp != Cmp::Eq).count();
        let needs_artificial = |cmp: Cmp, rhs: &Rat| match cmp {
            // Rows are normalized to rhs >= 0 below; a flipped row swaps Le/Ge.
            Cmp::Le => *rhs < Rat::zero(),
            Cmp::Ge => *rhs >= Rat::zero(),
            Cmp::Eq => true,
        };
        let n_art = lp
            .rows
            .iter()
            .filter(|(_, cmp, rhs)| needs_artificial(*cmp, rhs))
            .count();
        let width = n + n_slack + n_art;
        let mut rows = vec![vec![Rat::zero(); width + 1]; m];
        let mut basis = vec![usize::MAX; m];
        let mut slack_at = n;
        let mut art_at = n + n_slack;

        for (r, (coeffs, cmp, rhs)) in lp.rows.iter().enumerate() {
            let flip = *rhs < Rat::zero();
            let (coeffs, cmp, rhs) = if flip {
                let neg: Vec<Rat> = coeffs.iter().map(|c| -c).collect();
                let cmp = match cmp {
                    Cmp::Le => Cmp::Ge,
                    Cmp::Ge => Cmp::Le,
                    Cmp::Eq => Cmp::Eq,
                };
                (neg, cmp, -rhs)
            } else {
                (coeffs.clone(), *cmp, rhs.clone())
            };
            for (j, c) in coeffs.into_iter().enumerate() {
                rows[r][j] = c;
            }
            rows[r][width] = rhs;
            match cmp {
                Cmp::Le => {
                    rows[r][slack_at] = Rat::one();
                    basis[r] = slack_at;
                    slack_at += 1;
                }
                Cmp::Ge => {
                    rows[r][slack_at] = -Rat::one();
                    slack_at += 1;
                    rows[r][art_at] = Rat::one();
                    basis[r] = art_at;
                    art_at += 1;
                }
                Cmp::Eq => {
                    rows[r][art_at] = Rat::one();
                    basis[r] = art_at;
                    art_at += 1;
                }
            }
        }
        if slack_at != n + n_slack || art_at != width {
            return Err(Error::Internal("tableau column accounting is off".into()));
        }
        Ok(Tableau { rows, obj: vec![Rat::zero(); width + 1], basis, width, first_artificial: n + n_slack })
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let pivot = self.rows[r][c].clone();
        debug_assert!(!pivot.is_zero());
        for x in self.rows[r].iter_mut() {
            *x /= &pivot;
        }
        let pivot_row = self.rows[r].clone();
        for (idx, row) in self.rows.iter_mut().enumerate() {
            if idx == r || row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                *x -= &factor * p;
            }
        }
        if !self.obj[c].is_zero() {
            let factor = self.obj[c].clone();
            for (x, p) in self.obj.iter_mut().zip(&pivot_row) {
                *x -= &factor * p;
            }
        }
        self.basis[r] = c;
    }

    /// Bland's rule: lowest eligible column enters, lowest basic index
    /// breaks ratio ties. Returns false on unboundedness.
    fn optimize(&mut self, allow: impl Fn(usize) -> bool) -> bool {
        loop {
            let entering =
                (0..self.width).find(|&j| allow(j) && self.obj[j] > Rat::zero());
            let Some(c) = entering else { return true };
            let mut leave: Option<(usize, Rat)> = None;
            for r in 0..self.rows.len() {
                if self.rows[r][c] <= Rat::zero() {
                    continue;
                }
                let ratio = &self.rows[r][self.width] / &self.rows[r][c];
                let better = match &leave {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < *lratio
                            || (ratio == *lratio && self.basis[r] < self.basis[*lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            let Some((r, _)) = leave else { return false };
            self.pivot(r, c);
        }
    }

    /// After phase 1 at value zero, pivot leftover artificials out of the
    /// basis or drop the redundant rows that trap them.
    fn evict_artificials(&mut self) {
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] < self.first_artificial {
                r += 1;
                continue;
            }
            debug_assert!(self.rows[r][self.width].is_zero());
            let pivot_col =
                (0..self.first_artificial).find(|&j| !self.rows[r][j].is_zero());
            match pivot_col {
                Some(c) => {
                    self.pivot(r, c);
                    r += 1;
                }
                None => {
                    self.rows.swap_remove(r);
                    self.basis.swap_remove(r);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    #[test]
    fn maximizes_a_bounded_objective() {
        // max 3x + 2y s.t. x + y <= 4, x + 3y <= 6  ->  x = 4, y = 0.
        let mut lp = LinearProgram::new(2);
        lp.maximize(vec![rat_int(3), rat_int(2)])
            .constraint(vec![rat_int(1), rat_int(1)], Cmp::Le, rat_int(4))
            .constraint(vec![rat_int(1), rat_int(3)], Cmp::Le, rat_int(6));
        let (obj, x) = lp.solve().unwrap().optimal().unwrap();
        assert_eq!(obj, rat_int(12));
        assert_eq!(x, vec![rat_int(4), rat_int(0)]);
    }

    #[test]
    fn handles_equalities_and_lower_bounds() {
        // max x + y s.t. x + y + z = 1, x >= 1/4, y <= 1/2.
        let mut lp = LinearProgram::new(3);
        lp.maximize(vec![rat_int(1), rat_int(1), rat_int(0)])
            .constraint(vec![rat_int(1), rat_int(1), rat_int(1)], Cmp::Eq, rat_int(1))
            .constraint_sparse(&[(0, rat_int(1))], Cmp::Ge, rat(1, 4))
            .constraint_sparse(&[(1, rat_int(1))], Cmp::Le, rat(1, 2));
        let (obj, x) = lp.solve().unwrap().optimal().unwrap();
        assert_eq!(obj, rat_int(1));
        let total = &x[0] + &x[1] + &x[2];
        assert_eq!(total, rat_int(1));
        assert!(x[0] >= rat(1, 4));
        assert!(x[2].is_zero());
    }

    #[test]
    fn detects_infeasibility() {
        let mut lp = LinearProgram::new(1);
        lp.maximize(vec![rat_int(1)])
            .constraint(vec![rat_int(1)], Cmp::Ge, rat_int(2))
            .constraint(vec![rat_int(1)], Cmp::Le, rat_int(1));
        assert_eq!(lp.solve().unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        let mut lp = LinearProgram::new(2);
        lp.maximize(vec![rat_int(1), rat_int(0)])
            .constraint(vec![rat_int(0), rat_int(1)], Cmp::Le, rat_int(1));
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn negative_rhs_rows_are_normalized() {
        // -x <= -2 means x >= 2.
        let mut lp = LinearProgram::new(1);
        lp.maximize(vec![-rat_int(1)])
            .constraint(vec![-rat_int(1)], Cmp::Le, -rat_int(2))
            .constraint(vec![rat_int(1)], Cmp::Le, rat_int(5));
        let (obj, x) = lp.solve().unwrap().optimal().unwrap();
        assert_eq!(x, vec![rat_int(2)]);
        assert_eq!(obj, -rat_int(2));
    }

    #[test]
    fn degenerate_ties_terminate() {
        // Classic cycling-prone instance (Beale); Bland must terminate.
        let mut lp = LinearProgram::new(4);
        lp.maximize(vec![rat(3, 4), -rat_int(150), rat(1, 50), -rat_int(6)])
            .constraint(
                vec![rat(1, 4), -rat_int(60), -rat(1, 25), rat_int(9)],
                Cmp::Le,
                rat_int(0),
            )
            .constraint(
                vec![rat(1, 2), -rat_int(90), -rat(1, 50), rat_int(3)],
                Cmp::Le,
                rat_int(0),
            )
            .constraint(vec![rat_int(0), rat_int(0), rat_int(1), rat_int(0)], Cmp::Le, rat_int(1));
        let (obj, _) = lp.solve().unwrap().optimal().unwrap();
        assert_eq!(obj, rat(1, 20));
    }
}
