//! Pareto dominance oracle.
//!
//! Given utilities attained by some division, search for a fractional
//! division that weakly improves every agent and strictly improves the sum.
//! Because utilities are linear in the cell fractions, an allocation is
//! Pareto dominated iff the following LP has a positive optimum:
//!
//!   max sum(eps_i)
//!   s.t. sum_i y[j][i] <= 1                    for every cell j
//!        sum_j len_j v[j][i] y[j][i] - eps_i >= u_i   for every agent i
//!        y, eps >= 0
//!
//! Only (cell, agent) pairs with positive density get a variable; zero-value
//! fractions cannot help anyone.

use num_traits::{One, Zero};

use crate::error::Result;
use crate::kernels::simplex::{Cmp, LinearProgram, LpOutcome};
use crate::model::{FractionalAssignment, RefinedPartition};
use crate::rational::Rat;

/// A dominating division and each agent's utility gain.
#[derive(Debug, Clone)]
pub struct Improvement {
    pub assignment: FractionalAssignment,
    pub gains: Vec<Rat>,
}

/// Returns a Pareto improvement over `utilities`, or None when the point is
/// on the efficient frontier.
pub fn find_improvement(
    part: &RefinedPartition,
    utilities: &[Rat],
) -> Result<Option<Improvement>> {
    let n = part.n_agents();
    let m = part.n_cells();
    assert_eq!(utilities.len(), n);

    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|j| (0..n).map(move |i| (j, i)))
        .filter(|&(j, i)| !part.value(j, i).is_zero())
        .collect();
    let var_of = |want: (usize, usize)| pairs.iter().position(|p| *p == want);
    let n_vars = pairs.len() + n;
    let eps_var = |i: usize| pairs.len() + i;

    let mut lp = LinearProgram::new(n_vars);
    for i in 0..n {
        lp.set_objective(eps_var(i), Rat::one());
    }
    for j in 0..m {
        let terms: Vec<(usize, Rat)> = (0..n)
            .filter_map(|i| var_of((j, i)).map(|v| (v, Rat::one())))
            .collect();
        if !terms.is_empty() {
            lp.constraint_sparse(&terms, Cmp::Le, Rat::one());
        }
    }
    for (i, u) in utilities.iter().enumerate() {
        let mut terms: Vec<(usize, Rat)> = pairs
            .iter()
            .enumerate()
            .filter(|(_, &(_, agent))| agent == i)
            .map(|(v, &(j, _))| (v, part.cell_len(j) * part.value(j, i)))
            .collect();
        terms.push((eps_var(i), -Rat::one()));
        lp.constraint_sparse(&terms, Cmp::Ge, u.clone());
    }

    let (objective, solution) = match lp.solve()? {
        LpOutcome::Optimal { objective, solution } => (objective, solution),
        // Infeasible means the input utilities are not attainable at all;
        // for utilities of a real division that cannot happen.
        other => {
            return Err(crate::error::Error::Internal(format!(
                "improvement search ended in {other:?}"
            )))
        }
    };
    if objective.is_zero() {
        return Ok(None);
    }

    let mut assignment = FractionalAssignment::zero(m, n);
    for (v, &(j, i)) in pairs.iter().enumerate() {
        if !solution[v].is_zero() {
            assignment.set(j, i, solution[v].clone());
        }
    }
    let gains: Vec<Rat> = (0..n).map(|i| solution[eps_var(i)].clone()).collect();
    debug_assert!(gains.iter().all(|g| *g >= Rat::zero()));
    Ok(Some(Improvement { assignment, gains }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::refine;
    use crate::rational::{rat, rat_int};

    #[test]
    fn frontier_point_has_no_improvement() {
        let profile = crate::fixtures::demo_profile();
        let part = refine(&profile, &[]).unwrap();
        // Agent one takes everything she values; agent two keeps the region
        // only he values. Nothing can move without hurting someone.
        let utilities = vec![rat_int(2), rat(3, 5)];
        assert!(find_improvement(&part, &utilities).unwrap().is_none());
    }

    #[test]
    fn wasteful_point_is_dominated() {
        let profile = crate::fixtures::demo_profile();
        let part = refine(&profile, &[]).unwrap();
        let utilities = vec![rat_int(1), rat_int(1)];
        let imp = find_improvement(&part, &utilities).unwrap().unwrap();
        let sum: Rat = imp.gains.iter().sum();
        assert!(sum > Rat::zero());
        let new_utilities = imp.assignment.utilities(&part);
        for (now, before) in new_utilities.iter().zip(&utilities) {
            assert!(now >= before);
        }
    }
}
