use num_traits::Zero;

use crate::error::{Error, Result};
use crate::model::partition::RefinedPartition;
use crate::rational::{rat_int, Rat};

/// Fractional division of a refined partition: `fractions[j][i]` is the
/// share of cell `j` held by agent `i`, with non-negative entries and column
/// sums at most 1. Shortfall from 1 is unallocated (waste).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionalAssignment {
    fractions: Vec<Vec<Rat>>,
}

impl FractionalAssignment {
    pub fn zero(n_cells: usize, n_agents: usize) -> Self {
        FractionalAssignment { fractions: vec![vec![Rat::zero(); n_agents]; n_cells] }
    }

    pub fn new(fractions: Vec<Vec<Rat>>) -> Result<Self> {
        let one = rat_int(1);
        for (j, row) in fractions.iter().enumerate() {
            if row.iter().any(|p| p < &Rat::zero()) {
                return Err(Error::FractionOverflow { cell: j });
            }
            let sum: Rat = row.iter().cloned().sum();
            if sum > one {
                return Err(Error::FractionOverflow { cell: j });
            }
        }
        Ok(FractionalAssignment { fractions })
    }

    pub fn n_cells(&self) -> usize {
        self.fractions.len()
    }

    pub fn n_agents(&self) -> usize {
        self.fractions.first().map_or(0, Vec::len)
    }

    pub fn fraction(&self, j: usize, i: usize) -> &Rat {
        &self.fractions[j][i]
    }

    pub fn row(&self, j: usize) -> &[Rat] {
        &self.fractions[j]
    }

    pub fn set(&mut self, j: usize, i: usize, p: Rat) {
        self.fractions[j][i] = p;
    }

    pub fn add(&mut self, j: usize, i: usize, p: &Rat) {
        let cur = &self.fractions[j][i] + p;
        self.fractions[j][i] = cur;
    }

    pub fn column_sum(&self, j: usize) -> Rat {
        self.fractions[j].iter().cloned().sum()
    }

    /// Exact utility of each agent: sum over cells of share x length x density.
    pub fn utilities(&self, part: &RefinedPartition) -> Vec<Rat> {
        let n = self.n_agents();
        let mut out = vec![Rat::zero(); n];
        for j in 0..self.n_cells() {
            let len = part.cell_len(j);
            for (i, u) in out.iter_mut().enumerate() {
                let p = &self.fractions[j][i];
                if !p.is_zero() {
                    *u += p * &len * part.value(j, i);
                }
            }
        }
        out
    }

    /// Total cake length held by each agent.
    pub fn lengths(&self, part: &RefinedPartition) -> Vec<Rat> {
        let n = self.n_agents();
        let mut out = vec![Rat::zero(); n];
        for j in 0..self.n_cells() {
            let len = part.cell_len(j);
            for (i, l) in out.iter_mut().enumerate() {
                *l += &self.fractions[j][i] * &len;
            }
        }
        out
    }

    /// Agent `i`'s value (by their own density) for agent `k`'s share.
    pub fn value_of_share(&self, part: &RefinedPartition, i: usize, k: usize) -> Rat {
        (0..self.n_cells())
            .map(|j| self.fraction(j, k) * part.cell_len(j) * part.value(j, i))
            .sum()
    }
}
