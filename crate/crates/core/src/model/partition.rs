use num_traits::Zero;

use crate::error::{Error, Result};
use crate::model::interval::{normalize_pieces, Interval};
use crate::model::profile::Profile;
use crate::rational::{rat_int, Rat};

/// The cake cut at every agent breakpoint (plus any extra cuts): a sequence
/// of cells on which every agent's density is constant.
///
/// `values[j][i]` is agent `i`'s density on cell `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinedPartition {
    cuts: Vec<Rat>,
    values: Vec<Vec<Rat>>,
}

impl RefinedPartition {
    pub fn n_cells(&self) -> usize {
        self.values.len()
    }

    pub fn n_agents(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn cuts(&self) -> &[Rat] {
        &self.cuts
    }

    pub fn cell(&self, j: usize) -> Interval {
        Interval { lo: self.cuts[j].clone(), hi: self.cuts[j + 1].clone() }
    }

    pub fn cell_len(&self, j: usize) -> Rat {
        &self.cuts[j + 1] - &self.cuts[j]
    }

    pub fn value(&self, j: usize, i: usize) -> &Rat {
        &self.values[j][i]
    }

    /// Total value of cell `j` to agent `i` (length times density).
    pub fn cell_value(&self, j: usize, i: usize) -> Rat {
        self.cell_len(j) * &self.values[j][i]
    }

    pub fn desirers(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        self.values[j]
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, _)| i)
    }

    pub fn is_desired(&self, j: usize) -> bool {
        self.desirers(j).next().is_some()
    }

    pub fn desired_cells(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_cells()).filter(move |&j| !self.values[j][i].is_zero())
    }

    /// Agent `i`'s value for the whole partitioned cake.
    pub fn agent_total(&self, i: usize) -> Rat {
        (0..self.n_cells()).map(|j| self.cell_value(j, i)).sum()
    }

    pub fn total_len(&self) -> Rat {
        &self.cuts[self.cuts.len() - 1] - &self.cuts[0]
    }

    pub fn span(&self) -> Interval {
        Interval { lo: self.cuts[0].clone(), hi: self.cuts[self.cuts.len() - 1].clone() }
    }

    /// Exact value of an arbitrary union of intervals to agent `i`. The
    /// pieces need not align with the cell boundaries.
    pub fn value_of(&self, i: usize, pieces: &[Interval]) -> Rat {
        let mut total = Rat::zero();
        for j in 0..self.n_cells() {
            let v = &self.values[j][i];
            if v.is_zero() {
                continue;
            }
            let cell = self.cell(j);
            let covered: Rat = pieces.iter().map(|p| cell.overlap_len(p)).sum();
            total += covered * v;
        }
        total
    }

    /// Index of the cell whose interior contains `x`.
    pub fn find_cell(&self, x: &Rat) -> Option<usize> {
        if x < &self.cuts[0] || x >= &self.cuts[self.cuts.len() - 1] {
            return None;
        }
        match self.cuts.binary_search(x) {
            Ok(idx) => Some(idx.min(self.n_cells() - 1)),
            Err(idx) => Some(idx - 1),
        }
    }
}

/// Cuts the cake at every breakpoint of every agent plus `extra_cuts`.
/// Extra cuts outside `[0, 1]` are rejected.
pub fn refine(profile: &Profile, extra_cuts: &[Rat]) -> Result<RefinedPartition> {
    let one = rat_int(1);
    for cut in extra_cuts {
        if cut < &Rat::zero() || cut > &one {
            return Err(Error::InfeasibleInput(format!(
                "extra cut {cut} lies outside the cake"
            )));
        }
    }
    let mut cuts: Vec<Rat> = vec![Rat::zero(), one];
    for agent in profile.agents() {
        cuts.extend_from_slice(agent.density.breakpoints());
    }
    cuts.extend_from_slice(extra_cuts);
    cuts.sort();
    cuts.dedup();

    let two = rat_int(2);
    let values = cuts
        .windows(2)
        .map(|w| {
            let mid = (&w[0] + &w[1]) / &two;
            profile.agents().iter().map(|a| a.density.level_at(&mid)).collect()
        })
        .collect();
    Ok(RefinedPartition { cuts, values })
}

/// Piecewise affine, order-preserving correspondence between post-disposal
/// coordinates and the original cake.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OriginMap {
    /// (kept range in new coordinates, same range in original coordinates)
    segments: Vec<(Interval, Interval)>,
    /// Original-coordinate cells that were discarded.
    dropped: Vec<Interval>,
}

impl OriginMap {
    pub fn identity() -> Self {
        let whole = Interval { lo: Rat::zero(), hi: rat_int(1) };
        OriginMap { segments: vec![(whole.clone(), whole)], dropped: vec![] }
    }

    pub fn is_identity(&self) -> bool {
        self.dropped.is_empty()
    }

    /// Discarded cake, in original coordinates.
    pub fn dropped(&self) -> &[Interval] {
        &self.dropped
    }

    pub fn map_point(&self, x: &Rat) -> Rat {
        for (new, orig) in &self.segments {
            if new.contains(x) {
                return &orig.lo + (x - &new.lo) * orig.len() / new.len();
            }
        }
        x.clone()
    }

    /// Maps one interval in post-disposal coordinates to the (possibly
    /// several) original intervals it came from.
    pub fn map_interval(&self, iv: &Interval) -> Vec<Interval> {
        let mut out = Vec::new();
        for (new, orig) in &self.segments {
            if let Some(part) = new.intersect(iv) {
                let lo = &orig.lo + (&part.lo - &new.lo) * orig.len() / new.len();
                let hi = &orig.lo + (&part.hi - &new.lo) * orig.len() / new.len();
                if let Some(mapped) = Interval::new(lo, hi) {
                    out.push(mapped);
                }
            }
        }
        out
    }

    pub fn map_pieces(&self, pieces: &[Interval]) -> Vec<Interval> {
        normalize_pieces(pieces.iter().flat_map(|iv| self.map_interval(iv)).collect())
    }

    /// Length scale factor `d(original)/d(new)` (constant across segments).
    pub fn scale(&self) -> Rat {
        let (new, orig) = &self.segments[0];
        orig.len() / new.len()
    }
}

/// Drops every cell no agent desires and rescales the rest to tile `[0, 1]`,
/// preserving order. Densities are scaled so that every agent's value for
/// any kept piece is unchanged under the coordinate change.
pub fn free_disposal(part: &RefinedPartition) -> Result<(RefinedPartition, OriginMap)> {
    let kept: Vec<usize> = (0..part.n_cells()).filter(|&j| part.is_desired(j)).collect();
    if kept.is_empty() {
        return Err(Error::NothingDesired);
    }
    let kept_len: Rat = kept.iter().map(|&j| part.cell_len(j)).sum();

    let mut cuts = vec![Rat::zero()];
    let mut values = Vec::with_capacity(kept.len());
    let mut segments = Vec::with_capacity(kept.len());
    let mut dropped = Vec::new();
    for j in 0..part.n_cells() {
        if !part.is_desired(j) {
            dropped.push(part.cell(j));
            continue;
        }
        let lo = cuts.last().unwrap().clone();
        let hi = &lo + part.cell_len(j) / &kept_len;
        segments.push((Interval { lo: lo.clone(), hi: hi.clone() }, part.cell(j)));
        cuts.push(hi);
        values.push(part.values[j].iter().map(|v| v * &kept_len).collect());
    }
    let rescaled = RefinedPartition { cuts, values };
    Ok((rescaled, OriginMap { segments, dropped: normalize_pieces(dropped) }))
}
