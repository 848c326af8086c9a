use num_traits::Zero;

use crate::error::Error;
use crate::model::interval::{normalize_pieces, Interval};
use crate::rational::{rat_int, Rat};

/// Validation failures for a single density, independent of the owning agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityError {
    NonIncreasingBreakpoints,
    BreakpointsNotSpanning,
    NegativeValue,
    AllZeroDensity,
    LengthMismatch,
}

impl DensityError {
    pub fn for_agent(self, agent: &str) -> Error {
        let agent = agent.to_string();
        match self {
            DensityError::NonIncreasingBreakpoints | DensityError::LengthMismatch => {
                Error::NonIncreasingBreakpoints { agent }
            }
            DensityError::BreakpointsNotSpanning => Error::BreakpointsNotSpanning { agent },
            DensityError::NegativeValue => Error::NegativeValue { agent },
            DensityError::AllZeroDensity => Error::AllZeroDensity { agent },
        }
    }
}

/// Piecewise constant value density on `[0, 1]`: value `values[k]` on the
/// segment between `breakpoints[k]` and `breakpoints[k+1]`.
///
/// Invariants: breakpoints strictly increase from 0 to 1, values are
/// non-negative rationals, and at least one value is positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewiseDensity {
    breakpoints: Vec<Rat>,
    values: Vec<Rat>,
}

impl PiecewiseDensity {
    pub fn new(breakpoints: Vec<Rat>, values: Vec<Rat>) -> Result<Self, DensityError> {
        if breakpoints.len() < 2 || values.len() + 1 != breakpoints.len() {
            return Err(DensityError::LengthMismatch);
        }
        if !breakpoints.windows(2).all(|w| w[0] < w[1]) {
            return Err(DensityError::NonIncreasingBreakpoints);
        }
        if breakpoints[0] != Rat::zero() || breakpoints[breakpoints.len() - 1] != rat_int(1) {
            return Err(DensityError::BreakpointsNotSpanning);
        }
        if values.iter().any(|v| v < &Rat::zero()) {
            return Err(DensityError::NegativeValue);
        }
        if values.iter().all(Zero::is_zero) {
            return Err(DensityError::AllZeroDensity);
        }
        Ok(PiecewiseDensity { breakpoints, values })
    }

    /// Constant density with the given positive level on each of the listed
    /// regions and zero elsewhere; convenience for fixtures and tests.
    pub fn from_regions(regions: &[(Interval, Rat)]) -> Result<Self, DensityError> {
        let mut cuts: Vec<Rat> = vec![Rat::zero(), rat_int(1)];
        for (iv, _) in regions {
            cuts.push(iv.lo.clone());
            cuts.push(iv.hi.clone());
        }
        cuts.sort();
        cuts.dedup();
        let mut values = Vec::with_capacity(cuts.len() - 1);
        for w in cuts.windows(2) {
            let mid = (&w[0] + &w[1]) / rat_int(2);
            let level = regions
                .iter()
                .find(|(iv, _)| iv.lo < mid && mid < iv.hi)
                .map_or_else(Rat::zero, |(_, v)| v.clone());
            values.push(level);
        }
        PiecewiseDensity::new(cuts, values)
    }

    pub fn breakpoints(&self) -> &[Rat] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    /// Density level at an interior point (segment boundaries resolve to the
    /// segment on the right; callers query midpoints, where this is moot).
    pub fn level_at(&self, x: &Rat) -> Rat {
        let k = match self.breakpoints.binary_search(x) {
            Ok(idx) => idx,
            Err(idx) => idx.saturating_sub(1),
        };
        self.values[k.min(self.values.len() - 1)].clone()
    }

    /// Exact integral of the density over one interval.
    pub fn value_over(&self, iv: &Interval) -> Rat {
        let mut total = Rat::zero();
        for (k, v) in self.values.iter().enumerate() {
            if v.is_zero() {
                continue;
            }
            let seg = Interval {
                lo: self.breakpoints[k].clone(),
                hi: self.breakpoints[k + 1].clone(),
            };
            total += seg.overlap_len(iv) * v;
        }
        total
    }

    pub fn value_over_pieces(&self, pieces: &[Interval]) -> Rat {
        pieces.iter().map(|iv| self.value_over(iv)).sum()
    }

    pub fn total_value(&self) -> Rat {
        self.value_over(&Interval { lo: Rat::zero(), hi: rat_int(1) })
    }

    /// Regions with positive density, merged.
    pub fn support(&self) -> Vec<Interval> {
        let pieces = self
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(k, _)| Interval {
                lo: self.breakpoints[k].clone(),
                hi: self.breakpoints[k + 1].clone(),
            })
            .collect();
        normalize_pieces(pieces)
    }

    /// Positive levels in strictly descending order, each with its merged
    /// region. These are the indifference classes of the agent.
    pub fn classes(&self) -> Vec<(Rat, Vec<Interval>)> {
        let mut levels: Vec<Rat> = self.values.iter().filter(|v| !v.is_zero()).cloned().collect();
        levels.sort();
        levels.dedup();
        levels.reverse();
        levels
            .into_iter()
            .map(|level| {
                let region = self
                    .values
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v == level)
                    .map(|(k, _)| Interval {
                        lo: self.breakpoints[k].clone(),
                        hi: self.breakpoints[k + 1].clone(),
                    })
                    .collect();
                (level, normalize_pieces(region))
            })
            .collect()
    }

    /// Merges adjacent segments with equal values; canonical form for
    /// comparing two densities as functions.
    pub fn canonical(&self) -> PiecewiseDensity {
        let mut cuts = vec![self.breakpoints[0].clone()];
        let mut vals: Vec<Rat> = Vec::new();
        for (k, v) in self.values.iter().enumerate() {
            if vals.last() == Some(v) {
                *cuts.last_mut().unwrap() = self.breakpoints[k + 1].clone();
                continue;
            }
            vals.push(v.clone());
            cuts.push(self.breakpoints[k + 1].clone());
        }
        PiecewiseDensity { breakpoints: cuts, values: vals }
    }

    /// True when the density takes a single positive level.
    pub fn is_piecewise_uniform(&self) -> bool {
        let mut positive = self.values.iter().filter(|v| !v.is_zero());
        let first = positive.next();
        match first {
            None => false,
            Some(level) => positive.all(|v| v == level),
        }
    }

    pub fn scaled(&self, factor: &Rat) -> PiecewiseDensity {
        PiecewiseDensity {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}
