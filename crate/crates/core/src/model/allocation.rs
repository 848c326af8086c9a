use num_traits::Zero;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::assignment::FractionalAssignment;
use crate::model::interval::{interior_disjoint, normalize_pieces, subtract_pieces, Interval};
use crate::model::partition::RefinedPartition;
use crate::rational::{rat_int, Rat};

/// Which coordinate system an allocation's endpoints live in: the original
/// cake, or the rescaled post-disposal cake.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinates {
    Original,
    Rescaled,
}

/// Concrete division of the cake: one finite union of intervals per agent,
/// plus unallocated waste. Pieces and waste are interior-disjoint and
/// together tile the cake span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    pub pieces: Vec<Vec<Interval>>,
    pub waste: Vec<Interval>,
    pub coordinates: Coordinates,
}

impl Allocation {
    /// Validates tiling of `span` and mutual disjointness.
    pub fn new(
        pieces: Vec<Vec<Interval>>,
        waste: Vec<Interval>,
        coordinates: Coordinates,
        span: &Interval,
    ) -> Result<Self> {
        let pieces: Vec<Vec<Interval>> = pieces.into_iter().map(normalize_pieces).collect();
        let waste = normalize_pieces(waste);
        let mut all: Vec<&[Interval]> = pieces.iter().map(Vec::as_slice).collect();
        all.push(&waste);
        for (x, xs) in all.iter().enumerate() {
            for iv in *xs {
                if iv.lo < span.lo || iv.hi > span.hi {
                    return Err(Error::InfeasibleInput(format!(
                        "piece [{}, {}] lies outside the cake",
                        iv.lo, iv.hi
                    )));
                }
            }
            for ys in all.iter().skip(x + 1) {
                if !interior_disjoint(xs, ys) {
                    return Err(Error::InfeasibleInput("pieces overlap".into()));
                }
            }
        }
        let covered: Rat = all.iter().flat_map(|xs| xs.iter()).map(Interval::len).sum();
        if covered != span.len() {
            return Err(Error::InfeasibleInput(
                "pieces and waste do not tile the cake".into(),
            ));
        }
        Ok(Allocation { pieces, waste, coordinates })
    }

    pub fn n_agents(&self) -> usize {
        self.pieces.len()
    }
}

/// How `materialize` lays fractional shares out inside each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Shares stack left to right in agent order; deterministic.
    Contiguous,
    /// Each cell is treated as a circle cut at a seeded uniform point; shares
    /// stack around it and wrap. Lengths are deterministic given the seed.
    Rotation(u64),
}

/// Turns a fractional assignment into concrete pieces, cell by cell.
/// Unassigned remainders become waste. Coordinates are those of `part`.
pub fn materialize(
    part: &RefinedPartition,
    asg: &FractionalAssignment,
    layout: Layout,
    coordinates: Coordinates,
) -> Allocation {
    let n = asg.n_agents();
    let mut pieces: Vec<Vec<Interval>> = vec![Vec::new(); n];
    let mut waste: Vec<Interval> = Vec::new();
    let mut rng = match layout {
        Layout::Rotation(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        Layout::Contiguous => None,
    };
    for j in 0..part.n_cells() {
        let cell = part.cell(j);
        match (&layout, rng.as_mut()) {
            (Layout::Contiguous, _) => {
                let mut cursor = cell.lo.clone();
                for (i, agent_pieces) in pieces.iter_mut().enumerate() {
                    let p = asg.fraction(j, i);
                    if p.is_zero() {
                        continue;
                    }
                    let next = &cursor + p * cell.len();
                    if let Some(iv) = Interval::new(cursor, next.clone()) {
                        agent_pieces.push(iv);
                    }
                    cursor = next;
                }
                if let Some(rest) = Interval::new(cursor, cell.hi.clone()) {
                    waste.push(rest);
                }
            }
            (Layout::Rotation(_), Some(rng)) => {
                let u = draw_uniform_offset(rng, &cell);
                for (i, arcs) in rotate_cell(&cell, asg.row(j), &u).into_iter() {
                    pieces[i].extend(arcs);
                }
                let assigned: Rat = asg.row(j).iter().cloned().sum();
                if assigned < rat_int(1) {
                    let taken: Vec<Interval> =
                        normalize_pieces(pieces.iter().flat_map(|p| p.iter()).filter(|iv| cell.intersect(iv).is_some()).cloned().collect());
                    waste.extend(subtract_pieces(&[cell.clone()], &taken));
                }
            }
            (Layout::Rotation(_), None) => unreachable!(),
        }
    }
    Allocation {
        pieces: pieces.into_iter().map(normalize_pieces).collect(),
        waste: normalize_pieces(waste),
        coordinates,
    }
}

/// Draws a uniform offset in `cell` with 53-bit resolution; the offset is an
/// exact rational `lo + len * k / 2^53`.
pub fn draw_uniform_offset(rng: &mut ChaCha8Rng, cell: &Interval) -> Rat {
    const RESOLUTION: u64 = 1 << 53;
    let k = rng.gen_range(0..RESOLUTION);
    &cell.lo + cell.len() * Rat::new(k.into(), RESOLUTION.into())
}

/// Lays fractional shares of one cell around a circle cut at offset `u`
/// (which must lie in the cell). Shares stack in agent order starting at
/// `u`; a share that passes the cell's right edge wraps to the left edge,
/// splitting into two intervals. Returns `(agent, arcs)` for each agent with
/// a positive share.
pub fn rotate_cell(cell: &Interval, fractions: &[Rat], u: &Rat) -> Vec<(usize, Vec<Interval>)> {
    debug_assert!(cell.contains(u));
    let len = cell.len();
    let mut out = Vec::new();
    let mut position = u - &cell.lo; // circle coordinate in [0, len)
    let position_mod = |x: &Rat| -> Rat {
        if x >= &len {
            x - &len
        } else {
            x.clone()
        }
    };
    for (i, p) in fractions.iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        let start = position_mod(&position);
        let end_raw = &start + p * &len;
        let mut arcs = Vec::new();
        if end_raw <= len {
            if let Some(iv) = Interval::new(&cell.lo + &start, &cell.lo + &end_raw) {
                arcs.push(iv);
            }
        } else {
            // Wraps past the right edge: [start, len) plus [0, end - len).
            let end = &end_raw - &len;
            if let Some(iv) = Interval::new(&cell.lo + &start, cell.hi.clone()) {
                arcs.push(iv);
            }
            if let Some(iv) = Interval::new(cell.lo.clone(), &cell.lo + &end) {
                arcs.push(iv);
            }
        }
        out.push((i, arcs));
        position = &position + p * &len;
    }
    out
}
