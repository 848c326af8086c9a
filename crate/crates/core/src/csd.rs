//! Constrained serial dictatorship. Agents take turns, each carving the best
//! piece of length exactly 1/n out of whatever cake is left. A single pass is
//! CRSD; averaging over all n! orders gives the CSD probability table; drawing
//! concrete intervals from those probabilities by seeded rotation is CMSD.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    intersect_pieces, materialize, normalize_pieces, refine, subtract_pieces, total_len,
    unit_interval, Allocation, Coordinates, FractionalAssignment, Interval, Layout,
    PiecewiseDensity, Profile, RefinedPartition,
};
use crate::rational::{rat_int, Rat};

/// Exact enumeration stops here: 8! = 40320 orders.
pub const PERMUTATION_CAP: usize = 8;

/// Which end of an indifference class to prefer when it holds more cake than
/// the agent still needs. Leftmost is the library convention; rightmost exists
/// so tests can confirm the choice never changes class totals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    Leftmost,
    Rightmost,
}

/// One serial pass: who went in what order, what each agent walked away with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationOutcome {
    pub permutation: Vec<usize>,
    /// Indexed by agent, not by turn. Each union has length exactly 1/n.
    pub pieces: Vec<Vec<Interval>>,
    pub cut_points: Vec<Rat>,
    pub utilities: Vec<Rat>,
}

/// The probability table over the grid refined by every cut any order makes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsdRun {
    pub partition: RefinedPartition,
    /// `fraction(j, i)` is the probability agent `i` receives cell `j`.
    pub assignment: FractionalAssignment,
    pub expected_utilities: Vec<Rat>,
    pub n_permutations: usize,
    /// False when the table was estimated from sampled orders.
    pub exact: bool,
}

/// A CSD table materialized into concrete intervals by per-cell rotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CmsdRun {
    pub csd: CsdRun,
    pub seed: u64,
    pub allocation: Allocation,
    /// Realized (not expected) utilities of the drawn allocation.
    pub utilities: Vec<Rat>,
}

/// Best measurable piece of total length `target` inside `available`: greedy
/// by descending density level, taking the whole class while it fits and the
/// `tie` end of the class that overflows. Zero-valued cake pads the piece when
/// the desired cake runs out. An exchange argument makes the greedy optimal.
pub fn best_piece(
    density: &PiecewiseDensity,
    available: &[Interval],
    target: &Rat,
    tie: TieBreak,
) -> Result<Vec<Interval>> {
    let available = normalize_pieces(available.to_vec());
    if total_len(&available) < *target {
        return Err(Error::InsufficientCake {
            requested: target.to_string(),
            available: total_len(&available).to_string(),
        });
    }
    let mut taken: Vec<Interval> = Vec::new();
    let mut need = target.clone();
    let mut positive_region: Vec<Interval> = Vec::new();
    for (_, region) in density.classes() {
        positive_region.extend(region.iter().cloned());
        if need.is_zero() {
            continue;
        }
        let candidates = intersect_pieces(&region, &available);
        take_from(&mut taken, &mut need, &candidates, tie);
    }
    if !need.is_zero() {
        let dead = subtract_pieces(&available, &normalize_pieces(positive_region));
        take_from(&mut taken, &mut need, &dead, tie);
    }
    debug_assert!(need.is_zero());
    Ok(normalize_pieces(taken))
}

/// Moves up to `need` length from `candidates` into `taken`, eating from the
/// chosen end. Candidates are normalized, so iteration order is positional.
fn take_from(taken: &mut Vec<Interval>, need: &mut Rat, candidates: &[Interval], tie: TieBreak) {
    let forward = matches!(tie, TieBreak::Leftmost);
    let mut order: Vec<&Interval> = candidates.iter().collect();
    if !forward {
        order.reverse();
    }
    for iv in order {
        if need.is_zero() {
            return;
        }
        let len = iv.len();
        let cut = if len <= *need {
            iv.clone()
        } else if forward {
            Interval { lo: iv.lo.clone(), hi: &iv.lo + &*need }
        } else {
            Interval { lo: &iv.hi - &*need, hi: iv.hi.clone() }
        };
        *need -= cut.len();
        taken.push(cut);
    }
}

/// One serial pass over the full cake in the given agent order.
pub fn run_crsd(profile: &Profile, permutation: &[usize]) -> Result<PermutationOutcome> {
    let n = profile.len();
    validate_permutation(permutation, n)?;
    if !profile.has_uniform_claims() {
        return Err(Error::InfeasibleInput(
            "serial dictatorship assumes equal claims".into(),
        ));
    }
    let share = Rat::new(1.into(), (n as i64).into());
    let mut available = vec![unit_interval()];
    let mut pieces: Vec<Vec<Interval>> = vec![Vec::new(); n];
    for &i in permutation {
        let piece = best_piece(&profile.agent(i).density, &available, &share, TieBreak::Leftmost)?;
        available = subtract_pieces(&available, &piece);
        pieces[i] = piece;
    }
    debug_assert!(available.is_empty());
    let mut cut_points: BTreeSet<Rat> = BTreeSet::new();
    for piece in pieces.iter().flatten() {
        cut_points.insert(piece.lo.clone());
        cut_points.insert(piece.hi.clone());
    }
    let utilities = pieces
        .iter()
        .enumerate()
        .map(|(i, p)| profile.agent(i).density.value_over_pieces(p))
        .collect();
    Ok(PermutationOutcome {
        permutation: permutation.to_vec(),
        pieces,
        cut_points: cut_points.into_iter().collect(),
        utilities,
    })
}

fn validate_permutation(permutation: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if permutation.len() != n || !permutation.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true)) {
        return Err(Error::InfeasibleInput(format!(
            "expected a permutation of agents 0..{n}"
        )));
    }
    Ok(())
}

/// Per-agent boundary counter: +1 where a received piece starts, -1 where it
/// ends. Summed over permutations and swept left to right this yields, for any
/// cell the grid refines past every piece boundary, how many orders gave the
/// agent that cell.
#[derive(Debug, Clone, Default)]
struct CountState {
    cuts: BTreeSet<Rat>,
    steps: Vec<BTreeMap<Rat, i64>>,
    utility_sums: Vec<Rat>,
    permutations: usize,
}

impl CountState {
    fn new(n: usize) -> Self {
        CountState {
            cuts: BTreeSet::new(),
            steps: vec![BTreeMap::new(); n],
            utility_sums: vec![Rat::zero(); n],
            permutations: 0,
        }
    }

    fn absorb(&mut self, outcome: &PermutationOutcome) {
        self.cuts.extend(outcome.cut_points.iter().cloned());
        for (i, pieces) in outcome.pieces.iter().enumerate() {
            for piece in pieces {
                *self.steps[i].entry(piece.lo.clone()).or_insert(0) += 1;
                *self.steps[i].entry(piece.hi.clone()).or_insert(0) -= 1;
            }
        }
        for (sum, u) in self.utility_sums.iter_mut().zip(&outcome.utilities) {
            *sum += u;
        }
        self.permutations += 1;
    }

    fn merge(mut self, other: CountState) -> CountState {
        self.cuts.extend(other.cuts);
        for (mine, theirs) in self.steps.iter_mut().zip(other.steps) {
            for (at, step) in theirs {
                *mine.entry(at).or_insert(0) += step;
            }
        }
        for (sum, u) in self.utility_sums.iter_mut().zip(other.utility_sums) {
            *sum += u;
        }
        self.permutations += other.permutations;
        self
    }

    /// Probability table over the grid cut at every recorded boundary.
    fn into_run(self, profile: &Profile, exact: bool) -> Result<CsdRun> {
        let n = profile.len();
        let extra: Vec<Rat> = self.cuts.into_iter().collect();
        let partition = refine(profile, &extra)?;
        let total = rat_int(self.permutations as i64);
        let mut assignment = FractionalAssignment::zero(partition.n_cells(), n);
        for (i, steps) in self.steps.iter().enumerate() {
            let mut running = 0i64;
            let mut step_iter = steps.iter().peekable();
            for j in 0..partition.n_cells() {
                let cell_lo = &partition.cuts()[j];
                while let Some((at, _)) = step_iter.peek() {
                    if *at > cell_lo {
                        break;
                    }
                    running += step_iter.next().unwrap().1;
                }
                if running > 0 {
                    assignment.set(j, i, Rat::new(running.into(), total.numer().clone()));
                }
            }
        }
        debug_assert!((0..partition.n_cells())
            .all(|j| assignment.column_sum(j) == rat_int(1)));
        let expected_utilities: Vec<Rat> =
            self.utility_sums.into_iter().map(|s| s / &total).collect();
        debug_assert_eq!(expected_utilities, assignment.utilities(&partition));
        Ok(CsdRun {
            partition,
            assignment,
            expected_utilities,
            n_permutations: self.permutations,
            exact,
        })
    }
}

fn aggregate(profile: &Profile, orders: Vec<Vec<usize>>, exact: bool) -> Result<CsdRun> {
    let n = profile.len();
    let state = orders
        .into_par_iter()
        .try_fold(
            || CountState::new(n),
            |mut state, order| -> Result<CountState> {
                state.absorb(&run_crsd(profile, &order)?);
                Ok(state)
            },
        )
        .try_reduce(|| CountState::new(n), |a, b| Ok(a.merge(b)));
    state?.into_run(profile, exact)
}

/// Exact CSD: every one of the n! orders, weighted equally.
pub fn run_csd(profile: &Profile) -> Result<CsdRun> {
    let n = profile.len();
    if n > PERMUTATION_CAP {
        return Err(Error::TooManyAgents { n, cap: PERMUTATION_CAP });
    }
    aggregate(profile, all_permutations(n), true)
}

/// Estimated CSD table from `samples` orders drawn uniformly with
/// replacement. Deterministic given the seed; the result is labeled inexact.
pub fn run_csd_sampled(profile: &Profile, samples: usize, seed: u64) -> Result<CsdRun> {
    if samples == 0 {
        return Err(Error::InfeasibleInput("need at least one sampled order".into()));
    }
    let n = profile.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let orders: Vec<Vec<usize>> = (0..samples)
        .map(|_| {
            let mut order: Vec<usize> = (0..n).collect();
            // Fisher-Yates; unbiased and stable across platforms.
            for k in (1..n).rev() {
                order.swap(k, rng.gen_range(0..=k));
            }
            order
        })
        .collect();
    aggregate(profile, orders, false)
}

fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = Vec::with_capacity(n);
    let mut used = vec![false; n];
    fn go(n: usize, current: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if current.len() == n {
            out.push(current.clone());
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                current.push(i);
                go(n, current, used, out);
                current.pop();
                used[i] = false;
            }
        }
    }
    go(n, &mut current, &mut used, &mut out);
    out
}

/// CSD made concrete: each grid cell is rotated at a seeded uniform offset and
/// the probability table becomes interval lengths. Expected utility under the
/// seed distribution equals the CSD expectation, cell by cell.
pub fn run_cmsd(profile: &Profile, seed: u64) -> Result<CmsdRun> {
    let csd = run_csd(profile)?;
    let allocation = materialize(
        &csd.partition,
        &csd.assignment,
        Layout::Rotation(seed),
        Coordinates::Original,
    );
    let utilities = allocation
        .pieces
        .iter()
        .enumerate()
        .map(|(i, p)| profile.agent(i).density.value_over_pieces(p))
        .collect();
    Ok(CmsdRun { csd, seed, allocation, utilities })
}
