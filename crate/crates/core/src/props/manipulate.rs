//! Search for profitable misreports. A mechanism is wrapped behind a common
//! interface, a space of candidate densities is enumerated on a breakpoint
//! grid with a small value ladder, and every candidate (or a seeded sample)
//! is replayed to see whether some agent or coalition gains true utility by
//! lying.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::Evaluation;
use crate::ccea::run_ccea;
use crate::csd::{run_cmsd, run_crsd, run_csd};
use crate::error::{Error, Result};
use crate::mea::{run_mea, SolveMode};
use crate::model::{
    materialize, refine, unit_interval, Allocation, Coordinates, FractionalAssignment, Layout,
    PiecewiseDensity, Profile, RefinedPartition,
};
use crate::rational::{rat, rat_int, Rat};

/// The division rules the harness can probe, each reduced to a function from
/// a reported profile to an outcome.
#[derive(Debug, Clone)]
pub enum Mechanism {
    Ccea,
    Mea(SolveMode),
    Csd,
    Crsd(Vec<usize>),
    Cmsd(u64),
    UniformSplit,
}

impl Mechanism {
    pub fn run(&self, reported: &Profile) -> Result<MechanismOutput> {
        Ok(match self {
            Mechanism::Ccea => MechanismOutput::Concrete(run_ccea(reported)?.allocation),
            Mechanism::Mea(mode) => MechanismOutput::Concrete(run_mea(reported, *mode)?.allocation),
            Mechanism::Csd => {
                let run = run_csd(reported)?;
                MechanismOutput::Lottery { part: run.partition, shares: run.assignment }
            }
            Mechanism::Crsd(order) => {
                let pass = run_crsd(reported, order)?;
                MechanismOutput::Concrete(Allocation::new(
                    pass.pieces,
                    Vec::new(),
                    Coordinates::Original,
                    &unit_interval(),
                )?)
            }
            Mechanism::Cmsd(seed) => {
                MechanismOutput::Concrete(run_cmsd(reported, *seed)?.allocation)
            }
            Mechanism::UniformSplit => MechanismOutput::Concrete(uniform_split(reported)?),
        })
    }

    pub fn label(&self) -> String {
        match self {
            Mechanism::Ccea => "ccea".into(),
            Mechanism::Mea(SolveMode::Exact) => "mea".into(),
            Mechanism::Mea(SolveMode::Iterative { .. }) => "mea (iterative)".into(),
            Mechanism::Csd => "csd".into(),
            Mechanism::Crsd(order) => {
                let order: Vec<String> = order.iter().map(|i| i.to_string()).collect();
                format!("crsd {}", order.join(","))
            }
            Mechanism::Cmsd(seed) => format!("cmsd seed {seed}"),
            Mechanism::UniformSplit => "uniform".into(),
        }
    }
}

/// What a mechanism hands back: either a concrete division of the cake or a
/// lottery expressed as per-cell probabilities.
#[derive(Debug, Clone)]
pub enum MechanismOutput {
    Concrete(Allocation),
    Lottery { part: RefinedPartition, shares: FractionalAssignment },
}

impl MechanismOutput {
    /// Expected utility of each agent measured by the densities in `truth`,
    /// regardless of what was reported to produce this outcome. Exact for
    /// lotteries too: every lottery cell is won whole or not at all.
    pub fn true_utility(&self, truth: &Profile) -> Vec<Rat> {
        match self {
            MechanismOutput::Concrete(allocation) => (0..truth.len())
                .map(|i| truth.agent(i).density.value_over_pieces(&allocation.pieces[i]))
                .collect(),
            MechanismOutput::Lottery { part, shares } => (0..truth.len())
                .map(|i| {
                    (0..part.n_cells())
                        .map(|j| {
                            let p = shares.fraction(j, i);
                            if p.is_zero() {
                                Rat::zero()
                            } else {
                                p * truth.agent(i).density.value_over(&part.cell(j))
                            }
                        })
                        .sum()
                })
                .collect(),
        }
    }

    /// Cuts this outcome introduces, used to seed misreport grids.
    pub fn cut_points(&self) -> Vec<Rat> {
        match self {
            MechanismOutput::Concrete(allocation) => {
                let mut cuts: Vec<Rat> = allocation
                    .pieces
                    .iter()
                    .flatten()
                    .chain(&allocation.waste)
                    .flat_map(|p| [p.lo.clone(), p.hi.clone()])
                    .collect();
                cuts.sort();
                cuts.dedup();
                cuts
            }
            MechanismOutput::Lottery { part, .. } => part.cuts().to_vec(),
        }
    }

    pub fn evaluation<'a>(&self, profile: &'a Profile) -> Result<Evaluation<'a>> {
        match self {
            MechanismOutput::Concrete(allocation) => Evaluation::from_allocation(profile, allocation),
            MechanismOutput::Lottery { part, shares } => {
                Evaluation::from_table(profile, part.clone(), shares.clone())
            }
        }
    }
}

/// Splits every desired induced interval equally among all agents, desirers
/// or not, stacking shares left to right in agent order; intervals nobody
/// desires are discarded. Simple, anonymous, and the textbook example of a
/// rule that invites strategic shrinking of one's reported desire.
pub fn uniform_split(profile: &Profile) -> Result<Allocation> {
    let part = refine(profile, &[])?;
    let n = profile.len();
    let share = rat(1, n as i64);
    let mut shares = FractionalAssignment::zero(part.n_cells(), n);
    for j in 0..part.n_cells() {
        if part.is_desired(j) {
            for i in 0..n {
                shares.set(j, i, share.clone());
            }
        }
    }
    Ok(materialize(&part, &shares, Layout::Contiguous, Coordinates::Original))
}

/// The candidate reports: densities whose breakpoints are a subset of `grid`
/// and whose levels come from `ladder`. Adjacent levels must differ, so each
/// candidate appears exactly once, and the all-zero density is excluded.
#[derive(Debug, Clone)]
pub struct MisreportSpace {
    grid: Vec<Rat>,
    ladder: Vec<Rat>,
}

impl MisreportSpace {
    pub fn new(mut grid: Vec<Rat>, mut ladder: Vec<Rat>) -> Result<Self> {
        grid.sort();
        grid.dedup();
        if grid.iter().any(|g| *g <= Rat::zero() || *g >= rat_int(1)) {
            return Err(Error::InfeasibleInput(
                "misreport grid points must lie strictly inside the cake".into(),
            ));
        }
        ladder.sort();
        ladder.dedup();
        if ladder.iter().any(|l| *l < Rat::zero()) {
            return Err(Error::InfeasibleInput("ladder levels must be non-negative".into()));
        }
        if !ladder.iter().any(|l| *l > Rat::zero()) {
            return Err(Error::InfeasibleInput("ladder needs a positive level".into()));
        }
        Ok(MisreportSpace { grid, ladder })
    }

    /// Grid from everything the instance already distinguishes: reported
    /// breakpoints, the cuts of the truthful outcome, and a uniform mesh of
    /// the given resolution. Levels are the integers `0..=ladder_max`.
    pub fn for_instance(
        profile: &Profile,
        truthful_cuts: &[Rat],
        resolution: u32,
        ladder_max: u32,
    ) -> Result<Self> {
        let mut grid: Vec<Rat> = Vec::new();
        for agent in profile.agents() {
            grid.extend(agent.density.breakpoints().iter().cloned());
        }
        grid.extend(truthful_cuts.iter().cloned());
        for k in 1..resolution {
            grid.push(rat(k as i64, resolution as i64));
        }
        grid.retain(|g| *g > Rat::zero() && *g < rat_int(1));
        let ladder = (0..=ladder_max).map(|l| rat_int(l as i64)).collect();
        MisreportSpace::new(grid, ladder)
    }

    pub fn grid(&self) -> &[Rat] {
        &self.grid
    }

    pub fn ladder(&self) -> &[Rat] {
        &self.ladder
    }

    /// Count of adjacent-distinct level sequences for a density with `m`
    /// intervals, excluding the all-zero constant.
    fn sequences(&self, m: usize) -> u128 {
        let l = self.ladder.len() as u128;
        if m == 1 {
            l - u128::from(self.ladder[0].is_zero())
        } else {
            (l - 1)
                .checked_pow((m - 1) as u32)
                .and_then(|t| t.checked_mul(l))
                .unwrap_or(u128::MAX)
        }
    }

    pub fn size(&self) -> u128 {
        (0..=self.grid.len())
            .map(|s| binomial(self.grid.len(), s).saturating_mul(self.sequences(s + 1)))
            .fold(0u128, u128::saturating_add)
    }

    /// Decode candidate `index` into a density. Candidates are ordered by
    /// breakpoint-set size, then lexicographically by the chosen grid
    /// indices, then by level-sequence rank.
    pub fn candidate(&self, mut index: u128) -> PiecewiseDensity {
        let g = self.grid.len();
        for s in 0..=g {
            let m = s + 1;
            let per_subset = self.sequences(m);
            let block = binomial(g, s).saturating_mul(per_subset);
            if index >= block {
                index -= block;
                continue;
            }
            let subset = unrank_subset(g, s, index / per_subset);
            let levels = self.unrank_levels(m, index % per_subset);
            let mut breakpoints = Vec::with_capacity(m + 1);
            breakpoints.push(Rat::zero());
            breakpoints.extend(subset.into_iter().map(|i| self.grid[i].clone()));
            breakpoints.push(rat_int(1));
            return PiecewiseDensity::new(breakpoints, levels)
                .expect("enumerated candidate densities are valid by construction");
        }
        panic!("candidate index {index} out of range");
    }

    fn unrank_levels(&self, m: usize, mut rank: u128) -> Vec<Rat> {
        let l = self.ladder.len() as u128;
        if m == 1 {
            let skip_zero = self.ladder[0].is_zero();
            let idx = rank as usize + usize::from(skip_zero);
            return vec![self.ladder[idx].clone()];
        }
        // Mixed radix: the first position ranges over all levels, each later
        // position over all but its predecessor.
        let mut digits = Vec::with_capacity(m);
        let mut place = (l - 1).pow((m - 1) as u32);
        digits.push((rank / place) as usize);
        rank %= place;
        for _ in 1..m {
            place /= l - 1;
            digits.push((rank / place) as usize);
            rank %= place;
        }
        let mut out = Vec::with_capacity(m);
        let mut prev = digits[0];
        out.push(self.ladder[prev].clone());
        for &d in &digits[1..] {
            let idx = if d < prev { d } else { d + 1 };
            out.push(self.ladder[idx].clone());
            prev = idx;
        }
        out
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Subsets of `0..g` of size `s`, ordered lexicographically as sorted tuples.
fn unrank_subset(g: usize, s: usize, mut rank: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(s);
    let mut next = 0;
    for remaining in (1..=s).rev() {
        for i in next..g {
            let with_i = binomial(g - 1 - i, remaining - 1);
            if rank < with_i {
                out.push(i);
                next = i + 1;
                break;
            }
            rank -= with_i;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStrategy {
    /// Visit every candidate; refuses to start if the space exceeds the
    /// budget, and a clean miss then proves no manipulation exists in the
    /// space.
    Exhaustive,
    /// Draw `budget` candidates (with replacement) from a seeded stream.
    Sampled { seed: u64 },
}

/// A profitable deviation: the coalition, what each member reported, and the
/// true utilities before and after (full vectors, indexed by agent).
#[derive(Debug, Clone)]
pub struct Manipulation {
    pub deviators: Vec<usize>,
    pub reports: Vec<PiecewiseDensity>,
    pub truthful_utilities: Vec<Rat>,
    pub deviated_utilities: Vec<Rat>,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub manipulation: Option<Manipulation>,
    pub evaluated: usize,
    pub skipped: usize,
    /// True when every candidate in the space was visited, so an empty
    /// result is a proof rather than a sampling miss.
    pub exhaustive: bool,
}

enum Scan {
    Skip,
    No,
    Yes(Box<Manipulation>),
}

/// Hunt for a report (or coalition of reports) under which every deviator
/// weakly gains true utility and at least one strictly gains. Candidates the
/// mechanism rejects are skipped and counted. The first hit in enumeration
/// order is returned, independent of thread scheduling.
pub fn find_manipulation(
    mechanism: &Mechanism,
    truth: &Profile,
    deviators: &[usize],
    space: &MisreportSpace,
    strategy: SearchStrategy,
    budget: usize,
) -> Result<SearchOutcome> {
    if deviators.is_empty() {
        return Err(Error::InfeasibleInput("no deviating agents named".into()));
    }
    let mut seen = vec![false; truth.len()];
    for &a in deviators {
        if a >= truth.len() {
            return Err(Error::InfeasibleInput(format!("agent index {a} out of range")));
        }
        if std::mem::replace(&mut seen[a], true) {
            return Err(Error::InfeasibleInput(format!("agent index {a} listed twice")));
        }
    }
    let per_agent = space.size();
    let total = deviators
        .iter()
        .try_fold(1u128, |acc, _| acc.checked_mul(per_agent))
        .unwrap_or(u128::MAX);
    if total == 0 {
        return Err(Error::InfeasibleInput("misreport space is empty".into()));
    }
    if total == u128::MAX {
        return Err(Error::InfeasibleInput(
            "misreport space is too large to index; shrink the grid or ladder".into(),
        ));
    }

    let truthful_utilities = mechanism.run(truth)?.true_utility(truth);

    let indices: Vec<u128> = match strategy {
        SearchStrategy::Exhaustive => {
            if total > budget as u128 {
                return Err(Error::BudgetExceeded {
                    space: usize::try_from(total).unwrap_or(usize::MAX),
                    budget,
                });
            }
            (0..total).collect()
        }
        SearchStrategy::Sampled { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..budget).map(|_| rng.gen_range(0..total)).collect()
        }
    };

    let probe = |index: u128| -> Scan {
        let mut reported = truth.clone();
        let mut reports = Vec::with_capacity(deviators.len());
        let mut rest = index;
        for &a in deviators {
            let density = space.candidate(rest % per_agent);
            rest /= per_agent;
            reported = reported.with_density(a, density.clone());
            reports.push(density);
        }
        let Ok(output) = mechanism.run(&reported) else {
            return Scan::Skip;
        };
        let deviated_utilities = output.true_utility(truth);
        let weak = deviators.iter().all(|&a| deviated_utilities[a] >= truthful_utilities[a]);
        let strict = deviators.iter().any(|&a| deviated_utilities[a] > truthful_utilities[a]);
        if weak && strict {
            Scan::Yes(Box::new(Manipulation {
                deviators: deviators.to_vec(),
                reports,
                truthful_utilities: truthful_utilities.clone(),
                deviated_utilities,
            }))
        } else {
            Scan::No
        }
    };

    // Parallel within a chunk, sequential across chunks: the counts and the
    // returned hit depend only on enumeration order.
    const CHUNK: usize = 4096;
    let exhaustive = matches!(strategy, SearchStrategy::Exhaustive);
    let mut evaluated = 0usize;
    let mut skipped = 0usize;
    for chunk in indices.chunks(CHUNK) {
        let results: Vec<Scan> = chunk.par_iter().map(|&i| probe(i)).collect();
        for result in results {
            match result {
                Scan::Skip => skipped += 1,
                Scan::No => evaluated += 1,
                Scan::Yes(manipulation) => {
                    evaluated += 1;
                    return Ok(SearchOutcome {
                        manipulation: Some(*manipulation),
                        evaluated,
                        skipped,
                        exhaustive,
                    });
                }
            }
        }
    }
    Ok(SearchOutcome { manipulation: None, evaluated, skipped, exhaustive })
}
