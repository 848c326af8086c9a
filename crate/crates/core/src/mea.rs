//! Competitive equilibrium from claims, via the budget-weighted Nash
//! welfare maximum.
//!
//! The equilibrium is found in two layers. A floating-point proportional
//! response iteration gets close and, more importantly, reveals which
//! (agent, cell) pairs attain each agent's best value-per-money ratio.
//! That candidate graph is then handed to an exact rational solver: on each
//! connected component the equality conditions fix prices and utilities up
//! to one scalar, budget balance pins the scalar, and a feasibility program
//! recovers the cell shares. Every equilibrium condition is then verified
//! exactly, so a successful pivot is certified, not approximated. If no
//! candidate graph passes, small instances fall back to enumerating support
//! sets; otherwise the floating-point answer is returned with its measured
//! residual, or refused if it misses the requested tolerance.

use std::collections::BTreeSet;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::kernels::{Cmp, LinearProgram, LpOutcome};
use crate::model::{
    free_disposal, materialize, refine, Allocation, Coordinates,
    FractionalAssignment, Interval, Layout, OriginMap, Profile, RefinedPartition,
};
use crate::rational::{rat_from_f64, rat_to_f64, Rat};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMode {
    /// Certified rational equilibrium or an error.
    Exact,
    /// Accept a floating-point answer within `tolerance` when certification
    /// fails.
    Iterative { tolerance: f64, max_iterations: usize },
}

impl Default for SolveMode {
    fn default() -> Self {
        SolveMode::Iterative { tolerance: 1e-9, max_iterations: 20_000 }
    }
}

#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub assignment: FractionalAssignment,
    pub utilities: Vec<Rat>,
    /// Price per unit length of each cell, in the partition's coordinates.
    pub prices: Vec<Rat>,
    /// Largest relative equilibrium-condition violation; zero when `exact`.
    pub residual: f64,
    pub exact: bool,
}

/// Computes the competitive equilibrium on a partition where every cell is
/// desired by someone and every agent desires some cell. `budgets[i]` is
/// agent i's claim.
pub fn solve_equilibrium(
    part: &RefinedPartition,
    budgets: &[Rat],
    mode: SolveMode,
) -> Result<EquilibriumResult> {
    let n = part.n_agents();
    let m = part.n_cells();
    if budgets.len() != n {
        return Err(Error::Internal("one budget per agent required".into()));
    }
    if budgets.iter().any(|b| *b <= Rat::zero()) {
        return Err(Error::Internal("budgets must be positive".into()));
    }
    for j in 0..m {
        if !part.is_desired(j) {
            return Err(Error::InfeasibleInput(
                "equilibrium requires every cell to be desired; discard first".into(),
            ));
        }
    }
    for i in 0..n {
        if (0..m).all(|j| part.value(j, i).is_zero()) {
            return Err(Error::DegenerateAgent(format!("agent {i} values nothing")));
        }
    }

    let dyn_state = proportional_response(part, budgets, &mode);

    // Candidate equality graphs, coarse to fine.
    let mut tried: BTreeSet<Vec<(usize, usize)>> = BTreeSet::new();
    for theta in [1e-12, 1e-10, 1e-8, 1e-6, 1e-4, 1e-3, 1e-2] {
        let graph = dyn_state.equality_graph(part, theta);
        if !tried.insert(graph.clone()) {
            continue;
        }
        if let Some(result) = certify_support(part, budgets, &graph)? {
            return Ok(result);
        }
    }

    match mode {
        SolveMode::Exact => {
            if let Some(result) = enumerate_supports(part, budgets)? {
                return Ok(result);
            }
            Err(Error::NoConvergence {
                residual: dyn_state.residual,
                iterations: dyn_state.iterations,
            })
        }
        SolveMode::Iterative { tolerance, .. } => {
            if dyn_state.residual <= tolerance {
                Ok(dyn_state.into_result(part))
            } else {
                Err(Error::NoConvergence {
                    residual: dyn_state.residual,
                    iterations: dyn_state.iterations,
                })
            }
        }
    }
}

struct DynState {
    /// x[j][i]: length of cell j held by agent i.
    x: Vec<Vec<f64>>,
    prices: Vec<f64>,
    residual: f64,
    iterations: usize,
}

fn proportional_response(
    part: &RefinedPartition,
    budgets: &[Rat],
    mode: &SolveMode,
) -> DynState {
    let n = part.n_agents();
    let m = part.n_cells();
    let max_iterations = match mode {
        SolveMode::Exact => 20_000,
        SolveMode::Iterative { max_iterations, .. } => *max_iterations,
    };
    let c: Vec<f64> = budgets.iter().map(rat_to_f64).collect();
    let len: Vec<f64> = (0..m).map(|j| rat_to_f64(&part.cell_len(j))).collect();
    // Normalize each agent's densities to total value one; the equilibrium
    // assignment and the equality pattern are invariant under that scaling.
    let v: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let total = rat_to_f64(&part.agent_total(i));
            (0..m).map(|j| rat_to_f64(part.value(j, i)) / total).collect()
        })
        .collect();

    // bids[i][j]: money agent i places on cell j.
    let mut bids: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let total: f64 = (0..m).map(|j| v[i][j] * len[j]).sum();
            (0..m).map(|j| c[i] * v[i][j] * len[j] / total).collect()
        })
        .collect();
    let mut money = vec![0.0f64; m];
    let mut x = vec![vec![0.0f64; n]; m];
    let mut utilities = vec![0.0f64; n];
    let mut iterations = 0;

    for round in 0..max_iterations {
        iterations = round + 1;
        for j in 0..m {
            money[j] = (0..n).map(|i| bids[i][j]).sum();
        }
        for j in 0..m {
            for i in 0..n {
                x[j][i] = if money[j] > 0.0 { bids[i][j] / money[j] * len[j] } else { 0.0 };
            }
        }
        for i in 0..n {
            utilities[i] = (0..m).map(|j| v[i][j] * x[j][i]).sum();
        }
        let mut moved = 0.0f64;
        for i in 0..n {
            for j in 0..m {
                let next = if utilities[i] > 0.0 {
                    c[i] * v[i][j] * x[j][i] / utilities[i]
                } else {
                    0.0
                };
                moved = moved.max((next - bids[i][j]).abs());
                bids[i][j] = next;
            }
        }
        if moved < 1e-15 && round > 8 {
            break;
        }
    }

    for j in 0..m {
        money[j] = (0..n).map(|i| bids[i][j]).sum();
        for i in 0..n {
            x[j][i] = if money[j] > 0.0 { bids[i][j] / money[j] * len[j] } else { 0.0 };
        }
    }
    let prices: Vec<f64> = (0..m).map(|j| money[j] / len[j]).collect();

    // Residual: relative gap between each agent's utility and the utility of
    // spending her whole budget at her best value-per-money ratio.
    let mut residual = 0.0f64;
    for i in 0..n {
        let alpha = (0..m)
            .filter(|&j| v[i][j] > 0.0)
            .map(|j| v[i][j] / prices[j])
            .fold(0.0f64, f64::max);
        let u: f64 = (0..m).map(|j| v[i][j] * x[j][i]).sum();
        let best = alpha * c[i];
        if best > 0.0 {
            residual = residual.max((best - u) / best);
        }
    }

    DynState { x, prices, residual, iterations }
}

impl DynState {
    /// Pairs whose value-per-money ratio is within `theta` of the agent's
    /// best, by the floating-point prices. Uses normalized-scale densities
    /// implicitly through the ratio comparison, so raw densities serve.
    fn equality_graph(
        &self,
        part: &RefinedPartition,
        theta: f64,
    ) -> Vec<(usize, usize)> {
        let n = part.n_agents();
        let m = part.n_cells();
        let mut graph = Vec::new();
        for i in 0..n {
            let ratios: Vec<f64> = (0..m)
                .map(|j| {
                    let vf = rat_to_f64(part.value(j, i));
                    if vf > 0.0 { vf / self.prices[j] } else { 0.0 }
                })
                .collect();
            let alpha = ratios.iter().fold(0.0f64, |a, &b| a.max(b));
            for (j, r) in ratios.iter().enumerate() {
                if *r > 0.0 && *r >= alpha * (1.0 - theta) {
                    graph.push((i, j));
                }
            }
        }
        graph
    }

    fn into_result(self, part: &RefinedPartition) -> EquilibriumResult {
        let n = part.n_agents();
        let m = part.n_cells();
        // Rationalize lengths and renormalize each cell exactly so shares
        // sum to one; utilities are then computed exactly from the shares.
        let mut assignment = FractionalAssignment::zero(m, n);
        for j in 0..m {
            let raw: Vec<Rat> = (0..n)
                .map(|i| rat_from_f64(self.x[j][i].max(0.0)).unwrap_or_else(Rat::zero))
                .collect();
            let total: Rat = raw.iter().sum();
            if total.is_zero() {
                continue;
            }
            for (i, r) in raw.into_iter().enumerate() {
                if !r.is_zero() {
                    assignment.set(j, i, r / &total);
                }
            }
        }
        let utilities = assignment.utilities(part);
        let prices: Vec<Rat> = self
            .prices
            .iter()
            .map(|p| rat_from_f64(*p).unwrap_or_else(Rat::zero))
            .collect();
        EquilibriumResult {
            assignment,
            utilities,
            prices,
            residual: self.residual,
            exact: false,
        }
    }
}

/// Tries to certify `graph` as the set of best-ratio pairs of an exact
/// equilibrium. Returns None when the graph is inconsistent, violates an
/// equilibrium inequality, or admits no feasible shares.
fn certify_support(
    part: &RefinedPartition,
    budgets: &[Rat],
    graph: &[(usize, usize)],
) -> Result<Option<EquilibriumResult>> {
    let n = part.n_agents();
    let m = part.n_cells();

    let mut agent_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut cell_edges: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (e, (i, j)) in graph.iter().enumerate() {
        if part.value(*j, *i).is_zero() {
            return Ok(None);
        }
        agent_edges[*i].push(e);
        cell_edges[*j].push(e);
    }
    if agent_edges.iter().any(Vec::is_empty) || cell_edges.iter().any(Vec::is_empty) {
        return Ok(None);
    }

    // Solve the equality system p_j * u_i = c_i * v_ij on each component:
    // with p_j = gamma * q_j and u_i = w_i / gamma the system splits into
    // q/w propagation plus one budget-balance scalar gamma per component.
    let mut q: Vec<Option<Rat>> = vec![None; m];
    let mut w: Vec<Option<Rat>> = vec![None; n];
    let mut comp_of_cell: Vec<Option<usize>> = vec![None; m];
    let mut comp_of_agent: Vec<Option<usize>> = vec![None; n];
    let mut n_comps = 0;

    for seed in 0..m {
        if comp_of_cell[seed].is_some() {
            continue;
        }
        let comp = n_comps;
        n_comps += 1;
        q[seed] = Some(Rat::one());
        comp_of_cell[seed] = Some(comp);
        let mut stack: Vec<(bool, usize)> = vec![(false, seed)];
        while let Some((is_agent, node)) = stack.pop() {
            let edges = if is_agent { &agent_edges[node] } else { &cell_edges[node] };
            for &e in edges {
                let (i, j) = graph[e];
                let coeff = budgets[i].clone() * part.value(j, i);
                if is_agent {
                    let wi = w[i].clone().expect("visited agent has weight");
                    let qj = &coeff / &wi;
                    match &q[j] {
                        Some(existing) => {
                            if *existing != qj {
                                return Ok(None);
                            }
                        }
                        None => {
                            q[j] = Some(qj);
                            comp_of_cell[j] = Some(comp);
                            stack.push((false, j));
                        }
                    }
                } else {
                    let qj = q[j].clone().expect("visited cell has weight");
                    let wi = &coeff / &qj;
                    match &w[i] {
                        Some(existing) => {
                            if *existing != wi {
                                return Ok(None);
                            }
                        }
                        None => {
                            w[i] = Some(wi);
                            comp_of_agent[i] = Some(comp);
                            stack.push((true, i));
                        }
                    }
                }
            }
        }
    }
    // Bipartite reachability covers every agent because none has an empty
    // edge list.
    debug_assert!(comp_of_agent.iter().all(Option::is_some));

    let mut comp_budget = vec![Rat::zero(); n_comps];
    let mut comp_supply = vec![Rat::zero(); n_comps];
    for i in 0..n {
        comp_budget[comp_of_agent[i].unwrap()] += &budgets[i];
    }
    for j in 0..m {
        let qj = q[j].as_ref().unwrap();
        comp_supply[comp_of_cell[j].unwrap()] += qj * part.cell_len(j);
    }
    let gamma: Vec<Rat> = comp_budget
        .iter()
        .zip(&comp_supply)
        .map(|(b, s)| b / s)
        .collect();

    let prices: Vec<Rat> = (0..m)
        .map(|j| q[j].as_ref().unwrap() * &gamma[comp_of_cell[j].unwrap()])
        .collect();
    let utilities: Vec<Rat> = (0..n)
        .map(|i| w[i].as_ref().unwrap() / &gamma[comp_of_agent[i].unwrap()])
        .collect();

    // Every pair must satisfy c_i * v_ij <= u_i * p_j; edges hold with
    // equality by construction.
    for i in 0..n {
        for j in 0..m {
            let v = part.value(j, i);
            if v.is_zero() {
                continue;
            }
            if &budgets[i] * v > &utilities[i] * &prices[j] {
                return Ok(None);
            }
        }
    }

    // Recover shares on the graph: cells clear exactly and every agent
    // spends her budget exactly.
    let mut lp = LinearProgram::new(graph.len());
    for j in 0..m {
        let terms: Vec<(usize, Rat)> =
            cell_edges[j].iter().map(|&e| (e, Rat::one())).collect();
        lp.constraint_sparse(&terms, Cmp::Eq, part.cell_len(j));
    }
    for i in 0..n {
        let terms: Vec<(usize, Rat)> = agent_edges[i]
            .iter()
            .map(|&e| (e, prices[graph[e].1].clone()))
            .collect();
        lp.constraint_sparse(&terms, Cmp::Eq, budgets[i].clone());
    }
    let solution = match lp.solve()? {
        LpOutcome::Optimal { solution, .. } => solution,
        LpOutcome::Infeasible => return Ok(None),
        LpOutcome::Unbounded => {
            return Err(Error::Internal("feasibility program cannot be unbounded".into()))
        }
    };

    let mut assignment = FractionalAssignment::zero(m, n);
    for (e, (i, j)) in graph.iter().enumerate() {
        if !solution[e].is_zero() {
            assignment.add(*j, *i, &(&solution[e] / part.cell_len(*j)));
        }
    }
    debug_assert_eq!(assignment.utilities(part), utilities);

    Ok(Some(EquilibriumResult {
        assignment,
        utilities,
        prices,
        residual: 0.0,
        exact: true,
    }))
}

/// Last resort for exact mode: walk every support set over the positive
/// pairs. Only viable when that space is small.
fn enumerate_supports(
    part: &RefinedPartition,
    budgets: &[Rat],
) -> Result<Option<EquilibriumResult>> {
    let n = part.n_agents();
    let m = part.n_cells();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .filter(|&(i, j)| !part.value(j, i).is_zero())
        .collect();
    if pairs.len() > 16 {
        return Ok(None);
    }
    for mask in 1u32..(1 << pairs.len()) {
        let graph: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(e, _)| mask >> e & 1 == 1)
            .map(|(_, p)| *p)
            .collect();
        if let Some(result) = certify_support(part, budgets, &graph)? {
            return Ok(Some(result));
        }
    }
    Ok(None)
}

/// Full mechanism output.
#[derive(Debug, Clone)]
pub struct MeaRun {
    /// Partition of the kept cake, rescaled to unit length.
    pub partition: RefinedPartition,
    pub origin: OriginMap,
    pub equilibrium: EquilibriumResult,
    /// Supporting prices mapped back to the original cake: per-unit-length
    /// price over each original-coordinate cell.
    pub priced_cells: Vec<(Interval, Rat)>,
    /// Contiguous division in original coordinates.
    pub allocation: Allocation,
}

impl MeaRun {
    pub fn utilities(&self) -> &[Rat] {
        &self.equilibrium.utilities
    }
}

pub fn run_mea(profile: &Profile, mode: SolveMode) -> Result<MeaRun> {
    let whole = refine(profile, &[])?;
    let (part, origin) = free_disposal(&whole)?;
    let equilibrium = solve_equilibrium(&part, &profile.claims(), mode)?;

    // A price per unit rescaled length converts by the inverse length scale.
    let scale = origin.scale();
    let mut priced_cells = Vec::with_capacity(part.n_cells());
    for j in 0..part.n_cells() {
        let orig = origin.map_interval(&part.cell(j));
        debug_assert_eq!(orig.len(), 1);
        priced_cells.push((orig[0].clone(), &equilibrium.prices[j] / &scale));
    }

    let rescaled =
        materialize(&part, &equilibrium.assignment, Layout::Contiguous, Coordinates::Rescaled);
    debug_assert!(rescaled.waste.is_empty());
    let pieces: Vec<_> = rescaled.pieces.iter().map(|ps| origin.map_pieces(ps)).collect();
    let allocation = Allocation::new(
        pieces,
        origin.dropped().to_vec(),
        Coordinates::Original,
        &crate::model::unit_interval(),
    )?;

    Ok(MeaRun { partition: part, origin, equilibrium, priced_cells, allocation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::demo_profile;
    use crate::model::Agent;
    use crate::model::PiecewiseDensity;
    use crate::rational::{rat, rat_int};

    #[test]
    fn demo_equilibrium_is_certified() {
        let run = run_mea(&demo_profile(), SolveMode::Exact).unwrap();
        assert!(run.equilibrium.exact);
        assert_eq!(run.equilibrium.residual, 0.0);
        assert_eq!(run.utilities(), &[rat(6, 5), rat(9, 5)]);
        // Rescaled prices over the three kept cells.
        assert_eq!(run.equilibrium.prices, vec![rat(20, 3), rat(4, 3), rat(4, 3)]);
        // Original-coordinate prices.
        let prices: Vec<Rat> = run.priced_cells.iter().map(|(_, p)| p.clone()).collect();
        assert_eq!(prices, vec![rat(25, 3), rat(5, 3), rat(5, 3)]);
        let spans: Vec<Interval> = run.priced_cells.iter().map(|(c, _)| c.clone()).collect();
        assert_eq!(spans[0], Interval::new(rat_int(0), rat(1, 10)).unwrap());
        assert_eq!(spans[1], Interval::new(rat(3, 10), rat(1, 2)).unwrap());
    }

    #[test]
    fn budgets_tilt_the_equilibrium() {
        let base = demo_profile();
        let profile = Profile::new(vec![
            Agent::new("one", rat_int(2), base.agent(0).density.clone()).unwrap(),
            Agent::new("two", rat_int(1), base.agent(1).density.clone()).unwrap(),
        ])
        .unwrap();
        let run = run_mea(&profile, SolveMode::Exact).unwrap();
        assert_eq!(run.utilities(), &[rat(8, 5), rat(6, 5)]);
        let prices: Vec<Rat> = run.priced_cells.iter().map(|(_, p)| p.clone()).collect();
        assert_eq!(prices, vec![rat(25, 2), rat(5, 2), rat(5, 2)]);
    }

    #[test]
    fn opposed_tastes_split_cleanly() {
        // Each agent only wants her own half and gets it all.
        let left = PiecewiseDensity::new(
            vec![rat_int(0), rat(1, 2), rat_int(1)],
            vec![rat_int(2), rat_int(0)],
        )
        .unwrap();
        let right = PiecewiseDensity::new(
            vec![rat_int(0), rat(1, 2), rat_int(1)],
            vec![rat_int(0), rat_int(2)],
        )
        .unwrap();
        let profile = Profile::new(vec![
            Agent::with_unit_claim("l", left),
            Agent::with_unit_claim("r", right),
        ])
        .unwrap();
        let run = run_mea(&profile, SolveMode::Exact).unwrap();
        assert_eq!(run.utilities(), &[rat_int(1), rat_int(1)]);
    }

    #[test]
    fn contested_and_private_regions() {
        // Agent one: density 2 on [0,1/2]; agent two: density 1 everywhere.
        // Equilibrium gives agent two the right half plus none of the left.
        let a = PiecewiseDensity::new(
            vec![rat_int(0), rat(1, 2), rat_int(1)],
            vec![rat_int(2), rat_int(0)],
        )
        .unwrap();
        let b = PiecewiseDensity::new(vec![rat_int(0), rat_int(1)], vec![rat_int(1)]).unwrap();
        let profile = Profile::new(vec![
            Agent::with_unit_claim("a", a),
            Agent::with_unit_claim("b", b),
        ])
        .unwrap();
        let run = run_mea(&profile, SolveMode::Exact).unwrap();
        assert!(run.equilibrium.exact);
        assert_eq!(run.utilities(), &[rat_int(1), rat(1, 2)]);
    }

    #[test]
    fn iterative_matches_exact_on_the_demo() {
        let exact = run_mea(&demo_profile(), SolveMode::Exact).unwrap();
        let iter = run_mea(&demo_profile(), SolveMode::default()).unwrap();
        // The pivot certifies in both modes here.
        assert!(iter.equilibrium.exact);
        assert_eq!(exact.utilities(), iter.utilities());
    }

    #[test]
    fn single_agent_pays_everything_for_the_cake() {
        let d = PiecewiseDensity::new(
            vec![rat_int(0), rat(1, 4), rat_int(1)],
            vec![rat_int(4), rat_int(0)],
        )
        .unwrap();
        let profile = Profile::new(vec![Agent::with_unit_claim("solo", d)]).unwrap();
        let run = run_mea(&profile, SolveMode::Exact).unwrap();
        assert_eq!(run.utilities(), &[rat_int(1)]);
        assert_eq!(run.priced_cells.len(), 1);
        // All the money lands on the kept quarter: price 1/(1/4) = 4.
        assert_eq!(run.priced_cells[0].1, rat_int(4));
    }
}
