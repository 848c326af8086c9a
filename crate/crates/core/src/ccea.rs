//! Claim-weighted simultaneous eating over the desired cake.
//!
//! Undesired regions are discarded first. Then every agent eats her current
//! highest-density cells at a rate equal to her claim. Consumption is not
//! pinned to particular cells while an agent still has room to maneuver: it
//! accrues as an unlocated credit against her menu. When a group turns
//! tight, meaning its combined menu can no longer absorb the members'
//! credits plus further eating, that menu is retired, settled exactly
//! against the group's consumption, and everyone re-targets. Settling
//! eagerly instead would pick an arbitrary placement for agents with slack
//! and could fabricate bottlenecks the true schedule never hits. Agents who
//! have eaten all cells they value stop. The cake is fully consumed because
//! every kept cell is desired by someone.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::kernels::{find_bottleneck, EatingNetwork};
use crate::model::{
    free_disposal, materialize, refine, Allocation, Coordinates,
    FractionalAssignment, Layout, OriginMap, Profile, RefinedPartition,
};
use crate::rational::Rat;

/// One eating stage: how long it ran and which agent group pinned it.
#[derive(Debug, Clone)]
pub struct StageRecord {
    pub duration: Rat,
    pub tight_agents: Vec<usize>,
    pub exhausted_cells: Vec<usize>,
}

/// Runs the eating schedule on a partition where every cell is desired by
/// at least one agent. `rates[i]` is agent i's eating speed.
pub fn eating_schedule(
    part: &RefinedPartition,
    rates: &[Rat],
) -> Result<(FractionalAssignment, Vec<StageRecord>)> {
    let n = part.n_agents();
    let m = part.n_cells();
    if rates.len() != n {
        return Err(Error::Internal("one eating rate per agent required".into()));
    }
    if rates.iter().any(|r| *r <= Rat::zero()) {
        return Err(Error::Internal("eating rates must be positive".into()));
    }
    for j in 0..m {
        if !part.is_desired(j) {
            return Err(Error::InfeasibleInput(
                "eating requires every cell to be desired; discard first".into(),
            ));
        }
    }

    let mut remaining: Vec<Rat> = (0..m).map(|j| part.cell_len(j)).collect();
    let mut credit: Vec<Rat> = vec![Rat::zero(); n];
    let mut assignment = FractionalAssignment::zero(m, n);
    let mut stages = Vec::new();

    loop {
        // Each agent's menu: her highest-density cells with cake left.
        let mut eaters: Vec<usize> = Vec::new();
        let mut menus: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let level = (0..m)
                .filter(|&j| !remaining[j].is_zero())
                .map(|j| part.value(j, i))
                .filter(|v| !v.is_zero())
                .max();
            let Some(level) = level else { continue };
            let menu: Vec<usize> = (0..m)
                .filter(|&j| !remaining[j].is_zero() && part.value(j, i) == level)
                .collect();
            eaters.push(i);
            menus.push(menu);
        }
        if eaters.is_empty() {
            break;
        }

        // Compact cells to those actually on some menu.
        let mut cell_ids: Vec<usize> =
            menus.iter().flatten().copied().collect();
        cell_ids.sort_unstable();
        cell_ids.dedup();
        let local_of = |j: usize| cell_ids.binary_search(&j).expect("menu cell");
        let net = EatingNetwork {
            rates: eaters.iter().map(|&i| rates[i].clone()).collect(),
            credits: eaters.iter().map(|&i| credit[i].clone()).collect(),
            menu: menus
                .iter()
                .map(|menu| menu.iter().map(|&j| local_of(j)).collect())
                .collect(),
            capacity: cell_ids.iter().map(|&j| remaining[j].clone()).collect(),
        };
        let stage = find_bottleneck(&net)?;

        // Only the tight group settles: its cells empty exactly against the
        // members' credits plus this stage's eating. Everyone else's
        // consumption stays unlocated so later bottlenecks see the true
        // remaining capacity.
        let mut is_tight = vec![false; eaters.len()];
        for (t, &e) in stage.tight_agents.iter().enumerate() {
            is_tight[e] = true;
            let agent = eaters[e];
            for (local, length) in &stage.settled[t] {
                let j = cell_ids[*local];
                assignment.add(j, agent, &(length / part.cell_len(j)));
                remaining[j] -= length;
                debug_assert!(remaining[j] >= Rat::zero());
            }
            credit[agent] = Rat::zero();
        }
        for (e, &agent) in eaters.iter().enumerate() {
            if !is_tight[e] {
                credit[agent] += &stage.delta * &rates[agent];
            }
        }
        stages.push(StageRecord {
            duration: stage.delta,
            tight_agents: stage.tight_agents.iter().map(|&e| eaters[e]).collect(),
            exhausted_cells: stage
                .tight_cells
                .iter()
                .map(|&local| cell_ids[local])
                .collect(),
        });
    }

    // Every cell is desired, and its desirers only stop once it is empty;
    // every eater exits through a settlement, so no credit is left behind.
    debug_assert!(remaining.iter().all(Rat::is_zero));
    debug_assert!(credit.iter().all(Rat::is_zero));
    Ok((assignment, stages))
}

/// Full mechanism output.
#[derive(Debug, Clone)]
pub struct CceaRun {
    /// Partition of the kept cake, rescaled to unit length.
    pub partition: RefinedPartition,
    /// Maps rescaled coordinates back to the original cake.
    pub origin: OriginMap,
    pub assignment: FractionalAssignment,
    pub stages: Vec<StageRecord>,
    pub utilities: Vec<Rat>,
    /// Contiguous-by-cell division in original coordinates; waste is the
    /// discarded, nobody-wants-it region.
    pub allocation: Allocation,
}

pub fn run_ccea(profile: &Profile) -> Result<CceaRun> {
    let whole = refine(profile, &[])?;
    let (part, origin) = free_disposal(&whole)?;
    let (assignment, stages) = eating_schedule(&part, &profile.claims())?;
    let utilities = assignment.utilities(&part);

    let rescaled = materialize(&part, &assignment, Layout::Contiguous, Coordinates::Rescaled);
    debug_assert!(rescaled.waste.is_empty());
    let pieces: Vec<_> = rescaled
        .pieces
        .iter()
        .map(|ps| origin.map_pieces(ps))
        .collect();
    let allocation = Allocation::new(
        pieces,
        origin.dropped().to_vec(),
        Coordinates::Original,
        &crate::model::unit_interval(),
    )?;

    Ok(CceaRun { partition: part, origin, assignment, stages, utilities, allocation })
}
