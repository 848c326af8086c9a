//! Bottleneck search for simultaneous eating with deferred settlement.
//!
//! Agents eat cells from their menus at fixed rates, and may carry a
//! `credit`: length already consumed at this menu but not yet pinned to
//! particular cells. The bottleneck duration is the largest time delta for
//! which every agent group's total consumption, credit included, still fits
//! in the capacity of its menu:
//!
//!   delta* = min over nonempty agent sets S of (cap(N(S)) - credit(S)) / rate(S)
//!
//! where N(S) is the union of the menus of agents in S. The search is a
//! discrete Newton iteration on delta: test feasibility of serving
//! `credit_i + delta * rate_i` to every agent by max flow, and when
//! infeasible read an improving set off the minimum cut. Each improving set
//! has a strictly smaller neighborhood, so at most one iteration per cell is
//! needed.
//!
//! Only the maximal tight set settles: its neighborhood is exhausted exactly
//! by its members' credits plus this stage's consumption. Everyone else's
//! consumption stays unlocated and is returned to the caller as grown
//! credit. Pinning it to cells early would deplete capacity arbitrarily and
//! manufacture bottlenecks that the true eating schedule never hits.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::kernels::flow::{EdgeId, FlowNetwork};
use crate::rational::Rat;

/// One eating stage: each agent consumes cells from `menu[agent]` at
/// `rates[agent]` length per unit time, owing `credits[agent]` of unlocated
/// past consumption; `capacity[cell]` bounds the total length taken from a
/// cell.
#[derive(Debug, Clone)]
pub struct EatingNetwork {
    pub rates: Vec<Rat>,
    pub credits: Vec<Rat>,
    pub menu: Vec<Vec<usize>>,
    pub capacity: Vec<Rat>,
}

/// The bottleneck: its duration, the maximal tight agent set with its
/// neighborhood, and the settlement that empties that neighborhood.
#[derive(Debug, Clone)]
pub struct Bottleneck {
    pub delta: Rat,
    pub tight_agents: Vec<usize>,
    pub tight_cells: Vec<usize>,
    /// Aligned with `tight_agents`: (cell, length) consumption covering that
    /// agent's credit plus `delta * rate`. Exhausts `tight_cells` exactly.
    pub settled: Vec<Vec<(usize, Rat)>>,
}

struct BuiltNet {
    net: FlowNetwork,
    sink: usize,
}

impl EatingNetwork {
    fn validate(&self) -> Result<()> {
        if self.rates.len() != self.menu.len() || self.rates.len() != self.credits.len() {
            return Err(Error::Internal("menu, rates, and credits disagree on agent count".into()));
        }
        for rate in &self.rates {
            if *rate <= Rat::zero() {
                return Err(Error::Internal("eating rate must be positive".into()));
            }
        }
        for credit in &self.credits {
            if *credit < Rat::zero() {
                return Err(Error::Internal("credit must be non-negative".into()));
            }
        }
        for cap in &self.capacity {
            if *cap <= Rat::zero() {
                return Err(Error::Internal("cell capacity must be positive".into()));
            }
        }
        for menu in &self.menu {
            if menu.is_empty() {
                return Err(Error::Internal("agent with empty menu".into()));
            }
            if menu.iter().any(|&c| c >= self.capacity.len()) {
                return Err(Error::Internal("menu references unknown cell".into()));
            }
        }
        Ok(())
    }

    /// Nodes: 0 = source, 1..=A agents, A+1..=A+M cells, last = sink.
    fn build(&self, delta: &Rat) -> BuiltNet {
        let a = self.rates.len();
        let m = self.capacity.len();
        let mut net = FlowNetwork::new(a + m + 2);
        let sink = a + m + 1;
        // Any finite bound above total cell capacity acts as infinity.
        let inf: Rat = self.capacity.iter().sum::<Rat>() + Rat::one();
        for (i, rate) in self.rates.iter().enumerate() {
            net.add_edge(0, 1 + i, &self.credits[i] + delta * rate);
        }
        for (i, menu) in self.menu.iter().enumerate() {
            for &c in menu {
                net.add_edge(1 + i, 1 + a + c, inf.clone());
            }
        }
        for (c, cap) in self.capacity.iter().enumerate() {
            net.add_edge(1 + a + c, sink, cap.clone());
        }
        BuiltNet { net, sink }
    }

    fn ratio_of(&self, agents: &[usize]) -> Rat {
        let mut in_nbhd = vec![false; self.capacity.len()];
        for &i in agents {
            for &c in &self.menu[i] {
                in_nbhd[c] = true;
            }
        }
        let cap: Rat = (0..self.capacity.len())
            .filter(|&c| in_nbhd[c])
            .map(|c| self.capacity[c].clone())
            .sum();
        let credit: Rat = agents.iter().map(|&i| self.credits[i].clone()).sum();
        let rate: Rat = agents.iter().map(|&i| self.rates[i].clone()).sum();
        (cap - credit) / rate
    }
}

/// Finds the bottleneck duration, the maximal tight set, and its settlement.
pub fn find_bottleneck(net: &EatingNetwork) -> Result<Bottleneck> {
    net.validate()?;
    let a = net.rates.len();
    let all: Vec<usize> = (0..a).collect();
    let total_rate: Rat = net.rates.iter().sum();
    let total_credit: Rat = net.credits.iter().sum();
    let mut delta = net.ratio_of(&all);

    for _round in 0..=net.capacity.len() {
        let mut built = net.build(&delta);
        let value = built.net.max_flow(0, built.sink);
        if value == &total_credit + &delta * &total_rate {
            // Feasible at delta, and delta is a set's ratio, so delta = delta*.
            let reach_sink = built.net.nodes_reaching_sink(built.sink);
            let tight_agents: Vec<usize> =
                (0..a).filter(|i| !reach_sink[1 + i]).collect();
            let tight_cells: Vec<usize> = (0..net.capacity.len())
                .filter(|c| !reach_sink[1 + a + c])
                .collect();
            let settled = settle(net, &delta, &tight_agents, &tight_cells)?;
            return Ok(Bottleneck { delta, tight_agents, tight_cells, settled });
        }
        // Infeasible: agents on the source side of the min cut form a set
        // whose ratio is strictly below delta.
        let side = built.net.min_cut_source_side(0);
        let improving: Vec<usize> = (0..a).filter(|i| side[1 + i]).collect();
        debug_assert!(!improving.is_empty());
        let next = net.ratio_of(&improving);
        debug_assert!(next < delta);
        delta = next;
    }
    Err(Error::Internal("bottleneck iteration failed to converge".into()))
}

/// Exhausts the tight cells among the tight agents exactly: each agent
/// receives credit + delta * rate, and the totals match the capacity of the
/// tight neighborhood. A tight agent's whole menu lies in the tight cells.
fn settle(
    net: &EatingNetwork,
    delta: &Rat,
    tight_agents: &[usize],
    tight_cells: &[usize],
) -> Result<Vec<Vec<(usize, Rat)>>> {
    let a = tight_agents.len();
    let m = tight_cells.len();
    let mut flow = FlowNetwork::new(a + m + 2);
    let sink = a + m + 1;
    let inf: Rat = tight_cells.iter().map(|&c| net.capacity[c].clone()).sum::<Rat>() + Rat::one();
    let mut menu_edges: Vec<Vec<(usize, EdgeId)>> = Vec::with_capacity(a);
    for (e, &i) in tight_agents.iter().enumerate() {
        flow.add_edge(0, 1 + e, &net.credits[i] + delta * &net.rates[i]);
        let mut edges = Vec::with_capacity(net.menu[i].len());
        for &c in &net.menu[i] {
            let local = tight_cells
                .binary_search(&c)
                .map_err(|_| Error::Internal("tight agent's menu leaks past the tight cells".into()))?;
            edges.push((c, flow.add_edge(1 + e, 1 + a + local, inf.clone())));
        }
        menu_edges.push(edges);
    }
    for (local, &c) in tight_cells.iter().enumerate() {
        flow.add_edge(1 + a + local, sink, net.capacity[c].clone());
    }
    let value = flow.max_flow(0, sink);
    let total: Rat = tight_cells.iter().map(|&c| net.capacity[c].clone()).sum();
    if value != total {
        return Err(Error::Internal("settlement failed to exhaust the tight cells".into()));
    }
    Ok(menu_edges
        .into_iter()
        .map(|edges| {
            edges
                .into_iter()
                .filter_map(|(c, e)| {
                    let length = flow.flow_on(e).clone();
                    (!length.is_zero()).then_some((c, length))
                })
                .collect()
        })
        .collect())
}

/// Reference implementation: minimum credit-adjusted ratio over all nonempty
/// agent subsets. Exponential; for tests only.
pub fn min_ratio_bruteforce(net: &EatingNetwork) -> Rat {
    let a = net.rates.len();
    assert!(a <= 16, "brute force is for small instances");
    let mut best: Option<Rat> = None;
    for mask in 1u32..(1 << a) {
        let agents: Vec<usize> = (0..a).filter(|i| mask >> i & 1 == 1).collect();
        let ratio = net.ratio_of(&agents);
        if best.as_ref().map_or(true, |b| ratio < *b) {
            best = Some(ratio);
        }
    }
    best.expect("at least one agent")
}
