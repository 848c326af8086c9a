//! Maximum flow with exact rational capacities (Dinic's algorithm).
//!
//! Determinism: augmentation follows edge insertion order, so identical
//! networks always produce identical flows.

use num_traits::Zero;

use crate::rational::Rat;

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    cap: Rat,
    flow: Rat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeId(usize);

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    adj: Vec<Vec<usize>>,
    edges: Vec<Edge>,
}

impl FlowNetwork {
    pub fn new(n_nodes: usize) -> Self {
        FlowNetwork { adj: vec![Vec::new(); n_nodes], edges: Vec::new() }
    }

    pub fn n_nodes(&self) -> usize {
        self.adj.len()
    }

    /// Adds a directed edge and its zero-capacity reverse twin.
    pub fn add_edge(&mut self, from: usize, to: usize, cap: Rat) -> EdgeId {
        debug_assert!(cap >= Rat::zero());
        let id = self.edges.len();
        self.edges.push(Edge { to, cap, flow: Rat::zero() });
        self.edges.push(Edge { to: from, cap: Rat::zero(), flow: Rat::zero() });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        EdgeId(id)
    }

    pub fn flow_on(&self, e: EdgeId) -> &Rat {
        &self.edges[e.0].flow
    }

    fn residual(&self, edge: usize) -> Rat {
        &self.edges[edge].cap - &self.edges[edge].flow
    }

    fn bfs_levels(&self, s: usize, t: usize) -> Option<Vec<i32>> {
        let mut level = vec![-1; self.adj.len()];
        level[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.edges[e].to;
                if level[v] < 0 && !self.residual(e).is_zero() {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        (level[t] >= 0).then_some(level)
    }

    fn dfs_push(
        &mut self,
        u: usize,
        t: usize,
        limit: Option<Rat>,
        level: &[i32],
        iter: &mut [usize],
    ) -> Rat {
        if u == t {
            return limit.expect("sink reached with unlimited flow");
        }
        while iter[u] < self.adj[u].len() {
            let e = self.adj[u][iter[u]];
            let v = self.edges[e].to;
            let res = self.residual(e);
            if !res.is_zero() && level[v] == level[u] + 1 {
                let next_limit = match &limit {
                    Some(l) if *l <= res => Some(l.clone()),
                    _ => Some(res),
                };
                let pushed = self.dfs_push(v, t, next_limit, level, iter);
                if !pushed.is_zero() {
                    self.edges[e].flow += &pushed;
                    let twin_flow = &self.edges[e ^ 1].flow - &pushed;
                    self.edges[e ^ 1].flow = twin_flow;
                    return pushed;
                }
            }
            iter[u] += 1;
        }
        Rat::zero()
    }

    /// Runs Dinic to completion and returns the max flow value.
    pub fn max_flow(&mut self, s: usize, t: usize) -> Rat {
        let mut value = Rat::zero();
        while let Some(level) = self.bfs_levels(s, t) {
            let mut iter = vec![0usize; self.adj.len()];
            loop {
                let pushed = self.dfs_push(s, t, None, &level, &mut iter);
                if pushed.is_zero() {
                    break;
                }
                value += pushed;
            }
        }
        value
    }

    /// Source side of the minimum cut: nodes reachable from `s` in the
    /// residual graph. This is the unique minimal min cut (the intersection
    /// of all min cuts' source sides).
    pub fn min_cut_source_side(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.edges[e].to;
                if !seen[v] && !self.residual(e).is_zero() {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// Nodes with a residual path to `t`. Their complement is the source
    /// side of the unique maximal min cut.
    pub fn nodes_reaching_sink(&self, t: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[t] = true;
        let mut queue = std::collections::VecDeque::from([t]);
        while let Some(u) = queue.pop_front() {
            // An edge v -> u with residual capacity lets v reach t through u;
            // such edges are the twins of u's outgoing edge list.
            for &e in &self.adj[u] {
                let v = self.edges[e].to;
                if !seen[v] && !self.residual(e ^ 1).is_zero() {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// Capacity of the cut induced by a source-side indicator.
    pub fn cut_capacity(&self, source_side: &[bool]) -> Rat {
        let mut total = Rat::zero();
        for u in 0..self.adj.len() {
            if !source_side[u] {
                continue;
            }
            for &e in &self.adj[u] {
                // Skip reverse twins: they have zero capacity anyway.
                if !source_side[self.edges[e].to] {
                    total += &self.edges[e].cap;
                }
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    #[test]
    fn two_agents_one_interval() {
        // Two unit-rate sources into one interval of length 1.
        let mut net = FlowNetwork::new(5); // s, a1, a2, cell, t
        net.add_edge(0, 1, rat_int(1));
        net.add_edge(0, 2, rat_int(1));
        net.add_edge(1, 3, rat_int(10));
        net.add_edge(2, 3, rat_int(10));
        net.add_edge(3, 4, rat_int(1));
        assert_eq!(net.max_flow(0, 4), rat_int(1));
    }

    #[test]
    fn flow_equals_min_cut() {
        let mut net = FlowNetwork::new(6);
        net.add_edge(0, 1, rat(3, 2));
        net.add_edge(0, 2, rat(1, 2));
        net.add_edge(1, 3, rat(2, 3));
        net.add_edge(1, 4, rat(1, 1));
        net.add_edge(2, 4, rat(1, 3));
        net.add_edge(3, 5, rat(1, 2));
        net.add_edge(4, 5, rat(5, 4));
        let value = net.max_flow(0, 5);
        let cut = net.min_cut_source_side(0);
        assert!(cut[0] && !cut[5]);
        assert_eq!(net.cut_capacity(&cut), value);
        let reach = net.nodes_reaching_sink(5);
        let max_cut: Vec<bool> = reach.iter().map(|r| !r).collect();
        assert_eq!(net.cut_capacity(&max_cut), value);
    }

    #[test]
    fn respects_bottleneck_capacity() {
        let mut net = FlowNetwork::new(4);
        net.add_edge(0, 1, rat_int(5));
        net.add_edge(1, 2, rat(7, 3));
        net.add_edge(2, 3, rat_int(5));
        assert_eq!(net.max_flow(0, 3), rat(7, 3));
    }
}
