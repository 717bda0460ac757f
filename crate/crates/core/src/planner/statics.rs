//! Static-cost baselines. Every directed edge u → v costs its travel time plus
//! the node time at v for restoring the energy the swarm burns on it, with
//! no sharing. Costs sit on a 2^-20 minute grid so path sums are exact and
//! both algorithms agree bit for bit.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::energetics::pad_schedule_with;
use crate::precomp::Swarm;
use crate::skynet::NodeId;

use super::{PlanError, Planner};

const COST_QUANTUM: f64 = 1.0 / 1048576.0;

fn quantize(x: f64) -> f64 {
    (x / COST_QUANTUM).round() * COST_QUANTUM
}

/// Directed static-cost graph over the network's nodes (id order).
#[derive(Debug, Clone, PartialEq)]
pub struct StaticGraph {
    pub ids: Vec<NodeId>,
    /// Per node: (head index, cost in minutes). Pad-less heads are omitted.
    pub adj: Vec<Vec<(usize, f64)>>,
}

/// Floyd-Warshall result: row-major costs and next hops.
#[derive(Debug, Clone, PartialEq)]
pub struct AllPairs {
    pub n: usize,
    pub dist: Vec<f64>,
    next: Vec<usize>,
}

impl StaticGraph {
    pub fn build(planner: &Planner<'_>, swarm: &Swarm) -> Result<Self, PlanError> {
        let net = planner.net;
        let ids: Vec<NodeId> = net.nodes().iter().map(|n| n.id).collect();
        let rate = planner.model.spec.pad_charge_rate;
        let mut adj = vec![Vec::new(); ids.len()];
        for (i, &u) in ids.iter().enumerate() {
            for &(j, _) in net.adjacency_idx(i) {
                let v = ids[j];
                let pads = net.nodes()[j].pads as usize;
                if pads == 0 {
                    continue;
                }
                // battery limits are deliberately ignored here
                let (tt, spent) = planner.hop_energy(swarm, u, v)?;
                let times: Vec<f64> = spent.iter().map(|e| e / rate).collect();
                let nt = pad_schedule_with(&times, pads, planner.cfg.pad_search)?.node_time;
                adj[i].push((j, quantize(tt + nt)));
            }
        }
        Ok(Self { ids, adj })
    }

    fn idx(&self, id: NodeId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    /// Single-source costs and predecessors.
    pub fn dijkstra(&self, src: usize) -> (Vec<f64>, Vec<Option<usize>>) {
        let n = self.ids.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![None; n];
        dist[src] = 0.0;
        let mut heap = BinaryHeap::from([Reverse((0u64, src))]);
        while let Some(Reverse((bits, i))) = heap.pop() {
            let d = f64::from_bits(bits);
            if d > dist[i] {
                continue;
            }
            for &(j, c) in &self.adj[i] {
                let nd = d + c;
                if nd < dist[j] {
                    dist[j] = nd;
                    prev[j] = Some(i);
                    heap.push(Reverse((nd.to_bits(), j)));
                }
            }
        }
        (dist, prev)
    }

    pub fn dijkstra_path(&self, src: NodeId, dst: NodeId) -> Option<(f64, Vec<NodeId>)> {
        let (s, t) = (self.idx(src)?, self.idx(dst)?);
        let (dist, prev) = self.dijkstra(s);
        if !dist[t].is_finite() {
            return None;
        }
        let mut path = vec![self.ids[t]];
        let mut k = t;
        while let Some(p) = prev[k] {
            path.push(self.ids[p]);
            k = p;
        }
        path.reverse();
        Some((dist[t], path))
    }

    pub fn floyd_warshall(&self) -> AllPairs {
        let n = self.ids.len();
        let mut dist = vec![f64::INFINITY; n * n];
        let mut next = vec![usize::MAX; n * n];
        for i in 0..n {
            dist[i * n + i] = 0.0;
            next[i * n + i] = i;
            for &(j, c) in &self.adj[i] {
                if c < dist[i * n + j] {
                    dist[i * n + j] = c;
                    next[i * n + j] = j;
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                let dik = dist[i * n + k];
                if !dik.is_finite() {
                    continue;
                }
                for j in 0..n {
                    let nd = dik + dist[k * n + j];
                    if nd < dist[i * n + j] {
                        dist[i * n + j] = nd;
                        next[i * n + j] = next[i * n + k];
                    }
                }
            }
        }
        AllPairs { n, dist, next }
    }
}

impl AllPairs {
    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn path(&self, graph: &StaticGraph, src: NodeId, dst: NodeId) -> Option<(f64, Vec<NodeId>)> {
        let (mut i, t) = (graph.idx(src)?, graph.idx(dst)?);
        let c = self.cost(i, t);
        if !c.is_finite() {
            return None;
        }
        let mut path = vec![src];
        while i != t {
            i = self.next[i * self.n + t];
            path.push(graph.ids[i]);
        }
        Some((c, path))
    }
}
