use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::{NetworkError, NodeId, SkywayNetwork};

#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPath {
    /// Meters.
    pub distance: f64,
    /// Node sequence from source to target inclusive.
    pub path: Vec<NodeId>,
}

#[derive(PartialEq)]
struct Label {
    dist: f64,
    path: Vec<NodeId>,
}

impl Eq for Label {}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then_with(|| self.path.cmp(&other.path))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimum-distance path from `a` to `b`. Among equally short paths the
/// lexicographically smallest node-id sequence wins. `Ok(None)` means `b`
/// is unreachable from `a`.
pub fn shortest_distance(
    net: &SkywayNetwork,
    a: NodeId,
    b: NodeId,
) -> Result<Option<ShortestPath>, NetworkError> {
    let ia = net.idx(a).ok_or(NetworkError::UnknownNode {
        u: a,
        v: b,
        missing: a,
    })?;
    let ib = net.idx(b).ok_or(NetworkError::UnknownNode {
        u: a,
        v: b,
        missing: b,
    })?;
    let n = net.node_count();
    let mut best: Vec<Option<Label>> = (0..n).map(|_| None).collect();
    let mut done = vec![false; n];
    let start = Label {
        dist: 0.0,
        path: vec![a],
    };
    // stale heap entries are skipped by comparing keys against `best`
    let mut pending: BinaryHeap<Reverse<(LabelKey, usize)>> = BinaryHeap::new();
    pending.push(Reverse((LabelKey::of(&start), ia)));
    best[ia] = Some(start);
    while let Some(Reverse((key, i))) = pending.pop() {
        if done[i] {
            continue;
        }
        let cur = best[i].as_ref().unwrap();
        if key != LabelKey::of(cur) {
            continue;
        }
        done[i] = true;
        if i == ib {
            break;
        }
        let (dist, path) = (cur.dist, cur.path.clone());
        for &(j, s) in net.adjacency_idx(i) {
            if done[j] {
                continue;
            }
            let mut p = path.clone();
            p.push(net.nodes[j].id);
            let cand = Label {
                dist: dist + net.segments[s].distance,
                path: p,
            };
            let better = match &best[j] {
                None => true,
                Some(old) => cand < *old,
            };
            if better {
                pending.push(Reverse((LabelKey::of(&cand), j)));
                best[j] = Some(cand);
            }
        }
    }
    Ok(best[ib].take().map(|l| ShortestPath {
        distance: l.dist,
        path: l.path,
    }))
}

/// Heap key mirroring `Label` ordering without borrowing it.
#[derive(Debug, Clone, PartialEq, Eq)]
struct LabelKey(u64, Vec<u32>);

impl LabelKey {
    fn of(l: &Label) -> Self {
        // non-negative finite distances order the same as their bit patterns
        LabelKey(l.dist.to_bits(), l.path.iter().map(|n| n.0).collect())
    }
}

impl Ord for LabelKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0).then_with(|| self.1.cmp(&other.1))
    }
}

impl PartialOrd for LabelKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All-pairs shortest distances (meters), one Dijkstra per source.
#[derive(Debug, Clone)]
pub struct DistanceTable {
    ids: Vec<NodeId>,
    dist: Vec<f64>,
    n: usize,
}

impl DistanceTable {
    pub fn new(net: &SkywayNetwork) -> Self {
        let n = net.node_count();
        let mut dist = vec![f64::INFINITY; n * n];
        for s in 0..n {
            let row = &mut dist[s * n..(s + 1) * n];
            row[s] = 0.0;
            let mut heap = BinaryHeap::new();
            heap.push(Reverse((0u64, s)));
            while let Some(Reverse((bits, i))) = heap.pop() {
                let d = f64::from_bits(bits);
                if d > row[i] {
                    continue;
                }
                for &(j, seg) in net.adjacency_idx(i) {
                    let nd = d + net.segments[seg].distance;
                    if nd < row[j] {
                        row[j] = nd;
                        heap.push(Reverse((nd.to_bits(), j)));
                    }
                }
            }
        }
        Self {
            ids: net.nodes.iter().map(|n| n.id).collect(),
            dist,
            n,
        }
    }

    fn idx(&self, id: NodeId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    /// `None` if either node is unknown or the pair is disconnected.
    pub fn distance(&self, a: NodeId, b: NodeId) -> Option<f64> {
        let d = self.dist[self.idx(a)? * self.n + self.idx(b)?];
        d.is_finite().then_some(d)
    }

    /// Largest finite pairwise distance.
    pub fn diameter(&self) -> f64 {
        self.dist
            .iter()
            .copied()
            .filter(|d| d.is_finite())
            .fold(0.0, f64::max)
    }
}
