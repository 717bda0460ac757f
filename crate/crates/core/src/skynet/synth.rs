//! Seeded generators for networks, wind fields and delivery requests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DeliveryRequest, NetworkError, Node, NodeId, Segment, SkywayNetwork, Wind, MAX_SAFE_WIND};

fn draw_wind(rng: &mut ChaCha8Rng) -> Wind {
    let speed = rng.random_range(0.0..MAX_SAFE_WIND);
    let direction = rng.random_range(0.0..360.0);
    Wind::new(speed, direction).expect("sampled inside bounds")
}

/// Replaces every segment's wind with an i.i.d. draw.
pub fn synthesize_wind(net: &SkywayNetwork, seed: u64) -> SkywayNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let segments = net
        .segments()
        .iter()
        .map(|s| Segment {
            wind: Some(draw_wind(&mut rng)),
            ..*s
        })
        .collect();
    net.with_segments(segments).expect("topology unchanged")
}

/// Like [`synthesize_wind`] but keeps winds already present. A segment that
/// gets filled receives the same value `synthesize_wind` would give it.
pub fn fill_missing_wind(net: &SkywayNetwork, seed: u64) -> SkywayNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let segments = net
        .segments()
        .iter()
        .map(|s| {
            let drawn = draw_wind(&mut rng);
            Segment {
                wind: Some(s.wind.unwrap_or(drawn)),
                ..*s
            }
        })
        .collect();
    net.with_segments(segments).expect("topology unchanged")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestSynthParams {
    pub n: usize,
    pub seed: u64,
    /// kg
    pub max_weight: f64,
    pub min_packages: usize,
    pub max_packages: usize,
}

impl Default for RequestSynthParams {
    fn default() -> Self {
        Self {
            n: 10_000,
            seed: 0,
            max_weight: 1.4,
            min_packages: 2,
            max_packages: 5,
        }
    }
}

pub fn synthesize_requests(
    net: &SkywayNetwork,
    params: &RequestSynthParams,
) -> Result<Vec<DeliveryRequest>, NetworkError> {
    let bad = |msg: &str| NetworkError::Synthesis(msg.to_string());
    if params.n == 0 {
        return Err(bad("request count must be positive"));
    }
    if net.node_count() < 2 {
        return Err(bad("request synthesis needs at least 2 nodes"));
    }
    if !(params.max_weight > 0.0 && params.max_weight.is_finite()) {
        return Err(bad("max_weight must be positive"));
    }
    if params.min_packages == 0 || params.min_packages > params.max_packages {
        return Err(bad("package range must satisfy 1 <= min <= max"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let ids: Vec<NodeId> = net.nodes().iter().map(|n| n.id).collect();
    let mut out = Vec::with_capacity(params.n);
    for i in 0..params.n {
        let s = rng.random_range(0..ids.len());
        // shift past `s` so the destination is uniform over the others
        let mut d = rng.random_range(0..ids.len() - 1);
        if d >= s {
            d += 1;
        }
        let count = rng.random_range(params.min_packages..=params.max_packages);
        // (0, max]: 1 - u with u in [0, 1)
        let package_weights = (0..count)
            .map(|_| params.max_weight * (1.0 - rng.random::<f64>()))
            .collect();
        out.push(DeliveryRequest {
            id: i as u32 + 1,
            source: ids[s],
            destination: ids[d],
            package_weights,
        });
    }
    Ok(out)
}

/// Clustered city-like network. `core_nodes` form one connected component
/// (dense clusters joined by longer bridges); `outlier_nodes` sit in tiny
/// disconnected groups, so the largest component has exactly `core_nodes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSynthParams {
    pub seed: u64,
    pub core_nodes: usize,
    pub outlier_nodes: usize,
    pub clusters: usize,
    /// Side of the square the cluster centres are drawn in (m).
    pub extent_m: f64,
    /// Standard deviation of node scatter around a cluster centre (m).
    pub cluster_spread_m: f64,
    /// Intra-cluster nearest neighbours linked per node.
    pub knn: usize,
    /// Each cluster is bridged to this many nearest clusters.
    pub bridges_per_cluster: usize,
    /// Segment length = straight-line length × uniform(1, 1 + slack).
    pub path_slack: f64,
    pub max_pads: u32,
}

impl Default for NetworkSynthParams {
    fn default() -> Self {
        Self {
            seed: 0,
            core_nodes: 195,
            outlier_nodes: 81,
            clusters: 9,
            extent_m: 35_000.0,
            cluster_spread_m: 900.0,
            knn: 3,
            bridges_per_cluster: 2,
            path_slack: 0.15,
            max_pads: 4,
        }
    }
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; 1 - u keeps the log argument in (0, 1]
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

pub fn synthesize_network(p: &NetworkSynthParams) -> Result<SkywayNetwork, NetworkError> {
    let bad = |msg: &str| NetworkError::Synthesis(msg.to_string());
    if p.core_nodes == 0 || p.clusters == 0 || p.clusters > p.core_nodes {
        return Err(bad("need 1 <= clusters <= core_nodes"));
    }
    if p.outlier_nodes > 0 && p.core_nodes < 4 {
        return Err(bad("outlier groups must stay smaller than the core"));
    }
    if !(p.extent_m > 0.0 && p.cluster_spread_m > 0.0 && p.path_slack >= 0.0) {
        return Err(bad("geometry parameters must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let total = p.core_nodes + p.outlier_nodes;
    let mut labels: Vec<u32> = (1..=total as u32).collect();
    labels.shuffle(&mut rng);

    let centres: Vec<(f64, f64)> = (0..p.clusters)
        .map(|_| {
            (
                rng.random_range(0.0..p.extent_m),
                rng.random_range(0.0..p.extent_m),
            )
        })
        .collect();
    let mut pos: Vec<(f64, f64)> = Vec::with_capacity(total);
    let mut cluster_of: Vec<usize> = Vec::with_capacity(p.core_nodes);
    for i in 0..p.core_nodes {
        // round-robin first so every cluster is non-empty
        let c = if i < p.clusters {
            i
        } else {
            rng.random_range(0..p.clusters)
        };
        let (cx, cy) = centres[c];
        pos.push((
            cx + gauss(&mut rng) * p.cluster_spread_m,
            cy + gauss(&mut rng) * p.cluster_spread_m,
        ));
        cluster_of.push(c);
    }

    let mut edges: Vec<(usize, usize)> = Vec::new();
    let add = |edges: &mut Vec<(usize, usize)>, a: usize, b: usize| {
        let e = (a.min(b), a.max(b));
        if a != b && !edges.contains(&e) {
            edges.push(e);
        }
    };

    let members: Vec<Vec<usize>> = (0..p.clusters)
        .map(|c| (0..p.core_nodes).filter(|&i| cluster_of[i] == c).collect())
        .collect();
    for m in &members {
        for &i in m {
            let mut near: Vec<usize> = m.iter().copied().filter(|&j| j != i).collect();
            near.sort_by(|&a, &b| dist(pos[i], pos[a]).total_cmp(&dist(pos[i], pos[b])));
            for &j in near.iter().take(p.knn) {
                add(&mut edges, i, j);
            }
        }
        // chain by x so each cluster is connected even when knn groups split
        let mut by_x = m.clone();
        by_x.sort_by(|&a, &b| pos[a].0.total_cmp(&pos[b].0));
        for w in by_x.windows(2) {
            if !same_component(&edges, m, w[0], w[1]) {
                add(&mut edges, w[0], w[1]);
            }
        }
    }

    let closest_pair = |ca: usize, cb: usize| -> (usize, usize) {
        let mut best = (members[ca][0], members[cb][0]);
        let mut bd = f64::INFINITY;
        for &a in &members[ca] {
            for &b in &members[cb] {
                let d = dist(pos[a], pos[b]);
                if d < bd {
                    bd = d;
                    best = (a, b);
                }
            }
        }
        best
    };
    // cluster-level spanning tree (Prim on centre distances), then extra bridges
    let mut in_tree = vec![false; p.clusters];
    in_tree[0] = true;
    for _ in 1..p.clusters {
        let mut best = (f64::INFINITY, 0, 0);
        for a in (0..p.clusters).filter(|&a| in_tree[a]) {
            for b in (0..p.clusters).filter(|&b| !in_tree[b]) {
                let d = dist(centres[a], centres[b]);
                if d < best.0 {
                    best = (d, a, b);
                }
            }
        }
        in_tree[best.2] = true;
        let (x, y) = closest_pair(best.1, best.2);
        add(&mut edges, x, y);
    }
    for a in 0..p.clusters {
        let mut others: Vec<usize> = (0..p.clusters).filter(|&b| b != a).collect();
        others.sort_by(|&x, &y| dist(centres[a], centres[x]).total_cmp(&dist(centres[a], centres[y])));
        for &b in others.iter().take(p.bridges_per_cluster) {
            let (x, y) = closest_pair(a, b);
            add(&mut edges, x, y);
        }
    }

    // outliers: groups of 1-3 nodes, linked only among themselves
    let mut left = p.outlier_nodes;
    while left > 0 {
        let size = rng.random_range(1..=3).min(left);
        let base = (
            rng.random_range(0.0..p.extent_m),
            rng.random_range(0.0..p.extent_m),
        );
        let first = pos.len();
        for _ in 0..size {
            pos.push((
                base.0 + gauss(&mut rng) * 200.0,
                base.1 + gauss(&mut rng) * 200.0,
            ));
        }
        for k in 1..size {
            add(&mut edges, first + k - 1, first + k);
        }
        left -= size;
    }

    let nodes: Vec<Node> = pos
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| Node {
            id: NodeId(labels[i]),
            x,
            y,
            pads: rng.random_range(1..=p.max_pads.max(1)),
        })
        .collect();
    let segments = edges
        .iter()
        .map(|&(a, b)| {
            let stretch = 1.0 + p.path_slack * rng.random::<f64>();
            Segment {
                u: nodes[a].id,
                v: nodes[b].id,
                distance: (dist(pos[a], pos[b]) * stretch).max(1.0),
                wind: None,
            }
        })
        .collect();
    SkywayNetwork::new(nodes, segments)
}

fn same_component(edges: &[(usize, usize)], members: &[usize], a: usize, b: usize) -> bool {
    let mut seen = vec![a];
    let mut stack = vec![a];
    while let Some(i) = stack.pop() {
        if i == b {
            return true;
        }
        for &(x, y) in edges {
            let n = if x == i {
                y
            } else if y == i {
                x
            } else {
                continue;
            };
            if members.contains(&n) && !seen.contains(&n) {
                seen.push(n);
                stack.push(n);
            }
        }
    }
    false
}
