//! Independent oracles and fixtures shared by the integration tests.
//!
//! The sharing oracle works in integer units: time in 2^-26 minute ticks and
//! energy in 2^-26 mAh. Cases use integer batteries and burn rates and a
//! power-of-two transfer rate, so every quantity the engine computes is
//! exactly representable and the two must agree bit for bit.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarmway_core::energetics::{DroneId, FormationKind, Role};
use swarmway_core::precomp::Formation;
use swarmway_core::sharing::{
    fb_compose, pb_compose, EaaSOffer, Leg, LegDrone, RequestSource, SharingError, SharingOutcome, FULL_TOLERANCE,
};
use swarmway_core::skynet::{Node, NodeId, Segment, SkywayNetwork, Wind};

const SCALE: i128 = 1 << 26;
/// Shared amounts are floored to 2^-20 mAh.
const AMOUNT_GRID: i128 = SCALE >> 20;

#[derive(Debug, Clone)]
pub struct ShareDrone {
    pub id: u32,
    pub battery: u32,
    pub capacity: u32,
    /// mAh/min, the same in every slot.
    pub burn: u32,
}

#[derive(Debug, Clone)]
pub struct ShareCase {
    pub minutes: u32,
    /// mAh/min; a power of two no larger than 64.
    pub share_rate: u32,
    pub provider: ShareDrone,
    pub deliveries: Vec<ShareDrone>,
    pub ae: u32,
    pub gamma: f64,
    pub lambda: u32,
    pub delta: u32,
}

pub fn random_share_case(rng: &mut ChaCha8Rng) -> ShareCase {
    let n = rng.random_range(1..=4);
    let deliveries = (0..n)
        .map(|i| {
            let capacity = [1000, 2240, 4480][rng.random_range(0..3)];
            ShareDrone {
                id: i as u32 + 1,
                battery: rng.random_range(capacity / 5..=capacity),
                capacity,
                burn: rng.random_range(5..=80),
            }
        })
        .collect();
    ShareCase {
        minutes: rng.random_range(1..=200),
        share_rate: [8, 16, 32, 64][rng.random_range(0..4)],
        provider: ShareDrone {
            id: 50,
            battery: 17_920,
            capacity: 17_920,
            burn: rng.random_range(10..=60),
        },
        deliveries,
        ae: rng.random_range(0..=15_000),
        gamma: [0.5, 0.8, 0.9][rng.random_range(0..3)],
        lambda: [250, 1000, 2240][rng.random_range(0..3)],
        delta: rng.random_range(0..=4000),
    }
}

impl ShareCase {
    fn drones(&self) -> Vec<&ShareDrone> {
        std::iter::once(&self.provider).chain(&self.deliveries).collect()
    }

    /// Provider in slot 0 of a column, delivery drones behind it.
    fn run_engine(
        &self,
        f: impl FnOnce(&Leg<'_>, EaaSOffer, Vec<DroneId>) -> Result<SharingOutcome, SharingError>,
    ) -> SharingOutcome {
        let formation = Formation::new(FormationKind::Column, self.deliveries.len() + 1);
        let burns: Vec<f64> = self.drones().iter().map(|d| d.burn as f64).collect();
        let rates = move |d: usize, _slot: usize| burns[d];
        let drones = self
            .drones()
            .iter()
            .enumerate()
            .map(|(slot, d)| LegDrone {
                id: DroneId(d.id),
                role: if slot == 0 { Role::Support } else { Role::Delivery },
                battery: d.battery as f64,
                capacity: d.capacity as f64,
                slot,
            })
            .collect();
        let leg = Leg {
            minutes: self.minutes as f64,
            formation: &formation,
            drones,
            rates: &rates,
        };
        let offer = EaaSOffer {
            id: 1,
            provider: DroneId(self.provider.id),
            ae: self.ae as f64,
            st: 0.0,
            et: self.minutes as f64,
            loc: 0,
        };
        let consumers = self.deliveries.iter().map(|d| DroneId(d.id)).collect();
        f(&leg, offer, consumers).expect("engine accepts the case")
    }

    pub fn engine_pb(&self) -> Vec<f64> {
        self.pb_outcome().final_batteries(self.minutes as f64)
    }

    pub fn engine_fb(&self) -> Vec<f64> {
        self.fb_outcome().final_batteries(self.minutes as f64)
    }

    pub fn pb_outcome(&self) -> SharingOutcome {
        self.run_engine(|leg, offer, consumers| {
            pb_compose(
                leg,
                offer,
                consumers,
                RequestSource::Threshold { gamma: self.gamma },
                self.share_rate as f64,
            )
        })
    }

    pub fn fb_outcome(&self) -> SharingOutcome {
        self.run_engine(|leg, offer, consumers| {
            fb_compose(
                leg,
                offer,
                consumers,
                self.lambda as f64,
                self.delta as f64,
                self.share_rate as f64,
            )
        })
    }
}

/// Exact state of one leg: index 0 is the provider.
struct Sim<'c> {
    case: &'c ShareCase,
    now: i128,
    battery: Vec<i128>,
    ae: i128,
}

impl<'c> Sim<'c> {
    fn new(case: &'c ShareCase) -> Self {
        Self {
            case,
            now: 0,
            battery: case.drones().iter().map(|d| d.battery as i128 * SCALE).collect(),
            ae: case.ae as i128 * SCALE,
        }
    }

    fn end(&self) -> i128 {
        self.case.minutes as i128 * SCALE
    }

    fn burn(&self, i: usize) -> i128 {
        self.case.drones()[i].burn as i128
    }

    fn capacity(&self, i: usize) -> i128 {
        self.case.drones()[i].capacity as i128 * SCALE
    }

    /// Advances to `t`, with `flow` = Some(consumer) while the provider shares.
    fn advance(&mut self, t: i128, flow: Option<usize>) {
        let dt = t - self.now;
        assert!(dt >= 0);
        for i in 0..self.battery.len() {
            self.battery[i] -= self.burn(i) * dt;
        }
        if let Some(c) = flow {
            let moved = self.case.share_rate as i128 * dt;
            self.battery[c] += moved;
            self.battery[0] -= moved;
        }
        self.now = t;
    }

    fn floor_amount(a: i128) -> i128 {
        a.div_euclid(AMOUNT_GRID) * AMOUNT_GRID
    }

    /// What fits before the leg ends, floored to the amount grid.
    fn deliverable(&self, wanted: i128) -> i128 {
        let room = self.case.share_rate as i128 * (self.end() - self.now);
        Self::floor_amount(wanted.min(room))
    }

    fn serve(&mut self, c: usize, amount: i128) {
        self.ae -= amount;
        let until = self.now + amount / self.case.share_rate as i128;
        self.advance(until, Some(c));
    }

    fn finish(mut self) -> Vec<f64> {
        let end = self.end();
        if self.now < end {
            self.advance(end, None);
        }
        self.battery.iter().map(|&b| b as f64 / SCALE as f64).collect()
    }
}

fn below(units: i128, threshold_mah: f64) -> bool {
    (units as f64) < threshold_mah * SCALE as f64
}

/// Priority-based sharing: whenever the provider is free, every delivery
/// drone's request is rebuilt from its battery line since it was last
/// served, and the earliest (then largest, then lowest id) one that the
/// remaining offer covers is served in full.
pub fn oracle_pb(case: &ShareCase) -> Vec<f64> {
    let mut sim = Sim::new(case);
    let n = case.deliveries.len();
    let mut eligible = vec![0i128; n + 1];
    loop {
        if sim.now >= sim.end() {
            break;
        }
        let mut requests: Vec<(i128, i128, u32, usize)> = Vec::new();
        for c in 1..=n {
            let d = &case.deliveries[c - 1];
            let threshold = case.gamma * d.capacity as f64;
            // no inflow since `eligible`, so the battery is one straight line
            let at = |m: i128| sim.battery[c] - sim.burn(c) * (m * SCALE - sim.now);
            let first = (eligible[c] + SCALE - 1).div_euclid(SCALE);
            if let Some(m) = (first..case.minutes as i128).find(|&m| below(at(m), threshold)) {
                requests.push((m, sim.capacity(c) - at(m), d.id, c));
            }
        }
        requests.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
        let pick = requests.into_iter().find(|&(_, re, _, _)| re > 0 && re <= sim.ae);
        let Some((minute, re, _, c)) = pick else {
            break;
        };
        if minute * SCALE > sim.now {
            sim.advance(minute * SCALE, None);
            continue;
        }
        let amount = sim.deliverable(re);
        if amount <= 0 {
            break;
        }
        sim.serve(c, amount);
        eligible[c] = sim.now;
    }
    sim.finish()
}

/// Fairness-based sharing: round robin by drone id, each grant the least of
/// lambda, the drone's room and the offer above the reserve. Drones within
/// the full tolerance are skipped; with nobody to serve the provider looks
/// again at the next whole minute.
pub fn oracle_fb(case: &ShareCase) -> Vec<f64> {
    let mut sim = Sim::new(case);
    let n = case.deliveries.len();
    let (lambda, delta) = (case.lambda as i128 * SCALE, case.delta as i128 * SCALE);
    let mut next = 0usize;
    while sim.now < sim.end() && sim.ae > delta && n > 0 {
        let mut served = false;
        for j in 0..n {
            let pos = (next + j) % n;
            let c = pos + 1;
            let room = sim.capacity(c) - sim.battery[c];
            let full = FULL_TOLERANCE * case.deliveries[pos].capacity as f64;
            if below(room, full) {
                continue;
            }
            let grant = Sim::floor_amount(lambda.min(room).min(sim.ae - delta));
            if grant <= 0 {
                continue;
            }
            let amount = sim.deliverable(grant);
            if amount <= 0 {
                continue;
            }
            next = (pos + 1) % n;
            sim.serve(c, amount);
            served = true;
            break;
        }
        if !served {
            let minute = (sim.now.div_euclid(SCALE) + 1) * SCALE;
            sim.advance(minute.min(sim.end()), None);
        }
    }
    sim.finish()
}

/// Least simple-path sum from `src` to every node, by enumerating every
/// simple path. Sums accumulate from the source outward.
pub fn enumerate_min(adj: &[Vec<(usize, f64)>], src: usize) -> Vec<Option<f64>> {
    fn walk(adj: &[Vec<(usize, f64)>], at: usize, d: f64, seen: &mut Vec<bool>, best: &mut Vec<Option<f64>>) {
        if best[at].is_none_or(|b| d < b) {
            best[at] = Some(d);
        }
        for &(v, w) in &adj[at] {
            if !seen[v] {
                seen[v] = true;
                walk(adj, v, d + w, seen, best);
                seen[v] = false;
            }
        }
    }
    let mut best = vec![None; adj.len()];
    let mut seen = vec![false; adj.len()];
    seen[src] = true;
    walk(adj, src, 0.0, &mut seen, &mut best);
    best
}

/// Random network of 2..=`max_nodes` nodes with sparse random segments,
/// random winds and 1..=4 pads per node.
pub fn random_network(rng: &mut ChaCha8Rng, max_nodes: usize) -> SkywayNetwork {
    let n = rng.random_range(2..=max_nodes);
    let nodes: Vec<Node> = (0..n)
        .map(|i| Node {
            id: NodeId(i as u32 + 1),
            x: rng.random_range(0.0..6000.0),
            y: rng.random_range(0.0..6000.0),
            pads: rng.random_range(1..=4),
        })
        .collect();
    let mut segments = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(0.35) {
                let (dx, dy) = (nodes[a].x - nodes[b].x, nodes[a].y - nodes[b].y);
                segments.push(Segment {
                    u: nodes[a].id,
                    v: nodes[b].id,
                    distance: dx.hypot(dy).max(50.0) * rng.random_range(1.0..1.3),
                    wind: Some(Wind::new(rng.random_range(0.0..13.8), rng.random_range(0.0..360.0)).unwrap()),
                });
            }
        }
    }
    SkywayNetwork::new(nodes, segments).unwrap()
}

/// Adjacency by node index with segment lengths as weights.
pub fn distance_adjacency(net: &SkywayNetwork) -> Vec<Vec<(usize, f64)>> {
    let ids: Vec<NodeId> = net.nodes().iter().map(|n| n.id).collect();
    let idx = |id: NodeId| ids.binary_search(&id).unwrap();
    ids.iter()
        .map(|&u| net.neighbors(u).map(|(v, s)| (idx(v), s.distance)).collect())
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Source 1 and destination 3 joined by a 12 km segment no swarm can fly
/// in one go, by a 7 + 7 km detour through node 2, and a 30 km dead end.
pub fn detour_network() -> SkywayNetwork {
    let node = |id: u32, x: f64, y: f64| Node {
        id: NodeId(id),
        x,
        y,
        pads: 2,
    };
    let seg = |u: u32, v: u32, distance: f64| Segment {
        u: NodeId(u),
        v: NodeId(v),
        distance,
        wind: Some(Wind::calm()),
    };
    SkywayNetwork::new(
        vec![
            node(1, 0.0, 0.0),
            node(2, 6000.0, 3600.0),
            node(3, 12_000.0, 0.0),
            node(4, -30_000.0, 0.0),
        ],
        vec![
            seg(1, 3, 12_000.0),
            seg(1, 2, 7000.0),
            seg(2, 3, 7000.0),
            seg(1, 4, 30_000.0),
        ],
    )
    .unwrap()
}
