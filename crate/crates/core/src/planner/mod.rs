//! End-to-end delivery plans: the greedy stop-and-share composer and the two
//! static shortest-path baselines, all checked by leg-by-leg simulation.

mod statics;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energetics::{pad_schedule_with, EnergyError, EnergyModel, PadSchedule, PadSearch};
use crate::precomp::{partition_consumers, PrecompError, Swarm};
use crate::sharing::{
    compose_leg, EaaSOffer, Leg, LegDrone, Policy, RequestSource, SharingError, SharingPlan, Track,
    DEFAULT_DELTA_FRAC, DEFAULT_GAMMA, DEFAULT_LAMBDA,
};
use crate::skynet::{DeliveryRequest, DistanceTable, NetworkError, NodeId, SkywayNetwork};

pub use statics::{AllPairs, StaticGraph};

/// A node may be entered as a stopover at most this many times per plan.
pub const MAX_VISITS: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Sharing(#[from] SharingError),
    #[error(transparent)]
    Precomp(#[from] PrecompError),
    #[error("{0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Greedy composition without in-flight sharing.
    Baseline,
    /// Greedy composition with priority-based sharing.
    Pb,
    /// Greedy composition with fairness-based sharing.
    Fb,
    Dijkstra,
    Floyd,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Baseline,
        Strategy::Pb,
        Strategy::Fb,
        Strategy::Dijkstra,
        Strategy::Floyd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Baseline => "baseline",
            Strategy::Pb => "pb",
            Strategy::Fb => "fb",
            Strategy::Dijkstra => "dijkstra",
            Strategy::Floyd => "floyd",
        }
    }

    pub fn sharing(self) -> SharingMode {
        match self {
            Strategy::Pb => SharingMode::Pb,
            Strategy::Fb => SharingMode::Fb,
            _ => SharingMode::None,
        }
    }

    /// Whether the strategy flies with support drones.
    pub fn uses_support(self) -> bool {
        self.sharing() != SharingMode::None
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| format!("unknown strategy {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SharingMode {
    None,
    Pb,
    Fb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub gamma: f64,
    /// Provider reserve as a fraction of its capacity.
    pub delta_frac: f64,
    pub lambda: f64,
    /// In-flight transfer rate, mAh/min.
    pub share_rate: f64,
    pub pad_search: PadSearch,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            delta_frac: DEFAULT_DELTA_FRAC,
            lambda: DEFAULT_LAMBDA,
            share_rate: crate::energetics::DroneSpec::default().inflight_share_rate,
            pad_search: PadSearch::default(),
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |name: &str, v: f64| PlanError::BadConfig(format!("{name} out of range: {v}"));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(bad("gamma", self.gamma));
        }
        if !(0.0..1.0).contains(&self.delta_frac) {
            return Err(bad("delta_frac", self.delta_frac));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(bad("lambda", self.lambda));
        }
        if !(self.share_rate > 0.0 && self.share_rate.is_finite()) {
            return Err(bad("share_rate", self.share_rate));
        }
        Ok(())
    }
}

/// One flown segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegOutcome {
    pub from: NodeId,
    pub to: NodeId,
    pub segment: usize,
    pub tt: f64,
    /// Per drone, swarm order: energy burnt in flight.
    pub consumption: Vec<f64>,
    /// Per drone: received minus given.
    pub gains: Vec<f64>,
    pub sharing: SharingPlan,
    pub before: Vec<f64>,
    pub after: Vec<f64>,
    /// Lowest battery per drone over the minute grid and the arrival instant.
    pub grid_min: Vec<f64>,
    /// Highest battery per drone over the same instants.
    pub grid_max: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeVisit {
    pub node: NodeId,
    pub schedule: PadSchedule,
    pub nt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "node", rename_all = "lowercase")]
pub enum PlanStatus {
    Success,
    Stuck(NodeId),
    Unreachable,
}

impl PlanStatus {
    pub fn name(self) -> &'static str {
        match self {
            PlanStatus::Success => "success",
            PlanStatus::Stuck(_) => "stuck",
            PlanStatus::Unreachable => "unreachable",
        }
    }

    pub fn is_success(self) -> bool {
        self == PlanStatus::Success
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeliveryPlan {
    pub request_id: u32,
    pub strategy: Strategy,
    pub path: Vec<NodeId>,
    pub legs: Vec<LegOutcome>,
    pub visits: Vec<NodeVisit>,
    /// Σ tt + Σ nt, minutes.
    pub dt: f64,
    pub status: PlanStatus,
}

impl DeliveryPlan {
    fn new(request_id: u32, strategy: Strategy, source: NodeId) -> Self {
        Self {
            request_id,
            strategy,
            path: vec![source],
            legs: Vec::new(),
            visits: Vec::new(),
            dt: 0.0,
            status: PlanStatus::Unreachable,
        }
    }

    /// Plan for a request whose destination lies in another component.
    pub fn unreachable(request_id: u32, strategy: Strategy, source: NodeId) -> Self {
        Self::new(request_id, strategy, source).finish(PlanStatus::Unreachable)
    }

    fn finish(mut self, status: PlanStatus) -> Self {
        self.status = status;
        self.dt = self.tt() + self.nt();
        self
    }

    pub fn tt(&self) -> f64 {
        self.legs.iter().map(|l| l.tt).sum()
    }

    pub fn nt(&self) -> f64 {
        self.visits.iter().map(|v| v.nt).sum()
    }

    pub fn energy_shared(&self) -> f64 {
        self.legs.iter().map(|l| l.sharing.total()).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub const CSV_HEADER: &'static str = "request_id,strategy,status,hops,stops,dt_min,tt_min,nt_min,energy_shared_mAh";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.request_id,
            self.strategy,
            self.status.name(),
            self.legs.len(),
            self.visits.len(),
            self.dt,
            self.tt(),
            self.nt(),
            self.energy_shared()
        )
    }
}

/// Planning context shared by every request on one network.
pub struct Planner<'a> {
    pub net: &'a SkywayNetwork,
    pub model: &'a EnergyModel,
    pub distances: &'a DistanceTable,
    pub cfg: PlannerConfig,
}

impl<'a> Planner<'a> {
    pub fn new(
        net: &'a SkywayNetwork,
        model: &'a EnergyModel,
        distances: &'a DistanceTable,
        cfg: PlannerConfig,
    ) -> Result<Self, PlanError> {
        cfg.validate()?;
        model.spec.validate()?;
        Ok(Self {
            net,
            model,
            distances,
            cfg,
        })
    }

    /// Consumption rate of every drone in every formation slot for the hop.
    fn rate_table(&self, swarm: &Swarm, from: NodeId, to: NodeId, wind_seg: usize) -> Result<Vec<Vec<f64>>, PlanError> {
        let wind = self.net.segments()[wind_seg].wind_or_calm();
        let rel = self.model.relative_wind(self.net.bearing(from, to), wind);
        let kind = swarm.kind();
        swarm
            .drones
            .iter()
            .map(|d| {
                (0..swarm.formation.len())
                    .map(|s| Ok(self.model.consumption_rate(d.payload, kind, s, &rel)?))
                    .collect()
            })
            .collect()
    }

    /// Travel minutes and per-drone energy for a hop at the swarm's slots.
    pub fn hop_energy(&self, swarm: &Swarm, from: NodeId, to: NodeId) -> Result<(f64, Vec<f64>), PlanError> {
        let hop = self.hop(from, to)?;
        let tt = self.model.travel_minutes(self.net.segments()[hop.segment].distance)?;
        let rates = self.rate_table(swarm, from, to, hop.segment)?;
        let spent = swarm.drones.iter().enumerate().map(|(i, d)| rates[i][d.slot] * tt).collect();
        Ok((tt, spent))
    }

    fn hop(&self, from: NodeId, to: NodeId) -> Result<crate::skynet::Hop, PlanError> {
        Ok(self.net.hop(from, to).ok_or(NetworkError::UnknownNode {
            u: from,
            v: to,
            missing: to,
        })?)
    }

    /// Flies `from` → `to` on the swarm's current batteries. `Ok(None)` means
    /// some drone would drop below zero on the minute grid.
    pub fn feasible_leg(
        &self,
        swarm: &Swarm,
        from: NodeId,
        to: NodeId,
        mode: SharingMode,
    ) -> Result<Option<LegOutcome>, PlanError> {
        let hop = self.hop(from, to)?;
        let tt = self.model.travel_minutes(self.net.segments()[hop.segment].distance)?;
        let rates = self.rate_table(swarm, from, to, hop.segment)?;
        let before: Vec<f64> = swarm.drones.iter().map(|d| d.battery).collect();
        let has_support = swarm.support().next().is_some();
        let (tracks, plan, gains) = if mode == SharingMode::None || !has_support {
            let tracks: Vec<Track> = swarm
                .drones
                .iter()
                .enumerate()
                .map(|(i, d)| Track::new(d.battery, rates[i][d.slot]))
                .collect();
            (tracks, SharingPlan::default(), vec![0.0; swarm.drones.len()])
        } else {
            let out = self.share(swarm, tt, &rates, mode)?;
            let gains = out.received.iter().zip(&out.given).map(|(r, g)| r - g).collect();
            (out.tracks, out.plan, gains)
        };
        let grid_min: Vec<f64> = tracks.iter().map(|t| grid_extreme(t, tt, f64::min)).collect();
        let grid_max: Vec<f64> = tracks.iter().map(|t| grid_extreme(t, tt, f64::max)).collect();
        if grid_min.iter().any(|&b| b < 0.0) {
            return Ok(None);
        }
        let after: Vec<f64> = tracks.iter().map(|t| t.battery_at(tt)).collect();
        let consumption = before
            .iter()
            .zip(&after)
            .zip(&gains)
            .map(|((b, a), g)| b + g - a)
            .collect();
        Ok(Some(LegOutcome {
            from,
            to,
            segment: hop.segment,
            tt,
            consumption,
            gains,
            sharing: plan,
            before,
            after,
            grid_min,
            grid_max,
        }))
    }

    fn share(
        &self,
        swarm: &Swarm,
        tt: f64,
        rates: &[Vec<f64>],
        mode: SharingMode,
    ) -> Result<crate::sharing::SharingOutcome, PlanError> {
        let rate_fn = |d: usize, s: usize| rates[d][s];
        let leg = Leg {
            minutes: tt,
            formation: &swarm.formation,
            drones: swarm
                .drones
                .iter()
                .map(|d| LegDrone {
                    id: d.id,
                    role: d.role,
                    battery: d.battery,
                    capacity: d.capacity,
                    slot: d.slot,
                })
                .collect(),
            rates: &rate_fn,
        };
        let mut offers = Vec::new();
        let mut delta = 0.0;
        for (k, (provider, consumers)) in partition_consumers(swarm).into_iter().enumerate() {
            let (i, p) = swarm
                .drones
                .iter()
                .enumerate()
                .find(|(_, d)| d.id == provider)
                .expect("partition only names swarm drones");
            let spare = p.battery - rates[i][p.slot] * tt;
            let reserve = self.cfg.delta_frac * p.capacity;
            let ae = match mode {
                SharingMode::Pb => spare - reserve,
                _ => {
                    delta = reserve;
                    spare
                }
            };
            offers.push((
                EaaSOffer {
                    id: k as u32 + 1,
                    provider,
                    ae: ae.max(0.0),
                    st: 0.0,
                    et: tt,
                    loc: p.slot,
                },
                consumers,
            ));
        }
        let policy = match mode {
            SharingMode::Pb => Policy::Priority(RequestSource::Threshold { gamma: self.cfg.gamma }),
            _ => Policy::Fairness {
                lambda: self.cfg.lambda,
                delta,
            },
        };
        Ok(compose_leg(&leg, &offers, &policy, self.cfg.share_rate)?)
    }

    /// Legs along `path` without stopping; `None` if any is infeasible.
    fn fly_through(
        &self,
        swarm: &Swarm,
        path: &[NodeId],
        mode: SharingMode,
    ) -> Result<Option<(Vec<LegOutcome>, Swarm)>, PlanError> {
        let mut s = swarm.clone();
        let mut legs = Vec::with_capacity(path.len().saturating_sub(1));
        for w in path.windows(2) {
            let Some(leg) = self.feasible_leg(&s, w[0], w[1], mode)? else {
                return Ok(None);
            };
            apply_leg(&mut s, &leg);
            legs.push(leg);
        }
        Ok(Some((legs, s)))
    }

    /// Node time for recharging every drone to full at `node`.
    pub fn recharge_schedule(&self, swarm: &Swarm, node: NodeId) -> Result<PadSchedule, PlanError> {
        let pads = self.net.node(node).map_or(0, |n| n.pads) as usize;
        let times: Vec<f64> = swarm
            .drones
            .iter()
            .map(|d| (d.capacity - d.battery).max(0.0) / self.model.spec.pad_charge_rate)
            .collect();
        Ok(pad_schedule_with(&times, pads, self.cfg.pad_search)?)
    }

    /// Whether a full-battery swarm can fly `from` → `to`. With sharing this
    /// is an optimistic bound: each shortfall must fit the transfer rate over
    /// the hop and all of them the providers' spare energy.
    fn in_range(&self, swarm: &Swarm, from: NodeId, to: NodeId, mode: SharingMode) -> Result<bool, PlanError> {
        let (tt, spent) = self.hop_energy(swarm, from, to)?;
        let (mut short, mut spare, mut providers) = (0.0, 0.0, 0usize);
        for (d, e) in swarm.drones.iter().zip(&spent) {
            if d.is_support() {
                if *e > d.capacity {
                    return Ok(false);
                }
                providers += 1;
                spare += d.capacity * (1.0 - self.cfg.delta_frac) - e;
            } else if *e > d.capacity {
                let gap = e - d.capacity;
                if mode == SharingMode::None || gap > self.cfg.share_rate * tt {
                    return Ok(false);
                }
                short += gap;
            }
        }
        Ok(short == 0.0 || (short <= spare && short <= self.cfg.share_rate * tt * providers as f64))
    }

    /// Estimated minutes from every node to `dst`: travel plus the recharge
    /// that restores each hop's energy, over hops the swarm can fly on a full
    /// charge (see [`Self::in_range`]). Absent where no such route exists.
    fn remaining_estimate(
        &self,
        swarm: &Swarm,
        dst: NodeId,
        mode: SharingMode,
    ) -> Result<HashMap<NodeId, f64>, PlanError> {
        let rate = self.model.spec.pad_charge_rate;
        let mut best: HashMap<NodeId, f64> = HashMap::from([(dst, 0.0)]);
        let mut heap = BinaryHeap::from([Reverse((0u64, dst))]);
        while let Some(Reverse((bits, v))) = heap.pop() {
            let d = f64::from_bits(bits);
            if best.get(&v).is_some_and(|&b| d > b) {
                continue;
            }
            let pads = self.net.node(v).map_or(0, |n| n.pads) as usize;
            if v != dst && pads == 0 {
                continue;
            }
            for (u, _) in self.net.neighbors(v) {
                if !self.in_range(swarm, u, v, mode)? {
                    continue;
                }
                let (tt, spent) = self.hop_energy(swarm, u, v)?;
                let nt = if v == dst {
                    0.0
                } else {
                    let times: Vec<f64> = spent.iter().map(|e| e / rate).collect();
                    // an estimate only, so the cheap schedule will do
                    pad_schedule_with(&times, pads, PadSearch::Greedy)?.node_time
                };
                let nd = d + tt + nt;
                if best.get(&u).is_none_or(|&b| nd < b) {
                    best.insert(u, nd);
                    heap.push(Reverse((nd.to_bits(), u)));
                }
            }
        }
        Ok(best)
    }

    /// Greedy composition: fly the shortest remaining path when the batteries
    /// allow it (first without sharing, then with it), otherwise hop to the
    /// neighbor minimizing travel time plus recharge time plus the remaining
    /// flight and recharge time over in-range hops, recharge there and repeat.
    pub fn compose(&self, request: &DeliveryRequest, swarm: &Swarm, strategy: Strategy) -> Result<DeliveryPlan, PlanError> {
        let mode = strategy.sharing();
        if matches!(strategy, Strategy::Dijkstra | Strategy::Floyd) {
            return self.static_plan(request, swarm, strategy);
        }
        let (src, dst) = (request.source, request.destination);
        let mut plan = DeliveryPlan::new(request.id, strategy, src);
        if self.distances.distance(src, dst).is_none() {
            return Ok(plan.finish(PlanStatus::Unreachable));
        }
        let remaining = self.remaining_estimate(swarm, dst, mode)?;
        let mut swarm = swarm.clone();
        let mut visits: HashMap<NodeId, usize> = HashMap::from([(src, 1)]);
        let mut current = src;
        loop {
            if current == dst {
                return Ok(plan.finish(PlanStatus::Success));
            }
            let sp = crate::skynet::shortest_distance(self.net, current, dst)?
                .expect("destination shares the component");
            let mut direct = self.fly_through(&swarm, &sp.path, SharingMode::None)?;
            if direct.is_none() && mode != SharingMode::None {
                direct = self.fly_through(&swarm, &sp.path, mode)?;
            }
            if let Some((legs, _)) = direct {
                plan.path.extend_from_slice(&sp.path[1..]);
                plan.legs.extend(legs);
                return Ok(plan.finish(PlanStatus::Success));
            }
            // score: (no in-range route onward, minutes)
            let mut best: Option<((bool, f64), NodeId, LegOutcome, Option<PadSchedule>)> = None;
            for (v, _) in self.net.neighbors(current) {
                let pads = self.net.node(v).map_or(0, |n| n.pads);
                if v != dst && (pads == 0 || visits.get(&v).copied().unwrap_or(0) >= MAX_VISITS) {
                    continue;
                }
                let mut leg = self.feasible_leg(&swarm, current, v, SharingMode::None)?;
                if leg.is_none() && mode != SharingMode::None {
                    leg = self.feasible_leg(&swarm, current, v, mode)?;
                }
                let Some(leg) = leg else { continue };
                let (nt, schedule) = if v == dst {
                    (0.0, None)
                } else {
                    let mut s = swarm.clone();
                    apply_leg(&mut s, &leg);
                    let sched = self.recharge_schedule(&s, v)?;
                    (sched.node_time, Some(sched))
                };
                let h = remaining.get(&v).copied();
                let score = (h.is_none(), leg.tt + nt + h.unwrap_or(0.0));
                // neighbors come in id order, so strict improvement breaks ties by id
                if best.as_ref().is_none_or(|b| score < b.0) {
                    best = Some((score, v, leg, schedule));
                }
            }
            let Some((_, v, leg, schedule)) = best else {
                return Ok(plan.finish(PlanStatus::Stuck(current)));
            };
            apply_leg(&mut swarm, &leg);
            plan.legs.push(leg);
            plan.path.push(v);
            if let Some(schedule) = schedule {
                swarm.recharge_all();
                plan.visits.push(NodeVisit {
                    node: v,
                    nt: schedule.node_time,
                    schedule,
                });
                *visits.entry(v).or_insert(0) += 1;
            }
            current = v;
        }
    }

    /// Flies a fixed node path, recharging fully at every intermediate node.
    pub fn simulate_path(&self, request: &DeliveryRequest, swarm: &Swarm, strategy: Strategy, path: &[NodeId]) -> Result<DeliveryPlan, PlanError> {
        let mut plan = DeliveryPlan::new(request.id, strategy, request.source);
        let mut swarm = swarm.clone();
        for (k, w) in path.windows(2).enumerate() {
            if k > 0 {
                let schedule = self.recharge_schedule(&swarm, w[0])?;
                swarm.recharge_all();
                plan.visits.push(NodeVisit {
                    node: w[0],
                    nt: schedule.node_time,
                    schedule,
                });
            }
            let Some(leg) = self.feasible_leg(&swarm, w[0], w[1], SharingMode::None)? else {
                return Ok(plan.finish(PlanStatus::Stuck(w[0])));
            };
            apply_leg(&mut swarm, &leg);
            plan.legs.push(leg);
            plan.path.push(w[1]);
        }
        Ok(plan.finish(PlanStatus::Success))
    }

    pub fn dijkstra_baseline(&self, request: &DeliveryRequest, swarm: &Swarm) -> Result<DeliveryPlan, PlanError> {
        self.static_plan(request, swarm, Strategy::Dijkstra)
    }

    pub fn floyd_warshall_baseline(&self, request: &DeliveryRequest, swarm: &Swarm) -> Result<DeliveryPlan, PlanError> {
        self.static_plan(request, swarm, Strategy::Floyd)
    }

    fn static_plan(&self, request: &DeliveryRequest, swarm: &Swarm, strategy: Strategy) -> Result<DeliveryPlan, PlanError> {
        let (src, dst) = (request.source, request.destination);
        if self.distances.distance(src, dst).is_none() {
            return Ok(DeliveryPlan::new(request.id, strategy, src).finish(PlanStatus::Unreachable));
        }
        let graph = StaticGraph::build(self, swarm)?;
        let path = match strategy {
            Strategy::Floyd => graph.floyd_warshall().path(&graph, src, dst),
            _ => graph.dijkstra_path(src, dst),
        };
        match path {
            Some((_, path)) => self.simulate_path(request, swarm, strategy, &path),
            // only pad-less nodes separate the two ends
            None => Ok(DeliveryPlan::new(request.id, strategy, src).finish(PlanStatus::Stuck(src))),
        }
    }
}

/// Folds the battery trace over integer minutes in `[0, tt]` and `tt`.
fn grid_extreme(track: &Track, tt: f64, pick: fn(f64, f64) -> f64) -> f64 {
    let mut m = track.battery_at(tt);
    let mut t = 0.0;
    while t <= tt {
        m = pick(m, track.battery_at(t));
        t += 1.0;
    }
    m
}

fn apply_leg(swarm: &mut Swarm, leg: &LegOutcome) {
    for (d, &b) in swarm.drones.iter_mut().zip(&leg.after) {
        d.battery = b;
    }
}
