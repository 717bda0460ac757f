//! Event-driven composition over one leg. Time advances from event to event
//! (allocation ends, request launches, retry minutes); at each instant,
//! ending allocations are closed first, then every idle provider decides in
//! offer order, repeating until nobody starts.

use std::collections::HashMap;

use crate::energetics::{DroneId, Role};

use super::reorder::{self, Layout, Move};
use super::{
    Allocation, EaaSOffer, EnergyRequest, Leg, Policy, RequestSource, SharingError, SharingOutcome,
    SharingPlan, SwapRecord, Track,
};

/// Shared amounts are floored to this grid (mAh) so sums are exact.
const AMOUNT_QUANTUM: f64 = 1.0 / 1048576.0;

/// A drone whose room is below this fraction of its capacity counts as full;
/// otherwise a transfer faster than consumption tops it up in ever shorter
/// grants.
pub const FULL_TOLERANCE: f64 = 0.01;

fn quantize(x: f64) -> f64 {
    (x / AMOUNT_QUANTUM).floor() * AMOUNT_QUANTUM
}

struct Active {
    provider: usize,
    consumer: usize,
    end: f64,
    mv: Option<Move>,
}

struct ProviderState {
    drone: usize,
    /// Consumer leg indices, ascending by drone id.
    consumers: Vec<usize>,
    ae: f64,
    busy: bool,
    done: bool,
    wake: Option<f64>,
    next_rr: usize,
}

enum Decision {
    Start {
        consumer: usize,
        amount: f64,
        request: Option<EnergyRequest>,
    },
    WaitUntil(f64),
    /// Nothing to do until some allocation ends.
    Idle,
    Done,
}

struct Engine<'l, 'a> {
    leg: &'l Leg<'a>,
    share_rate: f64,
    tracks: Vec<Track>,
    layout: Layout,
    is_support: Vec<bool>,
    locked: Vec<bool>,
    active: Vec<Active>,
    providers: Vec<ProviderState>,
    eligible_since: Vec<f64>,
    scripted_done: Vec<bool>,
    plan: SharingPlan,
    requests: Vec<EnergyRequest>,
    received: Vec<f64>,
    given: Vec<f64>,
}

/// Runs `policy` for every offer over the leg. Each offer serves only its own
/// consumer list; a provider shares with one consumer at a time.
pub fn compose_leg(
    leg: &Leg<'_>,
    offers: &[(EaaSOffer, Vec<DroneId>)],
    policy: &Policy,
    share_rate: f64,
) -> Result<SharingOutcome, SharingError> {
    if !(share_rate > 0.0 && share_rate.is_finite()) {
        return Err(SharingError::BadInput(format!("share rate must be positive, got {share_rate}")));
    }
    if !(leg.minutes >= 0.0 && leg.minutes.is_finite()) {
        return Err(SharingError::BadInput(format!("leg length {} minutes", leg.minutes)));
    }
    match policy {
        Policy::Priority(RequestSource::Threshold { gamma }) if !(*gamma > 0.0 && *gamma < 1.0) => {
            return Err(SharingError::BadInput(format!("gamma must be in (0, 1), got {gamma}")));
        }
        Policy::Fairness { lambda, delta } if !(*lambda > 0.0 && *delta >= 0.0) => {
            return Err(SharingError::BadInput(format!(
                "need lambda > 0 and delta >= 0, got {lambda} and {delta}"
            )));
        }
        _ => {}
    }
    let index: HashMap<DroneId, usize> = leg.drones.iter().enumerate().map(|(i, d)| (d.id, i)).collect();
    let find = |id: DroneId| index.get(&id).copied().ok_or(SharingError::UnknownDrone(id));
    let mut providers = Vec::with_capacity(offers.len());
    for (offer, consumers) in offers {
        let p = find(offer.provider)?;
        if leg.drones[p].role != Role::Support {
            return Err(SharingError::NotSupport(offer.provider));
        }
        let mut cs = Vec::with_capacity(consumers.len());
        for &c in consumers {
            let ci = find(c)?;
            if leg.drones[ci].role != Role::Delivery {
                return Err(SharingError::NotDelivery(c));
            }
            cs.push(ci);
        }
        cs.sort_by_key(|&c| leg.drones[c].id);
        providers.push(ProviderState {
            drone: p,
            consumers: cs,
            ae: offer.ae.max(0.0),
            busy: false,
            done: false,
            wake: None,
            next_rr: 0,
        });
    }
    let n = leg.drones.len();
    let scripted = match policy {
        Policy::Priority(RequestSource::Scripted(list)) => list.len(),
        _ => 0,
    };
    let mut e = Engine {
        leg,
        share_rate,
        tracks: leg
            .drones
            .iter()
            .enumerate()
            .map(|(i, d)| Track::new(d.battery, leg.rates.rate(i, d.slot)))
            .collect(),
        layout: Layout::new(
            leg.drones.iter().map(|d| d.slot).collect(),
            leg.formation.len(),
        ),
        is_support: leg.drones.iter().map(|d| d.role == Role::Support).collect(),
        locked: vec![false; n],
        active: Vec::new(),
        providers,
        eligible_since: vec![0.0; n],
        scripted_done: vec![false; scripted],
        plan: SharingPlan::default(),
        requests: Vec::new(),
        received: vec![0.0; n],
        given: vec![0.0; n],
    };
    e.run(policy)?;
    Ok(SharingOutcome {
        plan: e.plan,
        requests: e.requests,
        tracks: e.tracks,
        received: e.received,
        given: e.given,
    })
}

impl Engine<'_, '_> {
    fn run(&mut self, policy: &Policy) -> Result<(), SharingError> {
        let end = self.leg.minutes;
        let mut now = 0.0;
        loop {
            self.close_ending(now);
            if now >= end {
                break;
            }
            loop {
                let mut started = false;
                for k in 0..self.providers.len() {
                    if self.providers[k].busy || self.providers[k].done {
                        continue;
                    }
                    let decision = match policy {
                        Policy::Priority(source) => self.decide_priority(k, now, source)?,
                        Policy::Fairness { lambda, delta } => {
                            self.decide_fairness(k, now, *lambda, *delta)?
                        }
                    };
                    self.providers[k].wake = None;
                    match decision {
                        Decision::Start {
                            consumer,
                            amount,
                            request,
                        } => {
                            self.start(k, consumer, amount, now)?;
                            if let Some(r) = request {
                                self.requests.push(r);
                            }
                            started = true;
                        }
                        Decision::WaitUntil(t) => self.providers[k].wake = Some(t),
                        Decision::Idle => {}
                        Decision::Done => self.providers[k].done = true,
                    }
                }
                if !started {
                    break;
                }
            }
            let next = self
                .active
                .iter()
                .map(|a| a.end)
                .chain(self.providers.iter().filter_map(|p| p.wake))
                .filter(|&t| t > now)
                .fold(f64::INFINITY, f64::min);
            if !next.is_finite() {
                break;
            }
            now = next.min(end);
        }
        Ok(())
    }

    fn close_ending(&mut self, now: f64) {
        let mut i = 0;
        // allocations are kept in start order; close by provider order for determinism
        let mut ending: Vec<Active> = Vec::new();
        while i < self.active.len() {
            if self.active[i].end <= now {
                ending.push(self.active.remove(i));
            } else {
                i += 1;
            }
        }
        ending.sort_by_key(|a| a.provider);
        for a in ending {
            let p = self.providers[a.provider].drone;
            self.tracks[a.consumer].set_inflow(now, 0.0);
            self.tracks[p].set_outflow(now, 0.0);
            self.locked[a.consumer] = false;
            if let Some(m) = a.mv {
                reorder::revert(&mut self.layout, &m);
                self.refresh_rate(m.consumer, now);
                if let Some(q) = m.partner {
                    self.locked[q] = false;
                    self.refresh_rate(q, now);
                }
            }
            self.eligible_since[a.consumer] = now;
            self.providers[a.provider].busy = false;
        }
    }

    fn refresh_rate(&mut self, d: usize, now: f64) {
        let r = self.leg.rates.rate(d, self.layout.slot_of[d]);
        if r != self.tracks[d].consumption() {
            self.tracks[d].set_consumption(now, r);
        }
    }

    /// Plans the move bringing `c` next to provider `k`. `Ok(None)` inside
    /// means no move is needed; `Err(())` that `c` is blocked right now.
    fn placement(&self, k: usize, c: usize) -> Result<Result<Option<Move>, ()>, SharingError> {
        if self.locked[c] {
            return Ok(Err(()));
        }
        match reorder::plan_move(
            self.leg.formation,
            &self.layout,
            &self.is_support,
            &self.locked,
            c,
            self.providers[k].drone,
        ) {
            Ok(m) => Ok(Ok(m)),
            Err(SharingError::Blocked { .. }) => Ok(Err(())),
            Err(e) => Err(e),
        }
    }

    fn start(&mut self, k: usize, c: usize, amount: f64, now: f64) -> Result<(), SharingError> {
        let mv = match self.placement(k, c)? {
            Ok(m) => m,
            Err(()) => unreachable!("decisions only pick placeable consumers"),
        };
        if let Some(m) = mv {
            reorder::apply(&mut self.layout, &m);
            self.refresh_rate(m.consumer, now);
            if let Some(q) = m.partner {
                self.locked[q] = true;
                self.refresh_rate(q, now);
            }
            let id = |i: usize| self.leg.drones[i].id;
            self.plan.swaps.push((
                now,
                SwapRecord {
                    consumer: id(m.consumer),
                    from_slot: m.from,
                    to_slot: m.to,
                    partner: m.partner.map(id),
                },
            ));
        }
        let p = self.providers[k].drone;
        let duration = (amount / self.share_rate).min(self.leg.minutes - now);
        self.tracks[c].set_inflow(now, self.share_rate);
        self.tracks[p].set_outflow(now, self.share_rate);
        self.locked[c] = true;
        self.received[c] += amount;
        self.given[p] += amount;
        let prov = &mut self.providers[k];
        prov.ae -= amount;
        prov.busy = true;
        self.plan.allocations.push(Allocation {
            provider: self.leg.drones[p].id,
            consumer: self.leg.drones[c].id,
            start: now,
            duration,
            amount,
        });
        self.active.push(Active {
            provider: k,
            consumer: c,
            end: now + duration,
            mv,
        });
        Ok(())
    }

    /// Amount actually deliverable from `now`, truncated at the leg end.
    fn deliverable(&self, wanted: f64, now: f64) -> f64 {
        let room = self.share_rate * (self.leg.minutes - now);
        if wanted / self.share_rate <= self.leg.minutes - now {
            quantize(wanted)
        } else {
            quantize(room.min(wanted))
        }
    }

    fn decide_priority(&mut self, k: usize, now: f64, source: &RequestSource) -> Result<Decision, SharingError> {
        let end = self.leg.minutes;
        // (st, re, drone id, consumer, scripted index)
        let mut cands: Vec<(f64, f64, DroneId, usize, Option<usize>)> = Vec::new();
        match source {
            RequestSource::Threshold { gamma } => {
                for &c in &self.providers[k].consumers {
                    if self.active.iter().any(|a| a.consumer == c) {
                        continue;
                    }
                    let d = &self.leg.drones[c];
                    let threshold = gamma * d.capacity;
                    if let Some(st) =
                        self.tracks[c].first_minute_below(threshold, self.eligible_since[c], end, now)
                    {
                        let re = d.capacity - self.tracks[c].battery_at(st);
                        cands.push((st, re, d.id, c, None));
                    }
                }
            }
            RequestSource::Scripted(list) => {
                for (i, r) in list.iter().enumerate() {
                    if self.scripted_done[i] {
                        continue;
                    }
                    if let Some(&c) = self.providers[k]
                        .consumers
                        .iter()
                        .find(|&&c| self.leg.drones[c].id == r.drone)
                    {
                        if !self.active.iter().any(|a| a.consumer == c) {
                            cands.push((r.st, r.re, r.drone, c, Some(i)));
                        }
                    }
                }
            }
        }
        cands.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(b.1.total_cmp(&a.1))
                .then(a.2.cmp(&b.2))
        });
        let ae = self.providers[k].ae;
        for &(st, re, id, c, script) in &cands {
            if re > ae || st >= end || !(re > 0.0) {
                continue;
            }
            if st > now {
                return Ok(Decision::WaitUntil(st));
            }
            if self.placement(k, c)?.is_err() {
                continue;
            }
            let amount = self.deliverable(re, now);
            if amount <= 0.0 {
                continue;
            }
            if let Some(i) = script {
                self.scripted_done[i] = true;
            }
            let request = EnergyRequest {
                id: self.requests.len() as u32 + 1,
                drone: id,
                re,
                st,
                et: end,
                loc: self.layout.slot_of[c],
            };
            return Ok(Decision::Start {
                consumer: c,
                amount,
                request: Some(request),
            });
        }
        // rates can still change through other providers' swaps
        Ok(Decision::Idle)
    }

    fn decide_fairness(&mut self, k: usize, now: f64, lambda: f64, delta: f64) -> Result<Decision, SharingError> {
        let prov = &self.providers[k];
        if !(prov.ae > delta) {
            return Ok(Decision::Done);
        }
        let n = prov.consumers.len();
        let mut blocked = false;
        for j in 0..n {
            let pos = (prov.next_rr + j) % n;
            let c = prov.consumers[pos];
            let room = self.leg.drones[c].capacity - self.tracks[c].battery_at(now);
            if room < FULL_TOLERANCE * self.leg.drones[c].capacity {
                continue;
            }
            // grants never dig into the reserve
            let grant = quantize(lambda.min(room).min(prov.ae - delta));
            if !(grant > 0.0) {
                continue;
            }
            if self.placement(k, c)?.is_err() {
                blocked = true;
                continue;
            }
            let amount = self.deliverable(grant, now);
            if amount <= 0.0 {
                continue;
            }
            self.providers[k].next_rr = (pos + 1) % n;
            return Ok(Decision::Start {
                consumer: c,
                amount,
                request: None,
            });
        }
        if n == 0 {
            return Ok(Decision::Done);
        }
        Ok(if blocked {
            Decision::Idle
        } else {
            Decision::WaitUntil(now.floor() + 1.0)
        })
    }
}
