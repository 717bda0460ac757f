//! In-flight energy sharing within one leg: energy requests, the
//! priority-based and fairness-based composers, and fixed re-ordering.

mod engine;
mod reorder;
mod track;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energetics::{DroneId, Role};
use crate::precomp::Formation;

pub use engine::{compose_leg, FULL_TOLERANCE};
pub use reorder::{reorder_fixed, undo_reorder, SwapRecord};
pub use track::Track;

/// Default battery fraction below which a delivery drone asks for energy.
pub const DEFAULT_GAMMA: f64 = 0.8;
/// Default fairness-based grant per round (mAh).
pub const DEFAULT_LAMBDA: f64 = 2240.0;
/// Default provider reserve as a fraction of its capacity.
pub const DEFAULT_DELTA_FRAC: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SharingError {
    #[error("provider slot {slot} has no slot within sharing range")]
    NoAdjacentSlot { slot: usize },
    #[error("every slot next to provider slot {slot} is held by a support or locked drone")]
    Blocked { slot: usize },
    #[error("unknown drone {0}")]
    UnknownDrone(DroneId),
    #[error("drone {0} is not a support drone")]
    NotSupport(DroneId),
    #[error("drone {0} is not a delivery drone")]
    NotDelivery(DroneId),
    #[error("{0}")]
    BadInput(String),
}

/// Consumption rate (mAh/min) of drone `drone` (leg index) when in `slot`.
pub trait RateModel {
    fn rate(&self, drone: usize, slot: usize) -> f64;
}

impl<F: Fn(usize, usize) -> f64> RateModel for F {
    fn rate(&self, drone: usize, slot: usize) -> f64 {
        self(drone, slot)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegDrone {
    pub id: DroneId,
    pub role: Role,
    /// mAh at the start of the leg.
    pub battery: f64,
    pub capacity: f64,
    pub slot: usize,
}

/// One leg's sharing problem over the window `[0, minutes]`.
pub struct Leg<'a> {
    pub minutes: f64,
    pub formation: &'a Formation,
    pub drones: Vec<LegDrone>,
    pub rates: &'a dyn RateModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRequest {
    pub id: u32,
    pub drone: DroneId,
    /// Requested mAh.
    pub re: f64,
    /// Minutes from leg start.
    pub st: f64,
    pub et: f64,
    /// Consumer slot when the request was launched.
    pub loc: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EaaSOffer {
    pub id: u32,
    pub provider: DroneId,
    /// mAh the provider may give away.
    pub ae: f64,
    pub st: f64,
    pub et: f64,
    pub loc: usize,
}

/// Where priority-based composition gets its requests from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RequestSource {
    /// Launched at the first whole minute a battery is below `gamma` × capacity.
    Threshold { gamma: f64 },
    /// Fixed requests, each served at most once.
    Scripted(Vec<EnergyRequest>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Policy {
    Priority(RequestSource),
    /// Round robin by drone id, `lambda` mAh per grant while the offer
    /// exceeds `delta`.
    Fairness { lambda: f64, delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub provider: DroneId,
    pub consumer: DroneId,
    pub start: f64,
    pub duration: f64,
    pub amount: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SharingPlan {
    pub allocations: Vec<Allocation>,
    /// (minute, move); each is undone when its allocation ends.
    pub swaps: Vec<(f64, SwapRecord)>,
}

impl SharingPlan {
    pub fn is_empty(&self) -> bool {
        self.allocations.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.allocations.iter().map(|a| a.amount).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("provider,consumer,start_min,duration_min,amount_mAh\n");
        for a in &self.allocations {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                a.provider, a.consumer, a.start, a.duration, a.amount
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SharingOutcome {
    pub plan: SharingPlan,
    /// Requests that were served, in service order.
    pub requests: Vec<EnergyRequest>,
    /// Battery trace per leg drone.
    pub tracks: Vec<Track>,
    /// mAh received per leg drone.
    pub received: Vec<f64>,
    /// mAh given per leg drone.
    pub given: Vec<f64>,
}

impl SharingOutcome {
    pub fn final_batteries(&self, minutes: f64) -> Vec<f64> {
        self.tracks.iter().map(|t| t.battery_at(minutes)).collect()
    }
}

/// Requests for every delivery drone below `gamma` × capacity that has no
/// open request. `drones` holds (id, battery, capacity, slot).
pub fn generate_requests(
    drones: &[(DroneId, f64, f64, usize)],
    open: &[DroneId],
    gamma: f64,
    now: f64,
    segment_end: f64,
    first_id: u32,
) -> Vec<EnergyRequest> {
    let mut out = Vec::new();
    for &(drone, battery, capacity, loc) in drones {
        if battery < gamma * capacity && !open.contains(&drone) {
            out.push(EnergyRequest {
                id: first_id + out.len() as u32,
                drone,
                re: capacity - battery,
                st: now,
                et: segment_end,
                loc,
            });
        }
    }
    out
}

/// Priority-based composition for a single provider.
pub fn pb_compose(
    leg: &Leg<'_>,
    offer: EaaSOffer,
    consumers: Vec<DroneId>,
    source: RequestSource,
    share_rate: f64,
) -> Result<SharingOutcome, SharingError> {
    compose_leg(leg, &[(offer, consumers)], &Policy::Priority(source), share_rate)
}

/// Fairness-based composition for a single provider.
pub fn fb_compose(
    leg: &Leg<'_>,
    offer: EaaSOffer,
    consumers: Vec<DroneId>,
    lambda: f64,
    delta: f64,
    share_rate: f64,
) -> Result<SharingOutcome, SharingError> {
    compose_leg(leg, &[(offer, consumers)], &Policy::Fairness { lambda, delta }, share_rate)
}
