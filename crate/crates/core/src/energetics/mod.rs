//! Battery, consumption, transfer and recharging models.

mod coeffs;
mod pads;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::skynet::{bearing_unit, Wind, MAX_SAFE_WIND};

pub use coeffs::{CoefficientTable, FormationKind, WindSector, DEFAULT_TABLE_SLOTS};
pub use pads::{pad_schedule, pad_schedule_with, PadSchedule, PadSearch, DEFAULT_EXHAUSTIVE_CAP};

/// Support drones carry three extra batteries.
pub const SUPPORT_CAPACITY_MULTIPLIER: f64 = 4.0;
/// Mass of the three extra batteries a support drone carries (kg).
pub const SUPPORT_PAYLOAD_KG: f64 = 3.0 * 0.365;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("speed must be positive, got {0}")]
    NonPositiveSpeed(f64),
    #[error("rate must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("distance must be non-negative, got {0}")]
    NegativeDistance(f64),
    #[error("energy amount must be non-negative, got {0}")]
    NegativeEnergy(f64),
    #[error("slot {slot} is not defined for formation {formation}")]
    InvalidSlot { formation: FormationKind, slot: usize },
    #[error("payload {payload} kg outside [0, {max}]")]
    BadPayload { payload: f64, max: f64 },
    #[error("a node needs at least one pad")]
    NoPads,
    #[error("charge time must be finite and non-negative, got {0}")]
    BadChargeTime(f64),
    #[error(
        "{count} drones exceed the exhaustive pad search cap of {cap}; \
         enable the greedy fallback (--greedy-pads)"
    )]
    TooManyDrones { count: usize, cap: usize },
    #[error("invalid drone spec: {0}")]
    BadSpec(String),
    #[error("coefficient table line {line}: {msg}")]
    CoeffParse { line: usize, msg: String },
    #[error("i/o error on {path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DroneSpec {
    /// mAh
    pub battery_capacity: f64,
    pub voltage: f64,
    /// kg
    pub max_payload: f64,
    /// km/h
    pub cruise_speed: f64,
    /// mAh/min
    pub inflight_share_rate: f64,
    /// mAh/min
    pub pad_charge_rate: f64,
    /// mAh/min with no payload and a neutral position. The 3 %/min anchor
    /// already includes the small-to-large airframe scaling factor.
    pub base_consumption_rate: f64,
}

impl Default for DroneSpec {
    fn default() -> Self {
        Self {
            battery_capacity: 4480.0,
            voltage: 15.2,
            max_payload: 1.4,
            cruise_speed: 30.0,
            inflight_share_rate: 5.88,
            pad_charge_rate: 4480.0 / 60.0,
            base_consumption_rate: 0.03 * 4480.0,
        }
    }
}

impl DroneSpec {
    pub fn validate(&self) -> Result<(), EnergyError> {
        let fields = [
            ("battery_capacity", self.battery_capacity),
            ("voltage", self.voltage),
            ("max_payload", self.max_payload),
            ("cruise_speed", self.cruise_speed),
            ("inflight_share_rate", self.inflight_share_rate),
            ("pad_charge_rate", self.pad_charge_rate),
            ("base_consumption_rate", self.base_consumption_rate),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(EnergyError::BadSpec(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Cruise speed in m/s.
    pub fn speed_ms(&self) -> f64 {
        self.cruise_speed / 3.6
    }

    pub fn capacity(&self, role: Role) -> f64 {
        self.battery_capacity * role.capacity_multiplier()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Delivery,
    Support,
}

impl Role {
    pub fn capacity_multiplier(self) -> f64 {
        match self {
            Role::Delivery => 1.0,
            Role::Support => SUPPORT_CAPACITY_MULTIPLIER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DroneId(pub u32);

impl fmt::Display for DroneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drone {
    pub id: DroneId,
    pub role: Role,
    /// kg
    pub payload: f64,
    /// mAh, within [0, capacity]
    pub battery: f64,
    pub capacity: f64,
    /// Formation slot index.
    pub slot: usize,
}

impl Drone {
    /// Fully charged delivery drone carrying `payload`.
    pub fn delivery(id: u32, payload: f64, spec: &DroneSpec) -> Self {
        let capacity = spec.capacity(Role::Delivery);
        Self {
            id: DroneId(id),
            role: Role::Delivery,
            payload,
            battery: capacity,
            capacity,
            slot: 0,
        }
    }

    /// Fully charged support drone.
    pub fn support(id: u32, spec: &DroneSpec) -> Self {
        let capacity = spec.capacity(Role::Support);
        Self {
            id: DroneId(id),
            role: Role::Support,
            payload: SUPPORT_PAYLOAD_KG,
            battery: capacity,
            capacity,
            slot: 0,
        }
    }

    pub fn is_support(&self) -> bool {
        self.role == Role::Support
    }
}

/// Wind as felt on one traversal direction of a segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeWind {
    /// Sector of the apparent wind (true wind minus ground motion).
    pub sector: WindSector,
    /// True-wind component opposing travel (m/s, negative for tailwind).
    pub head: f64,
    /// True-wind component across travel (m/s, positive from the right).
    pub cross: f64,
}

impl RelativeWind {
    /// `heading` is the compass bearing of travel; `ground_speed` in m/s.
    pub fn new(heading: f64, wind: Wind, ground_speed: f64) -> Self {
        let rel = (wind.direction() - heading).to_radians();
        let head = wind.speed() * rel.cos();
        let cross = wind.speed() * rel.sin();
        // apparent wind: what a drone moving at ground_speed feels
        let (wx, wy) = wind.velocity();
        let (hx, hy) = bearing_unit(heading);
        let (ax, ay) = (wx - ground_speed * hx, wy - ground_speed * hy);
        let sector = if ax == 0.0 && ay == 0.0 {
            WindSector::Head
        } else {
            // the apparent wind comes from the opposite of where it blows
            let from = (-ax).atan2(-ay).to_degrees();
            WindSector::from_relative_bearing(from - heading)
        };
        Self { sector, head, cross }
    }

    /// A sector with no speed components; the wind factor is 1.
    pub fn sector_only(sector: WindSector) -> Self {
        Self {
            sector,
            head: 0.0,
            cross: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsumptionBreakdown {
    pub drone: DroneId,
    /// mAh for the whole traversal.
    pub energy: f64,
    pub minutes: f64,
    /// mAh/min
    pub rate: f64,
    pub payload_factor: f64,
    pub position_factor: f64,
    pub wind_factor: f64,
}

pub fn travel_time(distance_m: f64, speed_kmh: f64) -> Result<f64, EnergyError> {
    if !(speed_kmh > 0.0) {
        return Err(EnergyError::NonPositiveSpeed(speed_kmh));
    }
    if !(distance_m >= 0.0) {
        return Err(EnergyError::NegativeDistance(distance_m));
    }
    Ok(distance_m / 1000.0 / speed_kmh * 60.0)
}

pub fn charge_time(needed_mah: f64, rate: f64) -> Result<f64, EnergyError> {
    if !(rate > 0.0) {
        return Err(EnergyError::NonPositiveRate(rate));
    }
    if !(needed_mah >= 0.0) {
        return Err(EnergyError::NegativeEnergy(needed_mah));
    }
    Ok(needed_mah / rate)
}

/// Consumption model: drone spec, formation coefficients and sensitivities.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyModel {
    pub spec: DroneSpec,
    pub coeffs: CoefficientTable,
    /// Payload sensitivity: the rate is multiplied by 1 + k_p at full payload.
    pub k_p: f64,
    /// Wind sensitivity: a full-strength headwind multiplies the rate by 1 + k_w.
    pub k_w: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self {
            spec: DroneSpec::default(),
            coeffs: CoefficientTable::default(),
            k_p: 1.0,
            k_w: 0.3,
        }
    }
}

impl EnergyModel {
    pub fn payload_factor(&self, payload: f64) -> Result<f64, EnergyError> {
        if !(0.0..=self.spec.max_payload).contains(&payload) {
            return Err(EnergyError::BadPayload {
                payload,
                max: self.spec.max_payload,
            });
        }
        Ok(1.0 + self.k_p * payload / self.spec.max_payload)
    }

    pub fn wind_factor(&self, wind: &RelativeWind) -> f64 {
        1.0 + self.k_w * (wind.head + 0.5 * wind.cross.abs()) / MAX_SAFE_WIND
    }

    /// mAh/min for one drone at `slot` of `formation`.
    pub fn consumption_rate(
        &self,
        payload: f64,
        formation: FormationKind,
        slot: usize,
        wind: &RelativeWind,
    ) -> Result<f64, EnergyError> {
        let c = self.coeffs.get(formation, slot, wind.sector)?;
        Ok(self.spec.base_consumption_rate * self.payload_factor(payload)? * c * self.wind_factor(wind))
    }

    pub fn travel_minutes(&self, distance_m: f64) -> Result<f64, EnergyError> {
        travel_time(distance_m, self.spec.cruise_speed)
    }

    pub fn relative_wind(&self, heading: f64, wind: Wind) -> RelativeWind {
        RelativeWind::new(heading, wind, self.spec.speed_ms())
    }

    /// Per-drone energy for flying `distance_m` in `formation` under `wind`.
    pub fn segment_consumption(
        &self,
        formation: FormationKind,
        drones: &[Drone],
        distance_m: f64,
        wind: &RelativeWind,
    ) -> Result<Vec<ConsumptionBreakdown>, EnergyError> {
        let minutes = self.travel_minutes(distance_m)?;
        let wind_factor = self.wind_factor(wind);
        drones
            .iter()
            .map(|d| {
                let payload_factor = self.payload_factor(d.payload)?;
                let position_factor = self.coeffs.get(formation, d.slot, wind.sector)?;
                let rate = self.spec.base_consumption_rate * payload_factor * position_factor * wind_factor;
                Ok(ConsumptionBreakdown {
                    drone: d.id,
                    energy: rate * minutes,
                    minutes,
                    rate,
                    payload_factor,
                    position_factor,
                    wind_factor,
                })
            })
            .collect()
    }
}
