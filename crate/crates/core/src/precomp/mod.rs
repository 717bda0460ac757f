//! Pre-composition: formation choice, support-drone sizing and slot assignment.

mod formation;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energetics::{
    CoefficientTable, Drone, DroneId, EnergyError, EnergyModel, FormationKind, RelativeWind, Role,
    WindSector, SUPPORT_CAPACITY_MULTIPLIER,
};
use crate::skynet::{
    shortest_distance, DeliveryRequest, NetworkError, NodeId, SkywayNetwork, Wind, MAX_SAFE_WIND,
};

pub use formation::{Formation, SHARING_RANGE_M, SLOT_SPACING_M};

/// Scale that spreads the default synthetic workload over all five
/// redundancy bands; see [`calibrate_scale`].
pub const DEFAULT_FAILURE_SCALE: f64 = 1.0e7;
pub const DEFAULT_FAILURE_WEIGHTS: [f64; 4] = [0.03; 4];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrecompError {
    #[error("a request needs at least one package")]
    NoPackages,
    #[error("factor {index} = {value} is outside [0, 1]")]
    FactorOutOfRange { index: usize, value: f64 },
    #[error("weight {index} = {value} must be positive")]
    BadWeight { index: usize, value: f64 },
    #[error("{drones} drones do not fit the {slots} slots of {formation}")]
    TooManyDrones {
        drones: usize,
        slots: usize,
        formation: FormationKind,
    },
    #[error("slot assignment is not a bijection onto the formation")]
    BadAssignment,
    #[error("destination {destination} is unreachable from {from}")]
    Unreachable { from: NodeId, destination: NodeId },
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Positioning {
    /// Heaviest delivery drones in the cheapest slots, support drones in the worst.
    LocationAware,
    /// Support drones in the cheapest slots.
    EnergyAware,
}

impl Positioning {
    pub fn name(self) -> &'static str {
        match self {
            Positioning::LocationAware => "location-aware",
            Positioning::EnergyAware => "energy-aware",
        }
    }
}

impl fmt::Display for Positioning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Positioning {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "location-aware" => Ok(Positioning::LocationAware),
            "energy-aware" => Ok(Positioning::EnergyAware),
            other => Err(format!("unknown positioning `{other}`")),
        }
    }
}

/// Drones in formation. Each drone's `slot` is unique and inside the formation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Swarm {
    pub formation: Formation,
    pub drones: Vec<Drone>,
}

impl Swarm {
    pub fn new(formation: Formation, drones: Vec<Drone>) -> Result<Self, PrecompError> {
        let mut used = vec![false; formation.len()];
        for d in &drones {
            if d.slot >= used.len() || std::mem::replace(&mut used[d.slot], true) {
                return Err(PrecompError::BadAssignment);
            }
        }
        Ok(Self { formation, drones })
    }

    pub fn delivery(&self) -> impl Iterator<Item = &Drone> {
        self.drones.iter().filter(|d| d.role == Role::Delivery)
    }

    pub fn support(&self) -> impl Iterator<Item = &Drone> {
        self.drones.iter().filter(|d| d.role == Role::Support)
    }

    pub fn drone(&self, id: DroneId) -> Option<&Drone> {
        self.drones.iter().find(|d| d.id == id)
    }

    pub fn kind(&self) -> FormationKind {
        self.formation.kind
    }

    /// Every drone back to a full battery.
    pub fn recharge_all(&mut self) {
        for d in &mut self.drones {
            d.battery = d.capacity;
        }
    }
}

/// Average payload ratio of the delivery drones, one package each.
pub fn payload_ratio(weights: &[f64], max_payload: f64) -> Result<f64, PrecompError> {
    if weights.is_empty() {
        return Err(PrecompError::NoPackages);
    }
    let total: f64 = weights.iter().map(|w| w / max_payload).sum();
    Ok(total / weights.len() as f64)
}

/// Normalized failure factors (payload, distance, support capacity, wind) and
/// their weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureInputs {
    pub factors: [f64; 4],
    pub weights: [f64; 4],
}

impl FailureInputs {
    pub fn from_raw(
        payload_ratio: f64,
        distance_m: f64,
        diameter_m: f64,
        support_capacity_multiplier: f64,
        avg_wind_speed: f64,
        weights: [f64; 4],
    ) -> Self {
        let distance = if diameter_m > 0.0 {
            distance_m / diameter_m
        } else {
            0.0
        };
        Self {
            factors: [
                payload_ratio,
                distance,
                support_capacity_multiplier / SUPPORT_CAPACITY_MULTIPLIER,
                avg_wind_speed / MAX_SAFE_WIND,
            ],
            weights,
        }
    }

    fn check(&self) -> Result<(), PrecompError> {
        for (index, &value) in self.factors.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(PrecompError::FactorOutOfRange { index, value });
            }
        }
        for (index, &value) in self.weights.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(PrecompError::BadWeight { index, value });
            }
        }
        Ok(())
    }

    /// Weighted factor product before scaling.
    pub fn raw_product(&self) -> Result<f64, PrecompError> {
        self.check()?;
        Ok(self
            .factors
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| p * w)
            .product())
    }
}

/// Failure score in percent, saturating at 100.
pub fn failure_probability(inputs: &FailureInputs, scale: f64) -> Result<f64, PrecompError> {
    Ok(failure_score(inputs.raw_product()?, scale))
}

/// Percent score of a raw factor product under `scale`.
pub fn failure_score(raw_product: f64, scale: f64) -> f64 {
    100.0 * (scale * raw_product).min(1.0)
}

/// Support drones needed for a failure score `p` and `n` delivery drones.
/// `p` is clamped into [0, 100]. The top band uses `max(n, 4)` so the count
/// never drops when the score rises.
pub fn redundancy_count(p: f64, n: usize) -> usize {
    let p = if p.is_nan() { 0.0 } else { p.clamp(0.0, 100.0) };
    match p {
        p if p < 20.0 => 1,
        p if p < 40.0 => 2,
        p if p < 60.0 => 3,
        p if p < 80.0 => 4,
        _ => n.max(4),
    }
}

/// Scale that maps the `quantile` of `raw_products` to a score of 80, the
/// start of the top band.
pub fn calibrate_scale(raw_products: &[f64], quantile: f64) -> Option<f64> {
    let mut v: Vec<f64> = raw_products.iter().copied().filter(|p| *p > 0.0).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let k = ((v.len() - 1) as f64 * quantile.clamp(0.0, 1.0)).round() as usize;
    Some(0.8 / v[k])
}

/// Formation with the lowest total coefficient over the first `swarm_size`
/// slots. Ties go to the earlier formation in [`FormationKind::ALL`].
pub fn select_formation(
    coeffs: &CoefficientTable,
    swarm_size: usize,
    sector: WindSector,
) -> Result<Formation, PrecompError> {
    let mut best: Option<(f64, FormationKind)> = None;
    for kind in FormationKind::ALL {
        let slots = coeffs.slots(kind);
        if swarm_size > slots {
            return Err(PrecompError::TooManyDrones {
                drones: swarm_size,
                slots,
                formation: kind,
            });
        }
        let mut total = 0.0;
        for s in 0..swarm_size {
            total += coeffs.get(kind, s, sector)?;
        }
        if best.is_none_or(|(b, _)| total < b) {
            best = Some((total, kind));
        }
    }
    let kind = best.map(|(_, k)| k).unwrap_or(FormationKind::Column);
    Ok(Formation::new(kind, swarm_size.max(1)))
}

/// Slots ordered cheapest first under `sector`; ties by slot index.
pub fn slots_by_cost(
    coeffs: &CoefficientTable,
    formation: &Formation,
    sector: WindSector,
) -> Result<Vec<usize>, PrecompError> {
    let mut costs = Vec::with_capacity(formation.len());
    for s in 0..formation.len() {
        costs.push((coeffs.get(formation.kind, s, sector)?, s));
    }
    costs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(costs.into_iter().map(|(_, s)| s).collect())
}

/// Writes a slot into every drone.
pub fn assign_positions(
    coeffs: &CoefficientTable,
    formation: &Formation,
    drones: &mut [Drone],
    setting: Positioning,
    sector: WindSector,
) -> Result<(), PrecompError> {
    if drones.len() > formation.len() {
        return Err(PrecompError::TooManyDrones {
            drones: drones.len(),
            slots: formation.len(),
            formation: formation.kind,
        });
    }
    let order = slots_by_cost(coeffs, formation, sector)?;
    let mut delivery: Vec<usize> = (0..drones.len()).filter(|&i| !drones[i].is_support()).collect();
    delivery.sort_by(|&a, &b| {
        drones[b]
            .payload
            .total_cmp(&drones[a].payload)
            .then(drones[a].id.cmp(&drones[b].id))
    });
    let mut support: Vec<usize> = (0..drones.len()).filter(|&i| drones[i].is_support()).collect();
    support.sort_by_key(|&i| drones[i].id);
    let queue: Vec<usize> = match setting {
        Positioning::LocationAware => delivery.into_iter().chain(support).collect(),
        Positioning::EnergyAware => support.into_iter().chain(delivery).collect(),
    };
    for (&d, &slot) in queue.iter().zip(&order) {
        drones[d].slot = slot;
    }
    Ok(())
}

/// Splits delivery drones (ordered by slot) into balanced contiguous blocks,
/// one per support drone (also ordered by slot). Earlier blocks take the
/// remainder.
pub fn partition_consumers(swarm: &Swarm) -> Vec<(DroneId, Vec<DroneId>)> {
    let mut providers: Vec<&Drone> = swarm.support().collect();
    providers.sort_by_key(|d| d.slot);
    let mut consumers: Vec<&Drone> = swarm.delivery().collect();
    consumers.sort_by_key(|d| d.slot);
    let m = providers.len();
    if m == 0 {
        return Vec::new();
    }
    let (base, extra) = (consumers.len() / m, consumers.len() % m);
    let mut out = Vec::with_capacity(m);
    let mut start = 0;
    for (k, p) in providers.iter().enumerate() {
        let len = base + usize::from(k < extra);
        out.push((p.id, consumers[start..start + len].iter().map(|d| d.id).collect()));
        start += len;
    }
    out
}

/// Distance-weighted vector mean of the winds along `path`.
pub fn average_wind(net: &SkywayNetwork, path: &[NodeId]) -> Wind {
    let (mut sx, mut sy, mut total) = (0.0, 0.0, 0.0);
    for w in path.windows(2) {
        if let Some(s) = net.segment_between(w[0], w[1]) {
            let seg = &net.segments()[s];
            let (vx, vy) = seg.wind_or_calm().velocity();
            sx += vx * seg.distance;
            sy += vy * seg.distance;
            total += seg.distance;
        }
    }
    if total == 0.0 {
        return Wind::calm();
    }
    Wind::from_velocity(sx / total, sy / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecompConfig {
    pub positioning: Positioning,
    pub failure_weights: [f64; 4],
    pub failure_scale: f64,
    /// Without support drones the swarm carries packages only.
    pub with_support: bool,
}

impl Default for PrecompConfig {
    fn default() -> Self {
        Self {
            positioning: Positioning::LocationAware,
            failure_weights: DEFAULT_FAILURE_WEIGHTS,
            failure_scale: DEFAULT_FAILURE_SCALE,
            with_support: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreComposition {
    pub swarm: Swarm,
    /// Score in percent; 0 when support drones are disabled.
    pub failure_probability: f64,
    pub avg_wind: Wind,
    pub sector: WindSector,
    /// Shortest source-destination distance (m).
    pub distance: f64,
}

/// Weighted failure factors for a request, before the scale is applied.
pub fn failure_inputs(
    model: &EnergyModel,
    net: &SkywayNetwork,
    diameter: f64,
    request: &DeliveryRequest,
    weights: [f64; 4],
) -> Result<(FailureInputs, f64, Vec<NodeId>), PrecompError> {
    let sp = shortest_distance(net, request.source, request.destination)?.ok_or(
        PrecompError::Unreachable {
            from: request.source,
            destination: request.destination,
        },
    )?;
    let ratio = payload_ratio(&request.package_weights, model.spec.max_payload)?;
    let wind = average_wind(net, &sp.path);
    let inputs = FailureInputs::from_raw(
        ratio,
        sp.distance,
        diameter,
        SUPPORT_CAPACITY_MULTIPLIER,
        wind.speed(),
        weights,
    );
    Ok((inputs, sp.distance, sp.path))
}

/// Builds the swarm for `request`: sizing, formation and slots. Delivery
/// drones get ids 1..=N in package order, support drones follow.
pub fn precompose(
    model: &EnergyModel,
    net: &SkywayNetwork,
    diameter: f64,
    request: &DeliveryRequest,
    cfg: &PrecompConfig,
) -> Result<PreComposition, PrecompError> {
    request.validate(model.spec.max_payload)?;
    let (inputs, distance, path) = failure_inputs(model, net, diameter, request, cfg.failure_weights)?;
    let n = request.package_weights.len();
    let (p, m) = if cfg.with_support {
        let p = failure_probability(&inputs, cfg.failure_scale)?;
        (p, redundancy_count(p, n))
    } else {
        (0.0, 0)
    };
    let avg_wind = average_wind(net, &path);
    let heading = net.bearing(request.source, request.destination);
    let sector = RelativeWind::new(heading, avg_wind, model.spec.speed_ms()).sector;
    let formation = select_formation(&model.coeffs, n + m, sector)?;
    let mut drones: Vec<Drone> = request
        .package_weights
        .iter()
        .enumerate()
        .map(|(i, &w)| Drone::delivery(i as u32 + 1, w, &model.spec))
        .chain((0..m).map(|k| Drone::support((n + k) as u32 + 1, &model.spec)))
        .collect();
    assign_positions(&model.coeffs, &formation, &mut drones, cfg.positioning, sector)?;
    Ok(PreComposition {
        swarm: Swarm::new(formation, drones)?,
        failure_probability: p,
        avg_wind,
        sector,
        distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energetics::{travel_time, DroneSpec};
    use crate::skynet::fixtures::*;
    use approx::assert_relative_eq;

    #[test]
    fn payload_ratio_examples() {
        assert_eq!(payload_ratio(&[1.4], 1.4).unwrap(), 1.0);
        assert_eq!(payload_ratio(&[1.4, 0.7], 1.4).unwrap(), 0.75);
        assert_relative_eq!(payload_ratio(&[0.35; 4], 1.4).unwrap(), 0.25);
        assert_eq!(payload_ratio(&[], 1.4), Err(PrecompError::NoPackages));
    }

    #[test]
    fn failure_probability_bounds() {
        let zero = FailureInputs {
            factors: [0.5, 0.0, 1.0, 0.3],
            weights: [1.0; 4],
        };
        assert_eq!(failure_probability(&zero, 1.0).unwrap(), 0.0);
        let full = FailureInputs {
            factors: [1.0; 4],
            weights: [1.0; 4],
        };
        assert_eq!(failure_probability(&full, 1.0).unwrap(), 100.0);
        let bad = FailureInputs {
            factors: [1.2, 0.5, 0.5, 0.5],
            weights: [1.0; 4],
        };
        assert!(matches!(
            failure_probability(&bad, 1.0),
            Err(PrecompError::FactorOutOfRange { index: 0, .. })
        ));
    }

    #[test]
    fn distance_term_anchor() {
        // 3 % per minute over a 5 km leg at 30 km/h
        let term = 0.03 * travel_time(5000.0, 30.0).unwrap();
        assert_relative_eq!(term, 0.3, max_relative = 1e-12);
    }

    #[test]
    fn redundancy_bands() {
        assert_eq!(redundancy_count(10.0, 5), 1);
        assert_eq!(redundancy_count(19.999, 5), 1);
        assert_eq!(redundancy_count(20.0, 5), 2);
        assert_eq!(redundancy_count(45.0, 5), 3);
        assert_eq!(redundancy_count(60.0, 5), 4);
        assert_eq!(redundancy_count(80.0, 5), 5);
        assert_eq!(redundancy_count(100.0, 5), 5);
        // small swarms keep four in the top band
        assert_eq!(redundancy_count(90.0, 2), 4);
    }

    #[test]
    fn formation_selection() {
        let t = CoefficientTable::default();
        assert_eq!(select_formation(&t, 1, WindSector::Head).unwrap().kind, FormationKind::Column);
        assert_eq!(select_formation(&t, 6, WindSector::Head).unwrap().kind, FormationKind::Vee);
        assert_eq!(select_formation(&t, 6, WindSector::Left).unwrap().kind, FormationKind::Diamond);
        assert_eq!(select_formation(&t, 6, WindSector::Right).unwrap().kind, FormationKind::Diamond);
        assert!(select_formation(&t, 40, WindSector::Head).is_err());
    }

    fn three_drones(spec: &DroneSpec) -> Vec<Drone> {
        vec![
            Drone::delivery(1, 0.7, spec),
            Drone::delivery(2, 1.4, spec),
            Drone::support(3, spec),
        ]
    }

    #[test]
    fn location_vs_energy_aware() {
        let spec = DroneSpec::default();
        let t = CoefficientTable::default();
        let f = Formation::new(FormationKind::Vee, 3);
        // cheapest slot is the last one in the default table
        let order = slots_by_cost(&t, &f, WindSector::Head).unwrap();
        assert_eq!(order, vec![2, 1, 0]);

        let mut d = three_drones(&spec);
        assign_positions(&t, &f, &mut d, Positioning::LocationAware, WindSector::Head).unwrap();
        assert_eq!([d[0].slot, d[1].slot, d[2].slot], [1, 2, 0]);

        let mut d = three_drones(&spec);
        assign_positions(&t, &f, &mut d, Positioning::EnergyAware, WindSector::Head).unwrap();
        assert_eq!([d[0].slot, d[1].slot, d[2].slot], [0, 1, 2]);
    }

    #[test]
    fn equal_coefficients_fall_back_to_ids() {
        let spec = DroneSpec::default();
        let t = CoefficientTable::uniform(1.0, 8);
        let f = Formation::new(FormationKind::Column, 3);
        let mut d = vec![
            Drone::delivery(2, 0.5, &spec),
            Drone::delivery(1, 0.5, &spec),
            Drone::delivery(3, 0.5, &spec),
        ];
        assign_positions(&t, &f, &mut d, Positioning::LocationAware, WindSector::Tail).unwrap();
        assert_eq!([d[1].slot, d[0].slot, d[2].slot], [0, 1, 2]);
    }

    #[test]
    fn partition_is_balanced_and_contiguous() {
        let spec = DroneSpec::default();
        let mut drones: Vec<Drone> = (1..=5).map(|i| Drone::delivery(i, 0.5, &spec)).collect();
        drones.push(Drone::support(6, &spec));
        drones.push(Drone::support(7, &spec));
        for (i, d) in drones.iter_mut().enumerate() {
            d.slot = i;
        }
        let swarm = Swarm::new(Formation::new(FormationKind::Column, 7), drones).unwrap();
        let parts = partition_consumers(&swarm);
        assert_eq!(parts[0], (DroneId(6), vec![DroneId(1), DroneId(2), DroneId(3)]));
        assert_eq!(parts[1], (DroneId(7), vec![DroneId(4), DroneId(5)]));
    }

    #[test]
    fn swarm_rejects_shared_slots() {
        let spec = DroneSpec::default();
        let d = vec![Drone::delivery(1, 0.5, &spec), Drone::delivery(2, 0.5, &spec)];
        assert_eq!(
            Swarm::new(Formation::new(FormationKind::Column, 2), d),
            Err(PrecompError::BadAssignment)
        );
    }

    #[test]
    fn average_wind_is_length_weighted() {
        let mut net = triangle();
        let mut segs = net.segments().to_vec();
        segs[0].wind = Some(Wind::new(4.0, 90.0).unwrap());
        segs[1].wind = Some(Wind::new(4.0, 270.0).unwrap());
        net = net.with_segments(segs).unwrap();
        let w = average_wind(&net, &[NodeId(1), NodeId(2), NodeId(3)]);
        assert!(w.speed() < 1e-12);
        let w = average_wind(&net, &[NodeId(1), NodeId(2)]);
        assert_relative_eq!(w.speed(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn precompose_sizes_the_swarm() {
        let model = EnergyModel::default();
        let net = triangle();
        let req = DeliveryRequest {
            id: 1,
            source: NodeId(1),
            destination: NodeId(3),
            package_weights: vec![1.0, 0.4],
        };
        let pc = precompose(&model, &net, 200.0, &req, &PrecompConfig::default()).unwrap();
        assert_eq!(pc.swarm.delivery().count(), 2);
        assert!(pc.swarm.support().count() >= 1);
        assert_eq!(pc.distance, 200.0);
        let cfg = PrecompConfig {
            with_support: false,
            ..Default::default()
        };
        let pc = precompose(&model, &net, 200.0, &req, &cfg).unwrap();
        assert_eq!(pc.swarm.support().count(), 0);
    }
}
