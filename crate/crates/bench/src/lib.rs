//! Fixtures shared by the benches.

use swarmway_core::energetics::{DroneId, FormationKind, Role};
use swarmway_core::experiment::{Experiment, ExperimentConfig, WorkloadSource};
use swarmway_core::precomp::Formation;
use swarmway_core::sharing::{EaaSOffer, LegDrone};
use swarmway_core::RequestSynthParams;

/// Default synthetic network with `n` requests and untimed rows.
pub fn experiment(n: usize) -> Experiment {
    Experiment::load(ExperimentConfig {
        requests: WorkloadSource::Synth(RequestSynthParams {
            n,
            seed: 11,
            ..Default::default()
        }),
        timing: false,
        ..Default::default()
    })
    .expect("default experiment loads")
}

/// Charge times in minutes for a swarm of `n` drones.
pub fn charge_times(n: usize) -> Vec<f64> {
    (0..n).map(|i| 20.0 + 7.0 * ((i * 5) % 9) as f64).collect()
}

pub const BURN: f64 = 250.0;

/// A Vee leg with one support drone in slot 0 and `deliveries` drained
/// delivery drones behind it.
pub fn sharing_fixture(deliveries: usize) -> (Formation, Vec<LegDrone>, EaaSOffer, Vec<DroneId>) {
    let formation = Formation::new(FormationKind::Vee, deliveries + 1);
    let mut drones = vec![LegDrone {
        id: DroneId(100),
        role: Role::Support,
        battery: 4.0 * 4480.0,
        capacity: 4.0 * 4480.0,
        slot: 0,
    }];
    for i in 0..deliveries {
        drones.push(LegDrone {
            id: DroneId(i as u32 + 1),
            role: Role::Delivery,
            battery: 3800.0 - 150.0 * i as f64,
            capacity: 4480.0,
            slot: i + 1,
        });
    }
    let offer = EaaSOffer {
        id: 1,
        provider: DroneId(100),
        ae: 10_000.0,
        st: 0.0,
        et: 30.0,
        loc: 0,
    };
    let consumers = (1..=deliveries as u32).map(DroneId).collect();
    (formation, drones, offer, consumers)
}
