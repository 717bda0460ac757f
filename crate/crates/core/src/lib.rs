//! Swarm-based drone delivery over skyway networks: energy model, support
//! drone sizing, in-flight energy sharing and path composition.

pub mod energetics;
pub mod experiment;
pub mod planner;
pub mod precomp;
pub mod sharing;
pub mod skynet;

pub use energetics::{
    pad_schedule, CoefficientTable, Drone, DroneId, DroneSpec, EnergyError, EnergyModel, FormationKind,
    PadSchedule, PadSearch, Role, WindSector,
};
pub use experiment::{ExperimentConfig, ExperimentError, ResultRow};
pub use planner::{DeliveryPlan, PlanError, PlanStatus, Planner, PlannerConfig, Strategy};
pub use precomp::{
    calibrate_scale, failure_score, redundancy_count, Positioning, PrecompError, Swarm, DEFAULT_FAILURE_SCALE,
};
pub use sharing::{EaaSOffer, EnergyRequest, SharingError, SharingPlan};
pub use skynet::{
    load_network, load_requests, save_network, save_requests, shortest_distance, synthesize_network,
    synthesize_requests, DeliveryRequest, NetworkError, NetworkSynthParams, NodeId, RequestSynthParams,
    SkywayNetwork,
};
