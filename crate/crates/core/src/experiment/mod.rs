//! Strategy sweeps over a request workload, per-request result rows and the
//! summary tables derived from them.

mod metrics;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energetics::{CoefficientTable, EnergyError, EnergyModel, PadSearch};
use crate::planner::{DeliveryPlan, PlanError, PlanStatus, Planner, PlannerConfig, Strategy};
use crate::precomp::{
    failure_inputs, precompose, Positioning, PrecompConfig, PrecompError, Swarm, DEFAULT_FAILURE_SCALE,
    DEFAULT_FAILURE_WEIGHTS,
};
use crate::skynet::{
    fill_missing_wind, largest_connected_component, load_network, load_requests, synthesize_network,
    synthesize_requests, DeliveryRequest, DistanceTable, NetworkError, NetworkSynthParams,
    RequestSynthParams, SkywayNetwork,
};

pub use metrics::{bin_metrics, Bin, GroupMetrics, MetricsTable, DEFAULT_BIN_WIDTH_KM};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid {field}: {msg}")]
    Config { field: &'static str, msg: String },
    #[error("i/o error on {path}: {msg}")]
    Io { path: String, msg: String },
    #[error(transparent)]
    Network(NetworkError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Energy(EnergyError),
}

impl ExperimentError {
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            ExperimentError::Io { .. }
                | ExperimentError::Network(NetworkError::Io { .. })
                | ExperimentError::Energy(EnergyError::Io { .. })
        )
    }
}

impl From<NetworkError> for ExperimentError {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::Io { path, msg } => ExperimentError::Io { path, msg },
            e => ExperimentError::Network(e),
        }
    }
}

impl From<EnergyError> for ExperimentError {
    fn from(e: EnergyError) -> Self {
        match e {
            EnergyError::Io { path, msg } => ExperimentError::Io { path, msg },
            e => ExperimentError::Energy(e),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> ExperimentError {
    ExperimentError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NetworkSource {
    File(PathBuf),
    /// Synthesized, then cut down to its largest connected component.
    Synth(NetworkSynthParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WorkloadSource {
    File(PathBuf),
    Synth(RequestSynthParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub network: NetworkSource,
    pub requests: WorkloadSource,
    /// Seed for winds on segments that have none.
    pub wind_seed: u64,
    pub strategies: Vec<Strategy>,
    pub positionings: Vec<Positioning>,
    pub planner: PlannerConfig,
    /// Minutes for a pad to fill an empty delivery-drone battery.
    pub pad_minutes: f64,
    pub coeffs: Option<PathBuf>,
    pub failure_scale: f64,
    pub bin_width_km: f64,
    pub threads: Option<usize>,
    /// When false every runtime is written as 0 so output is reproducible.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            network: NetworkSource::Synth(NetworkSynthParams::default()),
            requests: WorkloadSource::Synth(RequestSynthParams::default()),
            wind_seed: 0,
            strategies: Strategy::ALL.to_vec(),
            positionings: vec![Positioning::LocationAware, Positioning::EnergyAware],
            planner: PlannerConfig::default(),
            pad_minutes: 60.0,
            coeffs: None,
            failure_scale: DEFAULT_FAILURE_SCALE,
            bin_width_km: DEFAULT_BIN_WIDTH_KM,
            threads: None,
            timing: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |field, msg: String| Err(ExperimentError::Config { field, msg });
        if self.strategies.is_empty() {
            return bad("strategies", "at least one strategy is required".into());
        }
        if self.positionings.is_empty() && self.strategies.iter().any(|s| s.uses_support()) {
            return bad("positioning", "sharing strategies need at least one positioning".into());
        }
        if !(self.pad_minutes > 0.0 && self.pad_minutes.is_finite()) {
            return bad("pad-minutes", format!("must be positive, got {}", self.pad_minutes));
        }
        if !(self.failure_scale > 0.0 && self.failure_scale.is_finite()) {
            return bad("failure-scale", format!("must be positive, got {}", self.failure_scale));
        }
        if !(self.bin_width_km > 0.0 && self.bin_width_km.is_finite()) {
            return bad("bin-width", format!("must be positive, got {}", self.bin_width_km));
        }
        if self.threads == Some(0) {
            return bad("threads", "must be at least 1".into());
        }
        self.planner.validate().map_err(|e| ExperimentError::Config {
            field: "planner",
            msg: e.to_string(),
        })
    }

    pub fn with_greedy_pads(mut self) -> Self {
        self.planner.pad_search = PadSearch::Greedy;
        self
    }
}

/// A loaded network, workload and energy model, ready to run.
pub struct Experiment {
    pub cfg: ExperimentConfig,
    pub net: SkywayNetwork,
    pub requests: Vec<DeliveryRequest>,
    pub model: EnergyModel,
    pub distances: DistanceTable,
}

/// One compose call.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub strategy: Strategy,
    /// `None` for strategies flown without support drones.
    pub positioning: Option<Positioning>,
    pub swarm: Option<Swarm>,
    pub plan: DeliveryPlan,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub request_id: u32,
    pub strategy: Strategy,
    pub positioning: Option<Positioning>,
    pub status: String,
    /// Shortest source-destination distance; NaN if unreachable.
    pub distance_m: f64,
    pub dt_min: f64,
    pub tt_min: f64,
    pub nt_min: f64,
    pub energy_shared_mah: f64,
    pub runtime_ms: f64,
}

pub const RESULTS_HEADER: &str =
    "request_id,strategy,positioning,status,distance_m,dt_min,tt_min,nt_min,energy_shared_mAh,runtime_ms";

pub fn positioning_name(p: Option<Positioning>) -> &'static str {
    p.map_or("none", Positioning::name)
}

impl ResultRow {
    pub fn is_success(&self) -> bool {
        self.status == PlanStatus::Success.name()
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.request_id,
            self.strategy,
            positioning_name(self.positioning),
            self.status,
            self.distance_m,
            self.dt_min,
            self.tt_min,
            self.nt_min,
            self.energy_shared_mah,
            self.runtime_ms
        )
    }
}

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

/// The network used by synthetic sweeps: the largest connected component of
/// the synthesized graph, with seeded winds.
pub fn synth_network(params: &NetworkSynthParams, wind_seed: u64) -> Result<SkywayNetwork, ExperimentError> {
    let net = largest_connected_component(&synthesize_network(params)?)?;
    Ok(fill_missing_wind(&net, wind_seed))
}

impl Experiment {
    pub fn load(cfg: ExperimentConfig) -> Result<Self, ExperimentError> {
        cfg.validate()?;
        let net = match &cfg.network {
            NetworkSource::File(p) => fill_missing_wind(&load_network(p)?, cfg.wind_seed),
            NetworkSource::Synth(params) => synth_network(params, cfg.wind_seed)?,
        };
        let requests = match &cfg.requests {
            WorkloadSource::File(p) => load_requests(p)?,
            WorkloadSource::Synth(params) if params.n == 0 => Vec::new(),
            WorkloadSource::Synth(params) => synthesize_requests(&net, params)?,
        };
        let coeffs = match &cfg.coeffs {
            Some(p) => CoefficientTable::load(p)?,
            None => CoefficientTable::default(),
        };
        let mut model = EnergyModel {
            coeffs,
            ..EnergyModel::default()
        };
        model.spec.pad_charge_rate = model.spec.battery_capacity / cfg.pad_minutes;
        model.spec.inflight_share_rate = cfg.planner.share_rate;
        let distances = DistanceTable::new(&net);
        Ok(Self {
            cfg,
            net,
            requests,
            model,
            distances,
        })
    }

    pub fn planner(&self) -> Planner<'_> {
        Planner::new(&self.net, &self.model, &self.distances, self.cfg.planner).expect("config validated on load")
    }

    fn precomp(&self, positioning: Positioning, with_support: bool) -> PrecompConfig {
        PrecompConfig {
            positioning,
            failure_weights: DEFAULT_FAILURE_WEIGHTS,
            failure_scale: self.cfg.failure_scale,
            with_support,
        }
    }

    /// Strategies in canonical order, each with its positionings.
    fn combinations(&self) -> Vec<(Strategy, Option<Positioning>)> {
        let mut out = Vec::new();
        for s in Strategy::ALL {
            if !self.cfg.strategies.contains(&s) {
                continue;
            }
            if s.uses_support() {
                out.extend(self.cfg.positionings.iter().map(|&p| (s, Some(p))));
            } else {
                out.push((s, None));
            }
        }
        out
    }

    /// Every configured strategy on one request, in canonical order.
    pub fn run_request(&self, request: &DeliveryRequest) -> Result<Vec<RunRecord>, ExperimentError> {
        let planner = self.planner();
        let diameter = self.distances.diameter();
        let mut out = Vec::new();
        let mut plain: Option<Option<Swarm>> = None;
        for (strategy, positioning) in self.combinations() {
            let swarm = match positioning {
                Some(p) => self.swarm_for(request, diameter, self.precomp(p, true))?,
                None => plain
                    .get_or_insert_with(|| {
                        self.swarm_for(request, diameter, self.precomp(Positioning::LocationAware, false))
                            .ok()
                            .flatten()
                    })
                    .clone(),
            };
            let Some(swarm) = swarm else {
                out.push(RunRecord {
                    strategy,
                    positioning,
                    swarm: None,
                    plan: DeliveryPlan::unreachable(request.id, strategy, request.source),
                    runtime_ms: 0.0,
                });
                continue;
            };
            let t0 = Instant::now();
            let plan = planner.compose(request, &swarm, strategy)?;
            let elapsed = t0.elapsed().as_secs_f64() * 1e3;
            out.push(RunRecord {
                strategy,
                positioning,
                swarm: Some(swarm),
                plan,
                runtime_ms: if self.cfg.timing { elapsed } else { 0.0 },
            });
        }
        Ok(out)
    }

    /// The pre-composed swarm for `request`: with support drones placed by
    /// `positioning`, or delivery drones only when it is `None`.
    pub fn swarm(&self, request: &DeliveryRequest, positioning: Option<Positioning>) -> Result<Option<Swarm>, ExperimentError> {
        let cfg = match positioning {
            Some(p) => self.precomp(p, true),
            None => self.precomp(Positioning::LocationAware, false),
        };
        self.swarm_for(request, self.distances.diameter(), cfg)
    }

    /// `Ok(None)` when the destination cannot be reached at all.
    fn swarm_for(
        &self,
        request: &DeliveryRequest,
        diameter: f64,
        cfg: PrecompConfig,
    ) -> Result<Option<Swarm>, ExperimentError> {
        match precompose(&self.model, &self.net, diameter, request, &cfg) {
            Ok(pc) => Ok(Some(pc.swarm)),
            Err(PrecompError::Unreachable { .. }) => Ok(None),
            Err(e) => Err(PlanError::from(e).into()),
        }
    }

    pub fn row(&self, request: &DeliveryRequest, rec: &RunRecord) -> ResultRow {
        ResultRow {
            request_id: request.id,
            strategy: rec.strategy,
            positioning: rec.positioning,
            status: rec.plan.status.name().to_string(),
            distance_m: self
                .distances
                .distance(request.source, request.destination)
                .unwrap_or(f64::NAN),
            dt_min: rec.plan.dt,
            tt_min: rec.plan.tt(),
            nt_min: rec.plan.nt(),
            energy_shared_mah: rec.plan.energy_shared(),
            runtime_ms: rec.runtime_ms,
        }
    }

    /// All rows, ordered by request id then strategy.
    pub fn run(&self) -> Result<Vec<ResultRow>, ExperimentError> {
        let work = || -> Result<Vec<ResultRow>, ExperimentError> {
            let per: Vec<Vec<ResultRow>> = self
                .requests
                .par_iter()
                .map(|r| Ok(self.run_request(r)?.iter().map(|rec| self.row(r, rec)).collect()))
                .collect::<Result<_, ExperimentError>>()?;
            let mut rows: Vec<ResultRow> = per.into_iter().flatten().collect();
            // stable: strategy order within a request is already canonical
            rows.sort_by_key(|r| r.request_id);
            Ok(rows)
        };
        match self.cfg.threads {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| ExperimentError::Config {
                    field: "threads",
                    msg: e.to_string(),
                })?
                .install(work),
            None => work(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub metrics: MetricsTable,
}

pub fn run_experiment(cfg: ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    let bin_width = cfg.bin_width_km;
    let exp = Experiment::load(cfg)?;
    let rows = exp.run()?;
    let metrics = bin_metrics(&rows, bin_width);
    Ok(ExperimentOutput { rows, metrics })
}

impl ExperimentOutput {
    /// Writes results.csv, summary.csv, bins.csv and optionally plot_data.csv.
    pub fn write(&self, dir: &Path, plot_data: bool) -> Result<Vec<PathBuf>, ExperimentError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let mut files = vec![
            ("results.csv", results_csv(&self.rows)),
            ("summary.csv", self.metrics.summary_csv()),
            ("bins.csv", self.metrics.bins_csv()),
        ];
        if plot_data {
            files.push(("plot_data.csv", self.metrics.plot_data_csv()));
        }
        let mut written = Vec::new();
        for (name, body) in files {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| io_err(&p, e))?;
            written.push(p);
        }
        Ok(written)
    }
}

/// Raw failure products of a workload, for choosing the failure scale.
pub fn raw_failure_products(exp: &Experiment) -> Vec<f64> {
    let diameter = exp.distances.diameter();
    exp.requests
        .iter()
        .filter_map(|r| failure_inputs(&exp.model, &exp.net, diameter, r, DEFAULT_FAILURE_WEIGHTS).ok())
        .filter_map(|(inputs, _, _)| inputs.raw_product().ok())
        .collect()
}

#[cfg(test)]
mod tests;
