//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod support;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use swarmway_core::energetics::{CoefficientTable, Drone, DroneSpec, FormationKind, Role};
use swarmway_core::experiment::{
    run_experiment, Experiment, ExperimentConfig, ExperimentOutput, WorkloadSource,
};
use swarmway_core::planner::{DeliveryPlan, Planner, PlannerConfig, StaticGraph, Strategy};
use swarmway_core::precomp::{Formation, Positioning, Swarm};
use swarmway_core::skynet::{shortest_distance, DeliveryRequest, DistanceTable, NodeId, RequestSynthParams};
use swarmway_core::{pad_schedule, redundancy_count, EnergyModel};

/// Transfer rate for the sweeps, mAh/min.
const SWEEP_SHARE_RATE: f64 = 352.8;
/// Slack on the top-quartile positioning comparison.
const DT_SLACK: f64 = 0.05;
const SHARING_BUDGET: Duration = Duration::from_secs(30);
const PATHS_BUDGET: Duration = Duration::from_secs(60);
const SWEEP_BUDGET: Duration = Duration::from_secs(600);

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        ok,
        detail: detail.into(),
    }
}

fn pad_exactness() -> Verdict {
    let times = [60.0, 50.0, 40.0, 30.0, 20.0];
    let got: Vec<f64> = [1, 3, 5]
        .iter()
        .map(|&p| pad_schedule(&times, p).expect("valid input").node_time)
        .collect();
    verdict(got == [200.0, 70.0, 60.0], format!("nt for 1/3/5 pads = {got:?}"))
}

fn sharing_oracle() -> Verdict {
    let t0 = Instant::now();
    let mut rng = support::rng(2024);
    let mut mismatches = Vec::new();
    let mut shared = 0usize;
    for i in 0..200 {
        let case = support::random_share_case(&mut rng);
        let (pb, fb) = (case.engine_pb(), case.engine_fb());
        let (opb, ofb) = (support::oracle_pb(&case), support::oracle_fb(&case));
        if pb != opb {
            mismatches.push(format!("#{i} pb {pb:?} vs {opb:?}"));
        }
        if fb != ofb {
            mismatches.push(format!("#{i} fb {fb:?} vs {ofb:?}"));
        }
        shared += usize::from(pb[0] != case.provider.battery as f64 - (case.provider.burn * case.minutes) as f64);
    }
    let took = t0.elapsed();
    verdict(
        mismatches.is_empty() && took < SHARING_BUDGET,
        format!(
            "200 instances, {shared} with pb sharing, {} mismatches {:?}, {took:.2?}",
            mismatches.len(),
            mismatches.first()
        ),
    )
}

fn path_oracle() -> Verdict {
    let t0 = Instant::now();
    let mut rng = support::rng(7);
    let model = EnergyModel::default();
    let swarm = single_drone(&model, 1.0);
    let mut bad = Vec::new();
    let mut pairs = 0usize;
    for g in 0..100 {
        let net = support::random_network(&mut rng, 10);
        let ids: Vec<NodeId> = net.nodes().iter().map(|n| n.id).collect();
        let adj = support::distance_adjacency(&net);
        for (s, &a) in ids.iter().enumerate() {
            let best = support::enumerate_min(&adj, s);
            for (t, &b) in ids.iter().enumerate() {
                pairs += 1;
                let got = shortest_distance(&net, a, b).expect("known nodes").map(|p| p.distance);
                if got != best[t] {
                    bad.push(format!("graph {g} {a}->{b}: {got:?} vs {:?}", best[t]));
                }
            }
        }
        let table = DistanceTable::new(&net);
        let planner = Planner::new(&net, &model, &table, PlannerConfig::default()).expect("default config");
        let graph = StaticGraph::build(&planner, &swarm).expect("statics build");
        let all = graph.floyd_warshall();
        for s in 0..ids.len() {
            let (dist, _) = graph.dijkstra(s);
            for (t, d) in dist.iter().enumerate() {
                if all.cost(s, t) != *d {
                    bad.push(format!("graph {g} static {s}->{t}: {} vs {d}", all.cost(s, t)));
                }
            }
        }
    }
    let took = t0.elapsed();
    verdict(
        bad.is_empty() && took < PATHS_BUDGET,
        format!("100 graphs, {pairs} pairs, {} mismatches {:?}, {took:.2?}", bad.len(), bad.first()),
    )
}

fn sweep_config(n: usize, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        requests: WorkloadSource::Synth(RequestSynthParams {
            n,
            seed,
            ..Default::default()
        }),
        ..Default::default()
    };
    cfg.planner.share_rate = SWEEP_SHARE_RATE;
    cfg
}

/// Every violated invariant in one successful plan.
fn invariant_faults(plan: &DeliveryPlan, swarm: &Swarm) -> Vec<String> {
    let mut out = Vec::new();
    let tt: f64 = plan.legs.iter().map(|l| l.tt).sum();
    let nt: f64 = plan.visits.iter().map(|v| v.nt).sum();
    if plan.dt != tt + nt {
        out.push(format!("dt {} != {tt} + {nt}", plan.dt));
    }
    for (k, leg) in plan.legs.iter().enumerate() {
        let (mut gained, mut given) = (0.0, 0.0);
        for (d, g) in swarm.drones.iter().zip(&leg.gains) {
            match d.role {
                Role::Delivery => gained += g,
                Role::Support => given -= g,
            }
        }
        if gained != given || gained != leg.sharing.total() {
            out.push(format!("leg {k}: gained {gained}, given {given}, planned {}", leg.sharing.total()));
        }
        for (i, d) in swarm.drones.iter().enumerate() {
            if leg.grid_min[i] < 0.0 || leg.grid_max[i] > d.capacity {
                out.push(format!(
                    "leg {k} drone {}: grid range [{}, {}] outside [0, {}]",
                    d.id, leg.grid_min[i], leg.grid_max[i], d.capacity
                ));
            }
        }
    }
    out
}

fn invariants() -> Verdict {
    let t0 = Instant::now();
    let exp = Experiment::load(sweep_config(1000, 31)).expect("sweep loads");
    let results: Vec<(usize, usize, Vec<String>)> = exp
        .requests
        .par_iter()
        .map(|r| {
            let records = exp.run_request(r).expect("request plans");
            let mut faults = Vec::new();
            let (mut checked, mut shared) = (0, 0);
            for rec in records.iter().filter(|rec| rec.plan.status.is_success()) {
                let swarm = rec.swarm.as_ref().expect("success implies a swarm");
                checked += 1;
                shared += usize::from(rec.plan.energy_shared() > 0.0);
                faults.extend(
                    invariant_faults(&rec.plan, swarm)
                        .into_iter()
                        .map(|f| format!("request {} {}: {f}", r.id, rec.strategy)),
                );
            }
            (checked, shared, faults)
        })
        .collect();
    let checked: usize = results.iter().map(|r| r.0).sum();
    let shared: usize = results.iter().map(|r| r.1).sum();
    let faults: Vec<&String> = results.iter().flat_map(|r| &r.2).collect();
    verdict(
        faults.is_empty() && checked > 0,
        format!(
            "{checked} successful plans ({shared} with sharing), {} faults {:?}, {:.2?}",
            faults.len(),
            faults.first(),
            t0.elapsed()
        ),
    )
}

fn single_drone(model: &EnergyModel, payload: f64) -> Swarm {
    Swarm::new(
        Formation::new(FormationKind::Column, 1),
        vec![Drone::delivery(1, payload, &model.spec)],
    )
    .expect("one drone in one slot")
}

fn detour_witness() -> Verdict {
    let net = support::detour_network();
    let model = EnergyModel {
        spec: DroneSpec {
            pad_charge_rate: 4480.0 / 60.0,
            ..DroneSpec::default()
        },
        coeffs: CoefficientTable::uniform(1.0, 16),
        ..EnergyModel::default()
    };
    let table = DistanceTable::new(&net);
    let planner = Planner::new(&net, &model, &table, PlannerConfig::default()).expect("default config");
    let swarm = single_drone(&model, 1.4);
    let request = DeliveryRequest {
        id: 1,
        source: NodeId(1),
        destination: NodeId(3),
        package_weights: vec![1.4],
    };
    let dijkstra = planner.dijkstra_baseline(&request, &swarm).expect("plans");
    let floyd = planner.floyd_warshall_baseline(&request, &swarm).expect("plans");
    let composed = planner.compose(&request, &swarm, Strategy::Baseline).expect("plans");
    let stuck = |p: &DeliveryPlan| !p.status.is_success();
    verdict(
        stuck(&dijkstra) && stuck(&floyd) && composed.status.is_success(),
        format!(
            "dijkstra {:?}, floyd {:?}, compose {:?} via {:?}",
            dijkstra.status, floyd.status, composed.status, composed.path
        ),
    )
}

fn group(out: &ExperimentOutput, s: Strategy, p: Option<Positioning>) -> (usize, f64) {
    let g = out
        .metrics
        .groups
        .iter()
        .find(|g| g.strategy == s && g.positioning == p)
        .expect("every configuration runs");
    (g.successes, g.mean_runtime_ms)
}

fn ordering(out: &ExperimentOutput, nodes: usize, took: Duration) -> Verdict {
    use Positioning::{EnergyAware as Ea, LocationAware as La};
    let s = |st, p| group(out, st, p).0;
    let (pb_la, pb_ea, fb_la, fb_ea) = (s(Strategy::Pb, Some(La)), s(Strategy::Pb, Some(Ea)), s(Strategy::Fb, Some(La)), s(Strategy::Fb, Some(Ea)));
    let base = s(Strategy::Baseline, None);
    let (dij, fw) = (s(Strategy::Dijkstra, None), s(Strategy::Floyd, None));
    let ok = nodes == 195
        && pb_la >= fb_la
        && pb_ea >= fb_ea
        && pb_la >= pb_ea
        && fb_la >= fb_ea
        && pb_la.min(pb_ea).min(fb_la).min(fb_ea) > base
        && base > dij.max(fw)
        && took < SWEEP_BUDGET;
    verdict(
        ok,
        format!(
            "{nodes} nodes; pb la/ea {pb_la}/{pb_ea}, fb la/ea {fb_la}/{fb_ea}, baseline {base}, dijkstra {dij}, floyd {fw}; {took:.1?}"
        ),
    )
}

fn positioning_tradeoff(out: &ExperimentOutput) -> Verdict {
    let mut d: Vec<f64> = out
        .rows
        .iter()
        .filter(|r| r.strategy == Strategy::Baseline)
        .map(|r| r.distance_m)
        .collect();
    d.sort_by(f64::total_cmp);
    let cut = d[d.len() * 3 / 4];
    let mean_dt = |p| {
        let v: Vec<f64> = out
            .rows
            .iter()
            .filter(|r| r.strategy == Strategy::Pb && r.positioning == Some(p) && r.is_success() && r.distance_m >= cut)
            .map(|r| r.dt_min)
            .collect();
        (v.iter().sum::<f64>() / v.len() as f64, v.len())
    };
    let (ea, n_ea) = mean_dt(Positioning::EnergyAware);
    let (la, n_la) = mean_dt(Positioning::LocationAware);
    verdict(
        ea <= la * (1.0 + DT_SLACK),
        format!("distance >= {cut:.0} m: energy-aware {ea:.2} min ({n_ea}), location-aware {la:.2} min ({n_la})"),
    )
}

fn runtime_ordering(out: &ExperimentOutput) -> Verdict {
    let rt = |s| {
        let la = group(out, s, Some(Positioning::LocationAware));
        let ea = group(out, s, Some(Positioning::EnergyAware));
        (la.1 * la.0 as f64 + ea.1 * ea.0 as f64) / (la.0 + ea.0) as f64
    };
    let base = group(out, Strategy::Baseline, None).1;
    let (pb, fb) = (rt(Strategy::Pb), rt(Strategy::Fb));
    verdict(base < pb && pb < fb, format!("mean ms baseline {base:.3}, pb {pb:.3}, fb {fb:.3}"))
}

fn redundancy_bands() -> Verdict {
    let cases = [(19.0, 5, 1), (20.0, 5, 2), (40.0, 5, 3), (60.0, 5, 4), (80.0, 5, 5), (80.0, 7, 7)];
    let got: Vec<usize> = cases.iter().map(|&(p, n, _)| redundancy_count(p, n)).collect();
    let want: Vec<usize> = cases.iter().map(|c| c.2).collect();
    verdict(got == want, format!("19/20/40/60/80 (n=5), 80 (n=7) -> {got:?}"))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, v: Verdict| {
        println!("criterion {n} {name}: {} ({})", if v.ok { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.ok);
    };
    report(1, "pad schedule", pad_exactness());
    report(2, "sharing oracle", sharing_oracle());
    report(3, "path oracle", path_oracle());
    report(4, "conservation and safety", invariants());

    let t0 = Instant::now();
    let out = run_experiment(sweep_config(2000, 0)).expect("sweep runs");
    let took = t0.elapsed();
    let nodes = Experiment::load(sweep_config(0, 0)).expect("network loads").net.node_count();
    report(5, "success ordering", ordering(&out, nodes, took));
    report(6, "detour witness", detour_witness());
    report(7, "positioning trade-off", positioning_tradeoff(&out));
    report(8, "runtime ordering", runtime_ordering(&out));
    report(9, "redundancy bands", redundancy_bands());

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
