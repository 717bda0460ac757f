use super::*;

fn row(id: u32, distance_m: f64, status: PlanStatus, dt: f64) -> ResultRow {
    ResultRow {
        request_id: id,
        strategy: Strategy::Pb,
        positioning: Some(Positioning::LocationAware),
        status: status.name().into(),
        distance_m,
        dt_min: dt,
        tt_min: dt,
        nt_min: 0.0,
        energy_shared_mah: 0.0,
        runtime_ms: 0.0,
    }
}

#[test]
fn bins_split_on_half_kilometres() {
    let rows = [
        row(1, 300.0, PlanStatus::Success, 4.0),
        row(2, 600.0, PlanStatus::Success, 9.0),
    ];
    let m = bin_metrics(&rows, 0.5);
    let bins = &m.groups[0].bins;
    assert_eq!(bins.len(), 2);
    assert_eq!((bins[0].lo_km, bins[0].hi_km, bins[0].mean_dt), (0.0, 0.5, 4.0));
    assert_eq!((bins[1].lo_km, bins[1].hi_km, bins[1].mean_dt), (0.5, 1.0, 9.0));
}

#[test]
fn failed_bin_has_no_mean() {
    let rows = [
        row(1, 300.0, PlanStatus::Stuck(crate::skynet::NodeId(1)), 4.0),
        row(2, 1200.0, PlanStatus::Success, 20.0),
    ];
    let m = bin_metrics(&rows, 0.5);
    let g = &m.groups[0];
    assert_eq!(g.bins.len(), 3);
    assert!(g.bins[0].mean_dt.is_nan());
    assert_eq!(g.bins[0].requests, 1);
    assert!(g.bins[1].mean_dt.is_nan());
    assert_eq!(g.bins[2].mean_dt, 20.0);
    assert_eq!((g.successes, g.stuck), (1, 1));
    assert!(m.bins_csv().lines().nth(1).unwrap().ends_with(",1,0,NaN,NaN"));
}

#[test]
fn empty_workload_has_headers_only() {
    let cfg = ExperimentConfig {
        network: NetworkSource::Synth(NetworkSynthParams {
            core_nodes: 20,
            outlier_nodes: 0,
            clusters: 2,
            ..Default::default()
        }),
        requests: WorkloadSource::Synth(RequestSynthParams {
            n: 0,
            ..Default::default()
        }),
        ..Default::default()
    };
    let out = run_experiment(cfg).unwrap();
    assert!(out.rows.is_empty());
    assert_eq!(results_csv(&out.rows), format!("{RESULTS_HEADER}\n"));
    assert_eq!(out.metrics.summary_csv().lines().count(), 1);
}

fn small(n: usize) -> ExperimentConfig {
    ExperimentConfig {
        network: NetworkSource::Synth(NetworkSynthParams {
            core_nodes: 40,
            outlier_nodes: 0,
            clusters: 3,
            seed: 5,
            ..Default::default()
        }),
        requests: WorkloadSource::Synth(RequestSynthParams {
            n,
            seed: 9,
            ..Default::default()
        }),
        timing: false,
        ..Default::default()
    }
}

#[test]
fn one_row_per_request_and_configuration() {
    let out = run_experiment(small(6)).unwrap();
    // baseline, dijkstra, floyd once; pb and fb under both positionings
    assert_eq!(out.rows.len(), 6 * 7);
    let order: Vec<_> = out.rows[..7]
        .iter()
        .map(|r| format!("{}/{}", r.strategy, positioning_name(r.positioning)))
        .collect();
    assert_eq!(
        order,
        [
            "baseline/none",
            "pb/location-aware",
            "pb/energy-aware",
            "fb/location-aware",
            "fb/energy-aware",
            "dijkstra/none",
            "floyd/none"
        ]
    );
    for g in &out.metrics.groups {
        assert_eq!(g.successes + g.stuck + g.unreachable, g.requests);
    }
}

#[test]
fn untimed_runs_are_byte_identical() {
    let a = run_experiment(small(5)).unwrap();
    let b = run_experiment(ExperimentConfig {
        threads: Some(1),
        ..small(5)
    })
    .unwrap();
    assert_eq!(results_csv(&a.rows), results_csv(&b.rows));
    assert_eq!(a.metrics.summary_csv(), b.metrics.summary_csv());
}

#[test]
fn writes_output_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(small(2)).unwrap();
    let files = out.write(dir.path(), true).unwrap();
    assert_eq!(files.len(), 4);
    let results = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + 2 * 7);
}

#[test]
fn config_errors_name_the_field() {
    let cfg = ExperimentConfig {
        strategies: vec![],
        ..Default::default()
    };
    let err = cfg.validate().unwrap_err();
    assert!(err.to_string().contains("strategies"), "{err}");
    let cfg = ExperimentConfig {
        pad_minutes: 0.0,
        ..Default::default()
    };
    assert!(cfg.validate().unwrap_err().to_string().contains("pad-minutes"));
    let missing = ExperimentConfig {
        network: NetworkSource::File("/nonexistent/net.csv".into()),
        ..Default::default()
    };
    assert!(Experiment::load(missing).err().unwrap().is_io());
}
