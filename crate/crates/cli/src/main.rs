use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use swarmway_core::experiment::{
    raw_failure_products, run_experiment, synth_network, Experiment, ExperimentConfig, ExperimentError,
    NetworkSource, WorkloadSource, DEFAULT_BIN_WIDTH_KM,
};
use swarmway_core::{
    calibrate_scale, failure_score, redundancy_count, save_network, save_requests,
    synthesize_requests, CoefficientTable, NetworkSynthParams, PlannerConfig, Positioning,
    RequestSynthParams, Strategy, DEFAULT_FAILURE_SCALE,
};

#[derive(Parser, Debug)]
#[command(name = "swarmway", version, about = "Swarm drone delivery planning experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a strategy sweep and write results.csv, summary.csv and bins.csv.
    Run(RunArgs),
    /// Write a synthetic network and request workload to disk.
    Synth(SynthArgs),
    /// Formation coefficient table utilities.
    Coeffs {
        #[command(subcommand)]
        cmd: CoeffsCmd,
    },
    /// Pick a failure scale so that a workload quantile lands at the top band.
    Calibrate(CalibrateArgs),
}

#[derive(Subcommand, Debug)]
enum CoeffsCmd {
    /// Print the built-in table as CSV, or write it to a file.
    Export {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct Source {
    /// Network CSV; a seeded synthetic network when absent.
    #[arg(long)]
    network: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    network_seed: u64,
    /// Number of synthetic requests.
    #[arg(long, default_value_t = 10_000)]
    requests: usize,
    /// Request file; overrides --requests.
    #[arg(long)]
    requests_file: Option<PathBuf>,
    /// Request synthesis seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seed for winds on segments that carry none.
    #[arg(long, default_value_t = 0)]
    wind_seed: u64,
}

impl Source {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        cfg.network = match &self.network {
            Some(p) => NetworkSource::File(p.clone()),
            None => NetworkSource::Synth(NetworkSynthParams {
                seed: self.network_seed,
                ..Default::default()
            }),
        };
        cfg.requests = match &self.requests_file {
            Some(p) => WorkloadSource::File(p.clone()),
            None => WorkloadSource::Synth(RequestSynthParams {
                n: self.requests,
                seed: self.seed,
                ..Default::default()
            }),
        };
        cfg.wind_seed = self.wind_seed;
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_delimiter = ',', default_value = "baseline,pb,fb,dijkstra,floyd")]
    strategies: Vec<Strategy>,
    #[arg(long, value_delimiter = ',', default_value = "location-aware,energy-aware")]
    positioning: Vec<Positioning>,
    /// Battery fraction below which a delivery drone asks for energy.
    #[arg(long, default_value_t = PlannerConfig::default().gamma)]
    gamma: f64,
    /// Provider reserve as a fraction of its capacity.
    #[arg(long, default_value_t = PlannerConfig::default().delta_frac)]
    delta_frac: f64,
    /// Fairness grant per round, mAh.
    #[arg(long, default_value_t = PlannerConfig::default().lambda)]
    lambda: f64,
    /// In-flight transfer rate, mAh/min.
    #[arg(long, default_value_t = PlannerConfig::default().share_rate)]
    share_rate: f64,
    /// Minutes for a pad to fill an empty delivery battery.
    #[arg(long, default_value_t = 60.0)]
    pad_minutes: f64,
    /// Coefficient table CSV; the built-in table when absent.
    #[arg(long)]
    coeffs: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_FAILURE_SCALE)]
    failure_scale: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
    /// Write 0 for every runtime so repeated runs are byte-identical.
    #[arg(long)]
    no_timing: bool,
    /// Also write plot_data.csv in long format.
    #[arg(long)]
    plot_data: bool,
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH_KM)]
    bin_width: f64,
    /// Longest-job-first pad assignment instead of the exact search.
    #[arg(long)]
    greedy_pads: bool,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    network_seed: u64,
    #[arg(long, default_value_t = 10_000)]
    requests: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    wind_seed: u64,
    #[arg(long, default_value = "synth")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[command(flatten)]
    source: Source,
    /// Workload quantile mapped to a score of 80.
    #[arg(long, default_value_t = 0.8)]
    quantile: f64,
}

fn exit_code(e: &ExperimentError) -> u8 {
    match e {
        e if e.is_io() => 3,
        ExperimentError::Plan(_) => 1,
        _ => 2,
    }
}

fn run(args: RunArgs) -> Result<(), ExperimentError> {
    let mut cfg = ExperimentConfig {
        strategies: args.strategies,
        positionings: args.positioning,
        planner: PlannerConfig {
            gamma: args.gamma,
            delta_frac: args.delta_frac,
            lambda: args.lambda,
            share_rate: args.share_rate,
            ..PlannerConfig::default()
        },
        pad_minutes: args.pad_minutes,
        coeffs: args.coeffs,
        failure_scale: args.failure_scale,
        bin_width_km: args.bin_width,
        threads: args.threads,
        timing: !args.no_timing,
        ..ExperimentConfig::default()
    };
    args.source.apply(&mut cfg);
    if args.greedy_pads {
        cfg = cfg.with_greedy_pads();
    }
    let out = run_experiment(cfg)?;
    for p in out.write(&args.out, args.plot_data)? {
        println!("wrote {}", p.display());
    }
    print!("{}", out.metrics.summary_csv());
    Ok(())
}

fn write_file(path: &Path, body: &str) -> Result<(), ExperimentError> {
    fs::write(path, body).map_err(|e| ExperimentError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

fn synth(args: SynthArgs) -> Result<(), ExperimentError> {
    let params = NetworkSynthParams {
        seed: args.network_seed,
        ..Default::default()
    };
    let net = synth_network(&params, args.wind_seed)?;
    let requests = synthesize_requests(
        &net,
        &RequestSynthParams {
            n: args.requests,
            seed: args.seed,
            ..Default::default()
        },
    )?;
    fs::create_dir_all(&args.out).map_err(|e| ExperimentError::Io {
        path: args.out.display().to_string(),
        msg: e.to_string(),
    })?;
    let (np, rp) = (args.out.join("network.csv"), args.out.join("requests.csv"));
    save_network(&net, &np)?;
    save_requests(&requests, &rp)?;
    println!("wrote {} ({} nodes, {} segments)", np.display(), net.node_count(), net.segment_count());
    println!("wrote {} ({} requests)", rp.display(), requests.len());
    Ok(())
}

fn calibrate(args: CalibrateArgs) -> Result<(), ExperimentError> {
    if !(0.0..=1.0).contains(&args.quantile) {
        return Err(ExperimentError::Config {
            field: "quantile",
            msg: format!("must be in [0, 1], got {}", args.quantile),
        });
    }
    let mut cfg = ExperimentConfig::default();
    args.source.apply(&mut cfg);
    let exp = Experiment::load(cfg)?;
    let raw = raw_failure_products(&exp);
    let Some(scale) = calibrate_scale(&raw, args.quantile) else {
        return Err(ExperimentError::Config {
            field: "requests",
            msg: "workload has no positive failure product".into(),
        });
    };
    println!("scale,{scale:e}");
    let mut bands = [0usize; 5];
    for &r in &raw {
        // with five delivery drones the band index is the support count
        let support = redundancy_count(failure_score(r, scale), 5);
        bands[support.min(5) - 1] += 1;
    }
    println!("band,requests");
    for (label, n) in ["N+1", "N+2", "N+3", "N+4", "2N"].iter().zip(bands) {
        println!("{label},{n}");
    }
    Ok(())
}

fn export_coeffs(out: Option<PathBuf>) -> Result<(), ExperimentError> {
    let csv = CoefficientTable::default().to_csv();
    match out {
        Some(p) => write_file(&p, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Command::Run(a) => run(a),
        Command::Synth(a) => synth(a),
        Command::Coeffs {
            cmd: CoeffsCmd::Export { out },
        } => export_coeffs(out),
        Command::Calibrate(a) => calibrate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
