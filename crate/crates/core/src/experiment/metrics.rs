use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::planner::Strategy;
use crate::precomp::Positioning;

use super::{positioning_name, ResultRow};

pub const DEFAULT_BIN_WIDTH_KM: f64 = 0.5;

/// Requests whose shortest distance falls in `[lo_km, hi_km)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lo_km: f64,
    pub hi_km: f64,
    pub requests: usize,
    pub successes: usize,
    /// NaN when no request in the bin succeeded.
    pub mean_dt: f64,
    pub mean_nt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub strategy: Strategy,
    pub positioning: Option<Positioning>,
    pub requests: usize,
    pub successes: usize,
    pub stuck: usize,
    pub unreachable: usize,
    /// Means over successes; NaN if there are none.
    pub mean_dt: f64,
    pub mean_nt: f64,
    pub mean_runtime_ms: f64,
    pub bins: Vec<Bin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub bin_width_km: f64,
    pub groups: Vec<GroupMetrics>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for x in xs {
        sum += x;
        n += 1;
    }
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Groups rows by (strategy, positioning) in first-seen order and bins them
/// by shortest distance. Unreachable rows count toward totals only.
pub fn bin_metrics(rows: &[ResultRow], bin_width_km: f64) -> MetricsTable {
    let mut keys: Vec<(Strategy, Option<Positioning>)> = Vec::new();
    for r in rows {
        let k = (r.strategy, r.positioning);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let groups = keys
        .into_iter()
        .map(|(strategy, positioning)| {
            let g: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| r.strategy == strategy && r.positioning == positioning)
                .collect();
            let ok = || g.iter().filter(|r| r.is_success());
            let top = g
                .iter()
                .filter(|r| r.distance_m.is_finite())
                .map(|r| (r.distance_m / 1000.0 / bin_width_km).floor() as usize)
                .max();
            let bins = (0..top.map_or(0, |t| t + 1))
                .map(|k| {
                    let in_bin: Vec<&&ResultRow> = g
                        .iter()
                        .filter(|r| {
                            r.distance_m.is_finite() && (r.distance_m / 1000.0 / bin_width_km).floor() as usize == k
                        })
                        .collect();
                    let succ: Vec<&&&ResultRow> = in_bin.iter().filter(|r| r.is_success()).collect();
                    Bin {
                        lo_km: k as f64 * bin_width_km,
                        hi_km: (k + 1) as f64 * bin_width_km,
                        requests: in_bin.len(),
                        successes: succ.len(),
                        mean_dt: mean(succ.iter().map(|r| r.dt_min)),
                        mean_nt: mean(succ.iter().map(|r| r.nt_min)),
                    }
                })
                .collect();
            GroupMetrics {
                strategy,
                positioning,
                requests: g.len(),
                successes: ok().count(),
                stuck: g.iter().filter(|r| r.status == "stuck").count(),
                unreachable: g.iter().filter(|r| r.status == "unreachable").count(),
                mean_dt: mean(ok().map(|r| r.dt_min)),
                mean_nt: mean(ok().map(|r| r.nt_min)),
                mean_runtime_ms: mean(g.iter().map(|r| r.runtime_ms)),
                bins,
            }
        })
        .collect();
    MetricsTable { bin_width_km, groups }
}

impl MetricsTable {
    pub fn group(&self, strategy: Strategy, positioning: Option<Positioning>) -> Option<&GroupMetrics> {
        self.groups
            .iter()
            .find(|g| g.strategy == strategy && g.positioning == positioning)
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "strategy,positioning,requests,successes,stuck,unreachable,success_rate,mean_dt_min,mean_nt_min,mean_runtime_ms\n",
        );
        for g in &self.groups {
            let rate = if g.requests == 0 {
                f64::NAN
            } else {
                g.successes as f64 / g.requests as f64
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                g.strategy,
                positioning_name(g.positioning),
                g.requests,
                g.successes,
                g.stuck,
                g.unreachable,
                rate,
                g.mean_dt,
                g.mean_nt,
                g.mean_runtime_ms
            );
        }
        out
    }

    pub fn bins_csv(&self) -> String {
        let mut out = String::from("strategy,positioning,bin_lo_km,bin_hi_km,requests,successes,mean_dt_min,mean_nt_min\n");
        for g in &self.groups {
            for b in &g.bins {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    g.strategy,
                    positioning_name(g.positioning),
                    b.lo_km,
                    b.hi_km,
                    b.requests,
                    b.successes,
                    b.mean_dt,
                    b.mean_nt
                );
            }
        }
        out
    }

    /// Long format: one (series, bin, metric, value) observation per line.
    pub fn plot_data_csv(&self) -> String {
        let mut out = String::from("strategy,positioning,bin_lo_km,metric,value\n");
        for g in &self.groups {
            let p = positioning_name(g.positioning);
            for b in &g.bins {
                for (metric, value) in [
                    ("successes", b.successes as f64),
                    ("mean_dt_min", b.mean_dt),
                    ("mean_nt_min", b.mean_nt),
                ] {
                    let _ = writeln!(out, "{},{p},{},{metric},{value}", g.strategy, b.lo_km);
                }
            }
            let _ = writeln!(out, "{},{p},all,successes,{}", g.strategy, g.successes);
            let _ = writeln!(out, "{},{p},all,mean_runtime_ms,{}", g.strategy, g.mean_runtime_ms);
        }
        out
    }
}
