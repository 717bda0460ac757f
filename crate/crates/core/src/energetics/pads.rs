//! Assignment of recharging drones to a node's pads.

use serde::{Deserialize, Serialize};

use super::EnergyError;

/// Exhaustive search is exact but exponential; above this many drones it refuses.
pub const DEFAULT_EXHAUSTIVE_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PadSearch {
    /// Exact optimum for up to `cap` drones.
    Exhaustive { cap: usize },
    /// Longest-processing-time-first; not guaranteed optimal.
    Greedy,
}

impl Default for PadSearch {
    fn default() -> Self {
        PadSearch::Exhaustive {
            cap: DEFAULT_EXHAUSTIVE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PadSchedule {
    /// Drone indices queued on each pad, in service order.
    pub queues: Vec<Vec<usize>>,
    /// Per drone (input order): charge start and end, minutes after arrival.
    pub intervals: Vec<(f64, f64)>,
    /// Charging plus waiting time at the node: the longest queue.
    pub node_time: f64,
}

impl PadSchedule {
    fn from_assignment(charge_times: &[f64], pads: usize, assign: &[usize]) -> Self {
        let mut queues = vec![Vec::new(); pads];
        let mut intervals = vec![(0.0, 0.0); charge_times.len()];
        let mut load = vec![0.0; pads];
        for (d, &p) in assign.iter().enumerate() {
            queues[p].push(d);
            intervals[d] = (load[p], load[p] + charge_times[d]);
            load[p] += charge_times[d];
        }
        let node_time = load.iter().copied().fold(0.0, f64::max);
        Self {
            queues,
            intervals,
            node_time,
        }
    }

    /// Pad index serving each drone.
    pub fn assignment(&self) -> Vec<usize> {
        let mut out = vec![0; self.intervals.len()];
        for (p, q) in self.queues.iter().enumerate() {
            for &d in q {
                out[d] = p;
            }
        }
        out
    }
}

/// Minimum-makespan assignment of charge jobs to identical pads. Ties go to
/// the lexicographically smallest pad-index vector.
pub fn pad_schedule(charge_times: &[f64], pads: usize) -> Result<PadSchedule, EnergyError> {
    pad_schedule_with(charge_times, pads, PadSearch::default())
}

pub fn pad_schedule_with(
    charge_times: &[f64],
    pads: usize,
    search: PadSearch,
) -> Result<PadSchedule, EnergyError> {
    if pads == 0 {
        return Err(EnergyError::NoPads);
    }
    if let Some(&t) = charge_times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(EnergyError::BadChargeTime(t));
    }
    let assign = match search {
        PadSearch::Exhaustive { cap } => {
            if charge_times.len() > cap {
                return Err(EnergyError::TooManyDrones {
                    count: charge_times.len(),
                    cap,
                });
            }
            exhaustive(charge_times, pads)
        }
        PadSearch::Greedy => greedy(charge_times, pads),
    };
    Ok(PadSchedule::from_assignment(charge_times, pads, &assign))
}

struct Search<'a> {
    times: &'a [f64],
    pads: usize,
    lower_bound: f64,
    load: Vec<f64>,
    cur: Vec<usize>,
    best: Vec<usize>,
    best_nt: f64,
}

impl Search<'_> {
    /// Returns true once the lower bound is met.
    fn dfs(&mut self, d: usize, opened: usize, partial: f64) -> bool {
        if partial >= self.best_nt {
            return false;
        }
        if d == self.times.len() {
            self.best_nt = partial;
            self.best.clone_from(&self.cur);
            return partial <= self.lower_bound;
        }
        // only the first still-empty pad may be opened: pad labels are interchangeable
        let limit = (opened + 1).min(self.pads);
        for p in 0..limit {
            self.load[p] += self.times[d];
            self.cur[d] = p;
            let next = partial.max(self.load[p]);
            let done = self.dfs(d + 1, opened.max(p + 1), next);
            self.load[p] -= self.times[d];
            if done {
                return true;
            }
        }
        false
    }
}

fn exhaustive(times: &[f64], pads: usize) -> Vec<usize> {
    if times.is_empty() {
        return Vec::new();
    }
    let total: f64 = times.iter().sum();
    let longest = times.iter().copied().fold(0.0, f64::max);
    let mut s = Search {
        times,
        pads,
        lower_bound: longest.max(total / pads as f64),
        load: vec![0.0; pads],
        cur: vec![0; times.len()],
        best: Vec::new(),
        best_nt: f64::INFINITY,
    };
    s.dfs(0, 0, 0.0);
    s.best
}

fn greedy(times: &[f64], pads: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[b].total_cmp(&times[a]).then(a.cmp(&b)));
    let mut load = vec![0.0_f64; pads];
    let mut assign = vec![0; times.len()];
    for d in order {
        let p = (0..pads)
            .min_by(|&a, &b| load[a].total_cmp(&load[b]).then(a.cmp(&b)))
            .expect("pads >= 1");
        load[p] += times[d];
        assign[d] = p;
    }
    assign
}
