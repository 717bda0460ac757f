use serde::{Deserialize, Serialize};

/// Piecewise-linear battery level over one leg. Breakpoints are appended in
/// time order; the last piece extends to infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    /// (start minute, battery at start, mAh/min slope)
    pieces: Vec<(f64, f64, f64)>,
    consumption: f64,
    inflow: f64,
    outflow: f64,
}

impl Track {
    pub fn new(battery0: f64, consumption: f64) -> Self {
        Self {
            pieces: vec![(0.0, battery0, -consumption)],
            consumption,
            inflow: 0.0,
            outflow: 0.0,
        }
    }

    pub fn battery_at(&self, t: f64) -> f64 {
        let i = self.pieces.partition_point(|p| p.0 <= t).saturating_sub(1);
        let (t0, b0, slope) = self.pieces[i];
        b0 + slope * (t - t0)
    }

    pub fn consumption(&self) -> f64 {
        self.consumption
    }

    /// Current slope, i.e. of the piece starting at the last breakpoint.
    pub fn slope(&self) -> f64 {
        self.pieces.last().expect("non-empty").2
    }

    fn rebase(&mut self, now: f64) {
        let slope = self.inflow - self.outflow - self.consumption;
        let last = *self.pieces.last().expect("non-empty");
        debug_assert!(now >= last.0);
        if last.0 == now {
            self.pieces.last_mut().expect("non-empty").2 = slope;
        } else {
            let b = last.1 + last.2 * (now - last.0);
            self.pieces.push((now, b, slope));
        }
    }

    pub fn set_consumption(&mut self, now: f64, rate: f64) {
        self.consumption = rate;
        self.rebase(now);
    }

    pub fn set_inflow(&mut self, now: f64, rate: f64) {
        self.inflow = rate;
        self.rebase(now);
    }

    pub fn set_outflow(&mut self, now: f64, rate: f64) {
        self.outflow = rate;
        self.rebase(now);
    }

    /// First integer minute `t` in `[from, before)` with `battery_at(t) < threshold`.
    /// `now` marks where the piecewise history ends and the current slope applies.
    pub fn first_minute_below(&self, threshold: f64, from: f64, before: f64, now: f64) -> Option<f64> {
        let mut t = from.max(0.0).ceil();
        // the past is walked minute by minute; it is short
        while t <= now && t < before {
            if self.battery_at(t) < threshold {
                return Some(t);
            }
            t += 1.0;
        }
        if t >= before {
            return None;
        }
        let slope = self.slope();
        if slope >= 0.0 {
            return if self.battery_at(t) < threshold { Some(t) } else { None };
        }
        // closed form for the linear future, then nudge to absorb rounding
        let b_now = self.battery_at(now);
        let guess = (now + (b_now - threshold) / -slope).floor().max(t);
        let mut k = guess;
        while k > t && self.battery_at(k - 1.0) < threshold {
            k -= 1.0;
        }
        while self.battery_at(k) >= threshold {
            k += 1.0;
            if k >= before {
                return None;
            }
        }
        (k < before).then_some(k)
    }
}
