use serde::{Deserialize, Serialize};

use crate::energetics::FormationKind;

/// Distance between lattice neighbours (m).
pub const SLOT_SPACING_M: f64 = 1.0;
/// Maximum provider-consumer distance for wireless transfer (m).
pub const SHARING_RANGE_M: f64 = 1.2;

const DIAG: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Slot geometry for one formation. Slot 0 leads; +y is the direction of travel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Formation {
    pub kind: FormationKind,
    pub slots: Vec<(f64, f64)>,
    /// Per slot, the other slots within sharing range, ascending.
    pub adjacency: Vec<Vec<usize>>,
}

impl Formation {
    pub fn new(kind: FormationKind, n: usize) -> Self {
        let s = SLOT_SPACING_M;
        let slots: Vec<(f64, f64)> = match kind {
            FormationKind::Column => (0..n).map(|i| (0.0, -(i as f64) * s)).collect(),
            FormationKind::Front => {
                let mid = (n as f64 - 1.0) / 2.0;
                (0..n).map(|i| ((i as f64 - mid) * s, 0.0)).collect()
            }
            FormationKind::Echelon => (0..n)
                .map(|i| (i as f64 * DIAG * s, -(i as f64) * DIAG * s))
                .collect(),
            FormationKind::Vee => (0..n)
                .map(|i| {
                    if i == 0 {
                        return (0.0, 0.0);
                    }
                    // odd slots on the left arm, even on the right
                    let k = i.div_ceil(2) as f64;
                    let side = if i % 2 == 1 { -1.0 } else { 1.0 };
                    (side * k * DIAG * s, -k * DIAG * s)
                })
                .collect(),
            FormationKind::Diamond => diamond_cells(n)
                .into_iter()
                .map(|(i, j)| ((i as f64 - j as f64) * DIAG * s, -((i + j) as f64) * DIAG * s))
                .collect(),
        };
        let adjacency = (0..n)
            .map(|a| {
                (0..n)
                    .filter(|&b| b != a && dist(slots[a], slots[b]) <= SHARING_RANGE_M + 1e-9)
                    .collect()
            })
            .collect();
        Self {
            kind,
            slots,
            adjacency,
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        dist(self.slots[a], self.slots[b])
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency.get(a).is_some_and(|n| n.contains(&b))
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// First `n` cells of the rotated square lattice, filled ring by ring.
fn diamond_cells(n: usize) -> Vec<(usize, usize)> {
    let side = (1..).find(|k| k * k >= n).unwrap_or(1);
    let mut cells: Vec<(usize, usize)> = (0..side)
        .flat_map(|i| (0..side).map(move |j| (i, j)))
        .collect();
    cells.sort_by_key(|&(i, j)| (i.max(j), i + j, i));
    cells.truncate(n);
    cells
}
