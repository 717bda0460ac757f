//! Formation position coefficients C(formation, slot, wind sector).

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EnergyError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormationKind {
    Column,
    Front,
    Echelon,
    Vee,
    Diamond,
}

impl FormationKind {
    /// Declaration order doubles as the selection tie-break.
    pub const ALL: [FormationKind; 5] = [
        FormationKind::Column,
        FormationKind::Front,
        FormationKind::Echelon,
        FormationKind::Vee,
        FormationKind::Diamond,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FormationKind::Column => "column",
            FormationKind::Front => "front",
            FormationKind::Echelon => "echelon",
            FormationKind::Vee => "vee",
            FormationKind::Diamond => "diamond",
        }
    }
}

impl fmt::Display for FormationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FormationKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FormationKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown formation `{s}`"))
    }
}

/// Where the apparent wind comes from relative to the direction of travel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindSector {
    Head,
    Right,
    Tail,
    Left,
}

impl WindSector {
    pub const ALL: [WindSector; 4] = [
        WindSector::Head,
        WindSector::Right,
        WindSector::Tail,
        WindSector::Left,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WindSector::Head => "head",
            WindSector::Right => "right",
            WindSector::Tail => "tail",
            WindSector::Left => "left",
        }
    }

    /// Quantizes a relative bearing (0 = dead ahead, clockwise) into 90° sectors.
    pub fn from_relative_bearing(deg: f64) -> Self {
        let d = (deg + 45.0).rem_euclid(360.0);
        match d {
            d if d < 90.0 => WindSector::Head,
            d if d < 180.0 => WindSector::Right,
            d if d < 270.0 => WindSector::Tail,
            _ => WindSector::Left,
        }
    }
}

impl fmt::Display for WindSector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WindSector {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        WindSector::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown wind sector `{s}`"))
    }
}

/// Slots covered by the built-in table.
pub const DEFAULT_TABLE_SLOTS: usize = 16;

fn lead(sector: WindSector) -> f64 {
    match sector {
        WindSector::Head => 1.2,
        WindSector::Tail => 1.0,
        WindSector::Left | WindSector::Right => 1.1,
    }
}

/// Total saving available to trailing slots.
fn shelter(kind: FormationKind, sector: WindSector) -> f64 {
    use FormationKind::*;
    match sector {
        WindSector::Head => match kind {
            Column => 0.20,
            Front => 0.10,
            Echelon => 0.25,
            Vee => 0.35,
            Diamond => 0.30,
        },
        WindSector::Tail => match kind {
            Column => 0.15,
            Front => 0.05,
            Echelon => 0.10,
            Vee => 0.10,
            Diamond => 0.12,
        },
        WindSector::Left | WindSector::Right => match kind {
            Column => 0.10,
            Front => 0.15,
            Echelon => 0.20,
            Vee => 0.18,
            Diamond => 0.28,
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    entries: BTreeMap<(FormationKind, usize, WindSector), f64>,
}

impl Default for CoefficientTable {
    /// Slot 0 is the exposed leader; each later slot shelters a little more,
    /// so coefficients fall strictly with slot index and stay in [0.8, 1.3].
    fn default() -> Self {
        let mut entries = BTreeMap::new();
        for kind in FormationKind::ALL {
            for sector in WindSector::ALL {
                for slot in 0..DEFAULT_TABLE_SLOTS {
                    let i = slot as f64;
                    let c = lead(sector) - shelter(kind, sector) * i / (i + 1.0);
                    entries.insert((kind, slot, sector), (c * 1e4).round() / 1e4);
                }
            }
        }
        Self { entries }
    }
}

impl CoefficientTable {
    /// Every coefficient equal to `c`, for `slots` slots.
    pub fn uniform(c: f64, slots: usize) -> Self {
        let mut entries = BTreeMap::new();
        for kind in FormationKind::ALL {
            for sector in WindSector::ALL {
                for slot in 0..slots {
                    entries.insert((kind, slot, sector), c);
                }
            }
        }
        Self { entries }
    }

    pub fn get(&self, kind: FormationKind, slot: usize, sector: WindSector) -> Result<f64, EnergyError> {
        self.entries
            .get(&(kind, slot, sector))
            .copied()
            .ok_or(EnergyError::InvalidSlot { formation: kind, slot })
    }

    pub fn set(&mut self, kind: FormationKind, slot: usize, sector: WindSector, c: f64) {
        self.entries.insert((kind, slot, sector), c);
    }

    /// Number of consecutive slots from 0 defined for every sector.
    pub fn slots(&self, kind: FormationKind) -> usize {
        (0..)
            .take_while(|&s| WindSector::ALL.iter().all(|&w| self.entries.contains_key(&(kind, s, w))))
            .count()
    }

    pub fn parse_csv(text: &str) -> Result<Self, EnergyError> {
        let perr = |line: usize, msg: String| EnergyError::CoeffParse { line, msg };
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let row = raw.trim();
            if row.is_empty() || row.starts_with('#') || row.starts_with("formation,") {
                continue;
            }
            let cols: Vec<&str> = row.split(',').map(str::trim).collect();
            if cols.len() != 4 {
                return Err(perr(line, format!("expected 4 fields, got {}", cols.len())));
            }
            let kind: FormationKind = cols[0].parse().map_err(|e| perr(line, e))?;
            let slot: usize = cols[1]
                .parse()
                .map_err(|_| perr(line, format!("invalid slot `{}`", cols[1])))?;
            let sector: WindSector = cols[2].parse().map_err(|e| perr(line, e))?;
            let c: f64 = cols[3]
                .parse()
                .map_err(|_| perr(line, format!("invalid coefficient `{}`", cols[3])))?;
            if !(c.is_finite() && c > 0.0) {
                return Err(perr(line, format!("coefficient must be positive, got {c}")));
            }
            entries.insert((kind, slot, sector), c);
        }
        if entries.is_empty() {
            return Err(perr(0, "table is empty".into()));
        }
        Ok(Self { entries })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("formation,slot,wind_sector,coefficient\n");
        for ((kind, slot, sector), c) in &self.entries {
            let _ = writeln!(out, "{kind},{slot},{sector},{c}");
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EnergyError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| EnergyError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Self::parse_csv(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_is_bounded_and_monotone() {
        let t = CoefficientTable::default();
        for kind in FormationKind::ALL {
            assert_eq!(t.slots(kind), DEFAULT_TABLE_SLOTS);
            for sector in WindSector::ALL {
                let mut prev = f64::INFINITY;
                for slot in 0..DEFAULT_TABLE_SLOTS {
                    let c = t.get(kind, slot, sector).unwrap();
                    assert!((0.8..=1.3).contains(&c), "{kind} {slot} {sector} {c}");
                    assert!(c < prev);
                    prev = c;
                }
            }
        }
    }

    #[test]
    fn vee_leader_in_headwind() {
        let t = CoefficientTable::default();
        assert_eq!(t.get(FormationKind::Vee, 0, WindSector::Head).unwrap(), 1.2);
        // 1.2 - 0.35 * 2/3
        assert_eq!(t.get(FormationKind::Vee, 2, WindSector::Head).unwrap(), 0.9667);
    }

    #[test]
    fn csv_round_trip() {
        let t = CoefficientTable::default();
        assert_eq!(CoefficientTable::parse_csv(&t.to_csv()).unwrap(), t);
    }

    #[test]
    fn csv_errors_name_the_line() {
        let err = CoefficientTable::parse_csv("formation,slot,wind_sector,coefficient\nvee,0,up,1.0\n")
            .unwrap_err();
        assert!(matches!(err, EnergyError::CoeffParse { line: 2, .. }));
    }

    #[test]
    fn sector_quantization() {
        assert_eq!(WindSector::from_relative_bearing(0.0), WindSector::Head);
        assert_eq!(WindSector::from_relative_bearing(44.9), WindSector::Head);
        assert_eq!(WindSector::from_relative_bearing(45.0), WindSector::Right);
        assert_eq!(WindSector::from_relative_bearing(180.0), WindSector::Tail);
        assert_eq!(WindSector::from_relative_bearing(-90.0), WindSector::Left);
        assert_eq!(WindSector::from_relative_bearing(-45.0), WindSector::Head);
    }
}
