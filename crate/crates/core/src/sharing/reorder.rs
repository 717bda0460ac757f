//! Fixed re-ordering: support drones never move; a consumer out of range of
//! its provider trades places with a delivery drone next to the provider.

use serde::{Deserialize, Serialize};

use crate::energetics::DroneId;
use crate::precomp::{Formation, Swarm};

use super::SharingError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlotUse {
    Free,
    Taken(usize),
    /// Vacated by a moved consumer; held until it returns.
    Held,
}

/// Slot occupancy for one formation, by drone index.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub slot_of: Vec<usize>,
    pub slots: Vec<SlotUse>,
}

impl Layout {
    pub fn new(slot_of: Vec<usize>, n_slots: usize) -> Self {
        let mut slots = vec![SlotUse::Free; n_slots];
        for (d, &s) in slot_of.iter().enumerate() {
            slots[s] = SlotUse::Taken(d);
        }
        Self { slot_of, slots }
    }
}

/// A completed move, reverted when the allocation ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Move {
    pub consumer: usize,
    pub from: usize,
    pub to: usize,
    /// Drone displaced from `to` into `from`, if the slot was occupied.
    pub partner: Option<usize>,
}

/// Brings `consumer` within sharing range of `provider`. Returns `None` when
/// no move is needed. Candidate slots adjacent to the provider are tried in
/// ascending order; a free slot or one held by an unlocked delivery drone
/// qualifies.
pub fn plan_move(
    formation: &Formation,
    layout: &Layout,
    is_support: &[bool],
    locked: &[bool],
    consumer: usize,
    provider: usize,
) -> Result<Option<Move>, SharingError> {
    let ps = layout.slot_of[provider];
    let from = layout.slot_of[consumer];
    if formation.adjacent(ps, from) {
        return Ok(None);
    }
    let near = &formation.adjacency[ps];
    if near.is_empty() {
        return Err(SharingError::NoAdjacentSlot { slot: ps });
    }
    for &to in near {
        match layout.slots[to] {
            SlotUse::Free => {
                return Ok(Some(Move {
                    consumer,
                    from,
                    to,
                    partner: None,
                }))
            }
            SlotUse::Taken(d) if !is_support[d] && !locked[d] => {
                return Ok(Some(Move {
                    consumer,
                    from,
                    to,
                    partner: Some(d),
                }))
            }
            _ => {}
        }
    }
    Err(SharingError::Blocked { slot: ps })
}

pub fn apply(layout: &mut Layout, m: &Move) {
    layout.slot_of[m.consumer] = m.to;
    layout.slots[m.to] = SlotUse::Taken(m.consumer);
    match m.partner {
        Some(p) => {
            layout.slot_of[p] = m.from;
            layout.slots[m.from] = SlotUse::Taken(p);
        }
        None => layout.slots[m.from] = SlotUse::Held,
    }
}

pub fn revert(layout: &mut Layout, m: &Move) {
    layout.slot_of[m.consumer] = m.from;
    layout.slots[m.from] = SlotUse::Taken(m.consumer);
    match m.partner {
        Some(p) => {
            layout.slot_of[p] = m.to;
            layout.slots[m.to] = SlotUse::Taken(p);
        }
        None => layout.slots[m.to] = SlotUse::Free,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapRecord {
    pub consumer: DroneId,
    pub from_slot: usize,
    pub to_slot: usize,
    pub partner: Option<DroneId>,
}

/// Moves `consumer` next to `provider` inside `swarm`. Returns `None` if they
/// are already within range. Undo with [`undo_reorder`].
pub fn reorder_fixed(
    swarm: &mut Swarm,
    consumer: DroneId,
    provider: DroneId,
) -> Result<Option<SwapRecord>, SharingError> {
    let idx = |id: DroneId| {
        swarm
            .drones
            .iter()
            .position(|d| d.id == id)
            .ok_or(SharingError::UnknownDrone(id))
    };
    let (c, p) = (idx(consumer)?, idx(provider)?);
    if !swarm.drones[p].is_support() {
        return Err(SharingError::NotSupport(provider));
    }
    let layout = Layout::new(
        swarm.drones.iter().map(|d| d.slot).collect(),
        swarm.formation.len(),
    );
    let is_support: Vec<bool> = swarm.drones.iter().map(|d| d.is_support()).collect();
    let locked = vec![false; swarm.drones.len()];
    let Some(m) = plan_move(&swarm.formation, &layout, &is_support, &locked, c, p)? else {
        return Ok(None);
    };
    swarm.drones[c].slot = m.to;
    if let Some(q) = m.partner {
        swarm.drones[q].slot = m.from;
    }
    Ok(Some(SwapRecord {
        consumer,
        from_slot: m.from,
        to_slot: m.to,
        partner: m.partner.map(|q| swarm.drones[q].id),
    }))
}

pub fn undo_reorder(swarm: &mut Swarm, record: &SwapRecord) {
    for d in &mut swarm.drones {
        if d.id == record.consumer {
            d.slot = record.from_slot;
        } else if Some(d.id) == record.partner {
            d.slot = record.to_slot;
        }
    }
}
