//! Skyway network: rooftop nodes with recharging pads joined by
//! line-of-sight segments, each carrying its own wind condition.

mod io;
mod paths;
mod synth;

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{
    load_network, load_requests, parse_network, parse_requests, save_network, save_requests,
    write_network, write_requests,
};
pub use paths::{shortest_distance, DistanceTable, ShortestPath};
pub use synth::{
    fill_missing_wind, synthesize_network, synthesize_requests, synthesize_wind, NetworkSynthParams,
    RequestSynthParams,
};

/// Wind speeds at or above this are unsafe to fly in (m/s).
pub const MAX_SAFE_WIND: f64 = 13.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("segment {u}-{v} references unknown node {missing}")]
    UnknownNode { u: NodeId, v: NodeId, missing: NodeId },
    #[error("segment {u}-{v}: {msg}")]
    BadSegment { u: NodeId, v: NodeId, msg: String },
    #[error("node {0}: coordinates must be finite")]
    BadNode(NodeId),
    #[error("invalid wind: {0}")]
    BadWind(String),
    #[error("network is empty")]
    Empty,
    #[error("request {id}: {msg}")]
    BadRequest { id: u32, msg: String },
    #[error("{0}")]
    Synthesis(String),
    #[error("i/o error on {path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    /// Planar position in meters.
    pub x: f64,
    pub y: f64,
    pub pads: u32,
}

/// Wind on a segment. `direction` is the compass bearing the wind blows
/// *from*, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wind {
    speed: f64,
    direction: f64,
}

impl Wind {
    pub fn new(speed: f64, direction: f64) -> Result<Self, NetworkError> {
        if !speed.is_finite() || !(0.0..MAX_SAFE_WIND).contains(&speed) {
            return Err(NetworkError::BadWind(format!(
                "speed {speed} outside [0, {MAX_SAFE_WIND})"
            )));
        }
        if !direction.is_finite() {
            return Err(NetworkError::BadWind(format!("direction {direction}")));
        }
        Ok(Self {
            speed,
            direction: direction.rem_euclid(360.0),
        })
    }

    pub fn calm() -> Self {
        Self {
            speed: 0.0,
            direction: 0.0,
        }
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn direction(&self) -> f64 {
        self.direction
    }

    /// Air velocity vector (east, north) in m/s; points where the wind blows to.
    pub fn velocity(&self) -> (f64, f64) {
        let (ux, uy) = bearing_unit(self.direction);
        (-self.speed * ux, -self.speed * uy)
    }

    /// Inverse of [`Wind::velocity`]. Speeds are clamped just below the
    /// safety bound.
    pub fn from_velocity(vx: f64, vy: f64) -> Self {
        let speed = vx.hypot(vy).min(MAX_SAFE_WIND - 1e-9);
        if speed == 0.0 {
            return Self::calm();
        }
        let direction = (-vx).atan2(-vy).to_degrees().rem_euclid(360.0);
        Self { speed, direction }
    }
}

/// Unit vector (east, north) for a compass bearing in degrees.
pub fn bearing_unit(bearing_deg: f64) -> (f64, f64) {
    let r = bearing_deg.to_radians();
    (r.sin(), r.cos())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub u: NodeId,
    pub v: NodeId,
    pub distance: f64,
    pub wind: Option<Wind>,
}

impl Segment {
    pub fn wind_or_calm(&self) -> Wind {
        self.wind.unwrap_or_else(Wind::calm)
    }

    pub fn other(&self, end: NodeId) -> NodeId {
        if end == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// Directed traversal of an undirected segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hop {
    pub from: NodeId,
    pub to: NodeId,
    pub segment: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeliveryRequest {
    pub id: u32,
    pub source: NodeId,
    pub destination: NodeId,
    pub package_weights: Vec<f64>,
}

impl DeliveryRequest {
    pub fn validate(&self, max_payload: f64) -> Result<(), NetworkError> {
        let bad = |msg: String| NetworkError::BadRequest { id: self.id, msg };
        if self.source == self.destination {
            return Err(bad("source equals destination".into()));
        }
        if self.package_weights.is_empty() {
            return Err(bad("no packages".into()));
        }
        for &w in &self.package_weights {
            if !(w > 0.0 && w <= max_payload) {
                return Err(bad(format!("package weight {w} outside (0, {max_payload}]")));
            }
        }
        Ok(())
    }
}

/// Validated, immutable skyway graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SkywayNetwork {
    nodes: Vec<Node>,
    segments: Vec<Segment>,
    index: HashMap<NodeId, usize>,
    /// Per node index: (neighbor node index, segment index), sorted by neighbor id.
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl SkywayNetwork {
    pub fn new(mut nodes: Vec<Node>, segments: Vec<Segment>) -> Result<Self, NetworkError> {
        nodes.sort_by_key(|n| n.id);
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if !(n.x.is_finite() && n.y.is_finite()) {
                return Err(NetworkError::BadNode(n.id));
            }
            if index.insert(n.id, i).is_some() {
                return Err(NetworkError::DuplicateNode(n.id));
            }
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut seen = HashSet::with_capacity(segments.len());
        for (si, s) in segments.iter().enumerate() {
            let bad = |msg: &str| NetworkError::BadSegment {
                u: s.u,
                v: s.v,
                msg: msg.to_string(),
            };
            if s.u == s.v {
                return Err(bad("self loop"));
            }
            if !(s.distance.is_finite() && s.distance > 0.0) {
                return Err(bad("distance must be positive"));
            }
            let iu = *index.get(&s.u).ok_or(NetworkError::UnknownNode {
                u: s.u,
                v: s.v,
                missing: s.u,
            })?;
            let iv = *index.get(&s.v).ok_or(NetworkError::UnknownNode {
                u: s.u,
                v: s.v,
                missing: s.v,
            })?;
            if !seen.insert((s.u.min(s.v), s.u.max(s.v))) {
                return Err(bad("duplicate segment"));
            }
            adjacency[iu].push((iv, si));
            adjacency[iv].push((iu, si));
        }
        for adj in &mut adjacency {
            adj.sort_by_key(|&(n, _)| nodes[n].id);
        }
        Ok(Self {
            nodes,
            segments,
            index,
            adjacency,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.index.get(&id).map(|&i| &self.nodes[i])
    }

    pub(crate) fn idx(&self, id: NodeId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    /// Neighbors of `id` with the connecting segment, ordered by neighbor id.
    pub fn neighbors(&self, id: NodeId) -> impl Iterator<Item = (NodeId, &Segment)> + '_ {
        let adj = self
            .index
            .get(&id)
            .map(|&i| self.adjacency[i].as_slice())
            .unwrap_or(&[]);
        adj.iter()
            .map(move |&(n, s)| (self.nodes[n].id, &self.segments[s]))
    }

    pub(crate) fn adjacency_idx(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    pub fn segment_between(&self, a: NodeId, b: NodeId) -> Option<usize> {
        let ia = self.idx(a)?;
        let ib = self.idx(b)?;
        self.adjacency[ia]
            .iter()
            .find(|&&(n, _)| n == ib)
            .map(|&(_, s)| s)
    }

    pub fn hop(&self, from: NodeId, to: NodeId) -> Option<Hop> {
        self.segment_between(from, to)
            .map(|segment| Hop { from, to, segment })
    }

    /// Compass bearing in degrees of the straight line `from` → `to`.
    pub fn bearing(&self, from: NodeId, to: NodeId) -> f64 {
        match (self.node(from), self.node(to)) {
            (Some(a), Some(b)) => (b.x - a.x).atan2(b.y - a.y).to_degrees().rem_euclid(360.0),
            _ => 0.0,
        }
    }

    pub fn with_segments(&self, segments: Vec<Segment>) -> Result<Self, NetworkError> {
        Self::new(self.nodes.clone(), segments)
    }

    /// Connected components as node-index lists, each sorted by node id.
    fn components(&self) -> Vec<Vec<usize>> {
        let mut comp = vec![usize::MAX; self.nodes.len()];
        let mut out = Vec::new();
        for start in 0..self.nodes.len() {
            if comp[start] != usize::MAX {
                continue;
            }
            let c = out.len();
            let mut members = vec![start];
            comp[start] = c;
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                for &(n, _) in &self.adjacency[i] {
                    if comp[n] == usize::MAX {
                        comp[n] = c;
                        members.push(n);
                        queue.push_back(n);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }
}

/// Induced subgraph on the largest connected component. Equal-size
/// components are broken toward the one holding the smallest node id.
pub fn largest_connected_component(net: &SkywayNetwork) -> Result<SkywayNetwork, NetworkError> {
    if net.nodes.is_empty() {
        return Err(NetworkError::Empty);
    }
    // nodes are id-sorted, so a component's first index is its smallest id
    let best = net
        .components()
        .into_iter()
        .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
        .ok_or(NetworkError::Empty)?;
    let keep: HashSet<NodeId> = best.iter().map(|&i| net.nodes[i].id).collect();
    let nodes = best.iter().map(|&i| net.nodes[i]).collect();
    let segments = net
        .segments
        .iter()
        .filter(|s| keep.contains(&s.u) && keep.contains(&s.v))
        .copied()
        .collect();
    SkywayNetwork::new(nodes, segments)
}
