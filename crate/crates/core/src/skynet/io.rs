//! Plain-text network and request files.
//!
//! Network file:
//!
//! ```text
//! nodes
//! <id>,<x_m>,<y_m>,<pads>
//! segments
//! <u>,<v>,<distance_m>[,<wind_speed_ms>,<wind_dir_deg>]
//! ```
//!
//! Request file: one `<id>,<source>,<dest>,<w1>;<w2>;...` row per request.
//! Blank lines and lines starting with `#` are ignored in both.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{DeliveryRequest, NetworkError, Node, NodeId, Segment, SkywayNetwork, Wind};

fn perr(line: usize, msg: impl Into<String>) -> NetworkError {
    NetworkError::Parse {
        line,
        msg: msg.into(),
    }
}

fn field<T: std::str::FromStr>(line: usize, name: &str, raw: &str) -> Result<T, NetworkError> {
    raw.trim()
        .parse()
        .map_err(|_| perr(line, format!("invalid {name} `{}`", raw.trim())))
}

fn io_err(path: &Path, e: std::io::Error) -> NetworkError {
    NetworkError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

#[derive(PartialEq)]
enum Section {
    None,
    Nodes,
    Segments,
}

pub fn parse_network(text: &str) -> Result<SkywayNetwork, NetworkError> {
    let mut section = Section::None;
    let mut nodes = Vec::new();
    let mut segments = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let row = raw.trim();
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        match row {
            "nodes" => {
                section = Section::Nodes;
                continue;
            }
            "segments" => {
                section = Section::Segments;
                continue;
            }
            _ => {}
        }
        let cols: Vec<&str> = row.split(',').collect();
        match section {
            Section::None => return Err(perr(line, "expected `nodes` header")),
            Section::Nodes => {
                if cols.len() != 4 {
                    return Err(perr(line, format!("expected 4 node fields, got {}", cols.len())));
                }
                nodes.push(Node {
                    id: NodeId(field(line, "id", cols[0])?),
                    x: field(line, "x", cols[1])?,
                    y: field(line, "y", cols[2])?,
                    pads: field(line, "pads", cols[3])?,
                });
            }
            Section::Segments => {
                if cols.len() != 3 && cols.len() != 5 {
                    return Err(perr(
                        line,
                        format!("expected 3 or 5 segment fields, got {}", cols.len()),
                    ));
                }
                let wind = if cols.len() == 5 {
                    let speed: f64 = field(line, "wind_speed", cols[3])?;
                    let dir: f64 = field(line, "wind_dir", cols[4])?;
                    Some(Wind::new(speed, dir).map_err(|e| perr(line, e.to_string()))?)
                } else {
                    None
                };
                segments.push(Segment {
                    u: NodeId(field(line, "u", cols[0])?),
                    v: NodeId(field(line, "v", cols[1])?),
                    distance: field(line, "distance_m", cols[2])?,
                    wind,
                });
            }
        }
    }
    SkywayNetwork::new(nodes, segments)
}

pub fn write_network(net: &SkywayNetwork) -> String {
    let mut out = String::from("nodes\n");
    for n in net.nodes() {
        let _ = writeln!(out, "{},{},{},{}", n.id, n.x, n.y, n.pads);
    }
    out.push_str("segments\n");
    for s in net.segments() {
        match s.wind {
            Some(w) => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    s.u,
                    s.v,
                    s.distance,
                    w.speed(),
                    w.direction()
                );
            }
            None => {
                let _ = writeln!(out, "{},{},{}", s.u, s.v, s.distance);
            }
        }
    }
    out
}

pub fn load_network(path: impl AsRef<Path>) -> Result<SkywayNetwork, NetworkError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_network(&text)
}

pub fn save_network(net: &SkywayNetwork, path: impl AsRef<Path>) -> Result<(), NetworkError> {
    let path = path.as_ref();
    fs::write(path, write_network(net)).map_err(|e| io_err(path, e))
}

pub fn parse_requests(text: &str) -> Result<Vec<DeliveryRequest>, NetworkError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let row = raw.trim();
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = row.split(',').collect();
        if cols.len() != 4 {
            return Err(perr(line, format!("expected 4 request fields, got {}", cols.len())));
        }
        let package_weights = cols[3]
            .split(';')
            .map(|w| field(line, "package weight", w))
            .collect::<Result<Vec<f64>, _>>()?;
        out.push(DeliveryRequest {
            id: field(line, "id", cols[0])?,
            source: NodeId(field(line, "source", cols[1])?),
            destination: NodeId(field(line, "dest", cols[2])?),
            package_weights,
        });
    }
    Ok(out)
}

pub fn write_requests(requests: &[DeliveryRequest]) -> String {
    let mut out = String::new();
    for r in requests {
        let weights: Vec<String> = r.package_weights.iter().map(|w| w.to_string()).collect();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.id,
            r.source,
            r.destination,
            weights.join(";")
        );
    }
    out
}

pub fn load_requests(path: impl AsRef<Path>) -> Result<Vec<DeliveryRequest>, NetworkError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_requests(&text)
}

pub fn save_requests(
    requests: &[DeliveryRequest],
    path: impl AsRef<Path>,
) -> Result<(), NetworkError> {
    let path = path.as_ref();
    fs::write(path, write_requests(requests)).map_err(|e| io_err(path, e))
}
