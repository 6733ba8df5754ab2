//! Graph file formats.
//!
//! * Edge-list JSON:
//!   `{"extent":[w,h],"nodes":[{"id":0,"x":12.0,"y":30.5}],"edges":[[0,1]]}`
//! * Adjacency JSON (dataset-style): `{"x,y":[[x2,y2],...],...}`; keys are node
//!   coordinates and values the coordinates of adjacent nodes. Normalized to
//!   an undirected edge list on load. The extent is the bounding box of all
//!   coordinates, rounded up.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codec::NodeDescriptor;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::graph::{Extent, NodeId, RoadGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    EdgeList,
    Adjacency,
}

impl GraphFormat {
    /// `.adj.json` selects adjacency JSON; everything else is edge-list.
    pub fn from_path(path: &Path) -> Self {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.ends_with(".adj.json") {
            GraphFormat::Adjacency
        } else {
            GraphFormat::EdgeList
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeListFile {
    extent: [f64; 2],
    nodes: Vec<NodeRecord>,
    edges: Vec<[NodeId; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    id: NodeId,
    x: f64,
    y: f64,
}

pub fn to_edge_list_json(g: &RoadGraph) -> String {
    let ext = g.extent();
    let file = EdgeListFile {
        extent: [ext.width, ext.height],
        nodes: g
            .nodes()
            .map(|(id, p)| NodeRecord { id, x: p.x, y: p.y })
            .collect(),
        edges: g.edges().map(|(a, b)| [a, b]).collect(),
    };
    serde_json::to_string(&file).expect("graph serializes")
}

pub fn from_edge_list_json(text: &str) -> Result<RoadGraph> {
    let file: EdgeListFile =
        serde_json::from_str(text).map_err(|e| Error::parse("edge-list JSON", e))?;
    let mut g = RoadGraph::new(Extent::new(file.extent[0], file.extent[1]));
    for n in file.nodes {
        g.insert_node(n.id, Point::new(n.x, n.y))?;
    }
    for [a, b] in file.edges {
        g.add_edge(a, b)?;
    }
    Ok(g)
}

fn coord_key(p: Point) -> String {
    format!("{},{}", p.x, p.y)
}

fn parse_coord_key(key: &str) -> Result<Point> {
    let bad = || Error::parse("adjacency JSON", format!("key {key:?} is not \"x,y\""));
    let (x, y) = key.split_once(',').ok_or_else(bad)?;
    let x: f64 = x.trim().parse().map_err(|_| bad())?;
    let y: f64 = y.trim().parse().map_err(|_| bad())?;
    Ok(Point::new(x, y))
}

pub fn to_adjacency_json(g: &RoadGraph) -> String {
    let mut map: BTreeMap<String, Vec<[f64; 2]>> = BTreeMap::new();
    for (id, p) in g.nodes() {
        let adj = g
            .neighbors(id)
            .map(|n| {
                let q = g.node(n).unwrap();
                [q.x, q.y]
            })
            .collect();
        map.insert(coord_key(p), adj);
    }
    serde_json::to_string(&map).expect("adjacency serializes")
}

/// Parses adjacency JSON. Returns the graph plus one warning per asymmetric
/// listing that had to be normalized.
pub fn from_adjacency_json(text: &str) -> Result<(RoadGraph, Vec<String>)> {
    let map: BTreeMap<String, Vec<[f64; 2]>> =
        serde_json::from_str(text).map_err(|e| Error::parse("adjacency JSON", e))?;

    let mut coords: Vec<Point> = Vec::new();
    let mut listed: Vec<(Point, Point)> = Vec::new();
    for (key, adj) in &map {
        let p = parse_coord_key(key)?;
        coords.push(p);
        for &[x, y] in adj {
            listed.push((p, Point::new(x, y)));
            coords.push(Point::new(x, y));
        }
    }
    let max_x = coords.iter().map(|p| p.x).fold(0.0, f64::max);
    let max_y = coords.iter().map(|p| p.y).fold(0.0, f64::max);
    let mut g = RoadGraph::new(Extent::new(max_x.ceil(), max_y.ceil()));

    // Node ids follow first appearance in key order, then neighbor order.
    let bits = |p: Point| (p.x.to_bits(), p.y.to_bits());
    let mut ids: BTreeMap<(u64, u64), NodeId> = BTreeMap::new();
    for p in coords {
        if let std::collections::btree_map::Entry::Vacant(e) = ids.entry(bits(p)) {
            e.insert(g.add_node(p)?);
        }
    }

    let mut warnings = Vec::new();
    for &(p, q) in &listed {
        let listed_back = map
            .get(&coord_key(q))
            .is_some_and(|adj| adj.iter().any(|&[x, y]| Point::new(x, y) == p));
        if !listed_back {
            let w = format!(
                "asymmetric adjacency: {} lists {} but not the reverse; added as undirected",
                coord_key(p),
                coord_key(q)
            );
            log::warn!("{w}");
            warnings.push(w);
        }
        let (a, b) = (ids[&bits(p)], ids[&bits(q)]);
        if a != b {
            g.add_edge(a, b)?;
        }
    }
    Ok((g, warnings))
}

pub fn save_graph(g: &RoadGraph, path: impl AsRef<Path>, format: GraphFormat) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        GraphFormat::EdgeList => to_edge_list_json(g),
        GraphFormat::Adjacency => to_adjacency_json(g),
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_graph(path: impl AsRef<Path>, format: GraphFormat) -> Result<RoadGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ctx = |e: Error| match e {
        Error::Parse { context, message } => Error::Parse {
            context: format!("{} ({context})", path.display()),
            message,
        },
        other => other,
    };
    match format {
        GraphFormat::EdgeList => from_edge_list_json(&text).map_err(ctx),
        GraphFormat::Adjacency => from_adjacency_json(&text).map(|(g, _)| g).map_err(ctx),
    }
}

/// Node descriptors on a canvas:
/// `{"extent":[w,h],"nodes":[{"x":..,"y":..,"bins":[..]},...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescriptorFile {
    pub extent: [f64; 2],
    pub nodes: Vec<DescriptorRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescriptorRecord {
    pub x: f64,
    pub y: f64,
    pub bins: Vec<f64>,
}

impl DescriptorFile {
    pub fn new(extent: Extent, nodes: &[NodeDescriptor]) -> Self {
        DescriptorFile {
            extent: [extent.width, extent.height],
            nodes: nodes
                .iter()
                .map(|d| DescriptorRecord {
                    x: d.coord.x,
                    y: d.coord.y,
                    bins: d.bins.clone(),
                })
                .collect(),
        }
    }

    pub fn extent(&self) -> Extent {
        Extent::new(self.extent[0], self.extent[1])
    }

    pub fn descriptors(&self) -> Vec<NodeDescriptor> {
        self.nodes
            .iter()
            .map(|r| NodeDescriptor {
                coord: Point::new(r.x, r.y),
                bins: r.bins.clone(),
            })
            .collect()
    }
}

pub fn save_descriptors(file: &DescriptorFile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string(file).expect("descriptors serialize");
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_descriptors(path: impl AsRef<Path>) -> Result<DescriptorFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: DescriptorFile =
        serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))?;
    let extent = file.extent();
    let n_bins = file.nodes.first().map_or(0, |r| r.bins.len());
    for (i, r) in file.nodes.iter().enumerate() {
        if r.bins.len() != n_bins {
            return Err(Error::Shape {
                what: "descriptor bin count",
                expected: n_bins,
                got: r.bins.len(),
            });
        }
        if !extent.contains(Point::new(r.x, r.y)) || !r.x.is_finite() || !r.y.is_finite() {
            return Err(Error::InvalidCoordinate {
                id: i as NodeId,
                x: r.x,
                y: r.y,
                reason: "descriptor outside the declared extent",
            });
        }
    }
    Ok(file)
}
