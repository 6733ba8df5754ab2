//! The undirected spatial road graph shared by every stage of the pipeline.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{project_onto_segment, Point};

pub type NodeId = u32;

/// Canvas size in pixels. Node coordinates live in `[0, width] x [0, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub width: f64,
    pub height: f64,
}

impl Extent {
    pub const fn new(width: f64, height: f64) -> Self {
        Extent { width, height }
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x <= self.width && p.y <= self.height
    }

    pub fn union(&self, other: &Extent) -> Extent {
        Extent::new(self.width.max(other.width), self.height.max(other.height))
    }
}

/// One edge of a [`RoadGraph`] with its geometry. `a < b` always.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    /// Position in the graph's canonical edge order.
    pub id: usize,
    pub a: NodeId,
    pub b: NodeId,
    pub pa: Point,
    pub pb: Point,
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.pa.dist(self.pb)
    }
}

/// Closest centerline point of a graph to a query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphProjection {
    pub point: Point,
    pub edge_id: usize,
    /// Endpoints of the owning edge, `a < b`.
    pub edge: (NodeId, NodeId),
    /// Parametric position along `edge.0 -> edge.1`.
    pub t: f64,
    pub distance: f64,
}

/// Undirected graph of pixel-coordinate nodes.
///
/// Edges are stored once per unordered pair; the canonical edge order is
/// lexicographic on `(min id, max id)` and defines edge ids. Edge ids are
/// therefore only stable while the graph is not mutated.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadGraph {
    extent: Extent,
    nodes: BTreeMap<NodeId, Point>,
    adjacency: BTreeMap<NodeId, BTreeSet<NodeId>>,
    edge_count: usize,
}

impl RoadGraph {
    pub fn new(extent: Extent) -> Self {
        RoadGraph {
            extent,
            nodes: BTreeMap::new(),
            adjacency: BTreeMap::new(),
            edge_count: 0,
        }
    }

    pub fn extent(&self) -> Extent {
        self.extent
    }

    /// Grows the canvas; shrinking below existing coordinates is rejected.
    pub fn set_extent(&mut self, extent: Extent) -> Result<()> {
        if let Some((&id, &p)) = self.nodes.iter().find(|(_, p)| !extent.contains(**p)) {
            return Err(Error::InvalidCoordinate {
                id,
                x: p.x,
                y: p.y,
                reason: "outside the new extent",
            });
        }
        self.extent = extent;
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn next_id(&self) -> NodeId {
        self.nodes.keys().next_back().map_or(0, |&id| id + 1)
    }

    pub fn node(&self, id: NodeId) -> Option<Point> {
        self.nodes.get(&id).copied()
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, Point)> + '_ {
        self.nodes.iter().map(|(&id, &p)| (id, p))
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn neighbors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency.get(&id).into_iter().flatten().copied()
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.adjacency.get(&id).map_or(0, BTreeSet::len)
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency.get(&a).is_some_and(|s| s.contains(&b))
    }

    /// Edges as `(a, b)` with `a < b`, in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency
            .iter()
            .flat_map(|(&a, ns)| ns.range(a + 1..).map(move |&b| (a, b)))
    }

    pub fn segments(&self) -> Vec<Segment> {
        self.edges()
            .enumerate()
            .map(|(id, (a, b))| Segment {
                id,
                a,
                b,
                pa: self.nodes[&a],
                pb: self.nodes[&b],
            })
            .collect()
    }

    pub fn add_node(&mut self, p: Point) -> Result<NodeId> {
        let id = self.next_id();
        self.insert_node(id, p)?;
        Ok(id)
    }

    pub fn insert_node(&mut self, id: NodeId, p: Point) -> Result<()> {
        if self.nodes.contains_key(&id) {
            return Err(Error::DuplicateNode(id));
        }
        if !p.is_finite() {
            return Err(Error::InvalidCoordinate {
                id,
                x: p.x,
                y: p.y,
                reason: "not finite",
            });
        }
        if !self.extent.contains(p) {
            return Err(Error::InvalidCoordinate {
                id,
                x: p.x,
                y: p.y,
                reason: "outside the canvas extent",
            });
        }
        self.nodes.insert(id, p);
        self.adjacency.insert(id, BTreeSet::new());
        Ok(())
    }

    /// Adds an undirected edge. Returns `false` when it was already present.
    pub fn add_edge(&mut self, a: NodeId, b: NodeId) -> Result<bool> {
        if a == b {
            return Err(Error::SelfLoop(a));
        }
        if !self.nodes.contains_key(&a) || !self.nodes.contains_key(&b) {
            return Err(Error::DanglingEdge(a, b));
        }
        let inserted = self.adjacency.get_mut(&a).unwrap().insert(b);
        self.adjacency.get_mut(&b).unwrap().insert(a);
        if inserted {
            self.edge_count += 1;
        }
        Ok(inserted)
    }

    pub fn remove_edge(&mut self, a: NodeId, b: NodeId) -> bool {
        let removed = self.adjacency.get_mut(&a).is_some_and(|s| s.remove(&b));
        if removed {
            self.adjacency.get_mut(&b).unwrap().remove(&a);
            self.edge_count -= 1;
        }
        removed
    }

    /// Road endpoints: every node with fewer than two neighbors, isolated
    /// nodes included. Ascending id order.
    pub fn endpoints(&self) -> Vec<NodeId> {
        self.adjacency
            .iter()
            .filter(|(_, ns)| ns.len() < 2)
            .map(|(&id, _)| id)
            .collect()
    }

    /// Global minimum point-to-centerline distance; ties go to the lowest
    /// edge id.
    pub fn nearest_point(&self, p: Point) -> Result<GraphProjection> {
        let mut best: Option<GraphProjection> = None;
        for seg in self.segments() {
            let proj = project_onto_segment(p, seg.pa, seg.pb);
            if best.is_none_or(|b| proj.distance < b.distance) {
                best = Some(GraphProjection {
                    point: proj.point,
                    edge_id: seg.id,
                    edge: (seg.a, seg.b),
                    t: proj.t,
                    distance: proj.distance,
                });
            }
        }
        best.ok_or(Error::NoCenterline)
    }

    /// Nearest node within `tol` (inclusive), ties to the lowest id.
    pub fn check_node_connection(&self, p: Point, tol: f64) -> Option<NodeId> {
        self.nearest_node_where(p, tol, |_| true)
    }

    pub(crate) fn nearest_node_where(
        &self,
        p: Point,
        tol: f64,
        mut keep: impl FnMut(NodeId) -> bool,
    ) -> Option<NodeId> {
        let mut best: Option<(NodeId, f64)> = None;
        for (id, q) in self.nodes() {
            let d = p.dist(q);
            if d <= tol && keep(id) && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((id, d));
            }
        }
        best.map(|(id, _)| id)
    }

    /// Splits every edge longer than `max_len` into equal pieces no longer
    /// than `max_len`. New nodes get fresh ids in canonical edge order.
    pub fn densify(&self, max_len: f64) -> RoadGraph {
        assert!(max_len > 0.0, "densify spacing must be positive");
        let mut out = self.clone();
        for seg in self.segments() {
            let pieces = (seg.length() / max_len).ceil() as usize;
            if pieces <= 1 {
                continue;
            }
            out.remove_edge(seg.a, seg.b);
            let mut prev = seg.a;
            for k in 1..pieces {
                let p = seg.pa.lerp(seg.pb, k as f64 / pieces as f64);
                let id = out.add_node(p).expect("interpolated point inside extent");
                out.add_edge(prev, id).unwrap();
                prev = id;
            }
            out.add_edge(prev, seg.b).unwrap();
        }
        out
    }

    /// Total centerline length.
    pub fn total_length(&self) -> f64 {
        self.segments().iter().map(Segment::length).sum()
    }

    /// Checks every structural invariant. Graphs built through the public
    /// API always pass; this exists for deserialized or merged data.
    pub fn validate(&self) -> Result<()> {
        for (&id, &p) in &self.nodes {
            if !p.is_finite() || !self.extent.contains(p) {
                return Err(Error::InvalidCoordinate {
                    id,
                    x: p.x,
                    y: p.y,
                    reason: "outside the canvas extent",
                });
            }
        }
        let mut count = 0;
        for (&a, ns) in &self.adjacency {
            for &b in ns {
                if a == b {
                    return Err(Error::SelfLoop(a));
                }
                if !self.adjacency.get(&b).is_some_and(|s| s.contains(&a)) {
                    return Err(Error::DanglingEdge(a, b));
                }
                count += 1;
            }
        }
        debug_assert_eq!(count / 2, self.edge_count);
        Ok(())
    }
}

/// Unions two graphs in the same frame.
///
/// Nodes of `a` keep their ids. Each node of `b` within `snap_tol` of a node
/// of `a` is unified with the nearest such node (lowest id on ties); the
/// remaining nodes of `b` get fresh ids in ascending order of their old ids.
/// Edges that collapse onto a single node are dropped.
pub fn merge_graphs(a: &RoadGraph, b: &RoadGraph, snap_tol: f64) -> RoadGraph {
    let mut out = a.clone();
    out.extent = a.extent.union(&b.extent);
    let mut remap: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    for (id, p) in b.nodes() {
        let target = match a.check_node_connection(p, snap_tol) {
            Some(existing) => existing,
            None => out.add_node(p).expect("extent is the union of both inputs"),
        };
        remap.insert(id, target);
    }
    for (u, v) in b.edges() {
        let (mu, mv) = (remap[&u], remap[&v]);
        if mu != mv {
            out.add_edge(mu, mv).unwrap();
        }
    }
    out
}

/// Geometric edge set with coordinates as exact bit patterns, orientation
/// normalized. Two graphs with equal keys are isomorphic with identical
/// coordinates.
pub fn geometric_edge_key(g: &RoadGraph) -> BTreeSet<[u64; 4]> {
    g.segments()
        .iter()
        .map(|s| {
            let a = [s.pa.x.to_bits(), s.pa.y.to_bits()];
            let b = [s.pb.x.to_bits(), s.pb.y.to_bits()];
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            [lo[0], lo[1], hi[0], hi[1]]
        })
        .collect()
}
