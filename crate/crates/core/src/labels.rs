//! Connection labels for training the connect network.
//!
//! Predicted nodes are filtered against a 5 px wide rasterization of the
//! ground truth, projected onto the nearest centerline, and then two nodes
//! are labeled connected when their projection points are joined along the
//! ground truth without passing any other node's projection.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::graph::{NodeId, RoadGraph};
use crate::raster::VALID_NODE_LINE_WIDTH;

pub const DEFAULT_RANGE_R: f64 = 50.0;
pub const DEFAULT_N_PT: usize = 8;

/// Projections closer than this to a ground-truth vertex are that vertex.
const SITE_EPS: f64 = 1e-9;

/// Splits predicted node indices into those on a road (within 2.5 px of a
/// ground-truth segment) and those discarded.
pub fn filter_valid_nodes(pred: &[Point], gt: &RoadGraph) -> (Vec<usize>, Vec<usize>) {
    let radius = VALID_NODE_LINE_WIDTH / 2.0;
    let mut kept = Vec::new();
    let mut discarded = Vec::new();
    for (i, &p) in pred.iter().enumerate() {
        match gt.nearest_point(p) {
            Ok(proj) if proj.distance <= radius => kept.push(i),
            _ => discarded.push(i),
        }
    }
    (kept, discarded)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeProjection {
    pub node: usize,
    pub point: Point,
    pub edge_id: usize,
    pub edge: (NodeId, NodeId),
    pub t: f64,
    pub distance: f64,
}

pub fn project_to_gt(valid: &[(usize, Point)], gt: &RoadGraph) -> Result<Vec<NodeProjection>> {
    valid
        .iter()
        .map(|&(node, p)| {
            let proj = gt.nearest_point(p)?;
            Ok(NodeProjection {
                node,
                point: proj.point,
                edge_id: proj.edge_id,
                edge: proj.edge,
                t: proj.t,
                distance: proj.distance,
            })
        })
        .collect()
}

/// For each node, up to `n_pt` other nodes within `range_r`, nearest first,
/// ties by index.
pub fn candidate_pairs(nodes: &[Point], range_r: f64, n_pt: usize) -> Vec<Vec<usize>> {
    let r_sq = range_r * range_r;
    nodes
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut near: Vec<(f64, usize)> = nodes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, &q)| (p.dist_sq(q), j))
                .filter(|&(d, _)| d <= r_sq)
                .collect();
            near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            near.truncate(n_pt);
            near.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LabeledPair {
    pub v: usize,
    pub n: usize,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConnectionLabelSet {
    pub valid_nodes: Vec<usize>,
    /// Candidate neighbors of each valid node, in candidate order.
    pub candidates: BTreeMap<usize, Vec<usize>>,
    /// Symmetric: `(a, b, l)` is present iff `(b, a, l)` is. Sorted.
    pub pairs: Vec<LabeledPair>,
}

impl ConnectionLabelSet {
    pub fn label(&self, v: usize, n: usize) -> Option<u8> {
        self.pairs
            .binary_search_by(|p| (p.v, p.n).cmp(&(v, n)))
            .ok()
            .map(|i| self.pairs[i].label)
    }

    pub fn positives(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs
            .iter()
            .filter(|p| p.label == 1 && p.v < p.n)
            .map(|p| (p.v, p.n))
    }

    /// One `{"v":id,"n":id,"label":0|1}` object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for p in &self.pairs {
            out.push_str(&serde_json::to_string(p).expect("pair serializes"));
            out.push('\n');
        }
        out
    }

    pub fn pairs_from_jsonl(text: &str) -> Result<Vec<LabeledPair>> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                let p: LabeledPair = serde_json::from_str(l)
                    .map_err(|e| Error::parse(format!("labels line {}", i + 1), e))?;
                if p.label > 1 {
                    return Err(Error::parse(
                        format!("labels line {}", i + 1),
                        "label must be 0 or 1",
                    ));
                }
                Ok(p)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Vertex {
    Gt(NodeId),
    Interior(usize),
}

/// Distinct projection locations on the ground truth and which of them are
/// mutually reachable without crossing a third one.
struct SiteGraph {
    site_of: Vec<usize>,
    adjacent: Vec<BTreeSet<usize>>,
}

impl SiteGraph {
    fn build(projections: &[NodeProjection], gt: &RoadGraph) -> Self {
        let segments = gt.segments();
        let mut site_vertex: Vec<Vertex> = Vec::new();
        let mut vertex_site: BTreeMap<Vertex, usize> = BTreeMap::new();
        // Interior sites per edge id as (t, interior index).
        let mut interior: BTreeMap<usize, Vec<(f64, usize)>> = BTreeMap::new();
        let mut interior_count = 0usize;
        let mut site_of = Vec::with_capacity(projections.len());

        for pr in projections {
            let len = segments[pr.edge_id].length();
            let vertex = if pr.t * len <= SITE_EPS {
                Vertex::Gt(pr.edge.0)
            } else if (1.0 - pr.t) * len <= SITE_EPS {
                Vertex::Gt(pr.edge.1)
            } else {
                let list = interior.entry(pr.edge_id).or_default();
                match list
                    .iter()
                    .find(|(t, _)| (t - pr.t).abs() * len <= SITE_EPS)
                {
                    Some(&(_, idx)) => Vertex::Interior(idx),
                    None => {
                        list.push((pr.t, interior_count));
                        interior_count += 1;
                        Vertex::Interior(interior_count - 1)
                    }
                }
            };
            let site = *vertex_site.entry(vertex).or_insert_with(|| {
                site_vertex.push(vertex);
                site_vertex.len() - 1
            });
            site_of.push(site);
        }

        // Ground truth with every interior site spliced into its edge.
        let mut adj: BTreeMap<Vertex, Vec<Vertex>> = BTreeMap::new();
        let mut link = |a: Vertex, b: Vertex| {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        };
        for seg in &segments {
            let mut chain = vec![Vertex::Gt(seg.a)];
            if let Some(list) = interior.get_mut(&seg.id) {
                list.sort_by(|x, y| x.0.total_cmp(&y.0));
                chain.extend(list.iter().map(|&(_, idx)| Vertex::Interior(idx)));
            }
            chain.push(Vertex::Gt(seg.b));
            for w in chain.windows(2) {
                link(w[0], w[1]);
            }
        }

        let adjacent = site_vertex
            .iter()
            .map(|&start| {
                let mut found = BTreeSet::new();
                let mut seen = BTreeSet::from([start]);
                let mut queue = VecDeque::from([start]);
                while let Some(u) = queue.pop_front() {
                    for &w in adj.get(&u).into_iter().flatten() {
                        if !seen.insert(w) {
                            continue;
                        }
                        match vertex_site.get(&w) {
                            Some(&s) => {
                                found.insert(s);
                            }
                            None => queue.push_back(w),
                        }
                    }
                }
                found
            })
            .collect();

        SiteGraph { site_of, adjacent }
    }

    fn connected(&self, i: usize, j: usize) -> bool {
        let (a, b) = (self.site_of[i], self.site_of[j]);
        a == b || self.adjacent[a].contains(&b)
    }
}

/// Labels every candidate pair among the projected nodes.
///
/// `nodes` holds the predicted coordinates indexed by node id; candidates are
/// drawn from the projected (valid) nodes only.
pub fn derive_connections(
    nodes: &[Point],
    projections: &[NodeProjection],
    gt: &RoadGraph,
    range_r: f64,
    n_pt: usize,
) -> ConnectionLabelSet {
    let sites = SiteGraph::build(projections, gt);
    let valid: Vec<usize> = projections.iter().map(|p| p.node).collect();
    let coords: Vec<Point> = valid.iter().map(|&i| nodes[i]).collect();
    let local = candidate_pairs(&coords, range_r, n_pt);

    let mut labels: BTreeMap<(usize, usize), u8> = BTreeMap::new();
    let mut candidates = BTreeMap::new();
    for (li, cands) in local.iter().enumerate() {
        let v = valid[li];
        candidates.insert(v, cands.iter().map(|&lj| valid[lj]).collect());
        for &lj in cands {
            let n = valid[lj];
            let label = u8::from(sites.connected(li, lj));
            labels.insert((v, n), label);
            labels.insert((n, v), label);
        }
    }
    ConnectionLabelSet {
        valid_nodes: valid,
        candidates,
        pairs: labels
            .into_iter()
            .map(|((v, n), label)| LabeledPair { v, n, label })
            .collect(),
    }
}

/// Runs filtering, projection and connection derivation in one go.
pub fn generate_labels(
    pred: &[Point],
    gt: &RoadGraph,
    range_r: f64,
    n_pt: usize,
) -> Result<ConnectionLabelSet> {
    let (kept, _) = filter_valid_nodes(pred, gt);
    let valid: Vec<(usize, Point)> = kept.iter().map(|&i| (i, pred[i])).collect();
    let projections = project_to_gt(&valid, gt)?;
    Ok(derive_connections(pred, &projections, gt, range_r, n_pt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Extent;

    fn segment(a: (f64, f64), b: (f64, f64)) -> RoadGraph {
        let mut g = RoadGraph::new(Extent::new(200.0, 200.0));
        let x = g.add_node(a.into()).unwrap();
        let y = g.add_node(b.into()).unwrap();
        g.add_edge(x, y).unwrap();
        g
    }

    #[test]
    fn valid_node_filter_uses_half_width() {
        let gt = segment((10.0, 50.0), (110.0, 50.0));
        let pred = [
            Point::new(40.0, 50.0),
            Point::new(40.0, 53.0),
            Point::new(40.0, 47.6),
            Point::new(40.0, 52.5),
        ];
        let (kept, discarded) = filter_valid_nodes(&pred, &gt);
        assert_eq!(kept, vec![0, 2, 3]);
        assert_eq!(discarded, vec![1]);
    }

    #[test]
    fn projection_is_perpendicular_foot() {
        let gt = segment((10.0, 50.0), (110.0, 50.0));
        let pr = project_to_gt(
            &[(0, Point::new(40.0, 51.0)), (1, Point::new(60.0, 50.0))],
            &gt,
        )
        .unwrap();
        assert_eq!(pr[0].point, Point::new(40.0, 50.0));
        assert_eq!(pr[0].distance, 1.0);
        assert_eq!(pr[1].point, Point::new(60.0, 50.0));
    }

    #[test]
    fn interposed_projection_blocks_connection() {
        let gt = segment((10.0, 50.0), (110.0, 50.0));
        let nodes = [
            Point::new(30.0, 50.0),
            Point::new(50.0, 51.0),
            Point::new(70.0, 49.0),
        ];
        let labels = generate_labels(&nodes, &gt, 50.0, 8).unwrap();
        assert_eq!(labels.label(0, 1), Some(1));
        assert_eq!(labels.label(1, 2), Some(1));
        assert_eq!(labels.label(0, 2), Some(0));
        assert_eq!(labels.label(2, 0), Some(0));
    }

    #[test]
    fn disconnected_components_are_unlabeled_positive() {
        let mut gt = segment((10.0, 50.0), (40.0, 50.0));
        let a = gt.add_node(Point::new(50.0, 50.0)).unwrap();
        let b = gt.add_node(Point::new(90.0, 50.0)).unwrap();
        gt.add_edge(a, b).unwrap();
        let nodes = [Point::new(35.0, 50.0), Point::new(55.0, 50.0)];
        let labels = generate_labels(&nodes, &gt, 50.0, 8).unwrap();
        assert_eq!(labels.label(0, 1), Some(0));
    }

    #[test]
    fn candidates_sorted_and_capped() {
        let nodes = [
            Point::new(0.0, 0.0),
            Point::new(3.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(100.0, 100.0),
        ];
        let c = candidate_pairs(&nodes, 5.0, 8);
        assert_eq!(c[0], vec![2, 3, 1]);
        assert!(c[4].is_empty());
        let capped = candidate_pairs(&nodes, 5.0, 2);
        assert_eq!(capped[0], vec![2, 3]);
        // Ties by index: node 2 sits 1 px from both 0 and 3.
        assert_eq!(capped[2], vec![0, 3]);
    }

    #[test]
    fn jsonl_round_trip() {
        let gt = segment((10.0, 50.0), (110.0, 50.0));
        let nodes = [Point::new(30.0, 50.0), Point::new(50.0, 50.0)];
        let labels = generate_labels(&nodes, &gt, 50.0, 8).unwrap();
        let text = labels.to_jsonl();
        assert!(text.starts_with(r#"{"v":0,"n":1,"label":1}"#));
        assert_eq!(
            ConnectionLabelSet::pairs_from_jsonl(&text).unwrap(),
            labels.pairs
        );
        assert!(ConnectionLabelSet::pairs_from_jsonl(r#"{"v":0,"n":1,"label":2}"#).is_err());
    }
}
