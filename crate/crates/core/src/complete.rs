//! Endpoint-driven local completion of a road graph.
//!
//! Every endpoint (degree < 2) is visited in ascending id order. Around it a
//! 128 x 128 patch of the image and of the current road raster is cut out and
//! handed to a [`NodeProposer`]; depending on how many nodes come back the
//! walk stops, extends (possibly snapping onto an existing node) or branches.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::graph::{NodeId, RoadGraph};
use crate::raster::{rasterize, Image, RasterMap, VALID_NODE_LINE_WIDTH, WORKING_LINE_WIDTH};

pub const PATCH_SIZE: usize = 128;
const PATCH_HALF: i64 = (PATCH_SIZE / 2) as i64;
pub const MAX_PROPOSALS: usize = 4;
pub const DEFAULT_MAX_STEPS: usize = 5;
pub const DEFAULT_SNAP_TOL: f64 = 2.0;
pub const DEFAULT_PROPOSAL_THRESHOLD: f64 = 0.5;

/// Aligned crops of the image and the road raster around a query node.
///
/// Patch pixel `(i, j)` is canvas pixel `(origin.0 + i, origin.1 + j)`, with
/// the origin chosen so that the pixel nearest the center is `(64, 64)`.
/// Patch-local coordinates are canvas coordinates minus the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposerPatch {
    pub center: Point,
    pub origin: (i64, i64),
    /// `channels x 128 x 128`, zero outside the canvas.
    pub image: Vec<Vec<f32>>,
    pub raster: RasterMap,
}

impl ProposerPatch {
    pub fn size(&self) -> usize {
        PATCH_SIZE
    }

    pub fn to_local(&self, p: Point) -> Point {
        Point::new(p.x - self.origin.0 as f64, p.y - self.origin.1 as f64)
    }

    pub fn to_global(&self, p: Point) -> Point {
        Point::new(p.x + self.origin.0 as f64, p.y + self.origin.1 as f64)
    }

    pub fn local_center(&self) -> Point {
        self.to_local(self.center)
    }

    /// Raster bit at the pixel nearest a local point; false outside.
    pub fn road_at(&self, p: Point) -> bool {
        self.raster
            .get_signed(p.x.round() as i64, p.y.round() as i64)
    }

    /// Image value at the pixel nearest a local point; 0 outside.
    pub fn intensity_at(&self, channel: usize, p: Point) -> f32 {
        let (c, r) = (p.x.round() as i64, p.y.round() as i64);
        if c < 0 || r < 0 || c >= PATCH_SIZE as i64 || r >= PATCH_SIZE as i64 {
            return 0.0;
        }
        self.image[channel][r as usize * PATCH_SIZE + c as usize]
    }
}

pub fn crop_patch(image: &Image, raster: &RasterMap, center: Point) -> Result<ProposerPatch> {
    let (w, h) = (raster.width(), raster.height());
    if image.width() != w || image.height() != h {
        return Err(Error::Shape {
            what: "image width",
            expected: w,
            got: image.width(),
        });
    }
    if !(center.is_finite() && center.x >= 0.0 && center.y >= 0.0)
        || center.x > w as f64
        || center.y > h as f64
    {
        return Err(Error::InvalidCoordinate {
            id: NodeId::MAX,
            x: center.x,
            y: center.y,
            reason: "patch center outside the canvas",
        });
    }
    let origin = (
        center.x.round() as i64 - PATCH_HALF,
        center.y.round() as i64 - PATCH_HALF,
    );
    let mut channels = vec![vec![0f32; PATCH_SIZE * PATCH_SIZE]; image.channel_count()];
    let mut patch_raster = RasterMap::new(PATCH_SIZE, PATCH_SIZE);
    for j in 0..PATCH_SIZE {
        let row = origin.1 + j as i64;
        for i in 0..PATCH_SIZE {
            let col = origin.0 + i as i64;
            for (c, ch) in channels.iter_mut().enumerate() {
                ch[j * PATCH_SIZE + i] = image.get_signed(c, col, row);
            }
            if raster.get_signed(col, row) {
                patch_raster.set(i, j);
            }
        }
    }
    Ok(ProposerPatch {
        center,
        origin,
        image: channels,
        raster: patch_raster,
    })
}

/// A proposed node in patch-local coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub x: f64,
    pub y: f64,
    /// Probability that the node lies on a road.
    pub prob: f64,
}

/// Anything that turns a patch into at most [`MAX_PROPOSALS`] next nodes.
pub trait NodeProposer {
    fn propose(&mut self, patch: &ProposerPatch) -> Vec<Proposal>;
}

impl<P: NodeProposer + ?Sized> NodeProposer for Box<P> {
    fn propose(&mut self, patch: &ProposerPatch) -> Vec<Proposal> {
        (**self).propose(patch)
    }
}

/// Always proposes nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullProposer;

impl NodeProposer for NullProposer {
    fn propose(&mut self, _: &ProposerPatch) -> Vec<Proposal> {
        Vec::new()
    }
}

fn check_contract(props: &[Proposal]) -> Result<()> {
    if props.len() > MAX_PROPOSALS {
        return Err(Error::ProposerContract(format!(
            "{} nodes proposed, at most {MAX_PROPOSALS} allowed",
            props.len()
        )));
    }
    let size = PATCH_SIZE as f64;
    for p in props {
        if !(p.x >= 0.0 && p.x < size && p.y >= 0.0 && p.y < size) {
            return Err(Error::ProposerContract(format!(
                "proposal ({}, {}) outside the {PATCH_SIZE}x{PATCH_SIZE} patch",
                p.x, p.y
            )));
        }
        if !(0.0..=1.0).contains(&p.prob) {
            return Err(Error::ProposerContract(format!(
                "proposal probability {} outside [0, 1]",
                p.prob
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletionConfig {
    pub max_steps: usize,
    pub snap_tol: f64,
    pub proposal_threshold: f64,
    pub line_width: f64,
}

impl Default for CompletionConfig {
    fn default() -> Self {
        CompletionConfig {
            max_steps: DEFAULT_MAX_STEPS,
            snap_tol: DEFAULT_SNAP_TOL,
            proposal_threshold: DEFAULT_PROPOSAL_THRESHOLD,
            line_width: WORKING_LINE_WIDTH,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Bridge,
    Extend,
    Stop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// 1-based step within the current walk.
    pub step: usize,
    pub center: [f64; 2],
    /// Accepted proposals in canvas coordinates with their probability.
    pub proposed: Vec<[f64; 3]>,
    pub action: Action,
    /// `no_proposal`, `snapped`, `continue`, `branch`, `step_limit` or
    /// `duplicate_edge`.
    pub reason: String,
    pub added_nodes: Vec<NodeId>,
    pub added_edges: Vec<[NodeId; 2]>,
}

#[derive(Debug, Clone)]
pub struct Completion {
    pub graph: RoadGraph,
    pub trace: Vec<TraceRecord>,
    /// Proposer calls made.
    pub invocations: usize,
    /// Endpoints initially queued plus nodes pushed by branching.
    pub queued: usize,
}

impl Completion {
    pub fn trace_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.trace {
            out.push_str(&serde_json::to_string(r).expect("trace serializes"));
            out.push('\n');
        }
        out
    }
}

/// Initial query centers: endpoints in ascending id order.
pub fn build_query_centers(g: &RoadGraph) -> VecDeque<NodeId> {
    g.endpoints().into_iter().collect()
}

pub fn complete(
    g: &RoadGraph,
    image: &Image,
    proposer: &mut dyn NodeProposer,
    cfg: &CompletionConfig,
    rng: &mut impl Rng,
) -> Result<Completion> {
    if cfg.max_steps == 0 {
        return Err(Error::Config("max_steps must be at least 1".into()));
    }
    let (w, h) = (image.width(), image.height());
    let mut graph = g.clone();
    let extent = graph.extent();
    let mut raster = rasterize(&graph, cfg.line_width, w, h);
    let mut frontier = build_query_centers(&graph);
    let mut queued = frontier.len();
    let mut trace = Vec::new();
    let mut invocations = 0;

    while let Some(start) = frontier.pop_front() {
        let mut vk = start;
        for step in 1..=cfg.max_steps {
            let center = graph.node(vk).ok_or(Error::UnknownNode(vk))?;
            let patch = crop_patch(image, &raster, center)?;
            let raw = proposer.propose(&patch);
            invocations += 1;
            check_contract(&raw)?;
            let accepted: Vec<(Point, f64)> = raw
                .iter()
                .filter(|p| p.prob >= cfg.proposal_threshold)
                .map(|p| (patch.to_global(Point::new(p.x, p.y)), p.prob))
                .filter(|(q, _)| extent.contains(*q) && q.dist(center) > cfg.snap_tol)
                .collect();
            let mut record = TraceRecord {
                step,
                center: [center.x, center.y],
                proposed: accepted.iter().map(|(q, p)| [q.x, q.y, *p]).collect(),
                action: Action::Stop,
                reason: "no_proposal".into(),
                added_nodes: Vec::new(),
                added_edges: Vec::new(),
            };

            let attach = |q: Point,
                          graph: &mut RoadGraph,
                          raster: &mut RasterMap,
                          rec: &mut TraceRecord|
             -> Result<(NodeId, bool)> {
                let hit = graph.nearest_node_where(q, cfg.snap_tol, |id| id != vk);
                let (target, snapped) = match hit {
                    Some(id) => (id, true),
                    None => {
                        let id = graph.add_node(q)?;
                        rec.added_nodes.push(id);
                        (id, false)
                    }
                };
                if graph.add_edge(vk, target)? {
                    let (pa, pb) = (graph.node(vk).unwrap(), graph.node(target).unwrap());
                    raster.stamp_segment(pa, pb, cfg.line_width);
                    rec.added_edges.push([vk.min(target), vk.max(target)]);
                }
                Ok((target, snapped))
            };

            match accepted.len() {
                0 => {
                    trace.push(record);
                    break;
                }
                1 => {
                    let (target, snapped) =
                        attach(accepted[0].0, &mut graph, &mut raster, &mut record)?;
                    if snapped {
                        record.action = if record.added_edges.is_empty() {
                            Action::Stop
                        } else {
                            Action::Bridge
                        };
                        record.reason = if record.added_edges.is_empty() {
                            "duplicate_edge".into()
                        } else {
                            "snapped".into()
                        };
                        trace.push(record);
                        break;
                    }
                    record.action = Action::Extend;
                    record.reason = if step == cfg.max_steps {
                        "step_limit".into()
                    } else {
                        "continue".into()
                    };
                    trace.push(record);
                    vk = target;
                }
                _ => {
                    let mut fresh = Vec::new();
                    for &(q, _) in &accepted {
                        let (target, snapped) = attach(q, &mut graph, &mut raster, &mut record)?;
                        if !snapped && !fresh.contains(&target) {
                            fresh.push(target);
                        }
                    }
                    if !fresh.is_empty() {
                        let chosen = rng.random_range(0..fresh.len());
                        for (i, &id) in fresh.iter().enumerate() {
                            if i != chosen {
                                frontier.push_back(id);
                                queued += 1;
                            }
                        }
                    }
                    record.action = Action::Extend;
                    record.reason = "branch".into();
                    trace.push(record);
                    break;
                }
            }
        }
    }
    Ok(Completion {
        graph,
        trace,
        invocations,
        queued,
    })
}

/// Distance along which raster pixels around a walk's start are treated as
/// the walk's own stroke.
const OWN_STROKE: f64 = 3.0;
/// How far past its stride the oracle looks for a drawn road to snap onto.
pub const LOOKAHEAD: f64 = 6.0;

/// Test stand-in for a learned proposer: walks the ground truth from the
/// patch center in every direction not yet covered by the road raster.
#[derive(Debug, Clone)]
pub struct OracleProposer {
    gt: RoadGraph,
    sigma: f64,
    stride: f64,
    rng: ChaCha8Rng,
}

impl OracleProposer {
    pub fn new(gt: RoadGraph, sigma: f64, stride: f64, seed: u64) -> Self {
        assert!(
            stride > 0.0 && stride < PATCH_HALF as f64,
            "stride must fit in the patch"
        );
        OracleProposer {
            gt,
            sigma: sigma.max(0.0),
            stride,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// First directed step of every walk leaving the projection of `c`.
    fn departures(&self, c: Point) -> Vec<(Point, NodeId, NodeId)> {
        let Ok(proj) = self.gt.nearest_point(c) else {
            return Vec::new();
        };
        if proj.distance > VALID_NODE_LINE_WIDTH / 2.0 {
            return Vec::new();
        }
        let (a, b) = proj.edge;
        let vertex = if proj.t == 0.0 {
            Some(a)
        } else if proj.t == 1.0 {
            Some(b)
        } else {
            None
        };
        match vertex {
            // Start on a vertex: leave through each incident edge.
            Some(v) => self
                .gt
                .neighbors(v)
                .map(|n| (self.gt.node(v).unwrap(), v, n))
                .collect(),
            None => vec![(proj.point, b, a), (proj.point, a, b)],
        }
    }

    /// Walks from `from` toward vertex `to` (coming from `prev`) and returns
    /// the node to propose, or `None` when the direction is already drawn.
    ///
    /// The walk proposes the first drawn pixel it meets after leaving its own
    /// stroke, a ground-truth vertex of degree other than 2, or the point at
    /// `stride`. A drawn pixel up to [`LOOKAHEAD`] beyond the stride is still
    /// taken, so no sliver gap is left behind.
    fn walk(&self, patch: &ProposerPatch, from: Point, prev: NodeId, to: NodeId) -> Option<Point> {
        let (mut pos, mut prev, mut to) = (from, prev, to);
        let mut travelled = 0.0;
        let mut own_stroke = true;
        let mut own_run = 0.0;
        let mut at_stride = None;
        loop {
            let target = self.gt.node(to).unwrap();
            let left = pos.dist(target);
            let limit = if at_stride.is_none() {
                self.stride
            } else {
                self.stride + LOOKAHEAD
            };
            let advance = 1f64.min(left).min(limit - travelled);
            pos = if left > 0.0 {
                pos.lerp(target, advance / left)
            } else {
                target
            };
            travelled += advance;
            let on_road = patch.road_at(patch.to_local(pos));
            if own_stroke {
                if on_road {
                    own_run += advance;
                    if own_run > OWN_STROKE {
                        return None;
                    }
                } else {
                    own_stroke = false;
                }
            } else if on_road {
                return Some(pos);
            }
            if at_stride.is_none() && travelled >= self.stride - 1e-9 {
                at_stride = Some(pos);
            }
            if travelled >= self.stride + LOOKAHEAD - 1e-9 {
                return at_stride;
            }
            if pos == target {
                if self.gt.degree(to) != 2 {
                    return Some(at_stride.unwrap_or(pos));
                }
                let Some(next_vertex) = self.gt.neighbors(to).find(|&n| n != prev) else {
                    return Some(at_stride.unwrap_or(pos));
                };
                prev = to;
                to = next_vertex;
            }
        }
    }
}

impl NodeProposer for OracleProposer {
    fn propose(&mut self, patch: &ProposerPatch) -> Vec<Proposal> {
        let mut found: Vec<Point> = Vec::new();
        for (from, prev, to) in self.departures(patch.center) {
            if let Some(p) = self.walk(patch, from, prev, to) {
                if !found.iter().any(|q| q.dist(p) < 1e-9) {
                    found.push(p);
                }
            }
        }
        found.truncate(MAX_PROPOSALS);
        let noise = Normal::new(0.0, self.sigma.max(f64::MIN_POSITIVE)).expect("finite sigma");
        let max = PATCH_SIZE as f64 - 1e-6;
        found
            .into_iter()
            .map(|p| {
                let local = patch.to_local(p);
                let (dx, dy) = if self.sigma > 0.0 {
                    (noise.sample(&mut self.rng), noise.sample(&mut self.rng))
                } else {
                    (0.0, 0.0)
                };
                Proposal {
                    x: (local.x + dx).clamp(0.0, max),
                    y: (local.y + dy).clamp(0.0, max),
                    prob: 1.0,
                }
            })
            .collect()
    }
}

/// Learning-free baseline: extends the local road direction by `stride`
/// when the image along the probe is bright enough.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicProposer {
    pub stride: f64,
    pub threshold: f32,
    pub channel: usize,
    /// Radius around the center whose raster pixels define the direction.
    pub tangent_radius: f64,
}

impl Default for HeuristicProposer {
    fn default() -> Self {
        HeuristicProposer {
            stride: 10.0,
            threshold: 0.5,
            channel: 0,
            tangent_radius: 6.0,
        }
    }
}

impl NodeProposer for HeuristicProposer {
    fn propose(&mut self, patch: &ProposerPatch) -> Vec<Proposal> {
        let c = patch.local_center();
        let r = self.tangent_radius;
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for (col, row) in patch.raster.ones() {
            let q = Point::new(col as f64, row as f64);
            if q.dist(c) <= r {
                sx += q.x;
                sy += q.y;
                n += 1;
            }
        }
        if n == 0 {
            return Vec::new();
        }
        let centroid = Point::new(sx / n as f64, sy / n as f64);
        let (dx, dy) = (c.x - centroid.x, c.y - centroid.y);
        let norm = (dx * dx + dy * dy).sqrt();
        if norm < 0.5 {
            return Vec::new();
        }
        let (ux, uy) = (dx / norm, dy / norm);
        let mut total = 0f32;
        let mut samples = 0usize;
        let mut end = None;
        let steps = self.stride.ceil() as usize;
        for k in 1..=steps {
            let d = (k as f64).min(self.stride);
            let q = Point::new(c.x + ux * d, c.y + uy * d);
            total += patch.intensity_at(self.channel, q);
            samples += 1;
            end = Some(q);
            if d > OWN_STROKE && patch.road_at(q) {
                break;
            }
        }
        let mean = total / samples as f32;
        let Some(q) = end else {
            return Vec::new();
        };
        let max = PATCH_SIZE as f64 - 1e-6;
        if mean > self.threshold && q.x >= 0.0 && q.y >= 0.0 && q.x < max && q.y < max {
            vec![Proposal {
                x: q.x,
                y: q.y,
                prob: f64::from(mean.clamp(0.0, 1.0)),
            }]
        } else {
            Vec::new()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Extent;

    fn line(points: &[(f64, f64)], ext: Extent) -> RoadGraph {
        let mut g = RoadGraph::new(ext);
        let ids: Vec<NodeId> = points
            .iter()
            .map(|&(x, y)| g.add_node(Point::new(x, y)).unwrap())
            .collect();
        for w in ids.windows(2) {
            g.add_edge(w[0], w[1]).unwrap();
        }
        g
    }

    #[test]
    fn patch_at_corner_is_zero_padded() {
        let mut img = Image::new(200, 200, 1);
        for r in 0..200 {
            for c in 0..200 {
                img.set(0, c, r, 1.0);
            }
        }
        let raster = RasterMap::new(200, 200);
        let p = crop_patch(&img, &raster, Point::new(0.0, 0.0)).unwrap();
        assert_eq!(p.origin, (-64, -64));
        let lit = p.image[0].iter().filter(|&&v| v > 0.0).count();
        assert_eq!(lit, 64 * 64);
        let mid = crop_patch(&img, &raster, Point::new(100.0, 100.0)).unwrap();
        assert!(mid.image[0].iter().all(|&v| v == 1.0));
        assert_eq!(mid.local_center(), Point::new(64.0, 64.0));
        assert!(crop_patch(&img, &raster, Point::new(-1.0, 5.0)).is_err());
    }

    #[test]
    fn contract_violations_are_errors() {
        let too_many = vec![
            Proposal {
                x: 1.0,
                y: 1.0,
                prob: 1.0
            };
            5
        ];
        assert!(matches!(
            check_contract(&too_many),
            Err(Error::ProposerContract(_))
        ));
        let outside = [Proposal {
            x: 128.0,
            y: 1.0,
            prob: 1.0,
        }];
        assert!(check_contract(&outside).is_err());
        let bad_prob = [Proposal {
            x: 1.0,
            y: 1.0,
            prob: 1.5,
        }];
        assert!(check_contract(&bad_prob).is_err());
    }

    #[test]
    fn null_proposer_is_identity() {
        let ext = Extent::new(100.0, 100.0);
        let g = line(&[(10.0, 50.0), (40.0, 50.0)], ext);
        let img = Image::new(100, 100, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = complete(
            &g,
            &img,
            &mut NullProposer,
            &CompletionConfig::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(out.graph, g);
        assert_eq!(out.invocations, 2);
        let zero = CompletionConfig {
            max_steps: 0,
            ..CompletionConfig::default()
        };
        assert!(complete(&g, &img, &mut NullProposer, &zero, &mut rng).is_err());
    }

    #[test]
    fn oracle_mid_segment_proposes_both_ways() {
        let ext = Extent::new(200.0, 200.0);
        let gt = line(&[(20.0, 100.0), (180.0, 100.0)], ext);
        let img = Image::new(200, 200, 1);
        let raster = RasterMap::new(200, 200);
        let patch = crop_patch(&img, &raster, Point::new(100.0, 100.0)).unwrap();
        let mut oracle = OracleProposer::new(gt, 0.0, 10.0, 0);
        let props = oracle.propose(&patch);
        let mut xs: Vec<f64> = props
            .iter()
            .map(|p| patch.to_global(Point::new(p.x, p.y)).x)
            .collect();
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs, vec![90.0, 110.0]);
        let off = crop_patch(&img, &raster, Point::new(100.0, 110.0)).unwrap();
        assert!(oracle.propose(&off).is_empty());
    }

    #[test]
    fn twelve_pixel_gap_is_bridged_onto_far_endpoint() {
        let ext = Extent::new(200.0, 200.0);
        let gt = line(&[(20.0, 100.0), (180.0, 100.0)], ext);
        let frag = line(&[(20.0, 100.0), (94.0, 100.0)], ext);
        let mut g = frag.clone();
        let q = g.add_node(Point::new(106.0, 100.0)).unwrap();
        let far = g.add_node(Point::new(180.0, 100.0)).unwrap();
        g.add_edge(q, far).unwrap();
        let img = Image::new(200, 200, 1);
        let mut oracle = OracleProposer::new(gt, 0.0, 10.0, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = complete(
            &g,
            &img,
            &mut oracle,
            &CompletionConfig::default(),
            &mut rng,
        )
        .unwrap();
        // The walk from x = 94 meets the far stroke at x = 105 and snaps onto
        // the endpoint at x = 106 with a single edge.
        let walk: Vec<&TraceRecord> = out.trace.iter().filter(|r| r.center[0] == 94.0).collect();
        assert_eq!(walk.len(), 1);
        assert_eq!(walk[0].action, Action::Bridge);
        assert_eq!(walk[0].added_edges, vec![[1, q]]);
        assert!(walk[0].added_nodes.is_empty());
        assert_eq!(out.graph.node_count(), g.node_count());
        assert_eq!(
            crate::metrics::shortest_path_length(&out.graph, 0, far).unwrap(),
            160.0
        );
    }

    #[test]
    fn heuristic_follows_bright_road_and_stops_on_dark() {
        let ext = Extent::new(200.0, 200.0);
        let g = line(&[(40.0, 100.0), (100.0, 100.0)], ext);
        let mut img = Image::new(200, 200, 1);
        for c in 0..200 {
            for r in 97..=103 {
                img.set(0, c, r, 0.9);
            }
        }
        let raster = rasterize(&g, 2.0, 200, 200);
        let patch = crop_patch(&img, &raster, Point::new(100.0, 100.0)).unwrap();
        let mut h = HeuristicProposer::default();
        let props = h.propose(&patch);
        assert_eq!(props.len(), 1);
        let q = patch.to_global(Point::new(props[0].x, props[0].y));
        assert!((q.x - 110.0).abs() < 1e-9 && (q.y - 100.0).abs() < 1e-9);
        let dark = Image::new(200, 200, 1);
        let patch = crop_patch(&dark, &raster, Point::new(100.0, 100.0)).unwrap();
        assert!(h.propose(&patch).is_empty());
    }
}
