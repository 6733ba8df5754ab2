//! Topology metrics: APLS (shortest-path similarity) and TOPO (local
//! hole matching around seed points).

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ccw_angle_deg, orientation_diff_deg, project_onto_segment, Point};
use crate::graph::{NodeId, RoadGraph};

/// Graph in dense index form with Euclidean edge weights.
#[derive(Debug, Clone)]
pub(crate) struct WeightedGraph {
    pub ids: Vec<NodeId>,
    pub coords: Vec<Point>,
    pub index: BTreeMap<NodeId, usize>,
    pub adj: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry(f64, usize);

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl WeightedGraph {
    pub fn new(g: &RoadGraph) -> Self {
        let ids: Vec<NodeId> = g.node_ids().collect();
        let index: BTreeMap<NodeId, usize> =
            ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let coords: Vec<Point> = ids.iter().map(|&id| g.node(id).unwrap()).collect();
        let adj = ids
            .iter()
            .enumerate()
            .map(|(i, &id)| {
                g.neighbors(id)
                    .map(|n| {
                        let j = index[&n];
                        (j, coords[i].dist(coords[j]))
                    })
                    .collect()
            })
            .collect();
        WeightedGraph {
            ids,
            coords,
            index,
            adj,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    /// Distances from a set of `(vertex, initial distance)` sources.
    pub fn dijkstra(&self, sources: &[(usize, f64)]) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.len()];
        let mut heap = BinaryHeap::new();
        for &(s, d) in sources {
            if d < dist[s] {
                dist[s] = d;
                heap.push(HeapEntry(d, s));
            }
        }
        while let Some(HeapEntry(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, w) in &self.adj[u] {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(HeapEntry(nd, v));
                }
            }
        }
        dist
    }
}

/// Length of the shortest path between `u` and `v`; infinite when they are
/// disconnected.
pub fn shortest_path_length(g: &RoadGraph, u: NodeId, v: NodeId) -> Result<f64> {
    for id in [u, v] {
        if !g.contains_node(id) {
            return Err(Error::UnknownNode(id));
        }
    }
    let wg = WeightedGraph::new(g);
    let dist = wg.dijkstra(&[(wg.index[&u], 0.0)]);
    Ok(dist[wg.index[&v]])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AplsMode {
    /// `2ab / (a + b)`
    #[default]
    Harmonic,
    /// `ab / (a + b)`, which caps identical graphs at 0.5.
    PaperVerbatim,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AplsConfig {
    pub mode: AplsMode,
    /// All vertex pairs are used up to this many nodes.
    pub exhaustive_limit: usize,
    /// Sampled pairs above the exhaustive limit.
    pub samples: usize,
    pub snap_radius: f64,
    /// Spacing of injected midpoint nodes; `None` leaves graphs untouched.
    pub densify: Option<f64>,
    pub seed: u64,
}

impl Default for AplsConfig {
    fn default() -> Self {
        AplsConfig {
            mode: AplsMode::Harmonic,
            exhaustive_limit: 50,
            samples: 500,
            snap_radius: 5.0,
            densify: Some(10.0),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairDiagnostic {
    pub u: NodeId,
    pub v: NodeId,
    pub length: f64,
    /// `None` when an endpoint did not snap or the matches are disconnected.
    pub matched_length: Option<f64>,
    pub penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalApls {
    pub score: f64,
    pub pairs: Vec<PairDiagnostic>,
}

/// A point on an edge of a [`WeightedGraph`].
#[derive(Debug, Clone, Copy, PartialEq)]
struct EdgeLocation {
    a: usize,
    b: usize,
    t: f64,
    len: f64,
    point: Point,
}

impl EdgeLocation {
    /// Vertices through which paths leave the location, with the distance
    /// to each. A location sitting on a vertex leaves only through it.
    fn exits(&self) -> Vec<(usize, f64)> {
        if self.t == 0.0 {
            vec![(self.a, 0.0)]
        } else if self.t == 1.0 {
            vec![(self.b, 0.0)]
        } else {
            vec![
                (self.a, self.t * self.len),
                (self.b, (1.0 - self.t) * self.len),
            ]
        }
    }

    fn is_vertex(&self) -> bool {
        self.t == 0.0 || self.t == 1.0
    }
}

fn locate(g: &RoadGraph, wg: &WeightedGraph, p: Point, radius: f64) -> Option<EdgeLocation> {
    let proj = g.nearest_point(p).ok()?;
    if proj.distance > radius {
        return None;
    }
    let (a, b) = (wg.index[&proj.edge.0], wg.index[&proj.edge.1]);
    Some(EdgeLocation {
        a,
        b,
        t: proj.t,
        len: wg.coords[a].dist(wg.coords[b]),
        point: proj.point,
    })
}

struct DistanceCache<'a> {
    graph: &'a WeightedGraph,
    rows: HashMap<usize, Vec<f64>>,
}

impl<'a> DistanceCache<'a> {
    fn new(graph: &'a WeightedGraph) -> Self {
        DistanceCache {
            graph,
            rows: HashMap::new(),
        }
    }

    fn row(&mut self, s: usize) -> &[f64] {
        let graph = self.graph;
        self.rows
            .entry(s)
            .or_insert_with(|| graph.dijkstra(&[(s, 0.0)]))
    }
}

fn path_between(cache: &mut DistanceCache, p: &EdgeLocation, q: &EdgeLocation) -> f64 {
    let mut best = f64::INFINITY;
    for (x, dx) in p.exits() {
        for (y, dy) in q.exits() {
            let d = dx + cache.row(x)[y] + dy;
            if d < best {
                best = d;
            }
        }
    }
    let same_edge = (p.a, p.b) == (q.a, q.b);
    if same_edge && !p.is_vertex() && !q.is_vertex() {
        best = best.min((p.t - q.t).abs() * p.len);
    }
    best
}

fn select_pairs(cache: &mut DistanceCache, cfg: &AplsConfig) -> Vec<(usize, usize, f64)> {
    let n = cache.graph.len();
    let mut pairs = Vec::new();
    if n <= cfg.exhaustive_limit {
        for i in 0..n {
            for j in i + 1..n {
                let d = cache.row(i)[j];
                if d.is_finite() && d > 0.0 {
                    pairs.push((i, j, d));
                }
            }
        }
        return pairs;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let max_attempts = cfg.samples.saturating_mul(20).max(1000);
    let mut attempts = 0;
    while pairs.len() < cfg.samples && attempts < max_attempts {
        attempts += 1;
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i == j {
            continue;
        }
        let d = cache.row(i)[j];
        if d.is_finite() && d > 0.0 {
            pairs.push((i, j, d));
        }
    }
    pairs
}

/// `1 - mean(min(1, |L_a - L_b| / L_a))` over vertex pairs of `a`, with
/// each vertex snapped onto `b`.
pub fn apls_directional(a: &RoadGraph, b: &RoadGraph, cfg: &AplsConfig) -> Result<DirectionalApls> {
    let (a, b) = match cfg.densify {
        Some(step) => (a.densify(step), b.densify(step)),
        None => (a.clone(), b.clone()),
    };
    let wa = WeightedGraph::new(&a);
    let wb = WeightedGraph::new(&b);
    let mut ca = DistanceCache::new(&wa);
    let pairs = select_pairs(&mut ca, cfg);
    if pairs.is_empty() {
        return Err(Error::DegenerateGroundTruth);
    }
    let mut cb = DistanceCache::new(&wb);
    let mut matches: HashMap<usize, Option<EdgeLocation>> = HashMap::new();
    let mut diagnostics = Vec::with_capacity(pairs.len());
    let mut total = 0.0;
    for (i, j, la) in pairs {
        let mi = *matches
            .entry(i)
            .or_insert_with(|| locate(&b, &wb, wa.coords[i], cfg.snap_radius));
        let mj = *matches
            .entry(j)
            .or_insert_with(|| locate(&b, &wb, wa.coords[j], cfg.snap_radius));
        let lb = match (mi, mj) {
            (Some(p), Some(q)) => Some(path_between(&mut cb, &p, &q)).filter(|d| d.is_finite()),
            _ => None,
        };
        let penalty = lb.map_or(1.0, |lb| ((la - lb).abs() / la).min(1.0));
        total += penalty;
        diagnostics.push(PairDiagnostic {
            u: wa.ids[i],
            v: wa.ids[j],
            length: la,
            matched_length: lb,
            penalty,
        });
    }
    Ok(DirectionalApls {
        score: 1.0 - total / diagnostics.len() as f64,
        pairs: diagnostics,
    })
}

pub fn combine_apls(a: f64, b: f64, mode: AplsMode) -> f64 {
    if a + b <= 0.0 {
        return 0.0;
    }
    match mode {
        AplsMode::Harmonic => 2.0 * a * b / (a + b),
        AplsMode::PaperVerbatim => a * b / (a + b),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AplsResult {
    pub value: f64,
    pub gt_to_pred: DirectionalApls,
    pub pred_to_gt: DirectionalApls,
}

/// Both directions combined. A direction without any usable vertex pair
/// scores 0.
pub fn apls(gt: &RoadGraph, pred: &RoadGraph, cfg: &AplsConfig) -> Result<AplsResult> {
    let directional = |a: &RoadGraph, b: &RoadGraph| match apls_directional(a, b, cfg) {
        Ok(d) => Ok(d),
        Err(Error::DegenerateGroundTruth) => Ok(DirectionalApls {
            score: 0.0,
            pairs: Vec::new(),
        }),
        Err(e) => Err(e),
    };
    let gt_to_pred = directional(gt, pred)?;
    let pred_to_gt = directional(pred, gt)?;
    Ok(AplsResult {
        value: combine_apls(gt_to_pred.score, pred_to_gt.score, cfg.mode),
        gt_to_pred,
        pred_to_gt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopoConfig {
    pub seed_spacing: f64,
    pub match_radius: f64,
    pub angle_tolerance: f64,
    pub propagation_radius: f64,
    pub hole_spacing: f64,
}

impl Default for TopoConfig {
    fn default() -> Self {
        TopoConfig {
            seed_spacing: 20.0,
            match_radius: 8.0,
            angle_tolerance: 30.0,
            propagation_radius: 100.0,
            hole_spacing: 5.0,
        }
    }
}

impl TopoConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.seed_spacing,
            self.match_radius,
            self.angle_tolerance,
            self.propagation_radius,
            self.hole_spacing,
        ];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config("TOPO parameters must be positive".into()))
        }
    }
}

/// A seed point on the ground truth with the local road direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub point: Point,
    /// Counterclockwise angle of the tangent, degrees.
    pub angle: f64,
    /// Owning edge, `a < b`, and parametric position.
    pub edge: (NodeId, NodeId),
    pub t: f64,
}

/// Maximal runs of edges whose interior vertices have degree 2, as vertex
/// sequences. Closed loops of degree-2 vertices start and end at their
/// lowest vertex.
pub fn edge_chains(g: &RoadGraph) -> Vec<Vec<NodeId>> {
    let mut used: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    let key = |a: NodeId, b: NodeId| (a.min(b), a.max(b));
    let mut chains = Vec::new();
    let walk = |start: NodeId, first: NodeId, used: &mut BTreeSet<(NodeId, NodeId)>| {
        let mut chain = vec![start, first];
        used.insert(key(start, first));
        let (mut prev, mut cur) = (start, first);
        while g.degree(cur) == 2 && cur != start {
            let next = g.neighbors(cur).find(|&n| n != prev).unwrap_or(prev);
            if !used.insert(key(cur, next)) {
                break;
            }
            chain.push(next);
            prev = cur;
            cur = next;
        }
        chain
    };
    for v in g.node_ids() {
        if g.degree(v) == 2 {
            continue;
        }
        let ns: Vec<NodeId> = g.neighbors(v).collect();
        for n in ns {
            if !used.contains(&key(v, n)) {
                chains.push(walk(v, n, &mut used));
            }
        }
    }
    for v in g.node_ids() {
        let ns: Vec<NodeId> = g.neighbors(v).collect();
        for n in ns {
            if !used.contains(&key(v, n)) {
                chains.push(walk(v, n, &mut used));
            }
        }
    }
    chains
}

/// Seeds at equal arc-length intervals along every chain, both chain ends
/// included; a vertex shared by several chains is seeded once.
pub fn sample_seeds(gt: &RoadGraph, spacing: f64) -> Vec<Seed> {
    assert!(spacing > 0.0, "seed spacing must be positive");
    let mut seeded: BTreeSet<NodeId> = BTreeSet::new();
    let mut seeds = Vec::new();
    for chain in edge_chains(gt) {
        let pts: Vec<Point> = chain.iter().map(|&id| gt.node(id).unwrap()).collect();
        let lens: Vec<f64> = pts.windows(2).map(|w| w[0].dist(w[1])).collect();
        let total: f64 = lens.iter().sum();
        if total <= 0.0 {
            continue;
        }
        let k = ((total / spacing).round() as usize).max(1);
        for i in 0..=k {
            let target = total * i as f64 / k as f64;
            let (piece, local) = if i == k {
                (lens.len() - 1, lens[lens.len() - 1])
            } else {
                let mut acc = 0.0;
                let mut found = (lens.len() - 1, lens[lens.len() - 1]);
                for (s, &l) in lens.iter().enumerate() {
                    if target < acc + l || s == lens.len() - 1 {
                        found = (s, (target - acc).clamp(0.0, l));
                        break;
                    }
                    acc += l;
                }
                found
            };
            let (u, w) = (chain[piece], chain[piece + 1]);
            let len = lens[piece];
            let t_uw = if len > 0.0 { local / len } else { 0.0 };
            let at_vertex = if i == 0 {
                Some(chain[0])
            } else if i == k {
                Some(*chain.last().unwrap())
            } else {
                None
            };
            if let Some(vtx) = at_vertex {
                if !seeded.insert(vtx) {
                    continue;
                }
            }
            let (a, b, t) = if u < w {
                (u, w, t_uw)
            } else {
                (w, u, 1.0 - t_uw)
            };
            let point = match at_vertex {
                Some(vtx) => gt.node(vtx).unwrap(),
                None => pts[piece].lerp(pts[piece + 1], t_uw),
            };
            let t = match at_vertex {
                Some(vtx) if vtx == a => 0.0,
                Some(_) => 1.0,
                None => t,
            };
            seeds.push(Seed {
                point,
                angle: ccw_angle_deg(pts[piece], pts[piece + 1]),
                edge: (a, b),
                t,
            });
        }
    }
    seeds
}

/// Points at geodesic distances `0, h, 2h, ...` up to `radius` from a
/// location on the graph.
fn holes_from(
    g: &RoadGraph,
    wg: &WeightedGraph,
    start: (NodeId, NodeId),
    t: f64,
    h: f64,
    radius: f64,
) -> Vec<Point> {
    const EPS: f64 = 1e-9;
    let (sa, sb) = (wg.index[&start.0], wg.index[&start.1]);
    let start_len = wg.coords[sa].dist(wg.coords[sb]);
    let s0 = t * start_len;
    let dist = wg.dijkstra(&[(sa, s0), (sb, start_len - s0)]);
    let max_k = (radius / h + EPS).floor() as usize;
    let mut out: Vec<Point> = Vec::new();
    let push = |p: Point, out: &mut Vec<Point>| {
        if !out.iter().any(|q| q.dist(p) <= 1e-6) {
            out.push(p);
        }
    };
    for seg in g.segments() {
        let (x, y) = (wg.index[&seg.a], wg.index[&seg.b]);
        let len = seg.length();
        let is_start = (x, y) == (sa, sb);
        let geodesic = |s: f64| {
            let mut d = (dist[x] + s).min(dist[y] + len - s);
            if is_start {
                d = d.min((s - s0).abs());
            }
            d
        };
        for k in 0..=max_k {
            let target = k as f64 * h;
            let mut cands = vec![target - dist[x], len - (target - dist[y])];
            if is_start {
                cands.push(s0 + target);
                cands.push(s0 - target);
            }
            for s in cands {
                if s < -EPS || s > len + EPS || !s.is_finite() {
                    continue;
                }
                let s = s.clamp(0.0, len);
                if (geodesic(s) - target).abs() <= EPS {
                    let p = if len > 0.0 {
                        seg.pa.lerp(seg.pb, s / len)
                    } else {
                        seg.pa
                    };
                    push(p, &mut out);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedDiagnostic {
    pub point: Point,
    pub matched: bool,
    pub gt_holes: usize,
    pub matched_gt_holes: usize,
    pub pred_holes: usize,
    pub matched_pred_holes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopoResult {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub seeds: Vec<SeedDiagnostic>,
}

pub fn f1_score(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Nearest prediction location to `seed` whose orientation agrees within
/// the tolerance; ties go to the lowest edge id.
fn match_seed(pred: &RoadGraph, seed: &Seed, cfg: &TopoConfig) -> Option<((NodeId, NodeId), f64)> {
    let mut best: Option<((NodeId, NodeId), f64, f64)> = None;
    for seg in pred.segments() {
        let proj = project_onto_segment(seed.point, seg.pa, seg.pb);
        if proj.distance > cfg.match_radius {
            continue;
        }
        let angle = ccw_angle_deg(seg.pa, seg.pb);
        if orientation_diff_deg(angle, seed.angle) > cfg.angle_tolerance {
            continue;
        }
        if best.is_none_or(|b| proj.distance < b.2) {
            best = Some(((seg.a, seg.b), proj.t, proj.distance));
        }
    }
    best.map(|b| (b.0, b.1))
}

fn count_matched(from: &[Point], to: &[Point], radius: f64) -> usize {
    from.iter()
        .filter(|p| to.iter().any(|q| p.dist(*q) <= radius))
        .count()
}

pub fn topo(gt: &RoadGraph, pred: &RoadGraph, cfg: &TopoConfig) -> Result<TopoResult> {
    cfg.validate()?;
    let wgt = WeightedGraph::new(gt);
    let wpred = WeightedGraph::new(pred);
    let mut seeds = Vec::new();
    let (mut gt_total, mut gt_matched, mut pred_total, mut pred_matched) = (0, 0, 0, 0);
    for seed in sample_seeds(gt, cfg.seed_spacing) {
        let gh = holes_from(
            gt,
            &wgt,
            seed.edge,
            seed.t,
            cfg.hole_spacing,
            cfg.propagation_radius,
        );
        let diag = match match_seed(pred, &seed, cfg) {
            Some((edge, t)) => {
                let ph = holes_from(
                    pred,
                    &wpred,
                    edge,
                    t,
                    cfg.hole_spacing,
                    cfg.propagation_radius,
                );
                SeedDiagnostic {
                    point: seed.point,
                    matched: true,
                    gt_holes: gh.len(),
                    matched_gt_holes: count_matched(&gh, &ph, cfg.match_radius),
                    pred_holes: ph.len(),
                    matched_pred_holes: count_matched(&ph, &gh, cfg.match_radius),
                }
            }
            None => SeedDiagnostic {
                point: seed.point,
                matched: false,
                gt_holes: gh.len(),
                matched_gt_holes: 0,
                pred_holes: 0,
                matched_pred_holes: 0,
            },
        };
        gt_total += diag.gt_holes;
        gt_matched += diag.matched_gt_holes;
        pred_total += diag.pred_holes;
        pred_matched += diag.matched_pred_holes;
        seeds.push(diag);
    }
    let ratio = |a: usize, b: usize| if b > 0 { a as f64 / b as f64 } else { 0.0 };
    let precision = ratio(pred_matched, pred_total);
    let recall = ratio(gt_matched, gt_total);
    Ok(TopoResult {
        precision,
        recall,
        f1: f1_score(precision, recall),
        seeds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricConfig {
    pub topo: TopoConfig,
    pub apls: AplsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub topo_p: f64,
    pub topo_r: f64,
    pub topo_f1: f64,
    pub apls: f64,
    pub apls_gt_to_pred: f64,
    pub apls_pred_to_gt: f64,
    pub per_seed: Vec<SeedDiagnostic>,
    pub per_pair_gt_to_pred: Vec<PairDiagnostic>,
    pub per_pair_pred_to_gt: Vec<PairDiagnostic>,
    pub config: MetricConfig,
}

pub fn evaluate(gt: &RoadGraph, pred: &RoadGraph, cfg: &MetricConfig) -> Result<MetricReport> {
    let t = topo(gt, pred, &cfg.topo)?;
    let a = apls(gt, pred, &cfg.apls)?;
    Ok(MetricReport {
        topo_p: t.precision,
        topo_r: t.recall,
        topo_f1: t.f1,
        apls: a.value,
        apls_gt_to_pred: a.gt_to_pred.score,
        apls_pred_to_gt: a.pred_to_gt.score,
        per_seed: t.seeds,
        per_pair_gt_to_pred: a.gt_to_pred.pairs,
        per_pair_pred_to_gt: a.pred_to_gt.pairs,
        config: *cfg,
    })
}

/// Fixed-width table with one row per named report, values in percent.
pub fn format_table(rows: &[(&str, &MetricReport)]) -> String {
    let name_w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(6);
    let mut out = format!(
        "{:<name_w$}  {:>8}  {:>8}  {:>8}  {:>8}\n",
        "method", "TOPO-P", "TOPO-R", "TOPO-F1", "APLS"
    );
    for (name, r) in rows {
        out.push_str(&format!(
            "{:<name_w$}  {:>8.2}  {:>8.2}  {:>8.2}  {:>8.2}\n",
            name,
            100.0 * r.topo_p,
            100.0 * r.topo_r,
            100.0 * r.topo_f1,
            100.0 * r.apls
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Extent;

    fn path(points: &[(f64, f64)]) -> RoadGraph {
        let mut g = RoadGraph::new(Extent::new(300.0, 300.0));
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
    fn shortest_paths() {
        let g = path(&[(0.0, 0.0), (10.0, 0.0), (20.0, 0.0)]);
        assert_eq!(shortest_path_length(&g, 0, 0).unwrap(), 0.0);
        assert_eq!(shortest_path_length(&g, 0, 2).unwrap(), 20.0);
        let mut h = g.clone();
        h.add_node(Point::new(50.0, 50.0)).unwrap();
        assert!(shortest_path_length(&h, 0, 3).unwrap().is_infinite());
        assert!(matches!(
            shortest_path_length(&g, 0, 9),
            Err(Error::UnknownNode(9))
        ));
    }

    #[test]
    fn combine_modes() {
        assert_eq!(combine_apls(1.0, 1.0, AplsMode::Harmonic), 1.0);
        assert_eq!(combine_apls(1.0, 1.0, AplsMode::PaperVerbatim), 0.5);
        assert!((combine_apls(0.8, 0.6, AplsMode::Harmonic) - 48.0 / 70.0).abs() < 1e-15);
        assert_eq!(combine_apls(0.0, 0.0, AplsMode::Harmonic), 0.0);
        assert_eq!(combine_apls(0.7, 0.7, AplsMode::Harmonic), 0.7);
    }

    #[test]
    fn apls_identity_and_empty() {
        let g = path(&[(10.0, 10.0), (60.0, 10.0), (60.0, 80.0), (120.0, 90.0)]);
        let cfg = AplsConfig::default();
        assert_eq!(apls(&g, &g, &cfg).unwrap().value, 1.0);
        let verbatim = AplsConfig {
            mode: AplsMode::PaperVerbatim,
            ..cfg
        };
        assert_eq!(apls(&g, &g, &verbatim).unwrap().value, 0.5);
        let empty = RoadGraph::new(g.extent());
        assert_eq!(apls_directional(&g, &empty, &cfg).unwrap().score, 0.0);
        assert_eq!(apls(&g, &empty, &cfg).unwrap().value, 0.0);
        assert!(matches!(
            apls_directional(&empty, &g, &cfg),
            Err(Error::DegenerateGroundTruth)
        ));
    }

    #[test]
    fn apls_cut_path() {
        // Two-edge path; the prediction lacks the second edge.
        let gt = path(&[(0.0, 0.0), (100.0, 0.0), (200.0, 0.0)]);
        let pred = path(&[(0.0, 0.0), (100.0, 0.0)]);
        let cfg = AplsConfig {
            densify: None,
            ..AplsConfig::default()
        };
        // gt pairs: (0,1) ok, (0,2) and (1,2) snap but (2) matches the end of
        // pred at distance 100 > radius, so both are penalized.
        let d = apls_directional(&gt, &pred, &cfg).unwrap();
        assert!((d.score - (1.0 - 2.0 / 3.0)).abs() < 1e-12);
        let back = apls_directional(&pred, &gt, &cfg).unwrap();
        assert_eq!(back.score, 1.0);
    }

    #[test]
    fn seeds_on_straight_segment() {
        let g = path(&[(0.0, 50.0), (100.0, 50.0)]);
        let seeds = sample_seeds(&g, 20.0);
        assert_eq!(seeds.len(), 6);
        assert_eq!(seeds[0].point, Point::new(0.0, 50.0));
        assert_eq!(seeds[5].point, Point::new(100.0, 50.0));
        assert!((seeds[2].point.x - 40.0).abs() < 1e-12);
        assert!(sample_seeds(&RoadGraph::new(Extent::new(1.0, 1.0)), 20.0).is_empty());
    }

    #[test]
    fn chains_split_at_junctions_and_cover_cycles() {
        let mut g = path(&[(0.0, 0.0), (10.0, 0.0), (20.0, 0.0)]);
        let c = g.add_node(Point::new(10.0, 10.0)).unwrap();
        g.add_edge(1, c).unwrap();
        let chains = edge_chains(&g);
        assert_eq!(chains.len(), 3);
        let square = {
            let mut s = path(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)]);
            s.add_edge(3, 0).unwrap();
            s
        };
        let chains = edge_chains(&square);
        assert_eq!(chains, vec![vec![0, 1, 2, 3, 0]]);
    }

    #[test]
    fn holes_on_a_line() {
        let g = path(&[(0.0, 0.0), (100.0, 0.0)]);
        let wg = WeightedGraph::new(&g);
        let holes = holes_from(&g, &wg, (0, 1), 0.5, 5.0, 20.0);
        let mut xs: Vec<f64> = holes.iter().map(|p| p.x).collect();
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs.len(), 9);
        for (i, x) in xs.iter().enumerate() {
            assert!((x - (30.0 + 5.0 * i as f64)).abs() < 1e-9);
        }
    }

    #[test]
    fn topo_identity_and_empty() {
        let g = path(&[(10.0, 10.0), (110.0, 10.0), (110.0, 110.0)]);
        let cfg = TopoConfig::default();
        let t = topo(&g, &g, &cfg).unwrap();
        assert_eq!((t.precision, t.recall, t.f1), (1.0, 1.0, 1.0));
        let empty = RoadGraph::new(g.extent());
        let e = topo(&g, &empty, &cfg).unwrap();
        assert_eq!((e.recall, e.f1), (0.0, 0.0));
    }

    #[test]
    fn table_layout() {
        let g = path(&[(10.0, 10.0), (110.0, 10.0)]);
        let r = evaluate(&g, &g, &MetricConfig::default()).unwrap();
        let table = format_table(&[("pred", &r)]);
        let lines: Vec<&str> = table.lines().collect();
        assert!(lines[0].contains("TOPO-P") && lines[0].ends_with("APLS"));
        let cols: Vec<&str> = lines[1].split_whitespace().collect();
        assert_eq!(cols, vec!["pred", "100.00", "100.00", "100.00", "100.00"]);
    }
}
