//! Synthetic road scenes: jittered lattices rendered as bright anti-aliased
//! strokes, and fragmentation that cuts gaps into them.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, Point};
use crate::graph::{Extent, NodeId, RoadGraph};
use crate::raster::Image;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub pitch: f64,
    /// Per-axis Gaussian jitter of lattice nodes, truncated at 4 sigma.
    pub jitter_sigma: f64,
    pub drop_rate: f64,
    /// Peak sideways bend of each road; 0 keeps roads straight.
    pub curve_amplitude: f64,
    /// Stroke width in pixels.
    pub road_width: f64,
    pub road_brightness: f32,
    pub background_brightness: f32,
    /// Standard deviation of the background texture.
    pub texture_noise: f32,
    /// Extra channels of uniform noise after the luminance channel.
    pub noise_channels: usize,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            width: 512,
            height: 512,
            pitch: 64.0,
            jitter_sigma: 0.0,
            drop_rate: 0.0,
            curve_amplitude: 0.0,
            road_width: 6.0,
            road_brightness: 0.9,
            background_brightness: 0.2,
            texture_noise: 0.03,
            noise_channels: 0,
            seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn extent(&self) -> Extent {
        Extent::new(self.width as f64, self.height as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("scene extent must be positive".into()));
        }
        let max_pitch = self.width.min(self.height) as f64;
        if !(f64::EPSILON..=max_pitch).contains(&self.pitch) {
            return Err(Error::Config(format!(
                "pitch {} must be positive and fit the canvas",
                self.pitch
            )));
        }
        if !(0.0..1.0).contains(&self.drop_rate) {
            return Err(Error::Config(format!(
                "drop rate {} outside [0, 1)",
                self.drop_rate
            )));
        }
        let non_negative = |v: f64| (0.0..=f64::MAX).contains(&v);
        if !non_negative(self.jitter_sigma)
            || !non_negative(self.curve_amplitude)
            || !non_negative(self.road_width)
            || self.road_width == 0.0
        {
            return Err(Error::Config(
                "jitter, curve amplitude and road width must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub spec: SceneSpec,
    pub gt: RoadGraph,
    pub image: Image,
}

/// Subdivision count of a curved road.
const CURVE_PIECES: usize = 4;

fn truncated_normal(rng: &mut impl Rng, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    let normal = Normal::new(0.0, sigma).expect("positive sigma");
    loop {
        let v: f64 = normal.sample(rng);
        if v.abs() <= 4.0 * sigma {
            return v;
        }
    }
}

pub fn lattice_positions(size: usize, pitch: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut v = pitch / 2.0;
    while v < size as f64 {
        out.push(v);
        v += pitch;
    }
    out
}

pub fn generate_scene(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let extent = spec.extent();
    let xs = lattice_positions(spec.width, spec.pitch);
    let ys = lattice_positions(spec.height, spec.pitch);
    let mut g = RoadGraph::new(extent);
    let mut grid = Vec::with_capacity(xs.len() * ys.len());
    for &y in &ys {
        for &x in &xs {
            let px = (x + truncated_normal(&mut rng, spec.jitter_sigma)).clamp(0.0, extent.width);
            let py = (y + truncated_normal(&mut rng, spec.jitter_sigma)).clamp(0.0, extent.height);
            grid.push(g.add_node(Point::new(px, py))?);
        }
    }
    let cols = xs.len();
    let mut lattice_edges = Vec::new();
    for r in 0..ys.len() {
        for c in 0..cols {
            let id = grid[r * cols + c];
            if c + 1 < cols {
                lattice_edges.push((id, grid[r * cols + c + 1]));
            }
            if r + 1 < ys.len() {
                lattice_edges.push((id, grid[(r + 1) * cols + c]));
            }
        }
    }
    for (a, b) in lattice_edges {
        if spec.drop_rate > 0.0 && rng.random_bool(spec.drop_rate) {
            continue;
        }
        if spec.curve_amplitude > 0.0 {
            let bend = rng.random_range(-1.0..=1.0) * spec.curve_amplitude;
            add_curved_edge(&mut g, a, b, bend)?;
        } else {
            g.add_edge(a, b)?;
        }
    }
    let isolated: Vec<NodeId> = g.node_ids().filter(|&id| g.degree(id) == 0).collect();
    if !isolated.is_empty() {
        let mut pruned = RoadGraph::new(extent);
        for (id, p) in g.nodes() {
            if g.degree(id) > 0 {
                pruned.insert_node(id, p)?;
            }
        }
        for (a, b) in g.edges() {
            pruned.add_edge(a, b)?;
        }
        g = pruned;
    }
    let image = render(&g, spec, &mut rng);
    Ok(Scene {
        spec: *spec,
        gt: g,
        image,
    })
}

fn add_curved_edge(g: &mut RoadGraph, a: NodeId, b: NodeId, bend: f64) -> Result<()> {
    let pa = g.node(a).ok_or(Error::UnknownNode(a))?;
    let pb = g.node(b).ok_or(Error::UnknownNode(b))?;
    let len = pa.dist(pb);
    let (nx, ny) = (-(pb.y - pa.y) / len, (pb.x - pa.x) / len);
    let extent = g.extent();
    let mut prev = a;
    for k in 1..CURVE_PIECES {
        let t = k as f64 / CURVE_PIECES as f64;
        let base = pa.lerp(pb, t);
        let off = bend * (std::f64::consts::PI * t).sin();
        let p = Point::new(
            (base.x + nx * off).clamp(0.0, extent.width),
            (base.y + ny * off).clamp(0.0, extent.height),
        );
        let id = g.add_node(p)?;
        g.add_edge(prev, id)?;
        prev = id;
    }
    g.add_edge(prev, b)?;
    Ok(())
}

/// Channel 0 is luminance: roads at `road_brightness` with a one-pixel
/// anti-aliased rim over a textured background.
pub fn render(g: &RoadGraph, spec: &SceneSpec, rng: &mut impl Rng) -> Image {
    let (w, h) = (spec.width, spec.height);
    let half = spec.road_width / 2.0;
    let mut coverage = vec![0f32; w * h];
    for seg in g.segments() {
        let reach = half + 0.5;
        let c0 = (seg.pa.x.min(seg.pb.x) - reach).floor().max(0.0) as usize;
        let c1 = ((seg.pa.x.max(seg.pb.x) + reach).ceil().max(0.0) as usize).min(w - 1);
        let r0 = (seg.pa.y.min(seg.pb.y) - reach).floor().max(0.0) as usize;
        let r1 = ((seg.pa.y.max(seg.pb.y) + reach).ceil().max(0.0) as usize).min(h - 1);
        for row in r0..=r1 {
            for col in c0..=c1 {
                let d = point_segment_distance(Point::new(col as f64, row as f64), seg.pa, seg.pb);
                let cov = (half + 0.5 - d).clamp(0.0, 1.0) as f32;
                let cell = &mut coverage[row * w + col];
                *cell = cell.max(cov);
            }
        }
    }
    let texture = Normal::new(0.0f32, spec.texture_noise.max(0.0)).expect("finite noise");
    let mut lum = Vec::with_capacity(w * h);
    for &cov in &coverage {
        let noise = if spec.texture_noise > 0.0 {
            texture.sample(rng)
        } else {
            0.0
        };
        let base =
            spec.background_brightness + (spec.road_brightness - spec.background_brightness) * cov;
        lum.push((base + noise).clamp(0.0, 1.0));
    }
    let mut channels = vec![lum];
    for _ in 0..spec.noise_channels {
        channels.push((0..w * h).map(|_| rng.random::<f32>()).collect());
    }
    Image::from_channels(w, h, channels).expect("channel sizes match")
}

/// One removed stretch of road.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    /// The original edge, `a < b`.
    pub edge: (NodeId, NodeId),
    /// New endpoint on the `edge.0` side.
    pub p: NodeId,
    /// New endpoint on the `edge.1` side.
    pub q: NodeId,
    pub p_coord: Point,
    pub q_coord: Point,
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct Fragmentation {
    pub residual: RoadGraph,
    pub gaps: Vec<Gap>,
}

/// Minimum stub left on each side of a gap.
pub const GAP_MARGIN: f64 = 4.0;

/// Cuts `n_breaks` gaps of `gap_len` pixels out of distinct edges long
/// enough to keep a stub of [`GAP_MARGIN`] on both sides.
pub fn fragment(
    gt: &RoadGraph,
    n_breaks: usize,
    gap_len: f64,
    rng: &mut impl Rng,
) -> Result<Fragmentation> {
    let mut residual = gt.clone();
    if n_breaks == 0 {
        return Ok(Fragmentation {
            residual,
            gaps: Vec::new(),
        });
    }
    if gap_len.is_nan() || gap_len <= 0.0 {
        return Err(Error::Config(format!(
            "gap length {gap_len} must be positive"
        )));
    }
    let mut eligible: Vec<_> = gt
        .segments()
        .into_iter()
        .filter(|s| s.length() >= gap_len + 2.0 * GAP_MARGIN)
        .collect();
    if eligible.len() < n_breaks {
        return Err(Error::InsufficientEdges {
            needed: n_breaks,
            available: eligible.len(),
        });
    }
    eligible.shuffle(rng);
    let mut chosen = eligible[..n_breaks].to_vec();
    chosen.sort_by_key(|s| s.id);
    let mut gaps = Vec::with_capacity(n_breaks);
    for seg in chosen {
        let len = seg.length();
        let start = rng.random_range(GAP_MARGIN..=len - gap_len - GAP_MARGIN);
        let pc = seg.pa.lerp(seg.pb, start / len);
        let qc = seg.pa.lerp(seg.pb, (start + gap_len) / len);
        residual.remove_edge(seg.a, seg.b);
        let p = residual.add_node(pc)?;
        let q = residual.add_node(qc)?;
        residual.add_edge(seg.a, p)?;
        residual.add_edge(q, seg.b)?;
        gaps.push(Gap {
            edge: (seg.a, seg.b),
            p,
            q,
            p_coord: pc,
            q_coord: qc,
            length: pc.dist(qc),
        });
    }
    Ok(Fragmentation { residual, gaps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_lattice_counts() {
        let scene = generate_scene(&SceneSpec::default()).unwrap();
        assert_eq!(scene.gt.node_count(), 64);
        assert_eq!(scene.gt.edge_count(), 112);
        assert_eq!(scene.image.width(), 512);
        assert_eq!(scene.image.channel_count(), 1);
        scene.gt.validate().unwrap();
    }

    #[test]
    fn same_seed_same_scene() {
        let spec = SceneSpec {
            jitter_sigma: 2.0,
            drop_rate: 0.1,
            curve_amplitude: 5.0,
            noise_channels: 1,
            seed: 42,
            ..SceneSpec::default()
        };
        let a = generate_scene(&spec).unwrap();
        let b = generate_scene(&spec).unwrap();
        assert_eq!(a.gt, b.gt);
        assert_eq!(a.image.channel(0), b.image.channel(0));
        assert_eq!(a.image.channel(1), b.image.channel(1));
    }

    #[test]
    fn road_pixels_are_bright() {
        let spec = SceneSpec {
            texture_noise: 0.0,
            ..SceneSpec::default()
        };
        let scene = generate_scene(&spec).unwrap();
        // (32, 32) is a lattice node; (32, 0) lies between rows of roads.
        assert!((scene.image.get(0, 32, 32) - 0.9).abs() < 1e-6);
        assert!((scene.image.get(0, 64, 0) - 0.2).abs() < 1e-6);
        assert!((scene.image.get(0, 34, 60) - 0.9).abs() < 1e-6);
    }

    #[test]
    fn invalid_specs() {
        let zero = SceneSpec {
            width: 0,
            ..SceneSpec::default()
        };
        assert!(matches!(generate_scene(&zero), Err(Error::Config(_))));
        let drop = SceneSpec {
            drop_rate: 1.0,
            ..SceneSpec::default()
        };
        assert!(generate_scene(&drop).is_err());
    }

    #[test]
    fn fragment_on_a_path() {
        let mut g = RoadGraph::new(Extent::new(100.0, 20.0));
        let a = g.add_node(Point::new(10.0, 10.0)).unwrap();
        let b = g.add_node(Point::new(90.0, 10.0)).unwrap();
        g.add_edge(a, b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let none = fragment(&g, 0, 20.0, &mut rng).unwrap();
        assert_eq!(none.residual, g);
        let f = fragment(&g, 1, 20.0, &mut rng).unwrap();
        assert_eq!(f.residual.endpoints().len(), g.endpoints().len() + 2);
        assert_eq!(f.residual.edge_count(), 2);
        assert!((f.gaps[0].length - 20.0).abs() < 1e-9);
        assert!(matches!(
            fragment(&g, 2, 20.0, &mut rng),
            Err(Error::InsufficientEdges {
                needed: 2,
                available: 1
            })
        ));
    }
}
