//! Scores progressively damaged copies of a ground truth with TOPO and APLS.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use roadnet::metrics::{evaluate, format_table, AplsMode, MetricConfig, MetricReport};
use roadnet::synth::{generate_scene, SceneSpec};
use roadnet::{Point, RoadGraph};

fn without_edges(g: &RoadGraph, fraction: f64, rng: &mut ChaCha8Rng) -> RoadGraph {
    let mut out = g.clone();
    let mut edges: Vec<_> = g.edges().collect();
    edges.shuffle(rng);
    for &(a, b) in edges.iter().take((edges.len() as f64 * fraction) as usize) {
        out.remove_edge(a, b);
    }
    out
}

fn shifted(g: &RoadGraph, dx: f64) -> roadnet::Result<RoadGraph> {
    let mut out = RoadGraph::new(g.extent());
    for (id, p) in g.nodes() {
        out.insert_node(id, Point::new((p.x + dx).min(g.extent().width), p.y))?;
    }
    for (a, b) in g.edges() {
        out.add_edge(a, b)?;
    }
    Ok(out)
}

fn main() -> roadnet::Result<()> {
    let scene = generate_scene(&SceneSpec {
        jitter_sigma: 4.0,
        ..SceneSpec::default()
    })?;
    let gt = &scene.gt;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = MetricConfig::default();
    let candidates = [
        ("identical", gt.clone()),
        ("shifted 3px", shifted(gt, 3.0)?),
        ("10% edges cut", without_edges(gt, 0.1, &mut rng)),
        ("30% edges cut", without_edges(gt, 0.3, &mut rng)),
    ];
    let reports: Vec<(&str, MetricReport)> = candidates
        .iter()
        .map(|(n, g)| Ok((*n, evaluate(gt, g, &cfg)?)))
        .collect::<roadnet::Result<_>>()?;
    let rows: Vec<(&str, &MetricReport)> = reports.iter().map(|(n, r)| (*n, r)).collect();
    print!("{}", format_table(&rows));

    let mut verbatim = cfg;
    verbatim.apls.mode = AplsMode::PaperVerbatim;
    let same = evaluate(gt, gt, &verbatim)?;
    println!(
        "identical graphs under the ab/(a+b) combination: APLS {:.2}",
        same.apls
    );
    Ok(())
}
