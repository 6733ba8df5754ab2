//! Generates a synthetic scene and writes the ground truth, a fragmented
//! copy and the rendered image.
//!
//! Usage: `cargo run --example synth_scene -- [out_dir] [seed]`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use roadnet::io::{save_graph, GraphFormat};
use roadnet::synth::{fragment, generate_scene, SceneSpec};

fn main() -> roadnet::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = std::path::PathBuf::from(args.next().unwrap_or_else(|| "scene".into()));
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let spec = SceneSpec {
        jitter_sigma: 4.0,
        drop_rate: 0.2,
        seed,
        ..SceneSpec::default()
    };
    let scene = generate_scene(&spec)?;
    let frag = fragment(&scene.gt, 7, 40.0, &mut ChaCha8Rng::seed_from_u64(seed))?;
    std::fs::create_dir_all(&out).map_err(|e| roadnet::Error::Config(e.to_string()))?;
    save_graph(&scene.gt, out.join("gt.json"), GraphFormat::EdgeList)?;
    save_graph(&scene.gt, out.join("gt.adj.json"), GraphFormat::Adjacency)?;
    save_graph(
        &frag.residual,
        out.join("fragmented.json"),
        GraphFormat::EdgeList,
    )?;
    scene.image.save_png(out.join("image.png"))?;
    println!(
        "{} nodes, {} edges, {:.0} px of road; {} gaps cut",
        scene.gt.node_count(),
        scene.gt.edge_count(),
        scene.gt.total_length(),
        frag.gaps.len()
    );
    for gap in &frag.gaps {
        println!(
            "  gap on edge {:?}: ({:.1}, {:.1}) .. ({:.1}, {:.1})",
            gap.edge, gap.p_coord.x, gap.p_coord.y, gap.q_coord.x, gap.q_coord.y
        );
    }
    println!("written to {}", out.display());
    Ok(())
}
