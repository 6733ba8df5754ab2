//! Trains briefly, then predicts the graph of a 1024 x 1024 scene window by
//! window and stitches the pieces together.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use roadnet::codec::{graph_descriptors, DEFAULT_BINS};
use roadnet::connect::{self, ConnectConfig, ConnectNet, PairMode, TrainConfig};
use roadnet::graph::geometric_edge_key;
use roadnet::labels::{generate_labels, DEFAULT_N_PT, DEFAULT_RANGE_R};
use roadnet::metrics::{evaluate, format_table, MetricConfig};
use roadnet::synth::{generate_scene, SceneSpec};
use roadnet::tiling::{extract_tiled, tile_grid, ExtractConfig};

fn main() -> roadnet::Result<()> {
    let train_scene = generate_scene(&SceneSpec {
        jitter_sigma: 3.0,
        seed: 1,
        ..SceneSpec::default()
    })?;
    let dense = train_scene.gt.densify(25.0);
    let nodes: Vec<_> = graph_descriptors(&dense, DEFAULT_BINS)
        .into_iter()
        .map(|(_, d)| d)
        .collect();
    let pts: Vec<_> = nodes.iter().map(|d| d.coord).collect();
    let labels = generate_labels(&pts, &train_scene.gt, DEFAULT_RANGE_R, DEFAULT_N_PT)?;
    let data = connect::build_dataset(
        &nodes,
        &labels.pairs,
        DEFAULT_RANGE_R,
        DEFAULT_N_PT,
        PairMode::Concat,
    )?;
    let net = ConnectNet::new(ConnectConfig::default(), &mut ChaCha8Rng::seed_from_u64(0))?;
    let (net, report) = connect::train(
        &net,
        &data,
        &TrainConfig {
            epochs: 80,
            ..TrainConfig::default()
        },
    )?;
    println!("trained: loss {:.4}", report.final_loss());

    let big = generate_scene(&SceneSpec {
        width: 1024,
        height: 1024,
        jitter_sigma: 3.0,
        seed: 9,
        ..SceneSpec::default()
    })?;
    let gt = big.gt.densify(25.0);
    let nodes: Vec<_> = graph_descriptors(&gt, DEFAULT_BINS)
        .into_iter()
        .map(|(_, d)| d)
        .collect();
    let cfg = ExtractConfig::default();
    println!(
        "{} windows of {} px with {} px overlap",
        tile_grid(1024, 1024, cfg.tile, cfg.overlap)?.len(),
        cfg.tile,
        cfg.overlap
    );
    let pred = extract_tiled(&net, &nodes, gt.extent(), &cfg)?;
    let (want, got) = (geometric_edge_key(&gt), geometric_edge_key(&pred));
    let tp = want.intersection(&got).count();
    println!(
        "{} of {} ground-truth edges recovered, {} predicted",
        tp,
        want.len(),
        got.len()
    );
    let report = evaluate(&big.gt, &pred, &MetricConfig::default())?;
    print!("{}", format_table(&[("tiled", &report)]));
    Ok(())
}
