//! Trains the connect network on one synthetic scene and measures pair
//! accuracy on another.
//!
//! Usage: `cargo run --release --example train_connect -- [epochs] [weights.json]`

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use roadnet::codec::{graph_descriptors, NodeDescriptor, DEFAULT_BINS};
use roadnet::connect::{self, ConnectConfig, ConnectNet, PairMode, TrainConfig, TrainingSample};
use roadnet::labels::{generate_labels, DEFAULT_N_PT, DEFAULT_RANGE_R};
use roadnet::synth::{generate_scene, SceneSpec};

fn dataset(seed: u64) -> roadnet::Result<(Vec<NodeDescriptor>, Vec<TrainingSample>)> {
    let spec = SceneSpec {
        jitter_sigma: 3.0,
        seed,
        ..SceneSpec::default()
    };
    let scene = generate_scene(&spec)?;
    let dense = scene.gt.densify(25.0);
    let nodes: Vec<_> = graph_descriptors(&dense, DEFAULT_BINS)
        .into_iter()
        .map(|(_, d)| d)
        .collect();
    let pts: Vec<_> = nodes.iter().map(|d| d.coord).collect();
    let labels = generate_labels(&pts, &scene.gt, DEFAULT_RANGE_R, DEFAULT_N_PT)?;
    let samples = connect::build_dataset(
        &nodes,
        &labels.pairs,
        DEFAULT_RANGE_R,
        DEFAULT_N_PT,
        PairMode::Concat,
    )?;
    Ok((nodes, samples))
}

fn main() -> roadnet::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);
    let out = args.next();
    let (_, train) = dataset(1)?;
    let (_, test) = dataset(2)?;
    println!(
        "{} training centers, {} held-out centers",
        train.len(),
        test.len()
    );

    let net = ConnectNet::new(ConnectConfig::default(), &mut ChaCha8Rng::seed_from_u64(0))?;
    println!("{} parameters", net.param_count());
    let start = Instant::now();
    let cfg = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    let (net, report) = connect::train(&net, &train, &cfg)?;
    for (e, loss) in report.loss_curve.iter().enumerate().step_by(10) {
        println!("epoch {e:>3} loss {loss:.4}");
    }
    println!(
        "best epoch {}, final loss {:.4}, {:.1?}",
        report.best_epoch,
        report.final_loss(),
        start.elapsed()
    );
    println!(
        "pair accuracy: train {:.4}, held-out {:.4}",
        connect::accuracy(&net, &train, connect::DEFAULT_THRESHOLD)?,
        connect::accuracy(&net, &test, connect::DEFAULT_THRESHOLD)?
    );
    if let Some(path) = out {
        connect::save_weights(&net, &path)?;
        println!("weights written to {path}");
    }
    Ok(())
}
