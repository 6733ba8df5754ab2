//! Derives connection labels for noisy node detections against a ground
//! truth graph.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use roadnet::labels::{filter_valid_nodes, generate_labels, DEFAULT_N_PT, DEFAULT_RANGE_R};
use roadnet::synth::{generate_scene, SceneSpec};
use roadnet::Point;

fn main() -> roadnet::Result<()> {
    let scene = generate_scene(&SceneSpec::default())?;
    let dense = scene.gt.densify(20.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 2.0).expect("valid sigma");
    let mut pred: Vec<Point> = dense
        .nodes()
        .map(|(_, p)| {
            Point::new(
                (p.x + noise.sample(&mut rng)).clamp(0.0, 512.0),
                (p.y + noise.sample(&mut rng)).clamp(0.0, 512.0),
            )
        })
        .collect();
    pred.extend([Point::new(5.0, 5.0), Point::new(250.0, 250.0)]);

    let (kept, dropped) = filter_valid_nodes(&pred, &scene.gt);
    let labels = generate_labels(&pred, &scene.gt, DEFAULT_RANGE_R, DEFAULT_N_PT)?;
    println!(
        "{} detections: {} on a road, {} off-road",
        pred.len(),
        kept.len(),
        dropped.len()
    );
    println!(
        "{} labeled pairs, {} connections",
        labels.pairs.len(),
        labels.positives().count()
    );
    for line in labels.to_jsonl().lines().take(5) {
        println!("  {line}");
    }
    Ok(())
}
