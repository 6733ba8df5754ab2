//! Draws positive and negative noised queries around ground-truth nodes and
//! summarizes how far they moved.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use roadnet::denoise::{classify_offset, noised_queries, BandNorm, Polarity, DEFAULT_LAMBDA};
use roadnet::losses::schedule;
use roadnet::synth::{generate_scene, SceneSpec};

fn main() -> roadnet::Result<()> {
    let scene = generate_scene(&SceneSpec::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for norm in [BandNorm::Chebyshev, BandNorm::PerAxis] {
        let queries = noised_queries(&scene.gt, DEFAULT_LAMBDA, norm, &mut rng);
        for pol in [Polarity::Positive, Polarity::Negative] {
            let norms: Vec<f64> = queries
                .iter()
                .filter(|q| q.polarity == pol)
                .map(|q| q.offset.0.abs().max(q.offset.1.abs()))
                .collect();
            let lo = norms.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = norms.iter().cloned().fold(0.0, f64::max);
            println!(
                "{norm:?} {pol:?}: {} samples, max-norm in [{lo:.2}, {hi:.2}]",
                norms.len()
            );
        }
        let first = &queries[1];
        println!(
            "  node {} offset ({:.2}, {:.2}) classified {:?}, anchor ({:.3}, {:.3})",
            first.origin,
            first.offset.0,
            first.offset.1,
            classify_offset(first.offset, DEFAULT_LAMBDA),
            first.anchor.0,
            first.anchor.1
        );
    }
    for epoch in [0, 50, 90, 100, 150] {
        let w = schedule(epoch);
        println!(
            "epoch {epoch:>3}: direction weight {:.4}, connection weight {:.4}",
            w.direct, w.connect
        );
    }
    Ok(())
}
