//! Cuts gaps into a scene and bridges them by walking from the endpoints,
//! once with the ground-truth oracle and once with the image heuristic.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use roadnet::complete::{
    complete, CompletionConfig, HeuristicProposer, NodeProposer, OracleProposer,
};
use roadnet::metrics::{evaluate, format_table, MetricConfig, MetricReport};
use roadnet::synth::{fragment, generate_scene, SceneSpec};

fn main() -> roadnet::Result<()> {
    let scene = generate_scene(&SceneSpec {
        drop_rate: 0.3,
        ..SceneSpec::default()
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let frag = fragment(&scene.gt, 7, 50.0, &mut rng)?;
    let metrics = MetricConfig::default();
    let mut rows: Vec<(String, MetricReport)> = vec![(
        "fragmented".into(),
        evaluate(&scene.gt, &frag.residual, &metrics)?,
    )];

    let runs: Vec<(&str, usize, Box<dyn NodeProposer>)> = vec![
        (
            "oracle, 1 step",
            1,
            Box::new(OracleProposer::new(scene.gt.clone(), 0.0, 10.0, 0)),
        ),
        (
            "oracle, 5 steps",
            5,
            Box::new(OracleProposer::new(scene.gt.clone(), 0.0, 10.0, 0)),
        ),
        (
            "heuristic, 5 steps",
            5,
            Box::new(HeuristicProposer::default()),
        ),
    ];
    for (name, max_steps, mut proposer) in runs {
        let cfg = CompletionConfig {
            max_steps,
            ..CompletionConfig::default()
        };
        let out = complete(
            &frag.residual,
            &scene.image,
            proposer.as_mut(),
            &cfg,
            &mut rng,
        )?;
        println!(
            "{name}: {} proposer calls, {} -> {} edges",
            out.invocations,
            frag.residual.edge_count(),
            out.graph.edge_count()
        );
        if let Some(first) = out.trace.first() {
            println!(
                "  first trace record: {}",
                serde_json::to_string(first).expect("serializes")
            );
        }
        rows.push((name.into(), evaluate(&scene.gt, &out.graph, &metrics)?));
    }
    let table: Vec<(&str, &MetricReport)> = rows.iter().map(|(n, r)| (n.as_str(), r)).collect();
    print!("{}", format_table(&table));
    Ok(())
}
