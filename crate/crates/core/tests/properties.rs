use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use roadnet::codec::{decode_directions, direction_bin, encode_directions, DEFAULT_BINS};
use roadnet::connect::{weights_from_json, weights_to_json, ConnectConfig, ConnectNet};
use roadnet::denoise::{classify_offset, sample_offset, BandNorm, OffsetClass, Polarity};
use roadnet::graph::geometric_edge_key;
use roadnet::io::{from_edge_list_json, to_edge_list_json};
use roadnet::labels::{candidate_pairs, generate_labels};
use roadnet::metrics::{apls, topo, AplsConfig, TopoConfig};
use roadnet::raster::rasterize;
use roadnet::tiling::tile_origins;
use roadnet::{merge_graphs, Extent, Point, RoadGraph};

const SIDE: f64 = 128.0;

fn graph_strategy(max_nodes: usize) -> impl Strategy<Value = RoadGraph> {
    (2..=max_nodes)
        .prop_flat_map(|n| {
            (
                prop::collection::vec((0.0..SIDE, 0.0..SIDE), n),
                prop::collection::vec((0..n, 0..n), 0..2 * n),
            )
        })
        .prop_map(|(pts, edges)| {
            let mut g = RoadGraph::new(Extent::new(SIDE, SIDE));
            for (x, y) in pts {
                g.add_node(Point::new(x, y)).unwrap();
            }
            for (a, b) in edges {
                if a != b {
                    g.add_edge(a as u32, b as u32).unwrap();
                }
            }
            g
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_list_json_round_trips(g in graph_strategy(12)) {
        let back = from_edge_list_json(&to_edge_list_json(&g)).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn merging_a_graph_with_itself_changes_nothing(g in graph_strategy(12)) {
        let merged = merge_graphs(&g, &g, 1e-9);
        prop_assert_eq!(merged.node_count(), g.node_count());
        prop_assert_eq!(geometric_edge_key(&merged), geometric_edge_key(&g));
    }

    #[test]
    fn rasterizing_more_edges_never_clears_pixels(g in graph_strategy(10), extra in (0usize..10, 0usize..10)) {
        let before = rasterize(&g, 2.0, 128, 128);
        let mut h = g.clone();
        let n = g.node_count();
        let (a, b) = ((extra.0 % n) as u32, (extra.1 % n) as u32);
        if a != b {
            h.add_edge(a, b).unwrap();
        }
        let after = rasterize(&h, 2.0, 128, 128);
        prop_assert!(before.ones().all(|(c, r)| after.get(c, r)));
    }

    #[test]
    fn direction_bins_survive_decoding(deg in 0.0f64..360.0, r in 1.0f64..80.0) {
        let node = Point::new(200.0, 200.0);
        let t = deg.to_radians();
        let nb = Point::new(node.x + r * t.cos(), node.y - r * t.sin());
        let d = encode_directions(node, &[nb]).unwrap();
        let angles = decode_directions(&d, 0.5);
        prop_assert_eq!(angles.len(), 1);
        let bin = direction_bin(node, nb, DEFAULT_BINS).unwrap();
        prop_assert!((angles[0] - bin as f64 * 10.0).abs() < 1e-9);
    }

    #[test]
    fn sampled_offsets_classify_as_their_polarity(seed in any::<u64>(), lambda in 0.5f64..40.0, per_axis in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let norm = if per_axis { BandNorm::PerAxis } else { BandNorm::Chebyshev };
        let p = sample_offset(Polarity::Positive, lambda, norm, &mut rng);
        let q = sample_offset(Polarity::Negative, lambda, norm, &mut rng);
        prop_assert_eq!(classify_offset(p, lambda), OffsetClass::Positive);
        prop_assert_eq!(classify_offset(q, lambda), OffsetClass::Negative);
    }

    #[test]
    fn metrics_stay_in_unit_range(a in graph_strategy(8), b in graph_strategy(8)) {
        let cfg = AplsConfig { densify: None, ..AplsConfig::default() };
        let v = apls(&a, &b, &cfg).unwrap();
        prop_assert!((0.0..=1.0).contains(&v.value));
        let t = topo(&a, &b, &TopoConfig::default()).unwrap();
        for x in [t.precision, t.recall, t.f1] {
            prop_assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn harmonic_apls_is_symmetric(a in graph_strategy(8), b in graph_strategy(8)) {
        let cfg = AplsConfig { densify: None, ..AplsConfig::default() };
        let ab = apls(&a, &b, &cfg).unwrap().value;
        let ba = apls(&b, &a, &cfg).unwrap().value;
        prop_assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn candidates_are_near_sorted_and_bounded(
        pts in prop::collection::vec((0.0..SIDE, 0.0..SIDE), 1..30),
        range_r in 5.0f64..60.0,
        n_pt in 1usize..10,
    ) {
        let nodes: Vec<Point> = pts.into_iter().map(|(x, y)| Point::new(x, y)).collect();
        for (v, cands) in candidate_pairs(&nodes, range_r, n_pt).iter().enumerate() {
            prop_assert!(cands.len() <= n_pt);
            prop_assert!(!cands.contains(&v));
            let d: Vec<f64> = cands.iter().map(|&c| nodes[v].dist(nodes[c])).collect();
            prop_assert!(d.iter().all(|&x| x <= range_r));
            prop_assert!(d.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn labels_are_symmetric(gt in graph_strategy(8), jitter in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 8)) {
        let pred: Vec<Point> = gt
            .nodes()
            .zip(jitter.iter().cycle())
            .map(|((_, p), (dx, dy))| Point::new((p.x + dx).clamp(0.0, SIDE), (p.y + dy).clamp(0.0, SIDE)))
            .collect();
        let labels = generate_labels(&pred, &gt, 50.0, 8).unwrap();
        for p in &labels.pairs {
            prop_assert_eq!(labels.label(p.n, p.v), Some(p.label));
        }
    }

    #[test]
    fn tile_origins_cover_the_axis(len in 1usize..5000, tile in 16usize..600, overlap_frac in 0.0f64..0.9) {
        let overlap = (tile as f64 * overlap_frac) as usize;
        let origins = tile_origins(len, tile, overlap).unwrap();
        prop_assert_eq!(origins[0], 0);
        prop_assert!(origins.last().unwrap() + tile >= len);
        for w in origins.windows(2) {
            prop_assert!(w[1] > w[0] && w[1] - w[0] <= tile - overlap);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn weights_json_round_trips(seed in any::<u64>()) {
        let net = ConnectNet::new(ConnectConfig::default(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let back = weights_from_json(&weights_to_json(&net)).unwrap();
        prop_assert_eq!(back, net);
    }
}
