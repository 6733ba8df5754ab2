//! Encodes the neighbor directions of every node in a small crossing and
//! decodes them back to angles.

use roadnet::codec::{decode_directions, graph_descriptors, node_feature, DEFAULT_BINS};
use roadnet::{Extent, Point, RoadGraph};

fn main() -> roadnet::Result<()> {
    let mut g = RoadGraph::new(Extent::new(200.0, 200.0));
    let center = g.add_node(Point::new(100.0, 100.0))?;
    for p in [(160.0, 100.0), (100.0, 40.0), (50.0, 150.0)] {
        let arm = g.add_node(Point::new(p.0, p.1))?;
        g.add_edge(center, arm)?;
    }
    for (id, d) in graph_descriptors(&g, DEFAULT_BINS) {
        let feature = node_feature(&d, g.extent())?;
        println!(
            "node {id} at ({:.0}, {:.0}): bins {:?} -> angles {:?}, feature length {}",
            d.coord.x,
            d.coord.y,
            d.set_bins(),
            decode_directions(&d, 0.5),
            feature.len()
        );
    }
    Ok(())
}
