//! Sliding-window tiling of large canvases and stitching of per-tile graphs.

use serde::{Deserialize, Serialize};

use crate::codec::NodeDescriptor;
use crate::connect::{predict_edges, ConnectNet};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::graph::{merge_graphs, Extent, RoadGraph};

pub const DEFAULT_TILE: usize = 512;
pub const DEFAULT_OVERLAP: usize = 128;
/// Node unification distance when stitching tiles.
pub const STITCH_SNAP: f64 = 2.0;

/// Square window `[x0, x0 + size] x [y0, y0 + size]`, bounds inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tile {
    pub x0: f64,
    pub y0: f64,
    pub size: f64,
}

impl Tile {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.y >= self.y0 && p.x <= self.x0 + self.size && p.y <= self.y0 + self.size
    }
}

/// Window origins along one axis: multiples of `tile - overlap`, with the
/// last window flush against the far edge.
pub fn tile_origins(length: usize, tile: usize, overlap: usize) -> Result<Vec<usize>> {
    if tile == 0 || overlap >= tile {
        return Err(Error::Config(format!(
            "overlap {overlap} must be smaller than tile {tile}"
        )));
    }
    if length <= tile {
        return Ok(vec![0]);
    }
    let stride = tile - overlap;
    let mut out: Vec<usize> = (0..)
        .map(|k| k * stride)
        .take_while(|&o| o + tile < length)
        .collect();
    out.push(length - tile);
    Ok(out)
}

/// Row-major tile grid over a `width x height` canvas.
pub fn tile_grid(width: usize, height: usize, tile: usize, overlap: usize) -> Result<Vec<Tile>> {
    let xs = tile_origins(width, tile, overlap)?;
    let ys = tile_origins(height, tile, overlap)?;
    Ok(ys
        .iter()
        .flat_map(|&y| {
            xs.iter().map(move |&x| Tile {
                x0: x as f64,
                y0: y as f64,
                size: tile as f64,
            })
        })
        .collect())
}

/// Nodes of `g` inside `tile` with the edges between them, ids preserved.
pub fn crop_graph(g: &RoadGraph, tile: &Tile) -> RoadGraph {
    let mut out = RoadGraph::new(g.extent());
    for (id, p) in g.nodes() {
        if tile.contains(p) {
            out.insert_node(id, p).expect("copied from a valid graph");
        }
    }
    for (a, b) in g.edges() {
        if out.contains_node(a) && out.contains_node(b) {
            out.add_edge(a, b).expect("both endpoints copied");
        }
    }
    out
}

/// Merges tile graphs in order, unifying nodes within `snap_tol`.
pub fn stitch(parts: &[RoadGraph], extent: Extent, snap_tol: f64) -> RoadGraph {
    let mut acc = RoadGraph::new(extent);
    for part in parts {
        acc = merge_graphs(&acc, part, snap_tol);
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractConfig {
    pub tile: usize,
    pub overlap: usize,
    pub range_r: f64,
    pub n_pt: usize,
    pub threshold: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            tile: DEFAULT_TILE,
            overlap: DEFAULT_OVERLAP,
            range_r: crate::labels::DEFAULT_RANGE_R,
            n_pt: crate::labels::DEFAULT_N_PT,
            threshold: crate::connect::DEFAULT_THRESHOLD,
        }
    }
}

/// Runs [`predict_edges`] on the nodes of each tile and stitches the results.
pub fn extract_tiled(
    net: &ConnectNet,
    nodes: &[NodeDescriptor],
    extent: Extent,
    cfg: &ExtractConfig,
) -> Result<RoadGraph> {
    let width = extent.width.ceil() as usize;
    let height = extent.height.ceil() as usize;
    let tiles = tile_grid(width.max(1), height.max(1), cfg.tile, cfg.overlap)?;
    let mut parts = Vec::with_capacity(tiles.len());
    for tile in &tiles {
        let members: Vec<usize> = (0..nodes.len())
            .filter(|&i| tile.contains(nodes[i].coord))
            .collect();
        if members.is_empty() {
            continue;
        }
        let local: Vec<NodeDescriptor> = members.iter().map(|&i| nodes[i].clone()).collect();
        let g = predict_edges(net, &local, extent, cfg.range_r, cfg.n_pt, cfg.threshold)?;
        let mut part = RoadGraph::new(extent);
        for (id, p) in g.nodes() {
            part.insert_node(members[id as usize] as u32, p)?;
        }
        for (a, b) in g.edges() {
            part.add_edge(members[a as usize] as u32, members[b as usize] as u32)?;
        }
        parts.push(part);
    }
    Ok(stitch(&parts, extent, STITCH_SNAP))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::geometric_edge_key;

    #[test]
    fn origins_cover_canvas() {
        assert_eq!(
            tile_origins(2048, 512, 128).unwrap(),
            vec![0, 384, 768, 1152, 1536]
        );
        assert_eq!(tile_origins(512, 512, 128).unwrap(), vec![0]);
        assert_eq!(tile_origins(1000, 512, 128).unwrap(), vec![0, 384, 488]);
        assert_eq!(tile_grid(2048, 2048, 512, 128).unwrap().len(), 25);
        assert!(tile_origins(2048, 512, 512).is_err());
    }

    #[test]
    fn crop_and_stitch_round_trip() {
        let ext = Extent::new(1000.0, 600.0);
        let mut g = RoadGraph::new(ext);
        let mut prev = g.add_node(Point::new(10.0, 300.0)).unwrap();
        for k in 1..50 {
            let id = g
                .add_node(Point::new(10.0 + 20.0 * k as f64, 300.0))
                .unwrap();
            g.add_edge(prev, id).unwrap();
            prev = id;
        }
        let tiles = tile_grid(1000, 600, 512, 128).unwrap();
        let parts: Vec<RoadGraph> = tiles.iter().map(|t| crop_graph(&g, t)).collect();
        let stitched = stitch(&parts, ext, STITCH_SNAP);
        assert_eq!(stitched.node_count(), g.node_count());
        assert_eq!(geometric_edge_key(&stitched), geometric_edge_key(&g));
    }
}
