//! Road node encoding: a coordinate plus a ring of directional bins.
//!
//! Bin `k` of an `n`-bin descriptor covers the direction `k * 360 / n`
//! degrees, measured counterclockwise from "right" with the screen y-axis
//! pointing up. A neighbor at angle `θ` lands in bin `round(θ / width) mod n`,
//! so 360 degrees wraps back to bin 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ccw_angle_deg, Point};
use crate::graph::{Extent, NodeId, RoadGraph};

pub const DEFAULT_BINS: usize = 36;
/// Length of a [`NodeFeature`] with the default descriptor.
pub const FEATURE_DIM: usize = DEFAULT_BINS + 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDescriptor {
    pub coord: Point,
    /// Ground truth descriptors hold 0/1; predictions may hold confidences.
    pub bins: Vec<f64>,
}

impl NodeDescriptor {
    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    pub fn bin_width_deg(&self) -> f64 {
        360.0 / self.bins.len() as f64
    }

    pub fn set_bins(&self) -> Vec<usize> {
        (0..self.bins.len())
            .filter(|&k| self.bins[k] >= 0.5)
            .collect()
    }
}

/// Coordinates normalized by an extent, followed by the direction bins.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFeature(pub Vec<f64>);

impl NodeFeature {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn direction_bin(node: Point, neighbor: Point, n_bins: usize) -> Result<usize> {
    if node == neighbor {
        return Err(Error::ZeroLengthDirection {
            x: node.x,
            y: node.y,
        });
    }
    let width = 360.0 / n_bins as f64;
    let theta = ccw_angle_deg(node, neighbor);
    Ok((theta / width).round() as usize % n_bins)
}

pub fn encode_directions(node: Point, neighbors: &[Point]) -> Result<NodeDescriptor> {
    encode_directions_with(node, neighbors, DEFAULT_BINS)
}

pub fn encode_directions_with(
    node: Point,
    neighbors: &[Point],
    n_bins: usize,
) -> Result<NodeDescriptor> {
    assert!(n_bins > 0, "descriptor needs at least one bin");
    let mut bins = vec![0.0; n_bins];
    for &n in neighbors {
        bins[direction_bin(node, n, n_bins)?] = 1.0;
    }
    Ok(NodeDescriptor { coord: node, bins })
}

/// Bin-center angles (degrees, ascending) of every bin at or above `threshold`.
pub fn decode_directions(d: &NodeDescriptor, threshold: f64) -> Vec<f64> {
    let width = d.bin_width_deg();
    d.bins
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= threshold)
        .map(|(k, _)| k as f64 * width)
        .collect()
}

pub fn node_feature(d: &NodeDescriptor, extent: Extent) -> Result<NodeFeature> {
    if !extent.contains(d.coord) || extent.width <= 0.0 || extent.height <= 0.0 {
        return Err(Error::InvalidCoordinate {
            id: NodeId::MAX,
            x: d.coord.x,
            y: d.coord.y,
            reason: "descriptor coordinate outside the feature extent",
        });
    }
    let mut v = Vec::with_capacity(2 + d.bins.len());
    v.push(d.coord.x / extent.width);
    v.push(d.coord.y / extent.height);
    v.extend_from_slice(&d.bins);
    Ok(NodeFeature(v))
}

/// Ground-truth descriptor of every node of `g`, in ascending id order.
pub fn graph_descriptors(g: &RoadGraph, n_bins: usize) -> Vec<(NodeId, NodeDescriptor)> {
    g.nodes()
        .map(|(id, p)| {
            let neighbors: Vec<Point> = g
                .neighbors(id)
                .map(|n| g.node(n).unwrap())
                .filter(|&q| q != p)
                .collect();
            let d = encode_directions_with(p, &neighbors, n_bins).expect("coincident filtered");
            (id, d)
        })
        .collect()
}
