//! Bit rasters of road graphs and multi-channel float images.

use std::path::Path;

use bitvec::vec::BitVec;

use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, Point};
use crate::graph::RoadGraph;

/// Line width used for the working-graph raster fed to node proposers.
pub const WORKING_LINE_WIDTH: f64 = 2.0;
/// Line width used to decide whether a predicted node lies on a road.
pub const VALID_NODE_LINE_WIDTH: f64 = 5.0;

/// One bit per pixel, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterMap {
    width: usize,
    height: usize,
    bits: BitVec,
}

impl RasterMap {
    pub fn new(width: usize, height: usize) -> Self {
        RasterMap {
            width,
            height,
            bits: BitVec::repeat(false, width * height),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        col < self.width && row < self.height && self.bits[row * self.width + col]
    }

    /// Signed lookup; anything outside the canvas reads as clear.
    pub fn get_signed(&self, col: i64, row: i64) -> bool {
        col >= 0 && row >= 0 && self.get(col as usize, row as usize)
    }

    pub fn set(&mut self, col: usize, row: usize) {
        let w = self.width;
        self.bits.set(row * w + col, true);
    }

    pub fn count_ones(&self) -> usize {
        self.bits.count_ones()
    }

    /// Sets every pixel whose center lies within `line_width / 2` of the
    /// segment `a`-`b`.
    pub fn stamp_segment(&mut self, a: Point, b: Point, line_width: f64) {
        let r = line_width / 2.0;
        if self.width == 0 || self.height == 0 {
            return;
        }
        let (max_col, max_row) = ((self.width - 1) as f64, (self.height - 1) as f64);
        let clamp_col = |v: f64| v.clamp(0.0, max_col) as usize;
        let clamp_row = |v: f64| v.clamp(0.0, max_row) as usize;
        let c0 = a.x.min(b.x) - r;
        let c1 = a.x.max(b.x) + r;
        let r0 = a.y.min(b.y) - r;
        let r1 = a.y.max(b.y) + r;
        if c1 < 0.0 || r1 < 0.0 {
            return;
        }
        for row in clamp_row(r0.ceil())..=clamp_row(r1.floor()) {
            for col in clamp_col(c0.ceil())..=clamp_col(c1.floor()) {
                let p = Point::new(col as f64, row as f64);
                if point_segment_distance(p, a, b) <= r {
                    self.set(col, row);
                }
            }
        }
    }

    /// Set pixels as `(col, row)`, row-major order.
    pub fn ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bits
            .iter_ones()
            .map(move |i| (i % self.width, i / self.width))
    }
}

/// Rasterizes `g` onto a `width x height` canvas. A pixel is set iff the
/// Euclidean distance from its center to the nearest edge segment is at most
/// `line_width / 2`.
pub fn rasterize(g: &RoadGraph, line_width: f64, width: usize, height: usize) -> RasterMap {
    let mut raster = RasterMap::new(width, height);
    for seg in g.segments() {
        raster.stamp_segment(seg.pa, seg.pb, line_width);
    }
    raster
}

/// Planar float image, `channels x height x width`, row-major per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: Vec<Vec<f32>>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Image {
            width,
            height,
            channels: vec![vec![0.0; width * height]; channels],
        }
    }

    pub fn from_channels(width: usize, height: usize, channels: Vec<Vec<f32>>) -> Result<Self> {
        for c in &channels {
            if c.len() != width * height {
                return Err(Error::Shape {
                    what: "image channel",
                    expected: width * height,
                    got: c.len(),
                });
            }
        }
        Ok(Image {
            width,
            height,
            channels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        &self.channels[c]
    }

    pub fn get(&self, c: usize, col: usize, row: usize) -> f32 {
        self.channels[c][row * self.width + col]
    }

    pub fn get_signed(&self, c: usize, col: i64, row: i64) -> f32 {
        if col < 0 || row < 0 || col as usize >= self.width || row as usize >= self.height {
            0.0
        } else {
            self.get(c, col as usize, row as usize)
        }
    }

    pub fn set(&mut self, c: usize, col: usize, row: usize, v: f32) {
        let w = self.width;
        self.channels[c][row * w + col] = v;
    }

    /// Writes channel 0 as an 8-bit grayscale PNG, values clamped to `[0, 1]`.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let data: Vec<u8> = self.channels[0]
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        let buf = image::GrayImage::from_raw(self.width as u32, self.height as u32, data)
            .expect("buffer length matches dimensions");
        buf.save(path.as_ref())?;
        Ok(())
    }

    /// Reads any image as a single luminance channel in `[0, 1]`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let img = image::open(path.as_ref())?.to_luma8();
        let (w, h) = img.dimensions();
        let data = img
            .into_raw()
            .into_iter()
            .map(|v| v as f32 / 255.0)
            .collect();
        Image::from_channels(w as usize, h as usize, vec![data])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Extent;

    fn brute_force(g: &RoadGraph, width: f64, w: usize, h: usize) -> Vec<(usize, usize)> {
        let segs = g.segments();
        let mut out = vec![];
        for row in 0..h {
            for col in 0..w {
                let p = Point::new(col as f64, row as f64);
                let d = segs
                    .iter()
                    .map(|s| point_segment_distance(p, s.pa, s.pb))
                    .fold(f64::INFINITY, f64::min);
                if d <= width / 2.0 {
                    out.push((col, row));
                }
            }
        }
        out
    }

    #[test]
    fn horizontal_segment_matches_distance_oracle() {
        let mut g = RoadGraph::new(Extent::new(16.0, 12.0));
        let a = g.add_node(Point::new(0.0, 5.0)).unwrap();
        let b = g.add_node(Point::new(10.0, 5.0)).unwrap();
        g.add_edge(a, b).unwrap();
        let r = rasterize(&g, 2.0, 16, 12);
        let got: Vec<_> = r.ones().collect();
        assert_eq!(got, brute_force(&g, 2.0, 16, 12));
        // Rows 4..=6 over cols 0..=10, plus the single pixel (11, 5) at distance 1.
        assert_eq!(got.len(), 3 * 11 + 1);
    }

    #[test]
    fn empty_graph_is_all_clear() {
        let g = RoadGraph::new(Extent::new(8.0, 8.0));
        assert_eq!(rasterize(&g, 5.0, 8, 8).count_ones(), 0);
    }

    #[test]
    fn segments_off_canvas_are_clipped() {
        let mut r = RasterMap::new(4, 4);
        r.stamp_segment(Point::new(-10.0, -10.0), Point::new(-5.0, -5.0), 2.0);
        assert_eq!(r.count_ones(), 0);
        r.stamp_segment(Point::new(0.0, 0.0), Point::new(100.0, 0.0), 2.0);
        assert_eq!(r.count_ones(), 8);
        assert!(!r.get_signed(-1, 0));
    }
}
