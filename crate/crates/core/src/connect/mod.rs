//! The connect module: pair features, training and edge prediction.
//!
//! Every candidate pair is described in a window of side `2 * range_r`
//! centered on the query node, so coordinates are translation-free: the
//! center always sits at `(0.5, 0.5)` and every neighbor within `range_r`
//! lands in `[0, 1]`.

mod net;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use net::{AttentionLayer, ConnectBatch, ConnectConfig, ConnectNet, Linear, PairMode};

use crate::codec::{node_feature, NodeDescriptor, NodeFeature};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::graph::{Extent, RoadGraph};
use crate::labels::{candidate_pairs, LabeledPair};

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_LR: f64 = 1e-2;
pub const WEIGHTS_VERSION: u32 = 1;

/// Feature of `d` in the window of side `2 * range_r` centered on `center`.
pub fn local_feature(d: &NodeDescriptor, center: Point, range_r: f64) -> Result<NodeFeature> {
    let shifted = NodeDescriptor {
        coord: Point::new(
            d.coord.x - center.x + range_r,
            d.coord.y - center.y + range_r,
        ),
        bins: d.bins.clone(),
    };
    node_feature(&shifted, Extent::new(2.0 * range_r, 2.0 * range_r))
}

/// Pair rows for `nodes[v]` against `nodes[c]` for each candidate `c`,
/// zero-padded and masked up to `n_pt` rows.
pub fn build_batch(
    nodes: &[NodeDescriptor],
    v: usize,
    candidates: &[usize],
    range_r: f64,
    n_pt: usize,
    mode: PairMode,
) -> Result<ConnectBatch> {
    if candidates.len() > n_pt {
        return Err(Error::Shape {
            what: "candidate count",
            expected: n_pt,
            got: candidates.len(),
        });
    }
    let center = nodes[v].coord;
    let fv = local_feature(&nodes[v], center, range_r)?;
    let dim = fv.len();
    let width = match mode {
        PairMode::Concat => 2 * dim,
        PairMode::Sum => dim,
    };
    let mut rows = Array2::zeros((n_pt, width));
    let mut mask = vec![false; n_pt];
    for (i, &c) in candidates.iter().enumerate() {
        let fn_ = local_feature(&nodes[c], center, range_r)?;
        if fn_.len() != dim {
            return Err(Error::Shape {
                what: "descriptor bin count",
                expected: dim - 2,
                got: fn_.len() - 2,
            });
        }
        let mut row = rows.row_mut(i);
        match mode {
            PairMode::Concat => {
                for (k, &x) in fv.as_slice().iter().chain(fn_.as_slice()).enumerate() {
                    row[k] = x;
                }
            }
            PairMode::Sum => {
                for k in 0..dim {
                    row[k] = fv.0[k] + fn_.0[k];
                }
            }
        }
        mask[i] = true;
    }
    Ok(ConnectBatch { rows, mask })
}

/// One center node with its candidate rows and 0/1 targets.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub center: usize,
    pub candidates: Vec<usize>,
    pub batch: ConnectBatch,
    pub labels: Vec<f64>,
}

/// Groups labeled pairs by center node. Each center keeps its `n_pt`
/// nearest labeled neighbors within `range_r`, nearest first, ties by index.
pub fn build_dataset(
    nodes: &[NodeDescriptor],
    pairs: &[LabeledPair],
    range_r: f64,
    n_pt: usize,
    mode: PairMode,
) -> Result<Vec<TrainingSample>> {
    let mut grouped: BTreeMap<usize, Vec<(usize, u8)>> = BTreeMap::new();
    for p in pairs {
        for idx in [p.v, p.n] {
            if idx >= nodes.len() {
                return Err(Error::Config(format!(
                    "label references node {idx} but only {} descriptors exist",
                    nodes.len()
                )));
            }
        }
        grouped.entry(p.v).or_default().push((p.n, p.label));
    }
    let mut out = Vec::with_capacity(grouped.len());
    for (v, mut list) in grouped {
        let center = nodes[v].coord;
        list.retain(|&(n, _)| n != v && nodes[n].coord.dist(center) <= range_r);
        list.sort_by(|a, b| {
            let da = nodes[a.0].coord.dist_sq(center);
            let db = nodes[b.0].coord.dist_sq(center);
            da.total_cmp(&db).then(a.0.cmp(&b.0))
        });
        list.dedup_by_key(|e| e.0);
        list.truncate(n_pt);
        if list.is_empty() {
            continue;
        }
        let candidates: Vec<usize> = list.iter().map(|e| e.0).collect();
        let batch = build_batch(nodes, v, &candidates, range_r, n_pt, mode)?;
        let mut labels = vec![0.0; n_pt];
        for (i, &(_, l)) in list.iter().enumerate() {
            labels[i] = f64::from(l);
        }
        out.push(TrainingSample {
            center: v,
            candidates,
            batch,
            labels,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Classical momentum coefficient; 0 gives plain gradient descent.
    pub momentum: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 60,
            lr: DEFAULT_LR,
            momentum: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean dataset loss before training, then after each epoch.
    pub loss_curve: Vec<f64>,
    /// Epoch whose parameters were returned; 0 means the initial ones.
    pub best_epoch: usize,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.loss_curve[self.best_epoch]
    }
}

pub fn mean_loss(net: &ConnectNet, data: &[TrainingSample]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut total = 0.0;
    for s in data {
        total += net.loss(&s.batch, &s.labels)?;
    }
    Ok(total / data.len() as f64)
}

/// Per-sample gradient descent with a seeded shuffle each epoch. The
/// parameters with the lowest dataset loss seen are returned, so the final
/// loss never exceeds the initial one.
pub fn train(
    net: &ConnectNet,
    data: &[TrainingSample],
    cfg: &TrainConfig,
) -> Result<(ConnectNet, TrainReport)> {
    if data.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if !(cfg.lr >= 0.0 && cfg.lr.is_finite()) || !(0.0..1.0).contains(&cfg.momentum) {
        return Err(Error::Config(format!(
            "invalid optimizer settings lr={} momentum={}",
            cfg.lr, cfg.momentum
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut current = net.clone();
    let mut velocity = net.zeros_like();
    let initial = mean_loss(&current, data)?;
    let mut curve = vec![initial];
    let mut best = (initial, 0, current.clone());
    let mut order: Vec<usize> = (0..data.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (_, grad) = current.backward(&data[i].batch, &data[i].labels)?;
            let grads = grad.tensors();
            let vel = velocity.tensors_mut();
            let params = current.tensors_mut();
            for ((p, v), g) in params.into_iter().zip(vel).zip(grads) {
                for ((pk, vk), gk) in p.iter_mut().zip(v.iter_mut()).zip(g.2) {
                    *vk = cfg.momentum * *vk + gk;
                    *pk -= cfg.lr * *vk;
                }
            }
        }
        let loss = mean_loss(&current, data)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        log::debug!("epoch {epoch}: loss {loss:.6}");
        curve.push(loss);
        if loss < best.0 {
            best = (loss, epoch, current.clone());
        }
    }
    Ok((
        best.2,
        TrainReport {
            loss_curve: curve,
            best_epoch: best.1,
        },
    ))
}

/// Fraction of unmasked rows whose channel-1 decision at `threshold`
/// agrees with the label.
pub fn accuracy(net: &ConnectNet, data: &[TrainingSample], threshold: f64) -> Result<f64> {
    let mut right = 0usize;
    let mut total = 0usize;
    for s in data {
        let out = net.forward(&s.batch)?;
        for (i, &m) in s.batch.mask.iter().enumerate() {
            if m {
                total += 1;
                if (out[[i, 1]] >= threshold) == (s.labels[i] >= 0.5) {
                    right += 1;
                }
            }
        }
    }
    if total == 0 {
        return Err(Error::EmptyBatch);
    }
    Ok(right as f64 / total as f64)
}

/// Builds a graph over `nodes` (node id = index). A pair becomes an edge
/// when the channel-1 probability reaches `threshold` from either side.
pub fn predict_edges(
    net: &ConnectNet,
    nodes: &[NodeDescriptor],
    extent: Extent,
    range_r: f64,
    n_pt: usize,
    threshold: f64,
) -> Result<RoadGraph> {
    let mut g = RoadGraph::new(extent);
    for d in nodes {
        g.add_node(d.coord)?;
    }
    let coords: Vec<Point> = nodes.iter().map(|d| d.coord).collect();
    let cands = candidate_pairs(&coords, range_r, n_pt);
    let mut edges = BTreeSet::new();
    for (v, list) in cands.iter().enumerate() {
        if list.is_empty() {
            continue;
        }
        let batch = build_batch(nodes, v, list, range_r, n_pt, net.config.pair_mode)?;
        let out = net.forward(&batch)?;
        for (i, &n) in list.iter().enumerate() {
            if out[[i, 1]] >= threshold && coords[v] != coords[n] {
                edges.insert((v.min(n), v.max(n)));
            }
        }
    }
    for (a, b) in edges {
        g.add_edge(a as u32, b as u32)?;
    }
    Ok(g)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorRecord {
    shape: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsFile {
    version: u32,
    config: ConnectConfig,
    layers: BTreeMap<String, TensorRecord>,
}

pub fn weights_to_json(net: &ConnectNet) -> String {
    let layers = net
        .tensors()
        .into_iter()
        .map(|(name, shape, values)| {
            (
                name,
                TensorRecord {
                    shape,
                    values: values.to_vec(),
                },
            )
        })
        .collect();
    let file = WeightsFile {
        version: WEIGHTS_VERSION,
        config: net.config,
        layers,
    };
    serde_json::to_string(&file).expect("weights serialize")
}

pub fn weights_from_json(text: &str) -> Result<ConnectNet> {
    let file: WeightsFile =
        serde_json::from_str(text).map_err(|e| Error::parse("weights manifest", e))?;
    if file.version != WEIGHTS_VERSION {
        return Err(Error::Config(format!(
            "unsupported weights version {} (expected {WEIGHTS_VERSION})",
            file.version
        )));
    }
    let mut net = ConnectNet::zeros(file.config)?;
    let expected: Vec<(String, Vec<usize>)> =
        net.tensors().into_iter().map(|(n, s, _)| (n, s)).collect();
    if expected.len() != file.layers.len() {
        return Err(Error::Shape {
            what: "tensor count",
            expected: expected.len(),
            got: file.layers.len(),
        });
    }
    let mut flat = Vec::with_capacity(net.param_count());
    for (name, shape) in &expected {
        let rec = file
            .layers
            .get(name)
            .ok_or_else(|| Error::Config(format!("weights manifest lacks tensor {name}")))?;
        let numel: usize = shape.iter().product();
        if &rec.shape != shape || rec.values.len() != numel {
            return Err(Error::Shape {
                what: "tensor size",
                expected: numel,
                got: rec.values.len().max(rec.shape.iter().product()),
            });
        }
        flat.extend_from_slice(&rec.values);
    }
    net.set_flat_params(&flat);
    if !net.is_finite() {
        return Err(Error::Config(
            "weights manifest holds non-finite values".into(),
        ));
    }
    Ok(net)
}

pub fn save_weights(net: &ConnectNet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, weights_to_json(net)).map_err(|e| Error::io(path, e))
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<ConnectNet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    weights_from_json(&text)
}
