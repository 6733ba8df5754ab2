//! Forward and backward passes of the connect network.
//!
//! ```text
//! pairs (N x in) -> Linear -> ReLU -> Linear (N x width)
//!                -> L x [H + MHSA(H)]            (residual self-attention)
//!                -> Linear (N x 2) -> sigmoid
//! ```
//!
//! There is no positional encoding, so permuting the candidate rows permutes
//! the outputs identically. Masked rows are excluded as attention keys and
//! from the loss.

use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::bce_with_logit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    /// `[center ++ neighbor]`, twice the node feature width.
    #[default]
    Concat,
    /// `center + neighbor`, element-wise.
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectConfig {
    pub pair_mode: PairMode,
    /// Width of one node feature (2 coordinates + direction bins).
    pub node_dim: usize,
    /// Width of the first projection.
    pub hidden: usize,
    /// Width of the attention stack.
    pub width: usize,
    pub heads: usize,
    pub layers: usize,
}

impl Default for ConnectConfig {
    fn default() -> Self {
        ConnectConfig {
            pair_mode: PairMode::Concat,
            node_dim: crate::codec::FEATURE_DIM,
            hidden: 38,
            width: 64,
            heads: 4,
            layers: 3,
        }
    }
}

impl ConnectConfig {
    pub fn input_dim(&self) -> usize {
        match self.pair_mode {
            PairMode::Concat => 2 * self.node_dim,
            PairMode::Sum => self.node_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.heads == 0 || !self.width.is_multiple_of(self.heads) {
            return Err(Error::Config(format!(
                "width {} is not divisible by {} heads",
                self.width, self.heads
            )));
        }
        if self.node_dim < 3 || self.hidden == 0 {
            return Err(Error::Config("node_dim and hidden must be positive".into()));
        }
        Ok(())
    }
}

/// Row-vector affine map: `y = x W + b`, `W` is `in x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Linear {
            weight: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    fn xavier(fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Self {
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let dist = Uniform::new_inclusive(-a, a).expect("finite bound");
        Linear {
            weight: Array2::from_shape_simple_fn((fan_in, fan_out), || dist.sample(rng)),
            bias: Array1::zeros(fan_out),
        }
    }

    fn apply(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.weight) + &self.bias
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    fn backward(&self, x: &ArrayView2<f64>, dy: &Array2<f64>, grad: &mut Linear) -> Array2<f64> {
        grad.weight += &x.t().dot(dy);
        grad.bias += &dy.sum_axis(Axis(0));
        dy.dot(&self.weight.t())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionLayer {
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
}

/// Parameters of the connect network, all double precision.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectNet {
    pub config: ConnectConfig,
    pub proj1: Linear,
    pub proj2: Linear,
    pub attn: Vec<AttentionLayer>,
    pub head: Linear,
}

/// Pair rows for one center node plus a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectBatch {
    pub rows: Array2<f64>,
    /// `false` marks padding.
    pub mask: Vec<bool>,
}

impl ConnectBatch {
    pub fn valid_rows(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

struct LayerCache {
    input: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    /// Attention weights per head, `N x N`.
    probs: Vec<Array2<f64>>,
    concat: Array2<f64>,
}

struct Cache {
    z1: Array2<f64>,
    a1: Array2<f64>,
    layers: Vec<LayerCache>,
    top: Array2<f64>,
    logits: Array2<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl ConnectNet {
    fn build(config: ConnectConfig, mut make: impl FnMut(usize, usize) -> Linear) -> Result<Self> {
        config.validate()?;
        let w = config.width;
        Ok(ConnectNet {
            proj1: make(config.input_dim(), config.hidden),
            proj2: make(config.hidden, w),
            attn: (0..config.layers)
                .map(|_| AttentionLayer {
                    query: make(w, w),
                    key: make(w, w),
                    value: make(w, w),
                    output: make(w, w),
                })
                .collect(),
            head: make(w, 2),
            config,
        })
    }

    /// Xavier-uniform weights, zero biases.
    pub fn new(config: ConnectConfig, rng: &mut impl Rng) -> Result<Self> {
        Self::build(config, |i, o| Linear::xavier(i, o, rng))
    }

    pub fn zeros(config: ConnectConfig) -> Result<Self> {
        Self::build(config, Linear::zeros)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.config).expect("config already validated")
    }

    fn linears(&self) -> Vec<(String, &Linear)> {
        let mut out = vec![
            ("proj1".to_string(), &self.proj1),
            ("proj2".to_string(), &self.proj2),
        ];
        for (i, l) in self.attn.iter().enumerate() {
            out.push((format!("attn.{i}.query"), &l.query));
            out.push((format!("attn.{i}.key"), &l.key));
            out.push((format!("attn.{i}.value"), &l.value));
            out.push((format!("attn.{i}.output"), &l.output));
        }
        out.push(("head".to_string(), &self.head));
        out
    }

    fn linears_mut(&mut self) -> Vec<&mut Linear> {
        let mut out = vec![&mut self.proj1, &mut self.proj2];
        for l in &mut self.attn {
            out.extend([&mut l.query, &mut l.key, &mut l.value, &mut l.output]);
        }
        out.push(&mut self.head);
        out
    }

    /// Every parameter tensor as `(name, shape, row-major values)`, in a
    /// fixed order.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        self.linears()
            .into_iter()
            .flat_map(|(name, l)| {
                [
                    (
                        format!("{name}.weight"),
                        l.weight.shape().to_vec(),
                        l.weight.as_slice().expect("standard layout"),
                    ),
                    (
                        format!("{name}.bias"),
                        l.bias.shape().to_vec(),
                        l.bias.as_slice().expect("standard layout"),
                    ),
                ]
            })
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.linears_mut()
            .into_iter()
            .flat_map(|l| {
                [
                    l.weight.as_slice_mut().expect("standard layout"),
                    l.bias.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.2.len()).sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.tensors()
            .into_iter()
            .flat_map(|t| t.2.iter().copied())
            .collect()
    }

    pub fn set_flat_params(&mut self, values: &[f64]) {
        let mut offset = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        assert_eq!(offset, values.len(), "flat parameter length");
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.2.iter().all(|v| v.is_finite()))
    }

    fn check_batch(&self, batch: &ConnectBatch) -> Result<()> {
        let (n, d) = batch.rows.dim();
        if d != self.config.input_dim() {
            return Err(Error::Shape {
                what: "pair feature width",
                expected: self.config.input_dim(),
                got: d,
            });
        }
        if batch.mask.len() != n {
            return Err(Error::Shape {
                what: "mask length",
                expected: n,
                got: batch.mask.len(),
            });
        }
        if batch.valid_rows() == 0 {
            return Err(Error::EmptyBatch);
        }
        Ok(())
    }

    fn forward_cached(&self, batch: &ConnectBatch) -> Cache {
        let heads = self.config.heads;
        let dh = self.config.width / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let n = batch.rows.nrows();

        let z1 = self.proj1.apply(&batch.rows.view());
        let a1 = z1.mapv(|v| v.max(0.0));
        let mut h = self.proj2.apply(&a1.view());

        let mut layers = Vec::with_capacity(self.attn.len());
        for layer in &self.attn {
            let q = layer.query.apply(&h.view());
            let k = layer.key.apply(&h.view());
            let v = layer.value.apply(&h.view());
            let mut concat = Array2::zeros((n, self.config.width));
            let mut probs = Vec::with_capacity(heads);
            for hd in 0..heads {
                let cols = s![.., hd * dh..(hd + 1) * dh];
                let mut scores = q.slice(cols).dot(&k.slice(cols).t()) * scale;
                for mut row in scores.rows_mut() {
                    let max = row
                        .iter()
                        .zip(&batch.mask)
                        .filter(|(_, &m)| m)
                        .map(|(&s, _)| s)
                        .fold(f64::NEG_INFINITY, f64::max);
                    let mut total = 0.0;
                    for (s, &m) in row.iter_mut().zip(&batch.mask) {
                        *s = if m { (*s - max).exp() } else { 0.0 };
                        total += *s;
                    }
                    row /= total;
                }
                concat.slice_mut(cols).assign(&scores.dot(&v.slice(cols)));
                probs.push(scores);
            }
            let out = layer.output.apply(&concat.view());
            let next = &h + &out;
            layers.push(LayerCache {
                input: h,
                q,
                k,
                v,
                probs,
                concat,
            });
            h = next;
        }
        let logits = self.head.apply(&h.view());
        Cache {
            z1,
            a1,
            layers,
            top: h,
            logits,
        }
    }

    /// Pre-sigmoid outputs, `N x 2`.
    pub fn logits(&self, batch: &ConnectBatch) -> Result<Array2<f64>> {
        self.check_batch(batch)?;
        Ok(self.forward_cached(batch).logits)
    }

    /// Connection probabilities, `N x 2`; column 1 is "connected". Rows of
    /// masked entries are computed but meaningless.
    pub fn forward(&self, batch: &ConnectBatch) -> Result<Array2<f64>> {
        Ok(self.logits(batch)?.mapv(sigmoid))
    }

    /// Mean binary cross-entropy over unmasked rows and both output columns,
    /// with targets `(1 - label, label)`.
    pub fn loss(&self, batch: &ConnectBatch, labels: &[f64]) -> Result<f64> {
        self.check_labels(batch, labels)?;
        let logits = self.forward_cached(batch).logits;
        Ok(loss_from_logits(&logits, &batch.mask, labels))
    }

    fn check_labels(&self, batch: &ConnectBatch, labels: &[f64]) -> Result<()> {
        self.check_batch(batch)?;
        if labels.len() != batch.rows.nrows() {
            return Err(Error::Shape {
                what: "label count",
                expected: batch.rows.nrows(),
                got: labels.len(),
            });
        }
        Ok(())
    }

    /// Loss and exact gradients of every parameter.
    pub fn backward(&self, batch: &ConnectBatch, labels: &[f64]) -> Result<(f64, ConnectNet)> {
        self.check_labels(batch, labels)?;
        let cache = self.forward_cached(batch);
        let loss = loss_from_logits(&cache.logits, &batch.mask, labels);
        let mut grad = self.zeros_like();

        let heads = self.config.heads;
        let dh = self.config.width / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let n = batch.rows.nrows();
        let denom = 2.0 * batch.valid_rows() as f64;

        let mut d_logits = Array2::zeros((n, 2));
        for i in 0..n {
            if !batch.mask[i] {
                continue;
            }
            let targets = [1.0 - labels[i], labels[i]];
            for c in 0..2 {
                d_logits[[i, c]] = (sigmoid(cache.logits[[i, c]]) - targets[c]) / denom;
            }
        }

        let mut dh_top = self
            .head
            .backward(&cache.top.view(), &d_logits, &mut grad.head);

        for (li, layer) in self.attn.iter().enumerate().rev() {
            let lc = &cache.layers[li];
            let g = &mut grad.attn[li];
            // Residual: the input receives the upstream gradient unchanged.
            let d_concat = layer
                .output
                .backward(&lc.concat.view(), &dh_top, &mut g.output);
            let mut dq = Array2::zeros((n, self.config.width));
            let mut dk = Array2::zeros((n, self.config.width));
            let mut dv = Array2::zeros((n, self.config.width));
            for hd in 0..heads {
                let cols = s![.., hd * dh..(hd + 1) * dh];
                let p = &lc.probs[hd];
                let d_out = d_concat.slice(cols);
                let dp = d_out.dot(&lc.v.slice(cols).t());
                dv.slice_mut(cols).assign(&p.t().dot(&d_out));
                let mut ds = Array2::zeros((n, n));
                Zip::from(ds.rows_mut())
                    .and(p.rows())
                    .and(dp.rows())
                    .for_each(|mut out, pr, dpr| {
                        let dot: f64 = pr.dot(&dpr);
                        Zip::from(&mut out)
                            .and(&pr)
                            .and(&dpr)
                            .for_each(|o, &pv, &dpv| {
                                *o = pv * (dpv - dot) * scale;
                            });
                    });
                dq.slice_mut(cols).assign(&ds.dot(&lc.k.slice(cols)));
                dk.slice_mut(cols).assign(&ds.t().dot(&lc.q.slice(cols)));
            }
            let x = lc.input.view();
            let mut d_in = dh_top;
            d_in += &layer.query.backward(&x, &dq, &mut g.query);
            d_in += &layer.key.backward(&x, &dk, &mut g.key);
            d_in += &layer.value.backward(&x, &dv, &mut g.value);
            dh_top = d_in;
        }

        let d_a1 = self
            .proj2
            .backward(&cache.a1.view(), &dh_top, &mut grad.proj2);
        let d_z1 = Zip::from(&d_a1)
            .and(&cache.z1)
            .map_collect(|&d, &z| if z > 0.0 { d } else { 0.0 });
        self.proj1
            .backward(&batch.rows.view(), &d_z1, &mut grad.proj1);
        Ok((loss, grad))
    }
}

fn loss_from_logits(logits: &Array2<f64>, mask: &[bool], labels: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for (i, &m) in mask.iter().enumerate() {
        if !m {
            continue;
        }
        total += bce_with_logit(logits[[i, 0]], 1.0 - labels[i]);
        total += bce_with_logit(logits[[i, 1]], labels[i]);
        count += 2;
    }
    total / count as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_config() -> ConnectConfig {
        ConnectConfig {
            pair_mode: PairMode::Concat,
            node_dim: 6,
            hidden: 5,
            width: 8,
            heads: 2,
            layers: 2,
        }
    }

    fn random_batch(rng: &mut impl Rng, n: usize, dim: usize) -> ConnectBatch {
        ConnectBatch {
            rows: Array2::from_shape_simple_fn((n, dim), || rng.random_range(-1.0..1.0)),
            mask: vec![true; n],
        }
    }

    #[test]
    fn zero_net_outputs_one_half_and_ln2_loss() {
        let net = ConnectNet::zeros(ConnectConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let batch = random_batch(&mut rng, 8, 76);
        let out = net.forward(&batch).unwrap();
        assert_eq!(out.dim(), (8, 2));
        assert!(out.iter().all(|&p| p == 0.5));
        let loss = net
            .loss(&batch, &[1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0])
            .unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn shape_and_mask_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = ConnectNet::new(ConnectConfig::default(), &mut rng).unwrap();
        let bad = random_batch(&mut rng, 4, 38);
        match net.forward(&bad) {
            Err(Error::Shape {
                expected: 76,
                got: 38,
                ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let mut masked = random_batch(&mut rng, 3, 76);
        masked.mask = vec![false; 3];
        assert!(matches!(net.forward(&masked), Err(Error::EmptyBatch)));
        assert!(matches!(
            net.backward(&masked, &[0.0; 3]),
            Err(Error::EmptyBatch)
        ));

        let bad_heads = ConnectConfig {
            heads: 3,
            ..ConnectConfig::default()
        };
        assert!(ConnectNet::zeros(bad_heads).is_err());
    }

    #[test]
    fn padding_rows_do_not_influence_valid_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = small_config();
        let net = ConnectNet::new(cfg, &mut rng).unwrap();
        let short = random_batch(&mut rng, 3, cfg.input_dim());
        let mut padded = ConnectBatch {
            rows: Array2::zeros((5, cfg.input_dim())),
            mask: vec![true, true, true, false, false],
        };
        padded.rows.slice_mut(s![..3, ..]).assign(&short.rows);
        padded.rows[[4, 0]] = 7.0;
        let a = net.forward(&short).unwrap();
        let b = net.forward(&padded).unwrap();
        for i in 0..3 {
            for c in 0..2 {
                assert!((a[[i, c]] - b[[i, c]]).abs() < 1e-14);
            }
        }
        let labels = [1.0, 0.0, 1.0];
        let la = net.loss(&short, &labels).unwrap();
        let lb = net.loss(&padded, &[1.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        assert!((la - lb).abs() < 1e-14);
    }

    #[test]
    fn gradients_match_central_differences_on_small_net() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = small_config();
        let net = ConnectNet::new(cfg, &mut rng).unwrap();
        let mut batch = random_batch(&mut rng, 4, cfg.input_dim());
        batch.mask[2] = false;
        let labels = [1.0, 0.0, 1.0, 0.0];
        let (_, grad) = net.backward(&batch, &labels).unwrap();
        let analytic = grad.flat_params();
        let base = net.flat_params();
        let h = 1e-5;
        let mut probe = net.clone();
        for i in 0..base.len() {
            let mut p = base.clone();
            p[i] += h;
            probe.set_flat_params(&p);
            let up = probe.loss(&batch, &labels).unwrap();
            p[i] -= 2.0 * h;
            probe.set_flat_params(&p);
            let down = probe.loss(&batch, &labels).unwrap();
            let numeric = (up - down) / (2.0 * h);
            let rel =
                (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-6);
            assert!(
                rel <= 1e-4,
                "param {i}: analytic {} numeric {numeric}",
                analytic[i]
            );
        }
    }

    #[test]
    fn flat_params_round_trip_and_names() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = ConnectNet::new(ConnectConfig::default(), &mut rng).unwrap();
        let names: Vec<String> = net.tensors().into_iter().map(|t| t.0).collect();
        assert_eq!(names.first().unwrap(), "proj1.weight");
        assert!(names.contains(&"attn.2.output.bias".to_string()));
        assert_eq!(names.len(), 2 * (3 + 4 * 3));
        let mut other = net.zeros_like();
        other.set_flat_params(&net.flat_params());
        assert_eq!(other, net);
        assert_eq!(net.tensors()[0].1, vec![76, 38]);
        assert_eq!(net.tensors()[2].1, vec![38, 64]);
    }
}
