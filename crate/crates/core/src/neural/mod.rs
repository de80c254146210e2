//! Online-trained neural crossing predictor and the crossing loss built on
//! it.
//!
//! The network maps the canonical coordinates of an edge pair (see
//! [`canonicalize`]) to the probability that the two edges cross:
//! `8 -> H -> H -> 1`, each hidden layer being affine, batch normalized and
//! leaky-rectified, with a sigmoid on the output. Parameters are trained with
//! Adam on cross entropy against labels from the exact geometry test.

mod canonical;
mod format;

pub use canonical::{canonicalize, canonicalize_with_jacobian};
pub use format::{FORMAT_MAGIC, FORMAT_VERSION};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::criteria::{cross_entropy, EdgePair, LossValue};
use crate::error::{Error, Result};
use crate::geometry::{Layout, Point};

const INPUT: usize = 8;
const BN_EPS: f64 = 1e-5;
const OUTPUT_CLAMP: f64 = 1e-15;

/// Hyperparameters of the predictor and its optimizer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictorConfig {
    pub hidden: usize,
    pub negative_slope: f64,
    /// Weight of the old value in the running normalization statistics.
    pub momentum: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            hidden: 64,
            negative_slope: 0.01,
            momentum: 0.9,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

/// Offsets of the parameter blocks inside the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Blocks {
    h: usize,
    w1: usize,
    b1: usize,
    g1: usize,
    e1: usize,
    w2: usize,
    b2: usize,
    g2: usize,
    e2: usize,
    w3: usize,
    b3: usize,
    len: usize,
}

impl Blocks {
    fn new(h: usize) -> Blocks {
        let w1 = 0;
        let b1 = w1 + h * INPUT;
        let g1 = b1 + h;
        let e1 = g1 + h;
        let w2 = e1 + h;
        let b2 = w2 + h * h;
        let g2 = b2 + h;
        let e2 = g2 + h;
        let w3 = e2 + h;
        let b3 = w3 + h;
        Blocks {
            h,
            w1,
            b1,
            g1,
            e1,
            w2,
            b2,
            g2,
            e2,
            w3,
            b3,
            len: b3 + 1,
        }
    }
}

/// Running mean and variance of one normalization layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// Multi-layer perceptron estimating whether two edges cross.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossingPredictor {
    config: PredictorConfig,
    blocks: Blocks,
    params: Vec<f64>,
    stats: [NormStats; 2],
    adam_m: Vec<f64>,
    adam_v: Vec<f64>,
    steps: u64,
}

fn leaky(v: f64, slope: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        slope * v
    }
}

fn leaky_grad(v: f64, slope: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else {
        slope
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn clamp_probability(p: f64) -> f64 {
    p.clamp(OUTPUT_CLAMP, 1.0 - OUTPUT_CLAMP)
}

/// `out[b][o] = bias[o] + sum_i w[o][i] * input[b][i]`
fn affine(input: &[f64], rows: usize, width: usize, w: &[f64], bias: &[f64]) -> Vec<f64> {
    let outs = bias.len();
    let mut out = vec![0.0; rows * outs];
    for b in 0..rows {
        let x = &input[b * width..(b + 1) * width];
        for o in 0..outs {
            let wr = &w[o * width..(o + 1) * width];
            out[b * outs + o] = bias[o] + wr.iter().zip(x).map(|(a, c)| a * c).sum::<f64>();
        }
    }
    out
}

/// Per-layer intermediate values kept for the backward pass.
struct Hidden {
    xhat: Vec<f64>,
    pre: Vec<f64>,
    act: Vec<f64>,
    inv_std: Vec<f64>,
    mean: Vec<f64>,
    var: Vec<f64>,
}

impl CrossingPredictor {
    /// Fresh network with uniform `±1/sqrt(fan_in)` initialization.
    pub fn new(config: PredictorConfig, seed: u64) -> Result<CrossingPredictor> {
        if config.hidden == 0 {
            return Err(Error::Invalid("predictor needs at least one hidden unit".into()));
        }
        let blocks = Blocks::new(config.hidden);
        let h = config.hidden;
        let mut rng = crate::rng::seeded(seed);
        let mut params = vec![0.0; blocks.len];
        let mut fill = |range: std::ops::Range<usize>, fan_in: usize, params: &mut Vec<f64>| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for p in &mut params[range] {
                *p = rng.random_range(-bound..bound);
            }
        };
        fill(blocks.w1..blocks.b1 + h, INPUT, &mut params);
        fill(blocks.w2..blocks.b2 + h, h, &mut params);
        fill(blocks.w3..blocks.len, h, &mut params);
        for k in 0..h {
            params[blocks.g1 + k] = 1.0;
            params[blocks.g2 + k] = 1.0;
            params[blocks.e1 + k] = 0.0;
            params[blocks.e2 + k] = 0.0;
        }
        let stats = NormStats {
            mean: vec![0.0; h],
            var: vec![1.0; h],
        };
        Ok(CrossingPredictor {
            config,
            blocks,
            adam_m: vec![0.0; blocks.len],
            adam_v: vec![0.0; blocks.len],
            params,
            stats: [stats.clone(), stats],
            steps: 0,
        })
    }

    pub fn config(&self) -> &PredictorConfig {
        &self.config
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
            && self
                .stats
                .iter()
                .all(|s| s.mean.iter().chain(&s.var).all(|v| v.is_finite()))
    }

    /// Crossing probability of the edges `a1 a2` and `b1 b2`, using the
    /// running normalization statistics.
    pub fn predict(&self, points: &[Point; 4]) -> f64 {
        self.predict_canonical(&canonicalize(points))
    }

    pub fn predict_canonical(&self, x: &[f64; 8]) -> f64 {
        let (z, _) = self.forward(x, 1, false);
        clamp_probability(sigmoid(z[0]))
    }

    /// Forward pass over `rows` canonical inputs, returning logits. With
    /// `batch_stats` the layers normalize by the statistics of this batch.
    fn forward(&self, x: &[f64], rows: usize, batch_stats: bool) -> (Vec<f64>, [Hidden; 2]) {
        let bk = self.blocks;
        let h = bk.h;
        let p = &self.params;
        let layer = |input: &[f64], width: usize, w: usize, b: usize, g: usize, e: usize, li: usize| {
            let z = affine(input, rows, width, &p[w..w + h * width], &p[b..b + h]);
            let (mean, var) = if batch_stats {
                let mut mean = vec![0.0; h];
                let mut var = vec![0.0; h];
                for r in 0..rows {
                    for k in 0..h {
                        mean[k] += z[r * h + k];
                    }
                }
                for m in &mut mean {
                    *m /= rows as f64;
                }
                for r in 0..rows {
                    for k in 0..h {
                        let d = z[r * h + k] - mean[k];
                        var[k] += d * d;
                    }
                }
                for v in &mut var {
                    *v /= rows as f64;
                }
                (mean, var)
            } else {
                (self.stats[li].mean.clone(), self.stats[li].var.clone())
            };
            let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
            let mut xhat = vec![0.0; rows * h];
            let mut pre = vec![0.0; rows * h];
            let mut act = vec![0.0; rows * h];
            for r in 0..rows {
                for k in 0..h {
                    let i = r * h + k;
                    xhat[i] = (z[i] - mean[k]) * inv_std[k];
                    pre[i] = p[g + k] * xhat[i] + p[e + k];
                    act[i] = leaky(pre[i], self.config.negative_slope);
                }
            }
            Hidden {
                xhat,
                pre,
                act,
                inv_std,
                mean,
                var,
            }
        };
        let h1 = layer(x, INPUT, bk.w1, bk.b1, bk.g1, bk.e1, 0);
        let h2 = layer(&h1.act, h, bk.w2, bk.b2, bk.g2, bk.e2, 1);
        let logits = affine(&h2.act, rows, h, &p[bk.w3..bk.b3], &p[bk.b3..bk.len]);
        (logits, [h1, h2])
    }

    /// Backward pass. `d_out[r]` is the loss derivative with respect to the
    /// logit of row `r`. Returns parameter and input gradients.
    fn backward(
        &self,
        x: &[f64],
        rows: usize,
        hidden: &[Hidden; 2],
        d_out: &[f64],
        batch_stats: bool,
    ) -> (Vec<f64>, Vec<f64>) {
        let bk = self.blocks;
        let h = bk.h;
        let p = &self.params;
        let slope = self.config.negative_slope;
        let mut grad = vec![0.0; bk.len];

        let mut d_act = vec![0.0; rows * h];
        for r in 0..rows {
            grad[bk.b3] += d_out[r];
            for k in 0..h {
                grad[bk.w3 + k] += d_out[r] * hidden[1].act[r * h + k];
                d_act[r * h + k] = d_out[r] * p[bk.w3 + k];
            }
        }

        let layer_back = |li: usize,
                          input: &[f64],
                          width: usize,
                          w: usize,
                          b: usize,
                          g: usize,
                          e: usize,
                          d_act: &[f64],
                          grad: &mut [f64]|
         -> Vec<f64> {
            let hd = &hidden[li];
            let mut d_xhat = vec![0.0; rows * h];
            for r in 0..rows {
                for k in 0..h {
                    let i = r * h + k;
                    let d_pre = d_act[i] * leaky_grad(hd.pre[i], slope);
                    grad[g + k] += d_pre * hd.xhat[i];
                    grad[e + k] += d_pre;
                    d_xhat[i] = d_pre * p[g + k];
                }
            }
            let mut d_z = vec![0.0; rows * h];
            if batch_stats {
                let n = rows as f64;
                for k in 0..h {
                    let mut s1 = 0.0;
                    let mut s2 = 0.0;
                    for r in 0..rows {
                        s1 += d_xhat[r * h + k];
                        s2 += d_xhat[r * h + k] * hd.xhat[r * h + k];
                    }
                    for r in 0..rows {
                        let i = r * h + k;
                        d_z[i] = hd.inv_std[k] / n * (n * d_xhat[i] - s1 - hd.xhat[i] * s2);
                    }
                }
            } else {
                for r in 0..rows {
                    for k in 0..h {
                        d_z[r * h + k] = d_xhat[r * h + k] * hd.inv_std[k];
                    }
                }
            }
            let mut d_in = vec![0.0; rows * width];
            for r in 0..rows {
                for o in 0..h {
                    let dz = d_z[r * h + o];
                    if dz == 0.0 {
                        continue;
                    }
                    grad[b + o] += dz;
                    let xr = &input[r * width..(r + 1) * width];
                    for i in 0..width {
                        grad[w + o * width + i] += dz * xr[i];
                        d_in[r * width + i] += dz * p[w + o * width + i];
                    }
                }
            }
            d_in
        };
        let d_act1 = layer_back(1, &hidden[0].act, h, bk.w2, bk.b2, bk.g2, bk.e2, &d_act, &mut grad);
        let d_x = layer_back(0, x, INPUT, bk.w1, bk.b1, bk.g1, bk.e1, &d_act1, &mut grad);
        (grad, d_x)
    }

    /// One Adam step on the mean cross entropy of `batch`. Returns the loss
    /// before the step. Batches of one are normalized with the running
    /// statistics, which then stay unchanged.
    pub fn train_step(&mut self, batch: &[([Point; 4], bool)]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Empty("predictor training batch".into()));
        }
        let rows = batch.len();
        let mut x = Vec::with_capacity(rows * INPUT);
        for (pts, _) in batch {
            x.extend_from_slice(&canonicalize(pts));
        }
        self.train_canonical(&x, &batch.iter().map(|b| b.1).collect::<Vec<_>>())
    }

    fn train_canonical(&mut self, x: &[f64], labels: &[bool]) -> Result<f64> {
        let rows = labels.len();
        let batch_stats = rows > 1;
        let (logits, hidden) = self.forward(x, rows, batch_stats);
        let probs: Vec<f64> = logits.into_iter().map(sigmoid).collect();
        let mut loss = 0.0;
        let mut d_out = vec![0.0; rows];
        for r in 0..rows {
            let t = if labels[r] { 1.0 } else { 0.0 };
            loss += cross_entropy(probs[r], t);
            d_out[r] = (probs[r] - t) / rows as f64;
        }
        loss /= rows as f64;
        let (grad, _) = self.backward(x, rows, &hidden, &d_out, batch_stats);

        if batch_stats {
            let m = self.config.momentum;
            let correction = rows as f64 / (rows - 1) as f64;
            for (stats, hd) in self.stats.iter_mut().zip(&hidden) {
                for k in 0..self.blocks.h {
                    stats.mean[k] = m * stats.mean[k] + (1.0 - m) * hd.mean[k];
                    stats.var[k] = m * stats.var[k] + (1.0 - m) * hd.var[k] * correction;
                }
            }
        }

        self.steps += 1;
        let c = self.config;
        let t = self.steps as i32;
        let bias1 = 1.0 - c.beta1.powi(t);
        let bias2 = 1.0 - c.beta2.powi(t);
        for (k, g) in grad.iter().enumerate() {
            self.adam_m[k] = c.beta1 * self.adam_m[k] + (1.0 - c.beta1) * g;
            self.adam_v[k] = c.beta2 * self.adam_v[k] + (1.0 - c.beta2) * g * g;
            let mhat = self.adam_m[k] / bias1;
            let vhat = self.adam_v[k] / bias2;
            self.params[k] -= c.learning_rate * mhat / (vhat.sqrt() + c.adam_eps);
        }
        Ok(loss)
    }

    /// Logit of the crossing probability and its gradient with respect to
    /// the 4 points.
    pub fn logit_with_gradient(&self, points: &[Point; 4]) -> (f64, [Point; 4]) {
        let (x, jac) = canonicalize_with_jacobian(points);
        let (z, hidden) = self.forward(&x, 1, false);
        let (_, d_x) = self.backward(&x, 1, &hidden, &[1.0], false);
        let mut out = [Point::ZERO; 4];
        for c in 0..8 {
            let g: f64 = (0..8).map(|r| d_x[r] * jac[r][c]).sum();
            if c % 2 == 0 {
                out[c / 2].x = g;
            } else {
                out[c / 2].y = g;
            }
        }
        (z[0], out)
    }

    /// Probability and its gradient with respect to the 4 points.
    pub fn predict_with_gradient(&self, points: &[Point; 4]) -> (f64, [Point; 4]) {
        let (z, dz) = self.logit_with_gradient(points);
        let raw = sigmoid(z);
        let p = clamp_probability(raw);
        if p != raw {
            return (p, [Point::ZERO; 4]);
        }
        let s = raw * (1.0 - raw);
        (p, dz.map(|g| g * s))
    }

    /// Fraction of `batch` classified correctly at threshold 1/2.
    pub fn accuracy(&self, batch: &[([Point; 4], bool)]) -> f64 {
        if batch.is_empty() {
            return 1.0;
        }
        let hits = batch.iter().filter(|(pts, t)| (self.predict(pts) > 0.5) == *t).count();
        hits as f64 / batch.len() as f64
    }
}

fn pair_points(layout: &Layout, pair: &EdgePair) -> [Point; 4] {
    [layout[pair.a.0], layout[pair.a.1], layout[pair.b.0], layout[pair.b.1]]
}

/// Mean cross entropy between the predicted crossing probabilities of the
/// sampled edge pairs and the target "no crossing", with the predictor held
/// fixed. Evaluated on the logit (`-ln(1 - sigmoid(z)) = softplus(z)`) so
/// confidently crossing pairs keep a full-strength gradient.
pub fn crossing_loss(layout: &Layout, sample: &[EdgePair], predictor: &CrossingPredictor) -> LossValue {
    if sample.is_empty() {
        return LossValue::zero();
    }
    let m = sample.len() as f64;
    let mut value = 0.0;
    let mut grad = Vec::with_capacity(4 * sample.len());
    for pair in sample {
        let pts = pair_points(layout, pair);
        let (z, dz) = predictor.logit_with_gradient(&pts);
        value += softplus(z);
        let s = sigmoid(z) / m;
        let ids = [pair.a.0, pair.a.1, pair.b.0, pair.b.1];
        for (id, g) in ids.iter().zip(dz) {
            grad.push((*id, g * s));
        }
    }
    LossValue::new(value / m, grad)
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Edge-pair points and exact crossing labels for predictor training.
pub fn labelled_pairs(layout: &Layout, pairs: &[EdgePair]) -> Vec<([Point; 4], bool)> {
    pairs
        .iter()
        .map(|pair| {
            let pts = pair_points(layout, pair);
            let t = crate::geometry::segments_properly_cross(pts[0], pts[1], pts[2], pts[3]);
            (pts, t)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::testing::gradient_error;
    use crate::geometry::segments_properly_cross;

    fn random_pairs(rng: &mut crate::rng::SeededRng, count: usize) -> Vec<([Point; 4], bool)> {
        (0..count)
            .map(|_| {
                let pts =
                    [(); 4].map(|_| Point::new(crate::rng::unit(rng) * 2.0 - 1.0, crate::rng::unit(rng) * 2.0 - 1.0));
                let t = segments_properly_cross(pts[0], pts[1], pts[2], pts[3]);
                (pts, t)
            })
            .collect()
    }

    #[test]
    fn output_is_a_probability() {
        let net = CrossingPredictor::new(PredictorConfig::default(), 1).unwrap();
        let mut rng = crate::rng::seeded(2);
        for (pts, _) in random_pairs(&mut rng, 50) {
            let p = net.predict(&pts);
            assert!(p > 0.0 && p < 1.0);
        }
        assert_eq!(net.parameter_count(), 64 * 8 + 64 * 3 + 64 * 64 + 64 * 3 + 64 + 1);
    }

    #[test]
    fn rotated_input_gives_same_output() {
        let net = CrossingPredictor::new(PredictorConfig::default(), 3).unwrap();
        let mut rng = crate::rng::seeded(4);
        for (pts, _) in random_pairs(&mut rng, 20) {
            let turned = pts.map(|p| p.rotated(std::f64::consts::FRAC_PI_2));
            assert!((net.predict(&pts) - net.predict(&turned)).abs() < 1e-9);
        }
    }

    #[test]
    fn repeated_example_is_learned() {
        let mut net = CrossingPredictor::new(PredictorConfig::default(), 5).unwrap();
        let one = [(
            [
                Point::new(0.0, 0.0),
                Point::new(1.0, 1.0),
                Point::new(0.0, 1.0),
                Point::new(1.0, 0.0),
            ],
            true,
        )];
        let batch: Vec<_> = one.iter().cycle().take(8).cloned().collect();
        let first = net.train_step(&batch).unwrap();
        let mut last = first;
        for _ in 0..100 {
            last = net.train_step(&batch).unwrap();
        }
        assert!(last < first);
        assert!(net.train_step(&[]).is_err());
    }

    #[test]
    fn training_beats_constant_guess() {
        let mut net = CrossingPredictor::new(PredictorConfig::default(), 6).unwrap();
        let mut rng = crate::rng::seeded(7);
        let mut loss = f64::INFINITY;
        for _ in 0..500 {
            let batch = random_pairs(&mut rng, 64);
            loss = net.train_step(&batch).unwrap();
        }
        assert!(loss < std::f64::consts::LN_2, "{loss}");
    }

    #[test]
    fn parameter_gradient_matches_differences() {
        let mut net = CrossingPredictor::new(
            PredictorConfig {
                hidden: 6,
                ..Default::default()
            },
            8,
        )
        .unwrap();
        let mut rng = crate::rng::seeded(9);
        let batch = random_pairs(&mut rng, 5);
        let mut x = Vec::new();
        for (pts, _) in &batch {
            x.extend_from_slice(&canonicalize(pts));
        }
        let labels: Vec<bool> = batch.iter().map(|b| b.1).collect();
        let loss_at = |net: &CrossingPredictor| {
            let (logits, _) = net.forward(&x, 5, true);
            logits
                .iter()
                .zip(&labels)
                .map(|(z, &t)| cross_entropy(sigmoid(*z), if t { 1.0 } else { 0.0 }))
                .sum::<f64>()
                / 5.0
        };
        let (logits, hidden) = net.forward(&x, 5, true);
        let d_out: Vec<f64> = logits
            .iter()
            .zip(&labels)
            .map(|(z, &t)| (sigmoid(*z) - if t { 1.0 } else { 0.0 }) / 5.0)
            .collect();
        let (grad, _) = net.backward(&x, 5, &hidden, &d_out, true);
        let h = 1e-6;
        for k in 0..net.params.len() {
            let keep = net.params[k];
            net.params[k] = keep + h;
            let a = loss_at(&net);
            net.params[k] = keep - h;
            let b = loss_at(&net);
            net.params[k] = keep;
            let fd = (a - b) / (2.0 * h);
            assert!(
                (fd - grad[k]).abs() < 1e-6 * (1.0 + fd.abs()),
                "param {k}: {fd} vs {}",
                grad[k]
            );
        }
    }

    #[test]
    fn crossing_loss_values_and_gradient() {
        let net = CrossingPredictor::new(PredictorConfig::default(), 10).unwrap();
        let mut rng = crate::rng::seeded(11);
        let layout = Layout::random_normal(6, &mut rng);
        let sample = [
            EdgePair { a: (0, 1), b: (2, 3) },
            EdgePair { a: (4, 5), b: (0, 2) },
            EdgePair { a: (1, 3), b: (4, 2) },
        ];
        let v = crossing_loss(&layout, &sample, &net);
        let expected: f64 = sample
            .iter()
            .map(|s| -(1.0 - net.predict(&pair_points(&layout, s))).ln())
            .sum::<f64>()
            / 3.0;
        assert!((v.value - expected).abs() < 1e-12);
        assert!(gradient_error(&layout, |l| crossing_loss(l, &sample, &net)) < 1e-4);
    }
}
