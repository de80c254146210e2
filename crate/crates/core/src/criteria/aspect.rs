use std::f64::consts::TAU;

use super::{cross_entropy, cross_entropy_grad, LossValue};
use crate::geometry::{rotated_bbox, sym2_eigenvalues, Layout, Point};

/// Number of rotations sampled by [`aspect_ratio_quality`].
pub const DEFAULT_ROTATIONS: usize = 7;

const SIGMA_GUARD: f64 = 1e-9;

/// Cross entropy between `s2 / s1` of the centred sample and `target`.
///
/// The ratio uses `s1 + 1e-9` in its denominator; when every sampled point
/// coincides the ratio is taken to be 1 and the gradient vanishes.
pub fn aspect_ratio_loss(layout: &Layout, nodes: &[usize], target: f64) -> LossValue {
    if nodes.is_empty() {
        return LossValue::zero();
    }
    let mut mean = Point::ZERO;
    for &v in nodes {
        mean += layout[v];
    }
    mean = mean * (1.0 / nodes.len() as f64);
    let centred: Vec<Point> = nodes.iter().map(|&v| layout[v] - mean).collect();
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for d in &centred {
        a += d.x * d.x;
        b += d.x * d.y;
        c += d.y * d.y;
    }
    let (l1, l2) = sym2_eigenvalues(a, b, c);
    let s1 = l1.max(0.0).sqrt();
    let s2 = l2.max(0.0).sqrt();
    if s1 == 0.0 {
        return LossValue::new(cross_entropy(1.0, target), Vec::new());
    }
    let ratio = s2 / (s1 + SIGMA_GUARD);
    let value = cross_entropy(ratio, target);

    let g_ratio = cross_entropy_grad(ratio, target);
    let g_s1 = -g_ratio * s2 / ((s1 + SIGMA_GUARD) * (s1 + SIGMA_GUARD));
    let g_s2 = g_ratio / (s1 + SIGMA_GUARD);
    let g_l1 = g_s1 / (2.0 * s1);
    let g_l2 = if s2 > 0.0 { g_s2 / (2.0 * s2) } else { 0.0 };
    // l1,2 = (a + c)/2 +- D with D = sqrt(((a - c)/2)^2 + b^2)
    let d = 0.5 * (l1 - l2);
    let (da, db, dc) = if d > 0.0 {
        ((a - c) / (4.0 * d), b / d, -(a - c) / (4.0 * d))
    } else {
        (0.0, 0.0, 0.0)
    };
    let g_a = g_l1 * (0.5 + da) + g_l2 * (0.5 - da);
    let g_b = (g_l1 - g_l2) * db;
    let g_c = g_l1 * (0.5 + dc) + g_l2 * (0.5 - dc);
    let grad = nodes
        .iter()
        .zip(&centred)
        .map(|(&v, p)| (v, Point::new(2.0 * g_a * p.x + g_b * p.y, g_b * p.x + 2.0 * g_c * p.y)))
        .collect();
    LossValue::new(value, grad)
}

/// Smallest short-to-long side ratio of the bounding box over `rotations`
/// equally spaced rotations of the drawing.
pub fn aspect_ratio_quality(layout: &Layout, rotations: usize) -> f64 {
    let mut best = 1.0f64;
    for k in 0..rotations {
        let (w, h) = rotated_bbox(layout.points(), TAU * k as f64 / rotations as f64);
        let hi = w.max(h);
        if hi > 0.0 {
            best = best.min(w.min(h) / hi);
        }
    }
    best
}
