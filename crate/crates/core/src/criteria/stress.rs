use super::{direction, LossValue};
use crate::geometry::Layout;
use crate::graph::DistanceMatrix;

/// A node pair with its graph-theoretic distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairTarget {
    pub i: usize,
    pub j: usize,
    pub d: f64,
}

fn term(layout: &Layout, p: &PairTarget) -> (f64, f64, crate::geometry::Point) {
    let (u, len) = direction(p.i, p.j, layout[p.i], layout[p.j]);
    let w = 1.0 / (p.d * p.d);
    let r = len - p.d;
    (w * r * r, 2.0 * w * r, u)
}

/// Mean of `d^-2 (|Xi - Xj| - d)^2` over the sample.
pub fn stress_loss(layout: &Layout, pairs: &[PairTarget]) -> LossValue {
    if pairs.is_empty() {
        return LossValue::zero();
    }
    let m = pairs.len() as f64;
    let mut value = 0.0;
    let mut grad = Vec::with_capacity(2 * pairs.len());
    for p in pairs {
        let (v, dv, u) = term(layout, p);
        value += v;
        let g = u * (dv / m);
        grad.push((p.i, g));
        grad.push((p.j, -g));
    }
    LossValue::new(value / m, grad)
}

/// Stress averaged over all unordered node pairs.
pub fn stress_quality(layout: &Layout, d: &DistanceMatrix) -> f64 {
    let n = layout.len();
    if n < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let dij = f64::from(d.get(i, j));
            let r = layout[i].distance(layout[j]) - dij;
            total += r * r / (dij * dij);
        }
    }
    total / (n * (n - 1) / 2) as f64
}
