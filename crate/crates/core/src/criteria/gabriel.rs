use super::{direction, LossValue};
use crate::geometry::{Layout, Point};
use crate::graph::Graph;

/// Edge `(i, j)` and a node `k` outside it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EdgeNode {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

/// Sum of `max(0, r_ij - |Xk - c_ij|)^2`, where the disk with center `c_ij`
/// and radius `r_ij` has the edge as diameter.
pub fn gabriel_loss(layout: &Layout, sample: &[EdgeNode]) -> LossValue {
    let mut value = 0.0;
    let mut grad = Vec::new();
    for t in sample {
        let (xi, xj, xk) = (layout[t.i], layout[t.j], layout[t.k]);
        let (u_e, len) = direction(t.i, t.j, xi, xj);
        let c = (xi + xj) * 0.5;
        let (u_k, dist) = direction(t.k, t.i, xk, c);
        let h = 0.5 * len - dist;
        if h > 0.0 {
            value += h * h;
            let s = 2.0 * h;
            grad.push((t.k, u_k * -s));
            grad.push((t.i, (u_e + u_k) * (0.5 * s)));
            grad.push((t.j, (u_k - u_e) * (0.5 * s)));
        }
    }
    LossValue::new(value, grad)
}

/// Smallest `|Xk - c_ij| / r_ij` over edges and nodes off the edge, capped
/// at 1. Zero-length edges are ignored.
pub fn gabriel_quality(layout: &Layout, g: &Graph) -> f64 {
    let mut best = 1.0f64;
    for &(i, j) in g.edges() {
        let r = 0.5 * layout[i].distance(layout[j]);
        if r == 0.0 {
            continue;
        }
        let c: Point = (layout[i] + layout[j]) * 0.5;
        for k in 0..g.n() {
            if k != i && k != j {
                best = best.min(layout[k].distance(c) / r);
            }
        }
    }
    best
}
