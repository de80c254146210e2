use super::{direction, LossValue};
use crate::geometry::Layout;

/// Sum of `max(0, 1 - |Xi - Xj| / (r * dmax))^2` over the sampled pairs,
/// `dmax` held fixed.
pub fn vertex_resolution_loss(layout: &Layout, pairs: &[(usize, usize)], r: f64, dmax: f64) -> LossValue {
    let scale = r * dmax;
    let mut value = 0.0;
    let mut grad = Vec::new();
    for &(i, j) in pairs {
        let (u, len) = direction(i, j, layout[i], layout[j]);
        let h = 1.0 - len / scale;
        if h > 0.0 {
            value += h * h;
            let g = u * (-2.0 * h / scale);
            grad.push((i, g));
            grad.push((j, -g));
        }
    }
    LossValue::new(value, grad)
}

/// Closest node distance relative to `r` times the drawing diameter, capped
/// at 1; 0 when all nodes coincide.
pub fn vertex_resolution_quality(layout: &Layout, r: f64) -> f64 {
    let pts = layout.points();
    let n = pts.len();
    if n < 2 {
        return 1.0;
    }
    let dmax = layout.diameter();
    if dmax == 0.0 {
        return 0.0;
    }
    let mut closest = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            closest = closest.min(pts[i].distance(pts[j]));
        }
    }
    (closest / (r * dmax)).min(1.0)
}

/// Default target resolution `1 / sqrt(n)`.
pub fn default_resolution(n: usize) -> f64 {
    1.0 / (n.max(1) as f64).sqrt()
}
