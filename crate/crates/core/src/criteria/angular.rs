use std::f64::consts::TAU;

use super::{LossValue, COINCIDENT};
use crate::geometry::{Layout, Point};
use crate::graph::Graph;

/// Edges `(i, j)` and `(j, k)` meeting at `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IncidentPair {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

/// Sum of `exp(-s * phi)` over the sampled angles. Pairs with a zero-length
/// edge are skipped and counted.
pub fn angular_resolution_loss(layout: &Layout, sample: &[IncidentPair], s: f64) -> LossValue {
    let mut value = 0.0;
    let mut grad = Vec::with_capacity(3 * sample.len());
    let mut skipped = 0;
    for t in sample {
        let a = layout[t.i] - layout[t.j];
        let b = layout[t.k] - layout[t.j];
        if a.norm() < COINCIDENT || b.norm() < COINCIDENT {
            skipped += 1;
            continue;
        }
        let cr = a.cross(b);
        let dt = a.dot(b);
        let phi = cr.abs().atan2(dt);
        let energy = (-s * phi).exp();
        value += energy;
        // phi = atan2(|c|, d): dphi = (d d|c| - |c| dd) / (c^2 + d^2)
        let sc = cr.signum();
        let denom = cr * cr + dt * dt;
        let dc_da = Point::new(b.y, -b.x) * sc;
        let dc_db = Point::new(-a.y, a.x) * sc;
        let g_a = (dc_da * dt - b * cr.abs()) * (1.0 / denom);
        let g_b = (dc_db * dt - a * cr.abs()) * (1.0 / denom);
        let scale = -s * energy;
        let (g_a, g_b) = (g_a * scale, g_b * scale);
        grad.push((t.i, g_a));
        grad.push((t.k, g_b));
        grad.push((t.j, -(g_a + g_b)));
    }
    LossValue::new(value, grad).with_skipped(skipped)
}

/// Smallest angle between edges sharing an endpoint divided by `2 pi / d`,
/// `d` the maximum degree, capped at 1. Graphs without such edge pairs score
/// 1; a zero-length edge makes the angle 0.
pub fn angular_resolution_quality(layout: &Layout, g: &Graph) -> f64 {
    let dmax = g.max_degree();
    if dmax < 2 {
        return 1.0;
    }
    let mut smallest = f64::INFINITY;
    for v in 0..g.n() {
        let nb = g.neighbors(v);
        if nb.len() < 2 {
            continue;
        }
        let mut angles = Vec::with_capacity(nb.len());
        for &w in nb {
            let d = layout[w] - layout[v];
            if d.norm() < COINCIDENT {
                return 0.0;
            }
            angles.push(d.y.atan2(d.x));
        }
        angles.sort_by(f64::total_cmp);
        for pair in angles.windows(2) {
            smallest = smallest.min(pair[1] - pair[0]);
        }
        let wrap = angles[0] + TAU - angles[angles.len() - 1];
        smallest = smallest.min(wrap);
    }
    (smallest.max(0.0) / (TAU / dmax as f64)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::testing::gradient_error;
    use std::f64::consts::PI;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn energies() {
        let t = [IncidentPair { i: 1, j: 0, k: 2 }];
        let same = Layout::new(vec![p(0., 0.), p(1., 0.), p(2., 0.)]);
        assert!((angular_resolution_loss(&same, &t, 1.0).value - 1.0).abs() < 1e-15);
        let opposite = Layout::new(vec![p(0., 0.), p(1., 0.), p(-2., 0.)]);
        assert!((angular_resolution_loss(&opposite, &t, 1.0).value - (-PI).exp()).abs() < 1e-15);
    }

    #[test]
    fn quality_values() {
        let star4 = Graph::star(4);
        let l = Layout::new(vec![p(0., 0.), p(1., 0.), p(0., 1.), p(-1., 0.), p(0., -1.)]);
        assert!((angular_resolution_quality(&l, &star4) - 1.0).abs() < 1e-12);
        let star3 = Graph::star(3);
        let l = Layout::new(
            std::iter::once(p(0., 0.))
                .chain((0..3).map(|k| {
                    let t = TAU * k as f64 / 3.0;
                    p(t.cos(), t.sin())
                }))
                .collect(),
        );
        assert!((angular_resolution_quality(&l, &star3) - 1.0).abs() < 1e-12);
        let star2 = Graph::star(2);
        let l = Layout::new(vec![p(0., 0.), p(1., 0.), p(2., 0.)]);
        assert_eq!(angular_resolution_quality(&l, &star2), 0.0);
        assert_eq!(
            angular_resolution_quality(&l, &Graph::from_edges(3, [(0, 1)], "e").0),
            1.0
        );
    }

    #[test]
    fn gradient_matches_differences() {
        let mut rng = crate::rng::seeded(6);
        let l = Layout::random_normal(5, &mut rng);
        let sample = [
            IncidentPair { i: 1, j: 0, k: 2 },
            IncidentPair { i: 3, j: 0, k: 4 },
            IncidentPair { i: 0, j: 2, k: 4 },
        ];
        assert!(gradient_error(&l, |x| angular_resolution_loss(x, &sample, 1.0)) < 1e-6);
    }
}
