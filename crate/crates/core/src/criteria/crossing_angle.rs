use std::f64::consts::FRAC_PI_2;

use super::{LossValue, COINCIDENT};
use crate::geometry::{all_crossings, crossing_angle, CrossingList, Layout};
use crate::graph::Graph;

/// Two edges given by their endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EdgePair {
    pub a: (usize, usize),
    pub b: (usize, usize),
}

/// Sum of squared cosines between the sampled crossing edges.
pub fn crossing_angle_loss(layout: &Layout, sample: &[EdgePair]) -> LossValue {
    let mut value = 0.0;
    let mut grad = Vec::with_capacity(4 * sample.len());
    let mut skipped = 0;
    for pair in sample {
        let u = layout[pair.a.0] - layout[pair.a.1];
        let v = layout[pair.b.0] - layout[pair.b.1];
        let (nu, nv) = (u.norm(), v.norm());
        if nu < COINCIDENT || nv < COINCIDENT {
            skipped += 1;
            continue;
        }
        let c = u.dot(v) / (nu * nv);
        value += c * c;
        let gu = (v * (1.0 / (nu * nv)) - u * (c / (nu * nu))) * (2.0 * c);
        let gv = (u * (1.0 / (nu * nv)) - v * (c / (nv * nv))) * (2.0 * c);
        grad.push((pair.a.0, gu));
        grad.push((pair.a.1, -gu));
        grad.push((pair.b.0, gv));
        grad.push((pair.b.1, -gv));
    }
    LossValue::new(value, grad).with_skipped(skipped)
}

/// Worst normalized deviation of a crossing angle from a right angle; 0
/// when nothing crosses.
pub fn crossing_angle_quality(layout: &Layout, g: &Graph) -> f64 {
    crossing_angle_quality_of(layout, g, &all_crossings(layout, g))
}

/// [`crossing_angle_quality`] for an already enumerated crossing set.
pub fn crossing_angle_quality_of(layout: &Layout, g: &Graph, crossings: &CrossingList) -> f64 {
    let mut worst = 0.0f64;
    for ((i, j), (k, l)) in crossings.node_pairs(g) {
        if let Ok(theta) = crossing_angle(layout[i], layout[j], layout[k], layout[l]) {
            worst = worst.max((FRAC_PI_2 - theta).abs() / FRAC_PI_2);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::testing::gradient_error;
    use crate::geometry::Point;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn loss_values() {
        let pair = [EdgePair { a: (0, 1), b: (2, 3) }];
        let perp = Layout::new(vec![p(-1., 0.), p(1., 0.), p(0., -1.), p(0., 1.)]);
        assert!(crossing_angle_loss(&perp, &pair).value.abs() < 1e-30);
        let diag = Layout::new(vec![p(-1., 0.), p(1., 0.), p(-1., -1.), p(1., 1.)]);
        assert!((crossing_angle_loss(&diag, &pair).value - 0.5).abs() < 1e-15);
        let degenerate = Layout::new(vec![p(0., 0.), p(0., 0.), p(-1., -1.), p(1., 1.)]);
        let v = crossing_angle_loss(&degenerate, &pair);
        assert_eq!((v.value, v.skipped), (0.0, 1));
    }

    #[test]
    fn quality_values() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)], "x").0;
        let perp = Layout::new(vec![p(-1., 0.), p(1., 0.), p(0., -1.), p(0., 1.)]);
        assert!(crossing_angle_quality(&perp, &g) < 1e-15);
        let diag = Layout::new(vec![p(-1., 0.), p(1., 0.), p(-1., -1.), p(1., 1.)]);
        assert!((crossing_angle_quality(&diag, &g) - 0.5).abs() < 1e-12);
        let apart = Layout::new(vec![p(0., 0.), p(1., 0.), p(0., 1.), p(1., 1.)]);
        assert_eq!(crossing_angle_quality(&apart, &g), 0.0);
    }

    #[test]
    fn gradient_matches_differences() {
        let mut rng = crate::rng::seeded(3);
        let l = Layout::random_normal(6, &mut rng);
        let sample = [EdgePair { a: (0, 1), b: (2, 3) }, EdgePair { a: (4, 5), b: (1, 2) }];
        assert!(gradient_error(&l, |x| crossing_angle_loss(x, &sample)) < 1e-6);
    }
}
