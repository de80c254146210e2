use super::{direction, LossValue};
use crate::geometry::Layout;
use crate::graph::Graph;

/// An edge with its target length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeTarget {
    pub i: usize,
    pub j: usize,
    pub l: f64,
}

/// Mean of `((|Xi - Xj| - l) / l)^2` over the sampled edges.
pub fn ideal_edge_length_loss(layout: &Layout, edges: &[EdgeTarget]) -> LossValue {
    if edges.is_empty() {
        return LossValue::zero();
    }
    let m = edges.len() as f64;
    let mut value = 0.0;
    let mut grad = Vec::with_capacity(2 * edges.len());
    for e in edges {
        let (u, len) = direction(e.i, e.j, layout[e.i], layout[e.j]);
        let r = (len - e.l) / e.l;
        value += r * r;
        let g = u * (2.0 * r / (e.l * m));
        grad.push((e.i, g));
        grad.push((e.j, -g));
    }
    LossValue::new(value / m, grad)
}

/// The loss over every edge with a common target length `l`.
pub fn ideal_edge_length_quality(layout: &Layout, g: &Graph, l: f64) -> f64 {
    let edges = g.edges();
    if edges.is_empty() {
        return 0.0;
    }
    let total: f64 = edges
        .iter()
        .map(|&(i, j)| {
            let r = (layout[i].distance(layout[j]) - l) / l;
            r * r
        })
        .sum();
    total / edges.len() as f64
}
