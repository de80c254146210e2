//! Planar geometry used by the criteria and quality measures.

mod exact;
mod layout;
mod point;
mod predicates;
mod sweep;

pub use exact::orient;
pub use layout::Layout;
pub use point::Point;
pub(crate) use predicates::sym2_eigenvalues;
pub use predicates::{
    convex_hull, crossing_angle, incident_angle, rotated_bbox, segments_properly_cross, singular_values_2col,
};
pub use sweep::{brute_force_crossings, sweep_crossings};

use crate::graph::Graph;

/// Pairs of edges (indices into [`Graph::edges`]) that cross in a drawing.
/// Each pair is stored once with the smaller index first, sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CrossingList {
    pub pairs: Vec<(usize, usize)>,
}

impl CrossingList {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The crossing pairs as node pairs `((i, j), (k, l))`.
    pub fn node_pairs(&self, g: &Graph) -> Vec<((usize, usize), (usize, usize))> {
        let e = g.edges();
        self.pairs.iter().map(|&(a, b)| (e[a], e[b])).collect()
    }
}

fn edge_segments(layout: &Layout, g: &Graph) -> Vec<(Point, Point)> {
    g.edges().iter().map(|&(u, v)| (layout[u], layout[v])).collect()
}

fn edges_adjacent(g: &Graph) -> impl Fn(usize, usize) -> bool + '_ {
    move |a, b| {
        let (i, j) = g.edges()[a];
        let (k, l) = g.edges()[b];
        i == k || i == l || j == k || j == l
    }
}

/// Every properly crossing pair of non-adjacent edges, by plane sweep.
pub fn all_crossings(layout: &Layout, g: &Graph) -> CrossingList {
    let pairs = sweep_crossings(&edge_segments(layout, g), edges_adjacent(g));
    CrossingList { pairs }
}

/// Quadratic reference for [`all_crossings`].
pub fn all_crossings_brute_force(layout: &Layout, g: &Graph) -> CrossingList {
    let pairs = brute_force_crossings(&edge_segments(layout, g), edges_adjacent(g));
    CrossingList { pairs }
}

/// Number of crossings between edges incident to `node` and all other edges
/// not adjacent to them.
pub fn crossings_at_node(layout: &Layout, g: &Graph, node: usize) -> usize {
    let p = layout[node];
    let mut count = 0;
    for &w in g.neighbors(node) {
        let q = layout[w];
        for &(k, l) in g.edges() {
            if k == node || l == node || k == w || l == w {
                continue;
            }
            if segments_properly_cross(p, q, layout[k], layout[l]) {
                count += 1;
            }
        }
    }
    // Pairs of edges both incident to `node` share an endpoint and never
    // count, so every crossing above is seen exactly once.
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k5_convex_has_five_crossings() {
        let g = Graph::complete(5);
        let pts = (0..5)
            .map(|k| {
                let a = f64::from(k) * std::f64::consts::TAU / 5.0;
                Point::new(a.cos(), a.sin())
            })
            .collect::<Vec<_>>();
        let layout = Layout::new(pts);
        assert_eq!(all_crossings(&layout, &g).len(), 5);
        assert_eq!(all_crossings_brute_force(&layout, &g).len(), 5);
    }

    #[test]
    fn planar_grid_has_none() {
        let g = Graph::grid(3, 3);
        let layout = Layout::new((0..9).map(|i| Point::new((i % 3) as f64, (i / 3) as f64)).collect());
        assert!(all_crossings(&layout, &g).is_empty());
    }

    #[test]
    fn node_local_count_sums_to_twice_total() {
        let g = Graph::complete(6);
        let mut rng = crate::rng::seeded(3);
        let layout = Layout::random_normal(6, &mut rng);
        let total = all_crossings(&layout, &g).len();
        let local: usize = (0..6).map(|v| crossings_at_node(&layout, &g, v)).sum();
        // each crossing involves two edges with four distinct endpoints
        assert_eq!(local, 4 * total);
    }
}
