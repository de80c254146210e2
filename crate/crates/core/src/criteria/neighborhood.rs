use super::{direction, lovasz_hinge, LossValue};
use crate::error::{Error, Result};
use crate::geometry::{Layout, Point};
use crate::graph::Graph;

/// An induced subgraph: global node ids and adjacency in local indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subgraph {
    pub nodes: Vec<usize>,
    pub adjacency: Vec<Vec<usize>>,
}

impl Subgraph {
    pub fn induced(g: &Graph, nodes: Vec<usize>) -> Subgraph {
        let mut local = std::collections::HashMap::with_capacity(nodes.len());
        for (a, &v) in nodes.iter().enumerate() {
            local.insert(v, a);
        }
        let adjacency = nodes
            .iter()
            .map(|&v| {
                let mut row: Vec<usize> = g.neighbors(v).iter().filter_map(|w| local.get(w).copied()).collect();
                row.sort_unstable();
                row
            })
            .collect();
        Subgraph { nodes, adjacency }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Indices of the other points sorted by distance from `points[i]`, ties
/// broken by index.
fn nearest_order(points: &[Point], i: usize, dist: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).filter(|&j| j != i).collect();
    order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
    order
}

/// Row `i` of the signed neighborhood matrix: the midpoint between the
/// distances to the `k`-th and `(k+1)`-th nearest points minus each
/// distance, zero on the diagonal. Positive exactly for the `k` nearest.
pub fn neighborhood_khat(points: &[Point], i: usize, k: usize) -> Result<Vec<f64>> {
    if k == 0 || points.len() < k + 2 {
        return Err(Error::Invalid(format!(
            "k = {k} needs k >= 1 and at least {} points, got {}",
            k + 2,
            points.len()
        )));
    }
    let dist: Vec<f64> = points.iter().map(|p| p.distance(points[i])).collect();
    let order = nearest_order(points, i, &dist);
    let tau = 0.5 * (dist[order[k - 1]] + dist[order[k]]);
    let mut row: Vec<f64> = dist.iter().map(|d| tau - d).collect();
    row[i] = 0.0;
    // Ties at the threshold resolve to the index order.
    for (rank, &j) in order.iter().enumerate() {
        if rank < k && row[j] <= 0.0 {
            row[j] = f64::MIN_POSITIVE;
        } else if rank >= k && row[j] > 0.0 {
            row[j] = 0.0;
        }
    }
    Ok(row)
}

struct Row {
    node: usize,
    others: Vec<usize>,
    khat: Vec<f64>,
    mean_abs: f64,
    dirs: Vec<Point>,
    kth: usize,
    next: usize,
}

/// Lovász hinge between the row-normalized signed neighborhood matrix of
/// the sample and its adjacency, with `k` per node equal to its degree in
/// the sample. Rows of nodes that are isolated in the sample, or adjacent to
/// every other sampled node, carry no ranking information and are skipped.
pub fn neighborhood_loss(layout: &Layout, sub: &Subgraph) -> LossValue {
    let s = sub.len();
    let mut rows = Vec::new();
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for a in 0..s {
        let k = sub.adjacency[a].len();
        if k == 0 || k + 1 >= s {
            continue;
        }
        let xa = layout[sub.nodes[a]];
        let others: Vec<usize> = (0..s).filter(|&b| b != a).collect();
        let mut dirs = Vec::with_capacity(s - 1);
        let mut dist = vec![0.0; s];
        for &b in &others {
            let (u, d) = direction(sub.nodes[a], sub.nodes[b], xa, layout[sub.nodes[b]]);
            dirs.push(u);
            dist[b] = d;
        }
        let mut order = others.clone();
        order.sort_by(|&p, &q| dist[p].total_cmp(&dist[q]).then(p.cmp(&q)));
        let (kth, next) = (order[k - 1], order[k]);
        let tau = 0.5 * (dist[kth] + dist[next]);
        let khat: Vec<f64> = others.iter().map(|&b| tau - dist[b]).collect();
        let mean_abs = khat.iter().map(|v| v.abs()).sum::<f64>() / khat.len() as f64;
        if mean_abs <= 0.0 {
            continue;
        }
        for (idx, &b) in others.iter().enumerate() {
            scores.push(khat[idx] / mean_abs);
            labels.push(sub.adjacency[a].binary_search(&b).is_ok());
        }
        rows.push(Row {
            node: a,
            others,
            khat,
            mean_abs,
            dirs,
            kth,
            next,
        });
    }
    if scores.is_empty() {
        return LossValue::zero();
    }
    let (value, grad_f) = lovasz_hinge(&scores, &labels).expect("scores and labels agree");

    let mut grad = Vec::new();
    let mut offset = 0;
    for row in &rows {
        let width = row.others.len();
        let gf = &grad_f[offset..offset + width];
        offset += width;
        let mu = row.mean_abs;
        let dot: f64 = gf.iter().zip(&row.khat).map(|(g, k)| g * k).sum();
        let g_khat: Vec<f64> = gf
            .iter()
            .zip(&row.khat)
            .map(|(&g, &k)| g / mu - k.signum() * dot / (width as f64 * mu * mu))
            .collect();
        let g_tau: f64 = g_khat.iter().sum();
        let a = sub.nodes[row.node];
        for (idx, &b) in row.others.iter().enumerate() {
            let mut g_d = -g_khat[idx];
            if b == row.kth || b == row.next {
                g_d += 0.5 * g_tau;
            }
            if g_d != 0.0 {
                let g = row.dirs[idx] * g_d;
                grad.push((a, g));
                grad.push((sub.nodes[b], -g));
            }
        }
    }
    LossValue::new(value, grad)
}

/// Jaccard index between the k-nearest-neighbor relation (k = degree) of
/// the drawing and the adjacency relation, over all ordered node pairs.
pub fn neighborhood_quality(layout: &Layout, g: &Graph) -> f64 {
    let n = g.n();
    let pts = layout.points();
    let mut inter = 0usize;
    let mut union = 0usize;
    for i in 0..n {
        let k = g.degree(i);
        if k == 0 {
            continue;
        }
        let dist: Vec<f64> = pts.iter().map(|p| p.distance(pts[i])).collect();
        let order = nearest_order(pts, i, &dist);
        let hits = order[..k.min(order.len())]
            .iter()
            .filter(|&&j| g.has_edge(i, j))
            .count();
        inter += hits;
        union += 2 * k - hits;
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::testing::gradient_error;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn khat_on_a_line() {
        let pts = [p(0.0, 0.0), p(1.0, 0.0), p(3.0, 0.0)];
        let row = neighborhood_khat(&pts, 0, 1).unwrap();
        assert!(row[1] > 0.0 && row[2] < 0.0 && row[0] == 0.0);
        assert_eq!(row, vec![0.0, 1.0, -1.0]);
    }

    #[test]
    fn khat_ties_follow_index_order() {
        let pts = [p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0), p(-1.0, 0.0)];
        let row = neighborhood_khat(&pts, 0, 1).unwrap();
        assert!(row[1] > 0.0);
        assert!(row[2] <= 0.0 && row[3] <= 0.0);
    }

    #[test]
    fn khat_signs_match_knn() {
        let mut rng = crate::rng::seeded(8);
        for _ in 0..20 {
            let pts = Layout::random_normal(8, &mut rng).into_points();
            for i in 0..8 {
                for k in 1..=6 {
                    let row = neighborhood_khat(&pts, i, k).unwrap();
                    let mut others: Vec<usize> = (0..8).filter(|&j| j != i).collect();
                    others.sort_by(|&a, &b| pts[i].distance(pts[a]).total_cmp(&pts[i].distance(pts[b])));
                    for (rank, &j) in others.iter().enumerate() {
                        assert_eq!(row[j] > 0.0, rank < k);
                    }
                }
            }
        }
    }

    #[test]
    fn equilateral_triangle_has_zero_loss() {
        let g = Graph::complete(3);
        let l = Layout::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(0.5, 3f64.sqrt() / 2.0)]);
        let sub = Subgraph::induced(&g, vec![0, 1, 2]);
        assert_eq!(neighborhood_loss(&l, &sub).value, 0.0);
    }

    #[test]
    fn misplaced_path_has_positive_loss() {
        let g = Graph::path(4);
        // 0 and 2 are drawn next to each other while 1 is far away.
        let l = Layout::new(vec![p(0.0, 0.0), p(5.0, 0.0), p(0.5, 0.0), p(9.0, 0.0)]);
        let sub = Subgraph::induced(&g, vec![0, 1, 2, 3]);
        assert!(neighborhood_loss(&l, &sub).value > 0.0);
    }

    #[test]
    fn quality_extremes() {
        let g = Graph::path(3);
        let good = Layout::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)]);
        assert_eq!(neighborhood_quality(&good, &g), 1.0);
        let g = Graph::path(4);
        // Every node's nearest nodes are non-neighbors.
        let bad = Layout::new(vec![p(0.0, 0.0), p(10.0, 0.0), p(0.1, 0.0), p(10.1, 0.0)]);
        let g2 = Graph::from_edges(4, [(0, 1), (2, 3)], "m").0;
        assert_eq!(neighborhood_quality(&bad, &g2), 0.0);
        assert!(neighborhood_quality(&bad, &g) < 1.0);
    }

    #[test]
    fn gradient_matches_differences() {
        let g = Graph::random_connected(10, 8, 4);
        let sub = Subgraph::induced(&g, (0..10).collect());
        let mut rng = crate::rng::seeded(4);
        let l = Layout::random_normal(10, &mut rng);
        assert!(gradient_error(&l, |x| neighborhood_loss(x, &sub)) < 1e-4);
    }
}
