//! Mini-batch sources.
//!
//! A [`SamplePool`] shuffles its items once per epoch and hands them out in
//! consecutive batches; the last batch of an epoch may be short, and a batch
//! never spans two epochs. Item spaces too large to materialize are sampled
//! uniformly with replacement instead ([`Sampler::Random`]).

use crate::criteria::{EdgePair, Subgraph};
use crate::error::{Error, Result};
use crate::geometry::{CrossingList, Layout};
use crate::graph::Graph;
use crate::rng::{index, seeded, shuffle, SeededRng};

#[derive(Clone, Debug)]
pub struct SamplePool<T> {
    items: Vec<T>,
    cursor: usize,
    epoch: u64,
    rng: SeededRng,
}

impl<T: Clone> SamplePool<T> {
    pub fn new(items: Vec<T>, seed: u64) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Empty("sample pool".into()));
        }
        let mut pool = SamplePool {
            items,
            cursor: 0,
            epoch: 0,
            rng: seeded(seed),
        };
        shuffle(&mut pool.rng, &mut pool.items);
        Ok(pool)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Completed epochs.
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// True when the current epoch has been handed out completely.
    pub fn exhausted(&self) -> bool {
        self.cursor >= self.items.len()
    }

    /// Up to `m` items, reshuffling first if the epoch is used up.
    pub fn next_batch(&mut self, m: usize) -> Vec<T> {
        if self.exhausted() {
            self.epoch += 1;
            self.cursor = 0;
            shuffle(&mut self.rng, &mut self.items);
        }
        let end = (self.cursor + m.max(1)).min(self.items.len());
        let batch = self.items[self.cursor..end].to_vec();
        self.cursor = end;
        batch
    }
}

/// Item spaces larger than this are sampled with replacement.
pub const POOL_LIMIT: usize = 1 << 22;

/// Either an epoch pool or uniform draws with replacement.
pub enum Sampler<T> {
    Pool(SamplePool<T>),
    Random {
        rng: SeededRng,
        draw: Box<dyn FnMut(&mut SeededRng) -> T + Send>,
    },
}

impl<T: Clone> Sampler<T> {
    pub fn next_batch(&mut self, m: usize) -> Vec<T> {
        match self {
            Sampler::Pool(p) => p.next_batch(m),
            Sampler::Random { rng, draw } => (0..m).map(|_| draw(rng)).collect(),
        }
    }
}

impl<T> std::fmt::Debug for Sampler<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sampler::Pool(p) => write!(f, "Sampler::Pool({} items)", p.items.len()),
            Sampler::Random { .. } => f.write_str("Sampler::Random"),
        }
    }
}

/// All unordered node pairs, or random distinct pairs for large graphs.
pub fn node_pair_sampler(n: usize, seed: u64) -> Result<Sampler<(usize, usize)>> {
    if n < 2 {
        return Err(Error::Empty("node pairs need at least two nodes".into()));
    }
    let count = n * (n - 1) / 2;
    if count <= POOL_LIMIT {
        let items = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        return Ok(Sampler::Pool(SamplePool::new(items, seed)?));
    }
    Ok(Sampler::Random {
        rng: seeded(seed),
        draw: Box::new(move |rng| {
            let i = index(rng, n);
            let mut j = index(rng, n - 1);
            if j >= i {
                j += 1;
            }
            (i.min(j), i.max(j))
        }),
    })
}

/// Every `(edge index, node)` with the node off the edge.
pub fn edge_node_sampler(g: &Graph, seed: u64) -> Result<Sampler<(usize, usize)>> {
    let n = g.n();
    let edges = g.edges().to_vec();
    if edges.is_empty() || n < 3 {
        return Err(Error::Empty("edge-node pairs need an edge and a third node".into()));
    }
    if edges.len() * (n - 2) <= POOL_LIMIT {
        let items = edges
            .iter()
            .enumerate()
            .flat_map(|(e, &(i, j))| (0..n).filter(move |&k| k != i && k != j).map(move |k| (e, k)))
            .collect();
        return Ok(Sampler::Pool(SamplePool::new(items, seed)?));
    }
    Ok(Sampler::Random {
        rng: seeded(seed),
        draw: Box::new(move |rng| loop {
            let e = index(rng, edges.len());
            let k = index(rng, n);
            if k != edges[e].0 && k != edges[e].1 {
                return (e, k);
            }
        }),
    })
}

/// Pairs of edges sharing a node, as `(i, j, k)` with center `j` and `i < k`.
pub fn incident_pairs(g: &Graph) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for j in 0..g.n() {
        let nb = g.neighbors(j);
        for (a, &i) in nb.iter().enumerate() {
            for &k in &nb[a + 1..] {
                out.push((i, j, k));
            }
        }
    }
    out
}

/// Node ids in `0..n` shuffled per epoch.
pub fn node_sampler(n: usize, seed: u64) -> Result<Sampler<usize>> {
    Ok(Sampler::Pool(SamplePool::new((0..n).collect(), seed)?))
}

/// Seeds, their neighbors up to two hops, then `ceil(extra_fraction * size)`
/// further nodes chosen uniformly from the rest; the induced subgraph on the
/// union, nodes ascending.
pub fn np_subgraph_sample(g: &Graph, seeds: &[usize], extra_fraction: f64, rng: &mut SeededRng) -> Subgraph {
    let n = g.n();
    let mut inside = vec![false; n];
    let mut nodes = Vec::new();
    let push = |v: usize, inside: &mut Vec<bool>, nodes: &mut Vec<usize>| {
        if !inside[v] {
            inside[v] = true;
            nodes.push(v);
        }
    };
    for &s in seeds {
        push(s, &mut inside, &mut nodes);
        for &w in g.neighbors(s) {
            push(w, &mut inside, &mut nodes);
            for &x in g.neighbors(w) {
                push(x, &mut inside, &mut nodes);
            }
        }
    }
    let extra = ((extra_fraction * nodes.len() as f64).ceil() as usize).min(n - nodes.len());
    let mut outside: Vec<usize> = (0..n).filter(|&v| !inside[v]).collect();
    for k in 0..extra {
        let pick = k + index(rng, outside.len() - k);
        outside.swap(k, pick);
        nodes.push(outside[k]);
    }
    nodes.sort_unstable();
    Subgraph::induced(g, nodes)
}

/// Outcome of a crossing batch request.
#[derive(Clone, Debug, PartialEq)]
pub enum CrossingBatch {
    Pairs(Vec<EdgePair>),
    /// The layout has no crossings left to sample.
    NoCrossings,
}

/// Crossing-pair source with drain-triggered refill.
///
/// Normally batches come from a pool of the crossings found by the plane
/// sweep, refilled on the then-current layout once drained (or every
/// `refresh_period` batches). When the last refill found more than
/// `dense_factor * |E|` crossings the source instead draws random edge
/// pairs: all of them for `exact == false`, only those that actually cross
/// (rejection sampling) for `exact == true`.
#[derive(Debug)]
pub struct CrossingSource {
    pool: Option<SamplePool<EdgePair>>,
    rng: SeededRng,
    seed: u64,
    refills: u64,
    refresh_period: Option<usize>,
    since_refill: usize,
    dense_factor: f64,
    dense_budget: Option<usize>,
    last_count: usize,
    exact: bool,
}

impl CrossingSource {
    pub fn new(seed: u64, refresh_period: Option<usize>, dense_factor: f64, exact: bool) -> Self {
        CrossingSource {
            pool: None,
            rng: seeded(seed),
            seed,
            refills: 0,
            refresh_period,
            since_refill: 0,
            dense_factor,
            dense_budget: None,
            last_count: 0,
            exact,
        }
    }

    /// Crossings found by the most recent refill.
    pub fn last_count(&self) -> usize {
        self.last_count
    }

    pub fn is_dense(&self) -> bool {
        self.dense_budget.is_some()
    }

    fn needs_refill(&self) -> bool {
        if let Some(period) = self.refresh_period {
            if self.since_refill >= period {
                return true;
            }
        }
        match (&self.pool, self.dense_budget) {
            (_, Some(budget)) => budget == 0,
            (Some(p), None) => p.exhausted(),
            (None, None) => true,
        }
    }

    fn refill(&mut self, g: &Graph, crossings: CrossingList) {
        self.refills += 1;
        self.since_refill = 0;
        self.last_count = crossings.len();
        let pairs: Vec<EdgePair> = crossings
            .node_pairs(g)
            .into_iter()
            .map(|(a, b)| EdgePair { a, b })
            .collect();
        if (pairs.len() as f64) > self.dense_factor * g.edges().len() as f64 {
            self.pool = None;
            self.dense_budget = Some(pairs.len());
        } else {
            self.dense_budget = None;
            let seed = crate::rng::derive_seed(self.seed, self.refills);
            self.pool = SamplePool::new(pairs, seed).ok();
        }
    }

    /// Up to `m` crossing pairs. `enumerate` is called for refills and must
    /// return the crossings of `layout`.
    pub fn next_batch<F>(&mut self, g: &Graph, layout: &Layout, m: usize, enumerate: F) -> CrossingBatch
    where
        F: FnOnce() -> CrossingList,
    {
        if self.needs_refill() {
            self.refill(g, enumerate());
        }
        self.since_refill += 1;
        if let Some(budget) = self.dense_budget.as_mut() {
            let pairs = if self.exact {
                random_crossing_pairs(g, layout, m, &mut self.rng)
            } else {
                random_edge_pairs(g, m, &mut self.rng)
            };
            *budget = budget.saturating_sub(m);
            return if pairs.is_empty() {
                CrossingBatch::NoCrossings
            } else {
                CrossingBatch::Pairs(pairs)
            };
        }
        match self.pool.as_mut() {
            Some(pool) => CrossingBatch::Pairs(pool.next_batch(m)),
            None => CrossingBatch::NoCrossings,
        }
    }
}

/// Uniform random pairs of edges that share no node.
pub fn random_edge_pairs(g: &Graph, m: usize, rng: &mut SeededRng) -> Vec<EdgePair> {
    let edges = g.edges();
    let mut out = Vec::with_capacity(m);
    if edges.len() < 2 {
        return out;
    }
    let mut attempts = 0;
    while out.len() < m && attempts < 50 * m {
        attempts += 1;
        let a = edges[index(rng, edges.len())];
        let b = edges[index(rng, edges.len())];
        if a.0 == b.0 || a.0 == b.1 || a.1 == b.0 || a.1 == b.1 {
            continue;
        }
        out.push(EdgePair { a, b });
    }
    out
}

/// Random non-adjacent edge pairs kept only if they cross.
pub fn random_crossing_pairs(g: &Graph, layout: &Layout, m: usize, rng: &mut SeededRng) -> Vec<EdgePair> {
    let mut out = Vec::with_capacity(m);
    let mut attempts = 0;
    while out.len() < m && attempts < 50 * m {
        attempts += 1;
        for pair in random_edge_pairs(g, 1, rng) {
            let (a1, a2) = (layout[pair.a.0], layout[pair.a.1]);
            let (b1, b2) = (layout[pair.b.0], layout[pair.b.1]);
            if crate::geometry::segments_properly_cross(a1, a2, b1, b2) {
                out.push(pair);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{all_crossings, Point};

    #[test]
    fn epoch_batch_sizes() {
        let mut pool = SamplePool::new((0..5).collect::<Vec<_>>(), 1).unwrap();
        let sizes: Vec<usize> = (0..3).map(|_| pool.next_batch(2).len()).collect();
        assert_eq!(sizes, vec![2, 2, 1]);
        let mut pool = SamplePool::new((0..100).collect::<Vec<_>>(), 1).unwrap();
        let sizes: Vec<usize> = (0..5).map(|_| pool.next_batch(32).len()).collect();
        assert_eq!(sizes, vec![32, 32, 32, 4, 32]);
        assert_eq!(pool.epoch(), 1);
        assert!(SamplePool::<u8>::new(vec![], 0).is_err());
    }

    #[test]
    fn full_pool_when_batch_is_large() {
        let mut pool = SamplePool::new((0..7).collect::<Vec<_>>(), 3).unwrap();
        for _ in 0..3 {
            let mut b = pool.next_batch(10);
            b.sort_unstable();
            assert_eq!(b, (0..7).collect::<Vec<_>>());
        }
    }

    #[test]
    fn epochs_cover_every_item() {
        let mut pool = SamplePool::new((0..100).collect::<Vec<_>>(), 4).unwrap();
        let mut seen = vec![0; 100];
        for _ in 0..10 * 4 {
            for v in pool.next_batch(25) {
                seen[v] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 10));
    }

    #[test]
    fn same_seed_same_sequence() {
        let mut a = SamplePool::new((0..50).collect::<Vec<_>>(), 9).unwrap();
        let mut b = SamplePool::new((0..50).collect::<Vec<_>>(), 9).unwrap();
        for _ in 0..20 {
            assert_eq!(a.next_batch(7), b.next_batch(7));
        }
    }

    #[test]
    fn np_sample_of_corner_is_two_hop_block() {
        let g = Graph::grid(5, 5);
        let mut rng = seeded(0);
        let sub = np_subgraph_sample(&g, &[0], 0.0, &mut rng);
        assert_eq!(sub.nodes, vec![0, 1, 2, 5, 6, 10]);
        let star = Graph::star(6);
        let sub = np_subgraph_sample(&star, &[0], 0.0, &mut rng);
        assert_eq!(sub.len(), 7);
        let all: Vec<usize> = (0..25).collect();
        assert_eq!(np_subgraph_sample(&g, &all, 0.1, &mut rng).nodes, all);
        let sub = np_subgraph_sample(&g, &[0], 0.5, &mut rng);
        assert_eq!(sub.len(), 9);
    }

    fn convex_k5() -> (Graph, Layout) {
        let pts = (0..5)
            .map(|k| {
                let a = f64::from(k) * std::f64::consts::TAU / 5.0;
                Point::new(a.cos(), a.sin())
            })
            .collect();
        (Graph::complete(5), Layout::new(pts))
    }

    #[test]
    fn crossing_pool_epochs_and_planar_signal() {
        let (g, l) = convex_k5();
        let mut src = CrossingSource::new(1, None, 5.0, true);
        let batch = src.next_batch(&g, &l, 10, || all_crossings(&l, &g));
        match batch {
            CrossingBatch::Pairs(p) => assert_eq!(p.len(), 5),
            other => panic!("{other:?}"),
        }
        let grid = Graph::grid(2, 2);
        let square = Layout::new(vec![
            Point::new(0., 0.),
            Point::new(1., 0.),
            Point::new(0., 1.),
            Point::new(1., 1.),
        ]);
        let mut src = CrossingSource::new(1, None, 5.0, true);
        let b = src.next_batch(&grid, &square, 4, || all_crossings(&square, &grid));
        assert_eq!(b, CrossingBatch::NoCrossings);
    }

    #[test]
    fn refill_sees_the_current_layout() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)], "x").0;
        let mut l = Layout::new(vec![
            Point::new(-1., 0.),
            Point::new(1., 0.),
            Point::new(0., -1.),
            Point::new(0., 1.),
        ]);
        let mut src = CrossingSource::new(2, None, 5.0, true);
        assert!(matches!(
            src.next_batch(&g, &l, 1, || all_crossings(&l, &g)),
            CrossingBatch::Pairs(_)
        ));
        l[3] = Point::new(0.0, -0.5);
        let l2 = l.clone();
        assert_eq!(
            src.next_batch(&g, &l, 1, || all_crossings(&l2, &g)),
            CrossingBatch::NoCrossings
        );
    }

    #[test]
    fn dense_layouts_switch_to_random_pairs() {
        let g = Graph::complete(12);
        let mut rng = seeded(3);
        let l = Layout::random_normal(12, &mut rng);
        let count = all_crossings(&l, &g).len();
        let mut src = CrossingSource::new(4, None, 0.5, true);
        let b = src.next_batch(&g, &l, 16, || all_crossings(&l, &g));
        assert!(count as f64 > 0.5 * 66.0);
        assert!(src.is_dense());
        if let CrossingBatch::Pairs(p) = b {
            for pair in p {
                assert!(crate::geometry::segments_properly_cross(
                    l[pair.a.0],
                    l[pair.a.1],
                    l[pair.b.0],
                    l[pair.b.1]
                ));
            }
        } else {
            panic!("expected pairs");
        }
    }
}
