//! Undirected simple graphs, generators, loaders and hop distances.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};

/// An immutable undirected simple graph on nodes `0..n`.
///
/// Edges are stored as `(u, v)` with `u < v`, sorted; adjacency lists are
/// sorted as well.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    name: String,
}

/// What [`Graph::from_edges`] had to discard.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Dropped {
    pub self_loops: usize,
    pub duplicates: usize,
}

impl Graph {
    /// Build from an edge list, discarding self-loops and repeated edges.
    ///
    /// # Panics
    ///
    /// Panics if an endpoint is `>= n`.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        name: impl Into<String>,
    ) -> (Graph, Dropped) {
        let mut dropped = Dropped::default();
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            assert!(u < n && v < n, "edge ({u}, {v}) out of range for {n} nodes");
            if u == v {
                dropped.self_loops += 1;
                continue;
            }
            if !set.insert((u.min(v), u.max(v))) {
                dropped.duplicates += 1;
            }
        }
        let edges: Vec<(usize, usize)> = set.into_iter().collect();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for a in &mut adjacency {
            a.sort_unstable();
        }
        let g = Graph {
            n,
            edges,
            adjacency,
            name: name.into(),
        };
        (g, dropped)
    }

    fn build(n: usize, edges: Vec<(usize, usize)>, name: String) -> Graph {
        Graph::from_edges(n, edges, name).0
    }

    /// `rows × cols` grid, node `r * cols + c`.
    pub fn grid(rows: usize, cols: usize) -> Graph {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols));
                }
            }
        }
        Graph::build(rows * cols, edges, format!("grid-{rows}-{cols}"))
    }

    /// Complete `branching`-ary tree of the given depth, nodes in BFS order.
    pub fn balanced_tree(branching: usize, depth: usize) -> Graph {
        let mut n = 1usize;
        let mut level = 1usize;
        for _ in 0..depth {
            level *= branching;
            n += level;
        }
        let edges = (1..n).map(|v| ((v - 1) / branching, v)).collect();
        Graph::build(n, edges, format!("tree-{branching}-{depth}"))
    }

    /// The 1-skeleton of the regular dodecahedron.
    pub fn dodecahedron() -> Graph {
        const LCF: [isize; 10] = [10, 7, 4, -4, -7, 10, -4, 7, -7, 4];
        let n = 20usize;
        let mut edges: Vec<(usize, usize)> = (0..n).map(|v| (v, (v + 1) % n)).collect();
        for v in 0..n {
            let w = (v as isize + LCF[v % 10]).rem_euclid(n as isize) as usize;
            edges.push((v, w));
        }
        Graph::build(n, edges, "dodecahedron".to_string())
    }

    pub fn complete(n: usize) -> Graph {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        Graph::build(n, edges, format!("complete-{n}"))
    }

    pub fn path(n: usize) -> Graph {
        let edges = (1..n).map(|v| (v - 1, v)).collect();
        Graph::build(n, edges, format!("path-{n}"))
    }

    pub fn cycle(n: usize) -> Graph {
        let edges = (0..n).map(|v| (v, (v + 1) % n)).collect();
        Graph::build(n, edges, format!("cycle-{n}"))
    }

    /// Star with center 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> Graph {
        let edges = (1..=leaves).map(|v| (0, v)).collect();
        Graph::build(leaves + 1, edges, format!("star-{leaves}"))
    }

    /// Erdős–Rényi style graph made connected by a random spanning tree.
    pub fn random_connected(n: usize, extra_edges: usize, seed: u64) -> Graph {
        let mut rng = crate::rng::seeded(seed);
        let mut edges = Vec::new();
        for v in 1..n {
            edges.push((crate::rng::index(&mut rng, v), v));
        }
        if n >= 2 {
            for _ in 0..extra_edges {
                let u = crate::rng::index(&mut rng, n);
                let v = crate::rng::index(&mut rng, n);
                edges.push((u, v));
            }
        }
        Graph::build(n, edges, format!("random-{n}-{seed}"))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Graph {
        self.name = name.into();
        self
    }

    /// Hop distances from `source`; unreachable nodes get `u32::MAX`.
    pub fn bfs(&self, source: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.n];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &w in &self.adjacency[u] {
                if dist[w] == u32::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for &w in &self.adjacency[u] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || self.component_count() == 1
    }

    /// Node count and each edge as `u v`, one per line.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("# {} nodes={}\n", self.name, self.n);
        for &(u, v) in &self.edges {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }
}

/// Parsed edge list together with the discarded items.
#[derive(Debug)]
pub struct Loaded {
    pub graph: Graph,
    pub dropped: Dropped,
}

/// Parse whitespace separated integer pairs; `#` starts a comment. Labels
/// are compacted to `0..n` in ascending label order.
pub fn load_edge_list(text: &str) -> Result<Loaded> {
    let mut raw = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::Parse { line: idx + 1, msg };
        let mut it = content.split_whitespace();
        let mut label = || -> Result<i64> {
            let tok = it.next().ok_or_else(|| parse_err("expected two node labels".into()))?;
            tok.parse::<i64>()
                .map_err(|_| parse_err(format!("invalid node label {tok:?}")))
        };
        let u = label()?;
        let v = label()?;
        if it.next().is_some() {
            return Err(parse_err("expected exactly two node labels".into()));
        }
        raw.push((u, v));
    }
    let labels: BTreeSet<i64> = raw.iter().flat_map(|&(u, v)| [u, v]).collect();
    let index: HashMap<i64, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let (graph, dropped) = Graph::from_edges(labels.len(), raw.iter().map(|(u, v)| (index[u], index[v])), "edge-list");
    if dropped.self_loops + dropped.duplicates > 0 {
        log::warn!(
            "dropped {} self-loops and {} duplicate edges",
            dropped.self_loops,
            dropped.duplicates
        );
    }
    Ok(Loaded { graph, dropped })
}

/// Parse the coordinate flavor of the Matrix Market exchange format.
/// Off-diagonal entries become undirected edges.
pub fn load_matrix_market(text: &str) -> Result<Graph> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::UnsupportedFormat("<empty file>".into()))?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    let supported = fields.len() == 5
        && fields[0] == "%%matrixmarket"
        && fields[1] == "matrix"
        && fields[2] == "coordinate"
        && matches!(fields[3].as_str(), "pattern" | "real" | "integer")
        && matches!(fields[4].as_str(), "general" | "symmetric");
    if !supported {
        return Err(Error::UnsupportedFormat(header.trim().to_string()));
    }
    let mut size: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let parse_err = |msg: String| Error::Parse { line: idx + 1, msg };
        let toks: Vec<&str> = line.split_whitespace().collect();
        let num = |k: usize| -> Result<usize> {
            toks.get(k)
                .ok_or_else(|| parse_err("missing field".into()))?
                .parse::<usize>()
                .map_err(|_| parse_err(format!("invalid integer {:?}", toks[k])))
        };
        match size {
            None => {
                let (r, c) = (num(0)?, num(1)?);
                if r != c {
                    return Err(parse_err(format!("matrix is {r}x{c}, not square")));
                }
                size = Some((r, c));
            }
            Some((n, _)) => {
                let (i, j) = (num(0)?, num(1)?);
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(parse_err(format!("entry ({i}, {j}) outside {n}x{n}")));
                }
                if i != j {
                    edges.push((i - 1, j - 1));
                }
            }
        }
    }
    let (n, _) = size.ok_or_else(|| Error::Parse {
        line: 1,
        msg: "missing size line".into(),
    })?;
    Ok(Graph::from_edges(n, edges, "matrix-market").0)
}

/// Exact hop distances between all node pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<u32>,
}

impl DistanceMatrix {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.d[i * self.n + j]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.d[i * self.n..(i + 1) * self.n]
    }

    pub fn max(&self) -> u32 {
        self.d.iter().copied().max().unwrap_or(0)
    }
}

fn require_connected(g: &Graph) -> Result<()> {
    if g.is_connected() {
        Ok(())
    } else {
        Err(Error::Disconnected {
            components: g.component_count(),
        })
    }
}

/// Breadth-first search from every node.
pub fn all_pairs_shortest_paths(g: &Graph) -> Result<DistanceMatrix> {
    require_connected(g)?;
    let n = g.n();
    let mut d = Vec::with_capacity(n * n);
    for s in 0..n {
        d.extend(g.bfs(s));
    }
    Ok(DistanceMatrix { n, d })
}

/// Node count up to which [`Distances`] precomputes the full matrix.
pub const EAGER_APSP_LIMIT: usize = 4096;
const LAZY_CACHE_ROWS: usize = 1024;

/// Hop distances, precomputed for small graphs and computed per source on
/// demand (with a bounded row cache) for large ones.
#[derive(Debug)]
pub enum Distances {
    Eager(DistanceMatrix),
    Lazy {
        graph: Arc<Graph>,
        cache: Mutex<HashMap<usize, Arc<Vec<u32>>>>,
    },
}

impl Distances {
    pub fn new(g: &Arc<Graph>) -> Result<Distances> {
        if g.n() <= EAGER_APSP_LIMIT {
            Ok(Distances::Eager(all_pairs_shortest_paths(g)?))
        } else {
            require_connected(g)?;
            Ok(Distances::Lazy {
                graph: Arc::clone(g),
                cache: Mutex::new(HashMap::new()),
            })
        }
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        match self {
            Distances::Eager(m) => m.get(i, j),
            Distances::Lazy { graph, cache } => {
                let mut cache = cache.lock().expect("distance cache poisoned");
                if let Some(row) = cache.get(&i) {
                    return row[j];
                }
                if let Some(row) = cache.get(&j) {
                    return row[i];
                }
                if cache.len() >= LAZY_CACHE_ROWS {
                    cache.clear();
                }
                let row = Arc::new(graph.bfs(i));
                let v = row[j];
                cache.insert(i, row);
                v
            }
        }
    }
}
