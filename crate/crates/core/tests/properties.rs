use std::sync::Arc;

use proptest::prelude::*;

use sgdraw::criteria::{
    ideal_edge_length_loss, ideal_edge_length_quality, stress_loss, stress_quality, EdgeTarget, Kind, PairTarget,
};
use sgdraw::geometry::{all_crossings, all_crossings_brute_force};
use sgdraw::graph::{all_pairs_shortest_paths, load_edge_list};
use sgdraw::io::LayoutFile;
use sgdraw::optimizer::{initial_layout, safe_update_crossings, CriterionConfig, Engine, Method, OptimizerConfig};
use sgdraw::rng;
use sgdraw::sampler::{node_pair_sampler, SamplePool, Sampler};
use sgdraw::{Graph, Layout, Point};

fn graph_strategy() -> impl Strategy<Value = Graph> {
    (2usize..24, 0usize..30, any::<u64>()).prop_map(|(n, extra, seed)| Graph::random_connected(n, extra, seed))
}

/// Coordinates on a small lattice produce collinear, vertical and coincident
/// configurations; the float branch produces generic ones.
fn layout_for(n: usize, lattice: bool, seed: u64) -> Layout {
    let mut r = rng::seeded(seed);
    let pts = (0..n)
        .map(|_| {
            if lattice {
                Point::new(rng::index(&mut r, 4) as f64, rng::index(&mut r, 4) as f64)
            } else {
                Point::new(rng::unit(&mut r) * 3.0 - 1.5, rng::unit(&mut r) * 3.0 - 1.5)
            }
        })
        .collect();
    Layout::new(pts)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sweep_matches_brute_force(g in graph_strategy(), lattice in any::<bool>(), seed in any::<u64>()) {
        let layout = layout_for(g.n(), lattice, seed);
        prop_assert_eq!(all_crossings(&layout, &g).pairs, all_crossings_brute_force(&layout, &g).pairs);
    }

    #[test]
    fn apsp_matches_bfs(g in graph_strategy()) {
        let d = all_pairs_shortest_paths(&g).unwrap();
        for s in 0..g.n() {
            let row = g.bfs(s);
            for t in 0..g.n() {
                prop_assert_eq!(d.get(s, t), row[t]);
                prop_assert_eq!(d.get(s, t), d.get(t, s));
            }
        }
    }

    #[test]
    fn pool_yields_each_item_once_per_epoch(len in 1usize..200, m in 1usize..64, seed in any::<u64>()) {
        let mut pool = SamplePool::new((0..len).collect::<Vec<usize>>(), seed).unwrap();
        for epoch in 0..3 {
            let mut seen = vec![0usize; len];
            let mut drawn = 0;
            while drawn < len {
                let batch = pool.next_batch(m);
                prop_assert!(!batch.is_empty() && batch.len() <= m);
                drawn += batch.len();
                for i in batch {
                    seen[i] += 1;
                }
            }
            prop_assert_eq!(drawn, len, "batch crossed an epoch boundary in epoch {}", epoch);
            prop_assert!(seen.iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn incremental_safe_update_matches_full_recount(g in graph_strategy(), seed in any::<u64>(), lattice in any::<bool>()) {
        let prev = layout_for(g.n(), lattice, seed);
        let next = layout_for(g.n(), lattice, seed.wrapping_add(1));
        let out = safe_update_crossings(&prev, &next, &g);
        let before = all_crossings(&prev, &g).len() as f64;
        let after = all_crossings(&out.layout, &g).len() as f64;
        prop_assert_eq!(out.before, before);
        prop_assert_eq!(out.after, after);
        prop_assert!(after <= before);
    }

    #[test]
    fn stress_is_invariant_under_rigid_motion(g in graph_strategy(), seed in any::<u64>(), angle in 0.0f64..6.3, dx in -50.0f64..50.0, dy in -50.0f64..50.0) {
        let d = all_pairs_shortest_paths(&g).unwrap();
        let layout = layout_for(g.n(), false, seed);
        let moved = Layout::new(layout.points().iter().map(|p| p.rotated(angle) + Point::new(dx, dy)).collect());
        let pairs: Vec<PairTarget> = (0..g.n())
            .flat_map(|i| (i + 1..g.n()).map(move |j| (i, j)))
            .map(|(i, j)| PairTarget { i, j, d: f64::from(d.get(i, j)) })
            .collect();
        prop_assert!((stress_loss(&layout, &pairs).value - stress_loss(&moved, &pairs).value).abs() < 1e-9);
        prop_assert!((stress_quality(&layout, &d) - stress_quality(&moved, &d)).abs() < 1e-9);
    }

    #[test]
    fn epoch_of_stress_batches_averages_to_quality(g in graph_strategy(), m in 1usize..40, seed in any::<u64>()) {
        let d = all_pairs_shortest_paths(&g).unwrap();
        let layout = layout_for(g.n(), false, seed);
        let Sampler::Pool(mut pool) = node_pair_sampler(g.n(), seed).unwrap() else {
            panic!("small graphs use an exhaustive pool");
        };
        let mut weighted = 0.0;
        let mut total = 0usize;
        while total < pool.len() {
            let batch: Vec<PairTarget> = pool
                .next_batch(m)
                .into_iter()
                .map(|(i, j)| PairTarget { i, j, d: f64::from(d.get(i, j)) })
                .collect();
            weighted += stress_loss(&layout, &batch).value * batch.len() as f64;
            total += batch.len();
        }
        let q = stress_quality(&layout, &d);
        prop_assert!((weighted / total as f64 - q).abs() <= 1e-9 * q.max(1.0));
    }

    #[test]
    fn full_pool_losses_equal_qualities(g in graph_strategy(), seed in any::<u64>()) {
        let d = all_pairs_shortest_paths(&g).unwrap();
        let layout = layout_for(g.n(), false, seed);
        let pairs: Vec<PairTarget> = (0..g.n())
            .flat_map(|i| (i + 1..g.n()).map(move |j| (i, j)))
            .map(|(i, j)| PairTarget { i, j, d: f64::from(d.get(i, j)) })
            .collect();
        let st = stress_quality(&layout, &d);
        prop_assert!((stress_loss(&layout, &pairs).value - st).abs() <= 1e-12 * st.max(1.0));
        let edges: Vec<EdgeTarget> = g.edges().iter().map(|&(i, j)| EdgeTarget { i, j, l: 1.0 }).collect();
        let il = ideal_edge_length_quality(&layout, &g, 1.0);
        prop_assert!((ideal_edge_length_loss(&layout, &edges).value - il).abs() <= 1e-12 * il.max(1.0));
    }

    #[test]
    fn edge_list_round_trips(g in graph_strategy()) {
        let back = load_edge_list(&g.to_edge_list()).unwrap().graph;
        prop_assert_eq!(back.n(), g.n());
        prop_assert_eq!(back.edges(), g.edges());
    }

    #[test]
    fn layout_json_round_trips_bit_exactly(coords in prop::collection::vec((any::<f64>(), any::<f64>()), 0..30)) {
        let pts: Vec<Point> = coords
            .into_iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| Point::new(x, y))
            .collect();
        let layout = Layout::new(pts);
        let file = LayoutFile::new(&layout, "g", Some(3));
        let back = LayoutFile::from_json(&file.to_json().unwrap()).unwrap().layout();
        for (a, b) in layout.points().iter().zip(back.points()) {
            prop_assert_eq!(a.x.to_bits(), b.x.to_bits());
            prop_assert_eq!(a.y.to_bits(), b.y.to_bits());
        }
        prop_assert_eq!(back.len(), layout.len());
    }
}

#[test]
fn mean_sampled_stress_gradient_tracks_full_gradient() {
    let g = Graph::random_connected(25, 20, 9);
    let d = all_pairs_shortest_paths(&g).unwrap();
    let layout = initial_layout(g.n(), 9);
    let all: Vec<PairTarget> = (0..g.n())
        .flat_map(|i| (i + 1..g.n()).map(move |j| (i, j)))
        .map(|(i, j)| PairTarget {
            i,
            j,
            d: f64::from(d.get(i, j)),
        })
        .collect();
    let mut full = vec![Point::ZERO; g.n()];
    stress_loss(&layout, &all).accumulate(1.0, &mut full);

    let mut sampler = node_pair_sampler(g.n(), 4).unwrap();
    let mut mean = vec![Point::ZERO; g.n()];
    let draws = 10_000;
    for _ in 0..draws {
        let batch: Vec<PairTarget> = sampler
            .next_batch(8)
            .into_iter()
            .map(|(i, j)| PairTarget {
                i,
                j,
                d: f64::from(d.get(i, j)),
            })
            .collect();
        stress_loss(&layout, &batch).accumulate(1.0 / draws as f64, &mut mean);
    }
    let dot: f64 = full.iter().zip(&mean).map(|(a, b)| a.dot(*b)).sum();
    let norm = |v: &[Point]| v.iter().map(|p| p.norm_squared()).sum::<f64>().sqrt();
    let cosine = dot / (norm(&full) * norm(&mean));
    assert!(cosine > 0.99, "cosine {cosine}");
}

#[test]
fn crossing_loop_reduces_crossings_on_random_graphs() {
    let mut reduced = 0;
    for seed in 0..10 {
        let g = Graph::random_connected(30, 20, seed);
        let init = initial_layout(g.n(), seed);
        let start = all_crossings(&init, &g).len();
        let configs = [CriterionConfig::constant(Kind::Crossings, 1.0).unwrap()];
        let opt = OptimizerConfig {
            method: Method::RmsProp,
            max_iter: 500,
            patience: Some(500),
            seed,
            ..Default::default()
        };
        let mut engine = Engine::new(Arc::new(g.clone()), &configs, opt, init).unwrap();
        engine.run().unwrap();
        let end = all_crossings(engine.layout(), &g).len();
        if end < start {
            reduced += 1;
        }
    }
    assert!(reduced >= 8, "crossings reduced in only {reduced} of 10 runs");
}
