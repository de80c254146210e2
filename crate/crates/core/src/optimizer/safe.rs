use crate::geometry::{all_crossings, crossings_at_node, Layout};
use crate::graph::Graph;

/// Result of a guarded update.
#[derive(Clone, Debug, PartialEq)]
pub struct SafeUpdate {
    pub layout: Layout,
    /// Guarded quality before and after; lower is better.
    pub before: f64,
    pub after: f64,
    pub accepted: usize,
    pub rejected: usize,
}

/// Moves nodes one at a time from `x_prev` to `x_new`, undoing any move
/// after which `quality` (lower is better) is strictly worse than it was
/// for `x_prev`. Nodes that do not move are skipped.
pub fn safe_update<F>(x_prev: &Layout, x_new: &Layout, mut quality: F) -> SafeUpdate
where
    F: FnMut(&Layout) -> f64,
{
    assert_eq!(x_prev.len(), x_new.len(), "layouts differ in size");
    let mut x = x_prev.clone();
    let q0 = quality(&x);
    let mut current = q0;
    let (mut accepted, mut rejected) = (0, 0);
    for u in 0..x.len() {
        if x_new[u] == x_prev[u] {
            continue;
        }
        x[u] = x_new[u];
        let q = quality(&x);
        if q > q0 {
            x[u] = x_prev[u];
            rejected += 1;
        } else {
            current = q;
            accepted += 1;
        }
    }
    assert!(current <= q0, "guarded quality rose from {q0} to {current}");
    SafeUpdate {
        layout: x,
        before: q0,
        after: current,
        accepted,
        rejected,
    }
}

/// [`safe_update`] guarded by the crossing count, updated incrementally:
/// only edges at the moved node are re-tested.
pub fn safe_update_crossings(x_prev: &Layout, x_new: &Layout, g: &Graph) -> SafeUpdate {
    assert_eq!(x_prev.len(), x_new.len(), "layouts differ in size");
    let mut x = x_prev.clone();
    let q0 = all_crossings(&x, g).len();
    let mut count = q0;
    let (mut accepted, mut rejected) = (0, 0);
    for u in 0..x.len() {
        if x_new[u] == x_prev[u] {
            continue;
        }
        let old_local = crossings_at_node(&x, g, u);
        x[u] = x_new[u];
        let new_count = count - old_local + crossings_at_node(&x, g, u);
        if new_count > q0 {
            x[u] = x_prev[u];
            rejected += 1;
        } else {
            count = new_count;
            accepted += 1;
        }
    }
    debug_assert_eq!(count, all_crossings(&x, g).len());
    assert!(count <= q0, "crossing count rose from {q0} to {count}");
    SafeUpdate {
        layout: x,
        before: q0 as f64,
        after: count as f64,
        accepted,
        rejected,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    fn sum_abs(l: &Layout) -> f64 {
        l.points().iter().map(|p| p.x.abs() + p.y.abs()).sum()
    }

    #[test]
    fn improving_moves_all_accepted() {
        let prev = Layout::new(vec![Point::new(2.0, 2.0), Point::new(-3.0, 1.0)]);
        let new = Layout::new(vec![Point::new(1.0, 1.0), Point::new(-1.0, 0.0)]);
        let r = safe_update(&prev, &new, sum_abs);
        assert_eq!(r.layout, new);
        assert_eq!(r.accepted, 2);
    }

    #[test]
    fn identity_update() {
        let prev = Layout::new(vec![Point::new(2.0, 2.0), Point::new(-3.0, 1.0)]);
        let r = safe_update(&prev, &prev, sum_abs);
        assert_eq!(r.layout, prev);
        assert_eq!(r.before, r.after);
    }

    #[test]
    fn worsening_move_reverted() {
        let prev = Layout::new(vec![Point::new(1.0, 0.0), Point::new(1.0, 0.0)]);
        let new = Layout::new(vec![Point::new(5.0, 0.0), Point::new(0.0, 0.0)]);
        let r = safe_update(&prev, &new, sum_abs);
        assert_eq!(r.layout[0], prev[0]);
        assert_eq!(r.layout[1], new[1]);
        assert_eq!((r.accepted, r.rejected), (1, 1));
    }

    #[test]
    fn crossing_guard_blocks_new_crossing() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)], "two").0;
        let prev = Layout::new(vec![
            Point::new(-1.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(0.0, 2.0),
        ]);
        let mut new = prev.clone();
        new[2] = Point::new(0.0, -1.0);
        new[0] = Point::new(-2.0, 0.0);
        let r = safe_update_crossings(&prev, &new, &g);
        assert_eq!(r.after, 0.0);
        assert_eq!(r.layout[2], prev[2]);
        assert_eq!(r.layout[0], new[0]);
    }
}
