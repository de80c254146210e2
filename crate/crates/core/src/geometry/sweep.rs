//! Bentley–Ottmann sweep reporting every crossing pair of a segment set.
//!
//! The sweep line moves left to right; event points are ordered by `(x, y)`
//! so vertical segments are handled as segments that start at their lower
//! endpoint. All geometric decisions (event order, position of a segment
//! relative to an event point, slope order) are exact: endpoints are the
//! input floats and intersection points are kept as rationals. The status
//! structure is a sorted vector; at every event the block of segments through
//! the event point is located by binary search, reported pairwise, and
//! reinserted in slope order.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use super::exact::{rational, sign, Coord, Interval};
use super::predicates::{interiors_cross, segments_properly_cross};
use super::Point;

/// Sweep event location. `source` names the segment pair an intersection
/// event was computed from; the point lies on both by construction, which
/// spares the exact fallback for the most common degenerate comparison.
#[derive(Clone, Debug)]
struct EventPoint {
    x: Coord,
    y: Coord,
    source: Option<(usize, usize)>,
}

impl EventPoint {
    fn float(p: Point) -> Self {
        EventPoint {
            x: Coord::Float(p.x),
            y: Coord::Float(p.y),
            source: None,
        }
    }

    fn on_source(&self, seg: usize) -> bool {
        self.source.is_some_and(|(a, b)| a == seg || b == seg)
    }
}

impl PartialEq for EventPoint {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for EventPoint {}

impl PartialOrd for EventPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EventPoint {
    fn cmp(&self, other: &Self) -> Ordering {
        self.x.cmp(&other.x).then_with(|| self.y.cmp(&other.y))
    }
}

#[derive(Clone, Copy, Debug)]
struct Seg {
    start: Point,
    end: Point,
}

impl Seg {
    fn new(a: Point, b: Point) -> Self {
        let a_first = a.x < b.x || (a.x == b.x && a.y <= b.y);
        if a_first {
            Seg { start: a, end: b }
        } else {
            Seg { start: b, end: a }
        }
    }

    fn is_point(&self) -> bool {
        self.start == self.end
    }

    fn is_vertical(&self) -> bool {
        self.start.x == self.end.x
    }
}

/// Ordering of the height of segment `id` at `p.x` relative to `p.y`.
fn cmp_height(segs: &[Seg], id: usize, p: &EventPoint) -> Ordering {
    let seg = &segs[id];
    if seg.is_vertical() || p.on_source(id) {
        // A vertical segment is only in the status while the sweep point runs
        // along it.
        return Ordering::Equal;
    }
    if let Coord::Float(px) = p.x {
        if px == seg.start.x {
            return Coord::Float(seg.start.y).cmp(&p.y);
        }
        if px == seg.end.x {
            return Coord::Float(seg.end.y).cmp(&p.y);
        }
    }
    let sx = Interval::exact(seg.start.x);
    let sy = Interval::exact(seg.start.y);
    let dx = Interval::exact(seg.end.x).sub(sx);
    let dy = Interval::exact(seg.end.y).sub(sy);
    let h = sy.add(p.x.interval().sub(sx).mul(dy).div(dx));
    if let Some(o) = h.compare(p.y.interval()) {
        return o;
    }
    let (sx, sy) = (rational(seg.start.x), rational(seg.start.y));
    let (ex, ey) = (rational(seg.end.x), rational(seg.end.y));
    let h = &sy + (p.x.to_rational() - &sx) * (&ey - &sy) / (&ex - &sx);
    h.cmp(&p.y.to_rational())
}

/// Slope order of two segments passing through the same point; vertical
/// segments come last.
fn cmp_slope(a: &Seg, b: &Seg) -> Ordering {
    match (a.is_vertical(), b.is_vertical()) {
        (true, true) => return Ordering::Equal,
        (true, false) => return Ordering::Greater,
        (false, true) => return Ordering::Less,
        _ => {}
    }
    // dx > 0 for both, so compare dyA * dxB against dyB * dxA.
    let d = |s: &Seg| {
        (
            Interval::exact(s.end.x).sub(Interval::exact(s.start.x)),
            Interval::exact(s.end.y).sub(Interval::exact(s.start.y)),
        )
    };
    let (dxa, dya) = d(a);
    let (dxb, dyb) = d(b);
    if let Some(o) = dya.mul(dxb).sub(dyb.mul(dxa)).sign() {
        return o;
    }
    let r = |s: &Seg| {
        (
            rational(s.end.x) - rational(s.start.x),
            rational(s.end.y) - rational(s.start.y),
        )
    };
    let (dxa, dya) = r(a);
    let (dxb, dyb) = r(b);
    sign(&(dya * dxb - dyb * dxa))
}

/// Intersection point of segments `a` and `b`, whose interiors cross.
fn intersection(segs: &[Seg], a: usize, b: usize) -> EventPoint {
    let (sa, sb) = (&segs[a], &segs[b]);
    EventPoint {
        x: Coord::intersection(sa.start, sa.end, sb.start, sb.end, 0),
        y: Coord::intersection(sa.start, sa.end, sb.start, sb.end, 1),
        source: Some((a.min(b), a.max(b))),
    }
}

/// Every unordered pair `(i, j)`, `i < j`, of segments that cross according
/// to [`segments_properly_cross`], skipping pairs for which `skip(i, j)`
/// holds. Output is sorted.
pub fn sweep_crossings<F>(segments: &[(Point, Point)], skip: F) -> Vec<(usize, usize)>
where
    F: Fn(usize, usize) -> bool,
{
    let segs: Vec<Seg> = segments.iter().map(|&(a, b)| Seg::new(a, b)).collect();
    let mut queue: BTreeMap<EventPoint, Vec<usize>> = BTreeMap::new();
    for (id, s) in segs.iter().enumerate() {
        queue.entry(EventPoint::float(s.start)).or_default().push(id);
        queue.entry(EventPoint::float(s.end)).or_default();
    }

    let mut status: Vec<usize> = Vec::new();
    let mut found: HashSet<(usize, usize)> = HashSet::new();
    let mut scheduled: HashSet<(usize, usize)> = HashSet::new();

    while let Some((p, starts)) = queue.pop_first() {
        let lo = status.partition_point(|&s| cmp_height(&segs, s, &p) == Ordering::Less);
        let len = status[lo..].partition_point(|&s| cmp_height(&segs, s, &p) == Ordering::Equal);
        let block: Vec<usize> = status.drain(lo..lo + len).collect();

        let involved: Vec<usize> = starts.iter().chain(block.iter()).copied().collect();
        for (k, &a) in involved.iter().enumerate() {
            for &b in &involved[k + 1..] {
                let (i, j) = if a < b { (a, b) } else { (b, a) };
                if i == j || skip(i, j) || found.contains(&(i, j)) {
                    continue;
                }
                let (sa, sb) = (&segs[i], &segs[j]);
                if segments_properly_cross(sa.start, sa.end, sb.start, sb.end) {
                    found.insert((i, j));
                }
            }
        }

        let mut through: Vec<usize> = block
            .into_iter()
            .filter(|&s| EventPoint::float(segs[s].end) != p)
            .chain(starts.into_iter().filter(|&s| !segs[s].is_point()))
            .collect();
        through.sort_by(|&a, &b| cmp_slope(&segs[a], &segs[b]).then(a.cmp(&b)));

        if through.is_empty() {
            if lo > 0 && lo < status.len() {
                schedule(&segs, &mut scheduled, status[lo - 1], status[lo], &p, &mut queue);
            }
        } else {
            let count = through.len();
            let first = through[0];
            let last = through[count - 1];
            status.splice(lo..lo, through);
            if lo > 0 {
                schedule(&segs, &mut scheduled, status[lo - 1], first, &p, &mut queue);
            }
            let above = lo + count;
            if above < status.len() {
                schedule(&segs, &mut scheduled, last, status[above], &p, &mut queue);
            }
        }
    }

    let mut out: Vec<(usize, usize)> = found.into_iter().collect();
    out.sort_unstable();
    out
}

/// Queues the crossing of neighbours `a` and `b` if it lies ahead of `p`.
/// Two segments cross at most once, so each pair is queued at most once.
fn schedule(
    segs: &[Seg],
    scheduled: &mut HashSet<(usize, usize)>,
    a: usize,
    b: usize,
    p: &EventPoint,
    queue: &mut BTreeMap<EventPoint, Vec<usize>>,
) {
    let key = (a.min(b), a.max(b));
    if scheduled.contains(&key) {
        return;
    }
    let (sa, sb) = (&segs[a], &segs[b]);
    if !interiors_cross(sa.start, sa.end, sb.start, sb.end) {
        return;
    }
    let q = intersection(segs, a, b);
    if &q > p {
        scheduled.insert(key);
        queue.entry(q).or_default();
    }
}

/// Quadratic reference enumeration with the same crossing rule.
pub fn brute_force_crossings<F>(segments: &[(Point, Point)], skip: F) -> Vec<(usize, usize)>
where
    F: Fn(usize, usize) -> bool,
{
    let mut out = Vec::new();
    for i in 0..segments.len() {
        for j in i + 1..segments.len() {
            if skip(i, j) {
                continue;
            }
            let (a1, a2) = segments[i];
            let (b1, b2) = segments[j];
            if segments_properly_cross(a1, a2, b1, b2) {
                out.push((i, j));
            }
        }
    }
    out
}
