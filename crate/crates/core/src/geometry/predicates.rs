use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;

use super::exact::orient;
use super::Point;
use crate::error::{Error, Result};

fn lex(a: Point, b: Point) -> Ordering {
    a.x.partial_cmp(&b.x)
        .expect("finite coordinates")
        .then_with(|| a.y.partial_cmp(&b.y).expect("finite coordinates"))
}

/// Exact crossing test for two closed segments `a1a2` and `b1b2`.
///
/// Two segments cross when they share a point that is not an endpoint of
/// both. This covers the proper X crossing, an endpoint resting on the other
/// segment's interior, and collinear overlap of positive length; segments that
/// only meet at a common endpoint position do not cross.
pub fn segments_properly_cross(a1: Point, a2: Point, b1: Point, b2: Point) -> bool {
    let o1 = orient(a1, a2, b1);
    let o2 = orient(a1, a2, b2);
    let o3 = orient(b1, b2, a1);
    let o4 = orient(b1, b2, a2);
    use Ordering::Equal;
    if o1 == Equal && o2 == Equal && o3 == Equal && o4 == Equal {
        return collinear_cross(a1, a2, b1, b2);
    }
    if (o1 != Equal && o1 == o2) || (o3 != Equal && o3 == o4) {
        return false;
    }
    // The closed segments meet in exactly one point; it is shared by both
    // endpoint sets only if the two segments have a coincident endpoint.
    !(a1 == b1 || a1 == b2 || a2 == b1 || a2 == b2)
}

fn collinear_cross(a1: Point, a2: Point, b1: Point, b2: Point) -> bool {
    let (amin, amax) = if lex(a1, a2) == Ordering::Greater {
        (a2, a1)
    } else {
        (a1, a2)
    };
    let (bmin, bmax) = if lex(b1, b2) == Ordering::Greater {
        (b2, b1)
    } else {
        (b1, b2)
    };
    let lo = if lex(amin, bmin) == Ordering::Greater {
        amin
    } else {
        bmin
    };
    let hi = if lex(amax, bmax) == Ordering::Less { amax } else { bmax };
    match lex(lo, hi) {
        Ordering::Greater => false,
        Ordering::Less => true,
        Ordering::Equal => {
            let end_of_a = lo == a1 || lo == a2;
            let end_of_b = lo == b1 || lo == b2;
            !(end_of_a && end_of_b)
        }
    }
}

/// `true` when the two segments cross at a point interior to both.
pub(crate) fn interiors_cross(a1: Point, a2: Point, b1: Point, b2: Point) -> bool {
    let o1 = orient(a1, a2, b1);
    let o2 = orient(a1, a2, b2);
    let o3 = orient(b1, b2, a1);
    let o4 = orient(b1, b2, a2);
    o1 != Ordering::Equal && o1 == o2.reverse() && o3 != Ordering::Equal && o3 == o4.reverse()
}

/// Acute angle in `(0, pi/2]` between the lines supporting two segments.
pub fn crossing_angle(a1: Point, a2: Point, b1: Point, b2: Point) -> Result<f64> {
    let u = a2 - a1;
    let v = b2 - b1;
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Degenerate("zero-length edge in crossing angle".into()));
    }
    let angle = u.cross(v).abs().atan2(u.dot(v).abs());
    Ok(angle.min(FRAC_PI_2))
}

/// Angle in `[0, pi]` at `center` between the rays towards `a` and `b`.
pub fn incident_angle(a: Point, center: Point, b: Point) -> Result<f64> {
    let u = a - center;
    let v = b - center;
    if u.norm_squared() == 0.0 || v.norm_squared() == 0.0 {
        return Err(Error::Degenerate("coincident points in incident angle".into()));
    }
    Ok(u.cross(v).abs().atan2(u.dot(v)))
}

/// Singular values `(s1, s2)`, `s1 >= s2 >= 0`, of the mean-centred
/// `n x 2` coordinate matrix.
pub fn singular_values_2col(points: &[Point]) -> (f64, f64) {
    let (a, b, c) = centered_gram(points);
    let (l1, l2) = sym2_eigenvalues(a, b, c);
    (l1.max(0.0).sqrt(), l2.max(0.0).sqrt())
}

/// Entries `(xx, xy, yy)` of the Gram matrix of the centred coordinates.
pub(crate) fn centered_gram(points: &[Point]) -> (f64, f64, f64) {
    if points.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let mut mean = Point::ZERO;
    for p in points {
        mean += *p;
    }
    mean = mean * (1.0 / points.len() as f64);
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for p in points {
        let d = *p - mean;
        a += d.x * d.x;
        b += d.x * d.y;
        c += d.y * d.y;
    }
    (a, b, c)
}

/// Eigenvalues (descending) of `[[a, b], [b, c]]`.
pub(crate) fn sym2_eigenvalues(a: f64, b: f64, c: f64) -> (f64, f64) {
    let h = 0.5 * (a + c);
    let d = (0.5 * (a - c)).hypot(b);
    (h + d, h - d)
}

/// Extents `(width, height)` of the axis-aligned bounding box after rotating
/// all points by `angle` about their centroid.
pub fn rotated_bbox(points: &[Point], angle: f64) -> (f64, f64) {
    if points.is_empty() {
        return (0.0, 0.0);
    }
    let (s, c) = angle.sin_cos();
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    // Rotation about the centroid only translates the box, so extents can be
    // taken from the rotated raw coordinates.
    for p in points {
        let x = c * p.x - s * p.y;
        let y = s * p.x + c * p.y;
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    (xmax - xmin, ymax - ymin)
}

/// Convex hull in counter-clockwise order (monotone chain, exact turns).
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| lex(*a, *b));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) != Ordering::Greater
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}
