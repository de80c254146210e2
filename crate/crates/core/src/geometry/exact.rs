//! Exact sign evaluation for the handful of polynomial predicates the
//! crossing code relies on.
//!
//! Every predicate first runs on an outward-rounded floating-point interval;
//! only when the interval straddles zero is the expression re-evaluated in
//! arbitrary-precision rationals. Inputs are finite `f64`, which convert to
//! rationals losslessly, so the fallback is exact.

use std::cell::OnceCell;
use std::cmp::Ordering;

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::Point;

/// Relative error bound of the naive orientation determinant.
const ORIENT_ERRBOUND: f64 = 3.330_669_073_875_471_6e-16;

pub(crate) fn rational(v: f64) -> BigRational {
    BigRational::from_float(v).expect("non-finite coordinate reached the exact predicates")
}

/// Sign of `(b - a) x (c - a)`: positive when `a, b, c` turn counter-clockwise.
pub fn orient(a: Point, b: Point, c: Point) -> Ordering {
    let (acx, bcy) = (a.x - c.x, b.y - c.y);
    let (acy, bcx) = (a.y - c.y, b.x - c.x);
    // Float differences are zero exactly when the coordinates are equal, so
    // this settles shared endpoints without the fallback.
    if (acx == 0.0 || bcy == 0.0) && (acy == 0.0 || bcx == 0.0) {
        return Ordering::Equal;
    }
    let left = acx * bcy;
    let right = acy * bcx;
    let det = left - right;
    let bound = ORIENT_ERRBOUND * (left.abs() + right.abs());
    if det.is_finite() && bound.is_finite() {
        if det > bound {
            return Ordering::Greater;
        }
        if -det > bound {
            return Ordering::Less;
        }
    }
    orient_exact(a, b, c)
}

fn orient_exact(a: Point, b: Point, c: Point) -> Ordering {
    let (ax, ay) = (rational(a.x), rational(a.y));
    let (bx, by) = (rational(b.x), rational(b.y));
    let (cx, cy) = (rational(c.x), rational(c.y));
    let det = (&ax - &cx) * (&by - &cy) - (&ay - &cy) * (&bx - &cx);
    sign(&det)
}

pub(crate) fn sign(v: &BigRational) -> Ordering {
    if v.is_zero() {
        Ordering::Equal
    } else if v.is_positive() {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

/// Closed interval with outward rounding after every operation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn exact(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    /// Interval that certainly contains the rational `v`.
    #[cfg(test)]
    pub fn around(v: &BigRational) -> Self {
        use num_traits::ToPrimitive;
        match v.to_f64() {
            Some(f) if f.is_finite() => Interval {
                lo: f.next_down().next_down(),
                hi: f.next_up().next_up(),
            },
            _ => Interval {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            },
        }
    }

    fn valid(self) -> bool {
        !(self.lo.is_nan() || self.hi.is_nan())
    }

    pub fn add(self, o: Interval) -> Interval {
        Interval {
            lo: (self.lo + o.lo).next_down(),
            hi: (self.hi + o.hi).next_up(),
        }
    }

    pub fn sub(self, o: Interval) -> Interval {
        Interval {
            lo: (self.lo - o.hi).next_down(),
            hi: (self.hi - o.lo).next_up(),
        }
    }

    pub fn mul(self, o: Interval) -> Interval {
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if c.iter().any(|v| v.is_nan()) {
            return Interval {
                lo: f64::NAN,
                hi: f64::NAN,
            };
        }
        Interval {
            lo: lo.next_down(),
            hi: hi.next_up(),
        }
    }

    pub fn div(self, o: Interval) -> Interval {
        if o.lo <= 0.0 && o.hi >= 0.0 {
            return Interval {
                lo: f64::NAN,
                hi: f64::NAN,
            };
        }
        let inv = Interval {
            lo: (1.0 / o.hi).next_down(),
            hi: (1.0 / o.lo).next_up(),
        };
        self.mul(inv)
    }

    /// `Some(ordering)` when the intervals certainly compare that way.
    pub fn compare(self, o: Interval) -> Option<Ordering> {
        if !self.valid() || !o.valid() {
            return None;
        }
        if self.hi < o.lo {
            Some(Ordering::Less)
        } else if self.lo > o.hi {
            Some(Ordering::Greater)
        } else if self.lo == self.hi && o.lo == o.hi && self.lo == o.lo {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    pub fn sign(self) -> Option<Ordering> {
        self.compare(Interval::exact(0.0))
    }
}

/// A coordinate that is either a plain float or an exact rational known
/// through a bracketing interval. The rational is computed on first use, so
/// comparisons the interval settles never touch big-number arithmetic.
#[derive(Clone, Debug)]
pub(crate) enum Coord {
    Float(f64),
    Exact(Box<ExactCoord>),
}

#[derive(Clone, Debug)]
pub(crate) struct ExactCoord {
    interval: Interval,
    value: OnceCell<BigRational>,
    /// Segment endpoints and axis the value is derived from, when deferred.
    source: Option<([Point; 4], usize)>,
}

impl Coord {
    #[cfg(test)]
    pub fn from_rational(v: BigRational) -> Self {
        let interval = Interval::around(&v);
        Coord::Exact(Box::new(ExactCoord {
            interval,
            value: OnceCell::from(v),
            source: None,
        }))
    }

    /// Coordinate `axis` (0 = x, 1 = y) of the crossing point of segments
    /// `a1 a2` and `b1 b2`, which must not be parallel.
    pub fn intersection(a1: Point, a2: Point, b1: Point, b2: Point, axis: usize) -> Self {
        let e = Interval::exact;
        let (ux, uy) = (e(a2.x).sub(e(a1.x)), e(a2.y).sub(e(a1.y)));
        let (vx, vy) = (e(b2.x).sub(e(b1.x)), e(b2.y).sub(e(b1.y)));
        let (wx, wy) = (e(b1.x).sub(e(a1.x)), e(b1.y).sub(e(a1.y)));
        let denom = ux.mul(vy).sub(uy.mul(vx));
        let t = wx.mul(vy).sub(wy.mul(vx)).div(denom);
        let interval = if axis == 0 {
            e(a1.x).add(t.mul(ux))
        } else {
            e(a1.y).add(t.mul(uy))
        };
        let interval = if interval.valid() {
            interval
        } else {
            Interval {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            }
        };
        Coord::Exact(Box::new(ExactCoord {
            interval,
            value: OnceCell::new(),
            source: Some(([a1, a2, b1, b2], axis)),
        }))
    }

    pub fn interval(&self) -> Interval {
        match self {
            Coord::Float(v) => Interval::exact(*v),
            Coord::Exact(c) => c.interval,
        }
    }

    pub fn to_rational(&self) -> BigRational {
        match self {
            Coord::Float(v) => rational(*v),
            Coord::Exact(c) => c.value().clone(),
        }
    }
}

impl ExactCoord {
    fn value(&self) -> &BigRational {
        self.value.get_or_init(|| {
            let ([a1, a2, b1, b2], axis) = self.source.expect("deferred coordinate without source");
            let (a1x, a1y) = (rational(a1.x), rational(a1.y));
            let (ux, uy) = (rational(a2.x) - &a1x, rational(a2.y) - &a1y);
            let (vx, vy) = (rational(b2.x) - rational(b1.x), rational(b2.y) - rational(b1.y));
            let (wx, wy) = (rational(b1.x) - &a1x, rational(b1.y) - &a1y);
            let denom: BigRational = &ux * &vy - &uy * &vx;
            let t = (wx * vy - wy * vx) / denom;
            if axis == 0 {
                a1x + t * ux
            } else {
                a1y + t * uy
            }
        })
    }
}

impl PartialEq for Coord {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Coord {}

impl PartialOrd for Coord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Coord {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Coord::Float(a), Coord::Float(b)) => a.partial_cmp(b).expect("finite coordinates"),
            _ => {
                if let Some(o) = self.interval().compare(other.interval()) {
                    return o;
                }
                self.to_rational().cmp(&other.to_rational())
            }
        }
    }
}
