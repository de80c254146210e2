//! Pose normalization of an edge pair before it enters the predictor.
//!
//! The four points are translated so their centroid is the origin, scaled so
//! the farthest point has norm 1, and rotated so the first edge points along
//! the positive x axis. The Jacobian is carried along in forward mode.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::geometry::Point;

/// A value with its derivatives with respect to the 8 input coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Dual {
    pub v: f64,
    pub d: [f64; 8],
}

impl Dual {
    fn constant(v: f64) -> Self {
        Dual { v, d: [0.0; 8] }
    }

    fn variable(v: f64, k: usize) -> Self {
        let mut d = [0.0; 8];
        d[k] = 1.0;
        Dual { v, d }
    }

    fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        let s = if r > 0.0 { 0.5 / r } else { 0.0 };
        self.map(r, s)
    }

    fn map(self, v: f64, slope: f64) -> Self {
        let mut d = self.d;
        for x in &mut d {
            *x *= slope;
        }
        Dual { v, d }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        let mut d = self.d;
        for (x, y) in d.iter_mut().zip(o.d) {
            *x += y;
        }
        Dual { v: self.v + o.v, d }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        self + (-o)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        self.map(-self.v, -1.0)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        let mut d = [0.0; 8];
        for (k, x) in d.iter_mut().enumerate() {
            *x = self.d[k] * o.v + self.v * o.d[k];
        }
        Dual { v: self.v * o.v, d }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let inv = 1.0 / o.v;
        let mut d = [0.0; 8];
        for (k, x) in d.iter_mut().enumerate() {
            *x = (self.d[k] - self.v * inv * o.d[k]) * inv;
        }
        Dual { v: self.v * inv, d }
    }
}

fn canonical_dual(points: &[Point; 4]) -> [Dual; 8] {
    let mut x = [Dual::constant(0.0); 8];
    for (k, p) in points.iter().enumerate() {
        x[2 * k] = Dual::variable(p.x, 2 * k);
        x[2 * k + 1] = Dual::variable(p.y, 2 * k + 1);
    }
    let quarter = Dual::constant(0.25);
    let cx = (x[0] + x[2] + x[4] + x[6]) * quarter;
    let cy = (x[1] + x[3] + x[5] + x[7]) * quarter;
    for k in 0..4 {
        x[2 * k] = x[2 * k] - cx;
        x[2 * k + 1] = x[2 * k + 1] - cy;
    }
    let norms: Vec<Dual> = (0..4)
        .map(|k| (x[2 * k] * x[2 * k] + x[2 * k + 1] * x[2 * k + 1]).sqrt())
        .collect();
    let far = norms
        .iter()
        .copied()
        .fold(Dual::constant(0.0), |a, b| if b.v > a.v { b } else { a });
    if far.v <= 0.0 {
        return [Dual::constant(0.0); 8];
    }
    for v in &mut x {
        *v = *v / far;
    }
    let dx = x[2] - x[0];
    let dy = x[3] - x[1];
    let len = (dx * dx + dy * dy).sqrt();
    if len.v <= 0.0 {
        return x;
    }
    let (c, s) = (dx / len, dy / len);
    let mut out = x;
    for k in 0..4 {
        let (px, py) = (x[2 * k], x[2 * k + 1]);
        out[2 * k] = c * px + s * py;
        out[2 * k + 1] = c * py - s * px;
    }
    out
}

/// Canonical coordinates of `[a1, a2, b1, b2]`.
pub fn canonicalize(points: &[Point; 4]) -> [f64; 8] {
    canonical_dual(points).map(|d| d.v)
}

/// Canonical coordinates with the Jacobian: `jac[r][c]` is the derivative
/// of output `r` with respect to input coordinate `c` (x1, y1, ..., y4).
pub fn canonicalize_with_jacobian(points: &[Point; 4]) -> ([f64; 8], [[f64; 8]; 8]) {
    let out = canonical_dual(points);
    (out.map(|d| d.v), out.map(|d| d.d))
}
