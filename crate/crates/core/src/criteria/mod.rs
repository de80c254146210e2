//! The nine readability criteria.
//!
//! Each criterion has a sample loss, which the optimizer evaluates on small
//! random samples and differentiates, and a quality measure evaluated once on
//! the whole drawing. Losses return their value together with the exact
//! gradient with respect to the coordinates of the nodes in the sample.

mod angular;
mod aspect;
mod crossing_angle;
mod edge_length;
mod gabriel;
mod lovasz;
mod neighborhood;
mod stress;
mod vertex_resolution;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geometry::Point;

pub use angular::{angular_resolution_loss, angular_resolution_quality, IncidentPair};
pub use aspect::{aspect_ratio_loss, aspect_ratio_quality, DEFAULT_ROTATIONS};
pub use crossing_angle::crossing_angle_quality_of;
pub use crossing_angle::{crossing_angle_loss, crossing_angle_quality, EdgePair};
pub use edge_length::{ideal_edge_length_loss, ideal_edge_length_quality, EdgeTarget};
pub use gabriel::{gabriel_loss, gabriel_quality, EdgeNode};
pub use lovasz::{jaccard_index, lovasz_hinge};
pub use neighborhood::{neighborhood_khat, neighborhood_loss, neighborhood_quality, Subgraph};
pub use stress::{stress_loss, stress_quality, PairTarget};
pub use vertex_resolution::{default_resolution, vertex_resolution_loss, vertex_resolution_quality};

/// The readability criteria, in their canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kind {
    #[serde(rename = "ST")]
    Stress,
    #[serde(rename = "IL")]
    IdealEdgeLength,
    #[serde(rename = "NP")]
    NeighborhoodPreservation,
    #[serde(rename = "CR")]
    Crossings,
    #[serde(rename = "CAM")]
    CrossingAngle,
    #[serde(rename = "AR")]
    AspectRatio,
    #[serde(rename = "ANR")]
    AngularResolution,
    #[serde(rename = "VR")]
    VertexResolution,
    #[serde(rename = "GB")]
    Gabriel,
}

impl Kind {
    pub const ALL: [Kind; 9] = [
        Kind::Stress,
        Kind::IdealEdgeLength,
        Kind::NeighborhoodPreservation,
        Kind::Crossings,
        Kind::CrossingAngle,
        Kind::AspectRatio,
        Kind::AngularResolution,
        Kind::VertexResolution,
        Kind::Gabriel,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Kind::Stress => "ST",
            Kind::IdealEdgeLength => "IL",
            Kind::NeighborhoodPreservation => "NP",
            Kind::Crossings => "CR",
            Kind::CrossingAngle => "CAM",
            Kind::AspectRatio => "AR",
            Kind::AngularResolution => "ANR",
            Kind::VertexResolution => "VR",
            Kind::Gabriel => "GB",
        }
    }

    /// Default mini-batch size.
    pub fn default_sample_size(self) -> usize {
        match self {
            Kind::Stress | Kind::IdealEdgeLength => 32,
            Kind::NeighborhoodPreservation | Kind::CrossingAngle => 16,
            Kind::Crossings | Kind::AspectRatio | Kind::AngularResolution => 128,
            Kind::VertexResolution => 256,
            Kind::Gabriel => 64,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Kind::ALL
            .into_iter()
            .find(|k| k.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Invalid(format!(
                    "unknown criterion {s:?} (expected one of ST, IL, NP, CR, CAM, AR, ANR, VR, GB)"
                ))
            })
    }
}

/// A sample loss and its gradient, one entry per touched node sorted by
/// node index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub gradient: Vec<(usize, Point)>,
    /// Sample elements left out because their geometry was degenerate.
    pub skipped: usize,
}

impl LossValue {
    pub fn zero() -> Self {
        LossValue::default()
    }

    /// Merge repeated node entries.
    pub fn new(value: f64, mut entries: Vec<(usize, Point)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let mut gradient: Vec<(usize, Point)> = Vec::with_capacity(entries.len());
        for (i, g) in entries {
            match gradient.last_mut() {
                Some((j, acc)) if *j == i => *acc += g,
                _ => gradient.push((i, g)),
            }
        }
        LossValue {
            value,
            gradient,
            skipped: 0,
        }
    }

    pub fn with_skipped(mut self, skipped: usize) -> Self {
        self.skipped = skipped;
        self
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.gradient.iter().all(|(_, g)| g.is_finite())
    }

    /// Add `weight * gradient` into a dense buffer.
    pub fn accumulate(&self, weight: f64, into: &mut [Point]) {
        for &(i, g) in &self.gradient {
            into[i] += g * weight;
        }
    }
}

/// Lower bound applied to the arguments of the logarithms in [`cross_entropy`].
pub const CE_EPS: f64 = 1e-9;

/// Binary cross entropy `-t log y - (1 - t) log(1 - y)`, each logarithm
/// argument clamped below at [`CE_EPS`]; terms with a zero coefficient are
/// dropped, so `cross_entropy(1, 1) == 0`.
pub fn cross_entropy(y: f64, t: f64) -> f64 {
    let mut v = 0.0;
    if t != 0.0 {
        v -= t * y.max(CE_EPS).ln();
    }
    if t != 1.0 {
        v -= (1.0 - t) * (1.0 - y).max(CE_EPS).ln();
    }
    v
}

/// Derivative of [`cross_entropy`] with respect to `y`.
pub fn cross_entropy_grad(y: f64, t: f64) -> f64 {
    let mut g = 0.0;
    if t != 0.0 && y > CE_EPS {
        g -= t / y;
    }
    if t != 1.0 && 1.0 - y > CE_EPS {
        g += (1.0 - t) / (1.0 - y);
    }
    g
}

/// Distances below this are treated as coincident points.
pub const COINCIDENT: f64 = 1e-12;

/// Unit vector from `xj` to `xi` and their distance. Coincident points get
/// a fixed pseudo-random direction determined by the node pair, with
/// `direction(i, j) == -direction(j, i)`.
pub fn direction(i: usize, j: usize, xi: Point, xj: Point) -> (Point, f64) {
    let diff = xi - xj;
    let len = diff.norm();
    if len >= COINCIDENT {
        return (diff * (1.0 / len), len);
    }
    let (lo, hi, s) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
    let mut rng = crate::rng::seeded(crate::rng::derive_seed(lo as u64, hi as u64));
    let angle = crate::rng::unit(&mut rng) * std::f64::consts::TAU;
    (Point::new(angle.cos(), angle.sin()) * s, len)
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_entropy_values() {
        assert_eq!(cross_entropy(1.0, 1.0), 0.0);
        assert!((cross_entropy(0.5, 0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((cross_entropy(0.0, 1.0) - (-CE_EPS.ln())).abs() < 1e-12);
        let (y, t) = (0.3, 0.8);
        let h = 1e-6;
        let fd = (cross_entropy(y + h, t) - cross_entropy(y - h, t)) / (2.0 * h);
        assert!((fd - cross_entropy_grad(y, t)).abs() < 1e-6);
    }

    #[test]
    fn kind_codes_round_trip() {
        for k in Kind::ALL {
            assert_eq!(k.code().parse::<Kind>().unwrap(), k);
        }
        assert!("XX".parse::<Kind>().is_err());
    }

    #[test]
    fn coincident_direction_is_antisymmetric_unit() {
        let p = Point::new(1.0, 1.0);
        let (a, _) = direction(3, 7, p, p);
        let (b, _) = direction(7, 3, p, p);
        assert!((a.norm() - 1.0).abs() < 1e-12);
        assert_eq!(a, -b);
    }
}
