use rand::Rng;
use rand_distr::StandardNormal;

use super::Point;
use crate::error::{Error, Result};

/// Node coordinates of a straight-line drawing, one row per node.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Layout {
    points: Vec<Point>,
}

impl Layout {
    pub fn new(points: Vec<Point>) -> Self {
        Layout { points }
    }

    /// Standard-normal coordinates drawn from `rng`.
    pub fn random_normal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let points = (0..n)
            .map(|_| {
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                Point::new(x, y)
            })
            .collect();
        Layout { points }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    #[inline]
    pub fn points_mut(&mut self) -> &mut [Point] {
        &mut self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    #[inline]
    pub fn get(&self, i: usize) -> Point {
        self.points[i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, p: Point) {
        self.points[i] = p;
    }

    pub fn is_finite(&self) -> bool {
        self.points.iter().all(|p| p.is_finite())
    }

    /// Fails unless every coordinate is finite and the row count is `n`.
    pub fn check(&self, n: usize) -> Result<()> {
        if self.points.len() != n {
            return Err(Error::LayoutSize {
                expected: n,
                actual: self.points.len(),
            });
        }
        if let Some(i) = self.points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("coordinate of node {i}")));
        }
        Ok(())
    }

    pub fn centroid(&self) -> Point {
        if self.points.is_empty() {
            return Point::ZERO;
        }
        let mut c = Point::ZERO;
        for p in &self.points {
            c += *p;
        }
        c * (1.0 / self.points.len() as f64)
    }

    /// Largest pairwise Euclidean distance.
    pub fn diameter(&self) -> f64 {
        let hull = super::convex_hull(&self.points);
        let mut best = 0.0f64;
        for (a, pa) in hull.iter().enumerate() {
            for pb in &hull[a + 1..] {
                best = best.max(pa.distance(*pb));
            }
        }
        best
    }
}

impl From<Vec<Point>> for Layout {
    fn from(points: Vec<Point>) -> Self {
        Layout { points }
    }
}

impl std::ops::Index<usize> for Layout {
    type Output = Point;
    fn index(&self, i: usize) -> &Point {
        &self.points[i]
    }
}

impl std::ops::IndexMut<usize> for Layout {
    fn index_mut(&mut self, i: usize) -> &mut Point {
        &mut self.points[i]
    }
}
