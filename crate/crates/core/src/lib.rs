//! Multicriteria straight-line graph layout by stochastic gradient descent.
//!
//! A layout is improved by minimizing a weighted sum of readability losses,
//! each estimated on small random samples. The exact quality measures that
//! the losses approximate live next to them in [`criteria`].

pub mod criteria;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod io;
pub mod neural;
pub mod optimizer;
pub mod quality;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
pub use geometry::{Layout, Point};
pub use graph::Graph;
