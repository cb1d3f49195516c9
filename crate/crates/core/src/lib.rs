//! Poisson–Delaunay mosaics on the unit sphere `S^n ⊂ R^{n+1}`.
//!
//! The crate samples point processes on the sphere, builds the spherical
//! Delaunay mosaic from the convex hull of the sample, splits the radius
//! function into intervals `[L, U]` of type `(ℓ, k)`, and compares the
//! observed counts with expected-count formulas driven by Monte Carlo
//! constants. Probability distributions enter through the Fisher metric,
//! which turns the standard simplex into an orthant of the sphere.
//!
//! Geometric code is generic over [`Real`] (`f64` and `f32`); special
//! functions, constants, and theory are evaluated in `f64`.

pub mod constants;
pub mod error;
pub mod experiment;
pub mod fisher;
pub mod geom;
pub mod hull;
pub mod mosaic;
pub mod quadrature;
pub mod report;
pub mod sampling;
pub mod scalar;
pub mod specfun;
pub mod theory;

pub use error::{Error, Result};
pub use hull::Face;
pub use scalar::Real;

pub type UnitVector = geom::UnitVector<f64>;
pub type Cap = geom::Cap<f64>;
pub type CircumData = geom::CircumData<f64>;
pub type PointCloud = sampling::PointCloud<f64>;
pub type HullComplex = hull::HullComplex<f64>;
pub type Mosaic = mosaic::Mosaic<f64>;
pub type MorseInterval = mosaic::MorseInterval<f64>;
pub type Distribution = fisher::Distribution<f64>;

pub type UnitVectorF32 = geom::UnitVector<f32>;
pub type PointCloudF32 = sampling::PointCloud<f32>;
pub type HullComplexF32 = hull::HullComplex<f32>;
pub type MosaicF32 = mosaic::Mosaic<f32>;
