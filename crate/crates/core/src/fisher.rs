//! Probability distributions under the Fisher information metric.
//!
//! `x ↦ (√x_0, …, √x_n)` maps the standard simplex onto the nonnegative
//! orthant of the unit sphere, and Fisher distances are `√2` times the
//! geodesic distances between the images. Everything geometric is done on
//! the unit sphere and converted at this interface.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{geodesic_distance, UnitVector};
use crate::hull::build_hull;
use crate::mosaic::{build_mosaic, non_delaunay_face_count, radius_and_intervals, Mosaic, MorseInterval};
use crate::sampling::PointCloud;
use crate::scalar::Real;

const SUM_TOL: f64 = 1e-12;
const NEGATIVE_TOL: f64 = 1e-12;

/// A point of the standard simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Distribution<T>(Vec<T>);

fn sum_tolerance<T: Real>(len: usize) -> T {
    T::lit(SUM_TOL).max(T::epsilon() * T::lit(4.0 * len as f64))
}

impl<T: Real> Distribution<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Domain("a distribution needs at least one outcome".into()));
        }
        if let Some(&p) = probs.iter().find(|p| !(**p >= T::zero()) || !p.is_finite()) {
            return Err(Error::NegativeCoordinate(p.as_f64()));
        }
        let total: T = probs.iter().copied().sum();
        if (total - T::one()).abs() > sum_tolerance::<T>(probs.len()) {
            return Err(Error::Domain(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self(probs))
    }

    pub fn probs(&self) -> &[T] {
        &self.0
    }

    /// `n` for a distribution on `n + 1` outcomes.
    pub fn n(&self) -> usize {
        self.0.len() - 1
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![T::one() / T::lit((n + 1) as f64); n + 1])
    }

    pub fn vertex(n: usize, i: usize) -> Self {
        let mut p = vec![T::zero(); n + 1];
        p[i] = T::one();
        Self(p)
    }
}

/// The unit vector `(√x_0, …, √x_n)`.
pub fn to_sphere<T: Real>(x: &Distribution<T>) -> UnitVector<T> {
    // the square roots have unit norm up to rounding
    UnitVector::normalized(x.0.iter().map(|p| p.sqrt()).collect()).expect("nonzero by construction")
}

/// Inverse of [`to_sphere`]; slightly negative coordinates are clamped.
pub fn from_sphere<T: Real>(u: &UnitVector<T>) -> Result<Distribution<T>> {
    let tol = T::lit(NEGATIVE_TOL).max(T::epsilon() * T::lit(4.0));
    let mut probs = Vec::with_capacity(u.len());
    for &c in u.iter() {
        if c < -tol {
            return Err(Error::NegativeCoordinate(c.as_f64()));
        }
        let c = c.max(T::zero());
        probs.push(c * c);
    }
    let total: T = probs.iter().copied().sum();
    Ok(Distribution(probs.into_iter().map(|p| p / total).collect()))
}

/// Length of the shortest path between `x` and `y` under the Fisher
/// metric, in `[0, √2·π/2]`.
pub fn fisher_distance<T: Real>(x: &Distribution<T>, y: &Distribution<T>) -> Result<T> {
    if x.0.len() != y.0.len() {
        return Err(Error::DimensionMismatch { expected: x.0.len(), found: y.0.len() });
    }
    Ok(T::SQRT_2() * geodesic_distance(&to_sphere(x), &to_sphere(y))?)
}

/// Delaunay mosaic of distributions under the Fisher metric.
#[derive(Debug, Clone)]
pub struct FisherMosaic<T> {
    pub mosaic: Mosaic<T>,
    pub intervals: Vec<MorseInterval<T>>,
    /// Hull faces per dimension outside the mosaic; expected, since the
    /// image sits in one orthant.
    pub non_delaunay: Vec<usize>,
}

impl<T: Real> FisherMosaic<T> {
    /// Interval radii as geodesic angles on the unit sphere.
    pub fn geodesic_radii(&self) -> Vec<T> {
        self.intervals.iter().map(|iv| iv.geo_radius).collect()
    }

    /// Interval radii in Fisher units, `√2` times the geodesic ones.
    pub fn fisher_radii(&self) -> Vec<T> {
        self.intervals.iter().map(|iv| iv.geo_radius * T::SQRT_2()).collect()
    }
}

/// Maps the distributions to the sphere and builds the mosaic and its
/// intervals there.
pub fn fisher_delaunay<T: Real>(points: &[Distribution<T>]) -> Result<FisherMosaic<T>> {
    let cloud = PointCloud::from_points(points.iter().map(to_sphere).collect())?;
    let hull = build_hull(cloud)?;
    let mosaic = build_mosaic(hull)?;
    let intervals = radius_and_intervals(&mosaic)?;
    let non_delaunay = non_delaunay_face_count(mosaic.hull(), &mosaic);
    Ok(FisherMosaic { mosaic, intervals, non_delaunay })
}

/// Reads one distribution per CSV row (no header, `#` comments).
pub fn read_distributions<R: Read>(input: R) -> Result<Vec<Distribution<f64>>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let probs = rec?
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("row {}: {e}", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        let d = Distribution::new(probs)?;
        if let Some(first) = out.first().map(Distribution::n) {
            if d.n() != first {
                return Err(Error::DimensionMismatch { expected: first + 1, found: d.n() + 1 });
            }
        }
        out.push(d);
    }
    Ok(out)
}
