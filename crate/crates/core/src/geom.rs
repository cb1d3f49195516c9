//! Spherical and Euclidean primitives on `S^n ⊂ R^{n+1}`.
//!
//! The central routine is the projection of the origin onto the affine hull
//! of a simplex with vertices on the unit sphere. The foot point `p` is the
//! Euclidean center of the smallest circumscribed cap, `‖p‖` is the cosine
//! of its geodesic radius, and `r² = 1 − ‖p‖²` is the squared Euclidean
//! radius.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, norm, Real};

/// A point of `S^n`, stored by its `n + 1` ambient coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitVector<T>(Vec<T>);

impl<T: Real> UnitVector<T> {
    /// Wraps `coords`, checking the norm against [`Real::UNIT_TOL`].
    pub fn new(coords: Vec<T>) -> Result<Self> {
        let len = norm(&coords);
        if coords.is_empty() || !((len - T::one()).abs() <= T::UNIT_TOL) {
            return Err(Error::NotUnit(len.as_f64()));
        }
        Ok(Self(coords))
    }

    /// Scales `coords` onto the sphere.
    pub fn normalized(mut coords: Vec<T>) -> Result<Self> {
        let len = norm(&coords);
        if !(len > T::zero()) || !len.is_finite() {
            return Err(Error::NotUnit(len.as_f64()));
        }
        coords.iter_mut().for_each(|c| *c = *c / len);
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[T] {
        &self.0
    }

    /// Ambient dimension `n + 1`.
    pub fn ambient_dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    /// Converts to another scalar type without renormalizing.
    pub fn cast<U: Real>(&self) -> UnitVector<U> {
        UnitVector(self.0.iter().map(|c| U::lit(c.as_f64())).collect())
    }
}

impl<T> Deref for UnitVector<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> AsRef<[T]> for UnitVector<T> {
    fn as_ref(&self) -> &[T] {
        &self.0
    }
}

/// Projection data of a simplex inscribed in the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct CircumData<T> {
    /// Orthogonal projection `p` of the origin onto the affine hull.
    pub foot: Vec<T>,
    /// Euclidean radius `r` of the circumscribed `(k-1)`-sphere.
    pub euclid_radius: T,
    /// `‖p‖`, the cosine of the geodesic radius.
    pub height: T,
    /// Geodesic radius `θ = arccos ‖p‖`.
    pub geo_radius: T,
    /// `t = r² = sin² θ`.
    pub t: T,
}

impl<T: Real> CircumData<T> {
    /// Unit vector through the foot point: the geodesic center of the cap.
    pub fn cap_center(&self) -> Vec<T> {
        self.foot.iter().map(|&c| c / self.height).collect()
    }
}

/// Geodesic ball on `S^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cap<T> {
    pub center: UnitVector<T>,
    pub geo_radius: T,
}

impl<T: Real> Cap<T> {
    pub fn new(center: UnitVector<T>, geo_radius: T) -> Result<Self> {
        if !(geo_radius >= T::zero() && geo_radius <= T::PI()) {
            return Err(Error::Domain(format!("cap radius {geo_radius} outside [0, π]")));
        }
        Ok(Self { center, geo_radius })
    }

    /// Closed containment test on dot products.
    pub fn contains(&self, x: &[T]) -> bool {
        dot(&self.center, x) >= self.geo_radius.cos()
    }
}

fn check_dims<T, V: AsRef<[T]>>(points: &[V]) -> Result<usize> {
    let first = points
        .first()
        .ok_or_else(|| Error::Domain("empty point sequence".into()))?
        .as_ref()
        .len();
    for p in points {
        if p.as_ref().len() != first {
            return Err(Error::DimensionMismatch { expected: first, found: p.as_ref().len() });
        }
    }
    Ok(first)
}

/// Solves the symmetric system `G λ = b` by elimination with partial
/// pivoting; reports `DegenerateSimplex` when a pivot falls below
/// [`Real::RANK_TOL`] relative to the largest diagonal entry.
fn solve_gram<T: Real>(mut g: Vec<Vec<T>>, mut b: Vec<T>) -> Result<Vec<T>> {
    let k = b.len();
    let scale = (0..k).map(|i| g[i][i]).fold(T::zero(), T::max);
    if !(scale > T::zero()) {
        return Err(Error::DegenerateSimplex);
    }
    let tol = T::RANK_TOL * scale;
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&a, &b| g[a][col].abs().partial_cmp(&g[b][col].abs()).unwrap())
            .unwrap();
        if !(g[piv][col].abs() > tol) {
            return Err(Error::DegenerateSimplex);
        }
        g.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..k {
            let f = g[row][col] / g[col][col];
            if f != T::zero() {
                for c in col..k {
                    let v = g[col][c];
                    g[row][c] = g[row][c] - f * v;
                }
                b[row] = b[row] - f * b[col];
            }
        }
    }
    let mut x = vec![T::zero(); k];
    for row in (0..k).rev() {
        let s = (row + 1..k).fold(b[row], |acc, c| acc - g[row][c] * x[c]);
        x[row] = s / g[row][row];
    }
    Ok(x)
}

/// Difference vectors `x_i − x_0` for `i ≥ 1`.
fn differences<T: Real, V: AsRef<[T]>>(points: &[V]) -> Vec<Vec<T>> {
    let base = points[0].as_ref();
    points[1..]
        .iter()
        .map(|p| p.as_ref().iter().zip(base).map(|(&a, &b)| a - b).collect())
        .collect()
}

fn gram<T: Real>(diffs: &[Vec<T>]) -> Vec<Vec<T>> {
    diffs.iter().map(|a| diffs.iter().map(|b| dot(a, b)).collect()).collect()
}

/// Affine coordinates of the orthogonal projection of `q` onto the affine
/// hull of `points`. The coordinates sum to one; coordinate `i` is negative
/// exactly when the facet opposite vertex `i` separates the projection from
/// the simplex.
pub fn affine_coordinates<T: Real, V: AsRef<[T]>>(points: &[V], q: &[T]) -> Result<Vec<T>> {
    let dim = check_dims(points)?;
    if q.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: q.len() });
    }
    if points.len() == 1 {
        return Ok(vec![T::one()]);
    }
    let diffs = differences(points);
    let base = points[0].as_ref();
    let rel: Vec<T> = q.iter().zip(base).map(|(&a, &b)| a - b).collect();
    let rhs = diffs.iter().map(|d| dot(d, &rel)).collect();
    let lambda = solve_gram(gram(&diffs), rhs)?;
    let mut coords = Vec::with_capacity(points.len());
    coords.push(T::one() - lambda.iter().copied().sum::<T>());
    coords.extend(lambda);
    Ok(coords)
}

/// Geodesic distance `2 arcsin(‖x − y‖/2)` on the unit sphere.
pub fn geodesic_distance<T: Real>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    let chord = x.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b)).sqrt();
    Ok(T::lit(2.0) * (chord / T::lit(2.0)).min(T::one()).asin())
}

/// Projects the origin onto the affine hull of `points` and returns the
/// data of the smallest circumscribed cap together with the affine
/// coordinates of the foot point.
pub(crate) fn circum_with_coords<T: Real, V: AsRef<[T]>>(
    points: &[V],
) -> Result<(CircumData<T>, Vec<T>)> {
    let dim = check_dims(points)?;
    if points.len() > dim {
        return Err(Error::DegenerateSimplex);
    }
    let base = points[0].as_ref();
    if points.len() == 1 {
        let data = CircumData {
            foot: base.to_vec(),
            euclid_radius: T::zero(),
            height: norm(base),
            geo_radius: T::zero(),
            t: T::zero(),
        };
        return Ok((data, vec![T::one()]));
    }
    let diffs = differences(points);
    let rhs = diffs.iter().map(|d| -dot(d, base)).collect();
    let lambda = solve_gram(gram(&diffs), rhs)?;
    let mut foot = base.to_vec();
    for (l, d) in lambda.iter().zip(&diffs) {
        for (f, &c) in foot.iter_mut().zip(d) {
            *f = *f + *l * c;
        }
    }
    let height = norm(&foot);
    if !(height > T::RANK_TOL) {
        return Err(Error::GreatSphere);
    }
    let r = base.iter().zip(&foot).fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b)).sqrt();
    let data = CircumData { foot, euclid_radius: r, height, geo_radius: r.atan2(height), t: r * r };
    let mut coords = Vec::with_capacity(points.len());
    coords.push(T::one() - lambda.iter().copied().sum::<T>());
    coords.extend(lambda);
    Ok((data, coords))
}

/// Orthogonal projection of the origin onto the affine hull of a simplex
/// inscribed in the unit sphere.
pub fn project_origin<T: Real, V: AsRef<[T]>>(points: &[V]) -> Result<CircumData<T>> {
    circum_with_coords(points).map(|(d, _)| d)
}

/// Unique smallest cap whose boundary passes through all `points`.
pub fn smallest_circumscribed_cap<T: Real, V: AsRef<[T]>>(points: &[V]) -> Result<Cap<T>> {
    let data = project_origin(points)?;
    let center = UnitVector::normalized(data.cap_center())?;
    Ok(Cap { center, geo_radius: data.geo_radius })
}

/// `k`-dimensional volume of the simplex spanned by `k + 1` points of
/// `R^m`: `sqrt(det(DᵀD)) / k!`. Degenerate input yields zero.
pub fn simplex_volume<T: Real, V: AsRef<[T]>>(points: &[V]) -> T {
    if points.len() <= 1 {
        return if points.is_empty() { T::zero() } else { T::one() };
    }
    let diffs = differences(points);
    let k = diffs.len();
    let mut g = gram(&diffs);
    let mut det = T::one();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&a, &b| g[a][col].abs().partial_cmp(&g[b][col].abs()).unwrap())
            .unwrap();
        if g[piv][col] == T::zero() {
            return T::zero();
        }
        g.swap(col, piv);
        det = det * g[col][col];
        for row in col + 1..k {
            let f = g[row][col] / g[col][col];
            for c in col..k {
                let v = g[col][c];
                g[row][c] = g[row][c] - f * v;
            }
        }
    }
    let fact = (1..=k).fold(T::one(), |acc, i| acc * T::lit(i as f64));
    det.abs().sqrt() / fact
}

/// Indices `i` such that the facet opposite vertex `i` is visible from
/// `center`, i.e. separates `center` from the simplex within its affine
/// hull. `center` is expected to lie in that hull (as the foot point from
/// [`project_origin`] does).
pub fn visible_facets<T: Real, V: AsRef<[T]>>(points: &[V], center: &[T]) -> Result<Vec<usize>> {
    let coords = affine_coordinates(points, center)?;
    visible_from_coords(&coords)
}

pub(crate) fn visible_from_coords<T: Real>(coords: &[T]) -> Result<Vec<usize>> {
    if coords.len() == 1 {
        return Ok(Vec::new());
    }
    if coords.iter().any(|c| c.abs() <= T::RANK_TOL) {
        return Err(Error::TangencyAtTolerance);
    }
    Ok(coords.iter().enumerate().filter(|(_, &c)| c < T::zero()).map(|(i, _)| i).collect())
}
