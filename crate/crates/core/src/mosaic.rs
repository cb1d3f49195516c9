//! Spherical Delaunay mosaic and the interval decomposition of its radius
//! function.
//!
//! A hull facet belongs to the mosaic when the origin lies strictly on the
//! inner side of its plane, so that its empty cap is the small one. Every
//! mosaic face whose smallest circumscribed cap is empty is the upper end
//! `U` of exactly one interval; the lower end `L` drops from `U` the
//! vertices opposite the facets visible from the cap's Euclidean center.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{circum_with_coords, visible_from_coords};
use crate::hull::{faces_of, Face, HullComplex};
use crate::scalar::{dot, Real};
use crate::specfun::binomial;

#[derive(Debug, Clone)]
pub struct Mosaic<T> {
    hull: HullComplex<T>,
    delaunay_flags: Vec<bool>,
    faces: Vec<Vec<Face>>,
}

impl<T: Real> Mosaic<T> {
    pub fn hull(&self) -> &HullComplex<T> {
        &self.hull
    }

    pub fn n(&self) -> usize {
        self.hull.n()
    }

    /// Per hull facet: does its small cap hold no points.
    pub fn delaunay_facet_flags(&self) -> &[bool] {
        &self.delaunay_flags
    }

    /// Mosaic faces grouped by dimension, each group sorted.
    pub fn faces(&self) -> &[Vec<Face>] {
        &self.faces
    }

    pub fn face_count(&self) -> usize {
        self.faces.iter().map(Vec::len).sum()
    }

    pub fn contains(&self, face: &Face) -> bool {
        self.faces.get(face.dim()).is_some_and(|fs| fs.binary_search(face).is_ok())
    }

    /// Mosaic faces as point coordinates, for face `f`.
    fn coords_of(&self, face: &Face) -> Vec<&[T]> {
        let pts = self.hull.cloud().points();
        face.vertices().iter().map(|&v| pts[v].coords()).collect()
    }
}

/// Flags Delaunay facets and collects all their faces.
pub fn build_mosaic<T: Real>(hull: HullComplex<T>) -> Result<Mosaic<T>> {
    let mut flags = Vec::with_capacity(hull.facets().len());
    for i in 0..hull.facets().len() {
        let c = hull.offset(i);
        if c.abs() <= T::RANK_TOL {
            return Err(Error::AmbiguousFacet);
        }
        flags.push(c > T::zero());
    }
    let faces = faces_of(
        hull.facets().iter().zip(&flags).filter(|(_, &f)| f).map(|(f, _)| f),
        hull.n(),
    );
    Ok(Mosaic { hull, delaunay_flags: flags, faces })
}

/// Interval `[L, U]` of the radius function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorseInterval<T> {
    pub lower: Face,
    pub upper: Face,
    pub ell: usize,
    pub k: usize,
    /// Geodesic radius of the common circumcap.
    pub geo_radius: T,
}

impl<T: Real> MorseInterval<T> {
    pub fn is_critical(&self) -> bool {
        self.ell == self.k
    }

    /// Geodesic radius scaled to unit density: `θ ρ^{1/n}`.
    pub fn normalized_radius(&self, density: f64, n: usize) -> f64 {
        self.geo_radius.as_f64() * density.powf(1.0 / n as f64)
    }

    /// The `2^{k−ℓ}` faces `Q` with `L ⊆ Q ⊆ U`.
    pub fn members(&self) -> Vec<Face> {
        let free: Vec<usize> = self
            .upper
            .vertices()
            .iter()
            .copied()
            .filter(|v| !self.lower.contains_vertex(*v))
            .collect();
        (0u32..(1 << free.len()))
            .map(|mask| {
                let mut ids = self.lower.vertices().to_vec();
                ids.extend((0..free.len()).filter(|i| mask & (1 << i) != 0).map(|i| free[i]));
                ids.sort_unstable();
                Face::from_sorted(ids)
            })
            .collect()
    }
}

/// Interval emitted by face `upper`, if its smallest circumscribed cap is
/// empty.
fn interval_for<T: Real>(mosaic: &Mosaic<T>, flat: &[T], upper: &Face) -> Result<Option<MorseInterval<T>>> {
    if upper.dim() == 0 {
        return Ok(Some(MorseInterval {
            lower: upper.clone(),
            upper: upper.clone(),
            ell: 0,
            k: 0,
            geo_radius: T::zero(),
        }));
    }
    let verts = mosaic.coords_of(upper);
    let (data, coords) = circum_with_coords(&verts)?;
    let center = data.cap_center();
    let m = center.len();
    for (i, w) in flat.chunks_exact(m).enumerate() {
        if upper.contains_vertex(i) {
            continue;
        }
        let gap = dot(w, &center) - data.height;
        if gap > T::INCIDENCE_TOL {
            return Ok(None);
        }
        if gap.abs() <= T::INCIDENCE_TOL {
            return Err(Error::CapBoundary);
        }
    }
    let visible = visible_from_coords(&coords)?;
    let drop: Vec<usize> = visible.iter().map(|&i| upper.vertices()[i]).collect();
    let lower = upper
        .without(&drop)
        .ok_or_else(|| Error::PartitionFailure { face: upper.vertices().to_vec(), count: 0 })?;
    Ok(Some(MorseInterval { ell: lower.dim(), k: upper.dim(), lower, upper: upper.clone(), geo_radius: data.geo_radius }))
}

/// Decomposes the mosaic into intervals of the radius function and checks
/// that they partition it.
pub fn radius_and_intervals<T: Real>(mosaic: &Mosaic<T>) -> Result<Vec<MorseInterval<T>>> {
    let flat: Vec<T> = mosaic.hull.cloud().points().iter().flat_map(|p| p.iter().copied()).collect();
    let all: Vec<&Face> = mosaic.faces.iter().flatten().collect();
    let found: Vec<Option<MorseInterval<T>>> = all
        .par_iter()
        .map(|f| interval_for(mosaic, &flat, f))
        .collect::<Result<_>>()?;
    let intervals: Vec<MorseInterval<T>> = found.into_iter().flatten().collect();

    let mut cover: HashMap<Face, usize> = HashMap::with_capacity(all.len());
    for iv in &intervals {
        for q in iv.members() {
            *cover.entry(q).or_default() += 1;
        }
    }
    for f in &all {
        let c = cover.remove(*f).unwrap_or(0);
        if c != 1 {
            return Err(Error::PartitionFailure { face: f.vertices().to_vec(), count: c });
        }
    }
    if let Some((f, c)) = cover.into_iter().next() {
        // member outside the mosaic
        return Err(Error::PartitionFailure { face: f.vertices().to_vec(), count: c });
    }
    Ok(intervals)
}

/// `Σ (−1)^k` over critical intervals: the Euler characteristic of the
/// mosaic.
pub fn morse_euler<T: Real>(intervals: &[MorseInterval<T>]) -> i64 {
    intervals
        .iter()
        .filter(|iv| iv.is_critical())
        .map(|iv| if iv.k % 2 == 0 { 1 } else { -1 })
        .sum()
}

/// Hull faces per dimension that are absent from the mosaic.
pub fn non_delaunay_face_count<T: Real>(hull: &HullComplex<T>, mosaic: &Mosaic<T>) -> Vec<usize> {
    let all = faces_of(hull.facets(), hull.n());
    all.iter()
        .map(|fs| fs.iter().filter(|f| !mosaic.contains(f)).count())
        .collect()
}

/// Interval statistics of one mosaic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalCensus {
    pub n: usize,
    pub density: f64,
    /// Sorted geodesic radii per type `(ℓ, k)`.
    pub radii: BTreeMap<(usize, usize), Vec<f64>>,
    /// Number of `j`-simplices, `j = 0..=n`, reconstructed from the types.
    pub simplex_counts: Vec<usize>,
}

impl IntervalCensus {
    /// Number of intervals of type `(ℓ, k)`.
    pub fn count(&self, ell: usize, k: usize) -> usize {
        self.radii.get(&(ell, k)).map_or(0, Vec::len)
    }

    fn scale(&self) -> f64 {
        self.density.powf(1.0 / self.n as f64)
    }

    /// Normalized radii `θ ρ^{1/n}` of type `(ℓ, k)`, ascending.
    pub fn normalized_radii(&self, ell: usize, k: usize) -> Vec<f64> {
        let s = self.scale();
        self.radii.get(&(ell, k)).map_or_else(Vec::new, |r| r.iter().map(|x| x * s).collect())
    }

    /// Intervals of type `(ℓ, k)` with normalized radius at most `r0`.
    pub fn count_within(&self, ell: usize, k: usize, r0: f64) -> usize {
        let theta0 = r0 / self.scale();
        self.radii
            .get(&(ell, k))
            .map_or(0, |r| r.partition_point(|&x| x <= theta0))
    }

    /// `j`-simplices with normalized radius at most `r0`.
    pub fn simplices_within(&self, j: usize, r0: f64) -> usize {
        self.radii
            .keys()
            .filter(|&&(ell, k)| ell <= j && j <= k)
            .map(|&(ell, k)| binomial(k - ell, j - ell) as usize * self.count_within(ell, k, r0))
            .sum()
    }

    /// Normalized radii of all `j`-simplices (each simplex carries the
    /// radius of its interval), ascending.
    pub fn simplex_radii(&self, j: usize) -> Vec<f64> {
        let s = self.scale();
        let mut out = Vec::new();
        for (&(ell, k), radii) in &self.radii {
            if ell <= j && j <= k {
                let mult = binomial(k - ell, j - ell) as usize;
                for r in radii {
                    out.extend(std::iter::repeat_n(r * s, mult));
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    /// `Σ 2^{k−ℓ} c_{ℓ,k}`: the number of faces covered.
    pub fn partition_total(&self) -> usize {
        self.radii.iter().map(|(&(ell, k), r)| r.len() << (k - ell)).sum()
    }
}

/// Tabulates intervals by type; radii are normalized with `density` on
/// demand.
pub fn census<T: Real>(intervals: &[MorseInterval<T>], density: f64, n: usize) -> Result<IntervalCensus> {
    if !(density > 0.0) {
        return Err(Error::Domain(format!("density {density} must be positive")));
    }
    let mut radii: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for iv in intervals {
        radii.entry((iv.ell, iv.k)).or_default().push(iv.geo_radius.as_f64());
    }
    radii.values_mut().for_each(|r| r.sort_by(f64::total_cmp));
    let mut simplex_counts = vec![0usize; n + 1];
    for (j, slot) in simplex_counts.iter_mut().enumerate() {
        *slot = radii
            .iter()
            .filter(|(&(ell, k), _)| ell <= j && j <= k)
            .map(|(&(ell, k), r)| binomial(k - ell, j - ell) as usize * r.len())
            .sum();
    }
    Ok(IntervalCensus { n, density, radii, simplex_counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::UnitVector;
    use crate::hull::build_hull;
    use crate::sampling::PointCloud;

    fn cloud(points: &[&[f64]]) -> PointCloud<f64> {
        PointCloud::from_points(
            points.iter().map(|p| UnitVector::normalized(p.to_vec()).unwrap()).collect(),
        )
        .unwrap()
    }

    fn tetra() -> Mosaic<f64> {
        let c = cloud(&[&[1.0, 1.0, 1.0], &[1.0, -1.0, -1.0], &[-1.0, 1.0, -1.0], &[-1.0, -1.0, 1.0]]);
        build_mosaic(build_hull(c).unwrap()).unwrap()
    }

    #[test]
    fn tetrahedron_intervals() {
        let m = tetra();
        assert!(m.delaunay_facet_flags().iter().all(|&f| f));
        assert_eq!(m.face_count(), 14);
        let ivs = radius_and_intervals(&m).unwrap();
        let c = census(&ivs, 1.0, 2).unwrap();
        assert_eq!(c.count(0, 0), 4);
        assert_eq!(c.count(1, 1), 6);
        assert_eq!(c.count(2, 2), 4);
        assert_eq!(c.radii.len(), 3);
        let edge = (1.0f64 / 3f64.sqrt()).acos();
        let tri = (1.0f64 / 3.0).acos();
        assert!(c.radii[&(1, 1)].iter().all(|r| (r - edge).abs() < 1e-9));
        assert!(c.radii[&(2, 2)].iter().all(|r| (r - tri).abs() < 1e-9));
        assert_eq!(c.partition_total(), 14);
        assert_eq!(c.simplex_counts, vec![4, 6, 4]);
        assert_eq!(morse_euler(&ivs), 2);
    }

    #[test]
    fn circle_intervals_are_critical() {
        let angles = [0.3f64, 1.1, 2.6, 3.3, 4.9];
        let pts: Vec<Vec<f64>> = angles.iter().map(|a| vec![a.cos(), a.sin()]).collect();
        let refs: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
        let m = build_mosaic(build_hull(cloud(&refs)).unwrap()).unwrap();
        let ivs = radius_and_intervals(&m).unwrap();
        let c = census(&ivs, 1.0, 1).unwrap();
        assert_eq!(c.count(0, 0), 5);
        assert_eq!(c.count(1, 1), 5);
        let mut gaps: Vec<f64> = (0..5)
            .map(|i| {
                let next = if i == 4 { angles[0] + 2.0 * std::f64::consts::PI } else { angles[i + 1] };
                (next - angles[i]) / 2.0
            })
            .collect();
        gaps.sort_by(f64::total_cmp);
        for (a, b) in gaps.iter().zip(&c.radii[&(1, 1)]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn hemisphere_cluster_has_non_delaunay_facets() {
        let c = cloud(&[
            &[0.1, 0.0, 1.0],
            &[-0.1, 0.0, 1.0],
            &[0.0, 0.5, 0.85],
            &[0.0, -0.5, 0.85],
        ]);
        let hull = build_hull(c).unwrap();
        let m = build_mosaic(hull.clone()).unwrap();
        assert!(m.delaunay_facet_flags().iter().any(|&f| !f));
        let missing = non_delaunay_face_count(&hull, &m);
        assert!(missing[2] >= 1);
        let ivs = radius_and_intervals(&m).unwrap();
        // two triangles glued along an edge: a disk
        assert_eq!(morse_euler(&ivs), 1);
    }

    #[test]
    fn empty_census() {
        let c = census::<f64>(&[], 2.0, 2).unwrap();
        assert_eq!(c.partition_total(), 0);
        assert_eq!(c.simplex_counts, vec![0, 0, 0]);
        assert!(census::<f64>(&[], 0.0, 2).is_err());
    }

    #[test]
    fn members_of_interval() {
        let iv = MorseInterval {
            lower: Face::new(vec![2]).unwrap(),
            upper: Face::new(vec![1, 2, 5]).unwrap(),
            ell: 0,
            k: 2,
            geo_radius: 0.3,
        };
        let mut m = iv.members();
        m.sort();
        let expect: Vec<Face> = [vec![1, 2], vec![1, 2, 5], vec![2], vec![2, 5]]
            .into_iter()
            .map(|v| Face::new(v).unwrap())
            .collect();
        assert_eq!(m, expect);
    }
}
