//! Convex hull of points on `S^n ⊂ R^{n+1}` by beneath-beyond insertion.
//!
//! The hull is seeded with a greedy maximum-volume simplex. Each further
//! point locates one visible facet by scanning, grows the visible region
//! through facet adjacency, and replaces it by a cone over the horizon.
//! Facets are simplices stored by sorted vertex ids.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::PointCloud;
use crate::scalar::{dot, norm, Real};

/// Abstract simplex: strictly increasing point ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Face(Vec<usize>);

impl Face {
    /// Sorts `ids`; rejects empty input and repeated ids.
    pub fn new(mut ids: Vec<usize>) -> Result<Self> {
        ids.sort_unstable();
        if ids.is_empty() || ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain(format!("invalid face {ids:?}")));
        }
        Ok(Self(ids))
    }

    pub(crate) fn from_sorted(ids: Vec<usize>) -> Self {
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        Self(ids)
    }

    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    pub fn contains_vertex(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    /// True when every vertex of `self` is a vertex of `other`.
    pub fn is_subface_of(&self, other: &Face) -> bool {
        self.0.iter().all(|v| other.contains_vertex(*v))
    }

    /// Face with the given vertices removed.
    pub fn without(&self, remove: &[usize]) -> Option<Face> {
        let ids: Vec<usize> = self.0.iter().copied().filter(|v| !remove.contains(v)).collect();
        (!ids.is_empty()).then_some(Face(ids))
    }

    /// All nonempty subfaces, including `self`.
    pub fn subfaces(&self) -> impl Iterator<Item = Face> + '_ {
        let m = self.0.len();
        (1u32..(1 << m)).map(move |mask| {
            Face((0..m).filter(|i| mask & (1 << i) != 0).map(|i| self.0[i]).collect())
        })
    }
}

/// Boundary complex of `conv(X)` with outward facet planes.
#[derive(Debug, Clone)]
pub struct HullComplex<T> {
    cloud: PointCloud<T>,
    facets: Vec<Face>,
    normals: Vec<Vec<T>>,
    offsets: Vec<T>,
    adjacency: Vec<Vec<usize>>,
}

impl<T: Real> HullComplex<T> {
    pub fn cloud(&self) -> &PointCloud<T> {
        &self.cloud
    }

    /// Ambient sphere dimension `n`.
    pub fn n(&self) -> usize {
        self.cloud.n()
    }

    pub fn facets(&self) -> &[Face] {
        &self.facets
    }

    /// Outward unit normal `v` of facet `i`; the facet plane is `x·v = c`.
    pub fn normal(&self, i: usize) -> &[T] {
        &self.normals[i]
    }

    /// Offset `c` of facet `i`.
    pub fn offset(&self, i: usize) -> T {
        self.offsets[i]
    }

    /// `adjacency(i)[j]` is the facet sharing the ridge opposite the `j`-th
    /// vertex of facet `i`.
    pub fn adjacency(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    /// Largest `x·v − c` over all points and facets.
    pub fn containment_violation(&self) -> T {
        let mut worst = T::neg_infinity();
        for (v, &c) in self.normals.iter().zip(&self.offsets) {
            for p in self.cloud.points() {
                worst = worst.max(dot(v, p) - c);
            }
        }
        worst
    }

    /// Checks that adjacency is symmetric and every ridge has two facets.
    pub fn ridges_are_manifold(&self) -> bool {
        let mut ridge_count: HashMap<Face, usize> = HashMap::new();
        for f in &self.facets {
            for v in f.vertices() {
                *ridge_count.entry(f.without(&[*v]).unwrap()).or_default() += 1;
            }
        }
        if ridge_count.values().any(|&c| c != 2) {
            return false;
        }
        self.adjacency.iter().enumerate().all(|(i, nbs)| {
            nbs.iter().enumerate().all(|(j, &nb)| {
                let ridge = self.facets[i].without(&[self.facets[i].vertices()[j]]).unwrap();
                nb != i && ridge.is_subface_of(&self.facets[nb]) && self.adjacency[nb].contains(&i)
            })
        })
    }
}

struct Plane<T> {
    normal: Vec<T>,
    offset: T,
}

struct WorkFacet<T> {
    verts: Vec<usize>,
    neighbors: Vec<usize>,
    plane: Plane<T>,
    alive: bool,
}

/// Orthonormal basis of the span of `vectors` by modified Gram-Schmidt;
/// `None` when a vector is dependent at tolerance.
fn orthonormalize<T: Real>(vectors: Vec<Vec<T>>) -> Option<Vec<Vec<T>>> {
    let scale = vectors.iter().map(|v| norm(v)).fold(T::zero(), T::max);
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(vectors.len());
    for mut v in vectors {
        for _ in 0..2 {
            for b in &basis {
                let proj = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, &y)| *x = *x - proj * y);
            }
        }
        let len = norm(&v);
        if !(len > T::RANK_TOL * scale) {
            return None;
        }
        v.iter_mut().for_each(|x| *x = *x / len);
        basis.push(v);
    }
    Some(basis)
}

/// Hyperplane through `verts`, oriented so `interior` lies strictly below.
fn facet_plane<T: Real>(points: &[&[T]], verts: &[usize], interior: &[T]) -> Result<Plane<T>> {
    let d = interior.len();
    let base = points[verts[0]];
    let diffs = verts[1..]
        .iter()
        .map(|&v| points[v].iter().zip(base).map(|(&a, &b)| a - b).collect())
        .collect();
    let basis = orthonormalize(diffs)
        .ok_or_else(|| Error::NotGeneral(format!("flat facet {verts:?}")))?;
    // complete the basis with the coordinate axis of largest residual
    let mut best: Option<Vec<T>> = None;
    let mut best_len = T::neg_infinity();
    for axis in 0..d {
        let mut e = vec![T::zero(); d];
        e[axis] = T::one();
        for _ in 0..2 {
            for b in &basis {
                let proj = dot(&e, b);
                e.iter_mut().zip(b).for_each(|(x, &y)| *x = *x - proj * y);
            }
        }
        let len = norm(&e);
        if len > best_len {
            best_len = len;
            best = Some(e);
        }
    }
    let mut normal = best.unwrap();
    normal.iter_mut().for_each(|x| *x = *x / best_len);
    let offset = verts.iter().map(|&v| dot(&normal, points[v])).sum::<T>() / T::lit(verts.len() as f64);
    let side = dot(&normal, interior) - offset;
    if !(side.abs() > T::RANK_TOL) {
        return Err(Error::DegenerateInput("interior reference on a facet plane".into()));
    }
    if side > T::zero() {
        normal.iter_mut().for_each(|x| *x = -*x);
        return Ok(Plane { normal, offset: -offset });
    }
    Ok(Plane { normal, offset })
}

/// Greedy maximum-volume seed: repeatedly add the point farthest from the
/// affine hull of the points chosen so far.
fn initial_simplex<T: Real>(points: &[&[T]]) -> Result<Vec<usize>> {
    let d = points[0].len();
    let mut chosen = vec![0usize];
    let mut basis: Vec<Vec<T>> = Vec::new();
    let base = points[0];
    while chosen.len() < d + 1 {
        let mut best = (T::neg_infinity(), usize::MAX, Vec::new());
        for (i, p) in points.iter().enumerate() {
            let mut r: Vec<T> = p.iter().zip(base).map(|(&a, &b)| a - b).collect();
            for b in &basis {
                let proj = dot(&r, b);
                r.iter_mut().zip(b).for_each(|(x, &y)| *x = *x - proj * y);
            }
            let len = norm(&r);
            if len > best.0 {
                best = (len, i, r);
            }
        }
        let (len, idx, mut r) = best;
        if !(len > T::RANK_TOL) {
            return Err(Error::DegenerateInput("point cloud is not full-dimensional".into()));
        }
        r.iter_mut().for_each(|x| *x = *x / len);
        basis.push(r);
        chosen.push(idx);
    }
    Ok(chosen)
}

/// Builds the convex hull of a point cloud on `S^n`.
///
/// Every input point must end up as a hull vertex; a point that is not
/// strictly beyond some facet, or that is coplanar with a facet bordering
/// its visible region, is reported as a general-position violation.
pub fn build_hull<T: Real>(cloud: PointCloud<T>) -> Result<HullComplex<T>> {
    let n = cloud.n();
    let d = n + 1;
    let count = cloud.len();
    if count < d + 1 {
        return Err(Error::DegenerateInput(format!("{count} points cannot span R^{d}")));
    }
    let pts: Vec<&[T]> = cloud.points().iter().map(|p| p.coords()).collect();
    let seed = initial_simplex(&pts)?;
    let interior: Vec<T> = (0..d)
        .map(|c| seed.iter().map(|&i| pts[i][c]).sum::<T>() / T::lit(seed.len() as f64))
        .collect();

    let mut facets: Vec<WorkFacet<T>> = Vec::new();
    let mut sorted_seed = seed.clone();
    sorted_seed.sort_unstable();
    for &missing in &sorted_seed {
        let verts: Vec<usize> = sorted_seed.iter().copied().filter(|&v| v != missing).collect();
        let plane = facet_plane(&pts, &verts, &interior)?;
        facets.push(WorkFacet { verts, neighbors: Vec::new(), plane, alive: true });
    }
    // facet i omits sorted_seed[i]; across the ridge opposite v it meets the facet omitting v
    for i in 0..facets.len() {
        let nbs = facets[i]
            .verts
            .iter()
            .map(|v| sorted_seed.iter().position(|s| s == v).unwrap())
            .collect();
        facets[i].neighbors = nbs;
    }

    let in_seed: HashSet<usize> = seed.iter().copied().collect();
    let mut alive: Vec<usize> = (0..facets.len()).collect();
    let mut visible_flag: Vec<bool> = vec![false; facets.len()];

    for q in 0..count {
        if in_seed.contains(&q) {
            continue;
        }
        let x = pts[q];
        let height = |f: &WorkFacet<T>| dot(&f.plane.normal, x) - f.plane.offset;

        let start = alive
            .iter()
            .copied()
            .find(|&f| height(&facets[f]) > T::RANK_TOL)
            .ok_or_else(|| Error::NotGeneral(format!("point {q} is not a hull vertex")))?;

        let mut visible = vec![start];
        visible_flag[start] = true;
        let mut cursor = 0;
        while cursor < visible.len() {
            let f = visible[cursor];
            cursor += 1;
            for &nb in &facets[f].neighbors {
                if visible_flag[nb] {
                    continue;
                }
                let h = height(&facets[nb]);
                if h > T::RANK_TOL {
                    visible_flag[nb] = true;
                    visible.push(nb);
                } else if h.abs() <= T::RANK_TOL {
                    for &v in &visible {
                        visible_flag[v] = false;
                    }
                    return Err(Error::NotGeneral(format!("point {q} coplanar with a facet")));
                }
            }
        }

        // cone over the horizon
        let first_new = facets.len();
        let mut horizon: Vec<(Vec<usize>, usize)> = Vec::new();
        for &f in &visible {
            for (slot, &nb) in facets[f].neighbors.iter().enumerate() {
                if !visible_flag[nb] {
                    let ridge: Vec<usize> = facets[f]
                        .verts
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != slot)
                        .map(|(_, &v)| v)
                        .collect();
                    horizon.push((ridge, nb));
                }
            }
        }
        let mut open_ridges: HashMap<Vec<usize>, (usize, usize)> = HashMap::new();
        for (ridge, outer) in horizon {
            let id = facets.len();
            let mut verts = ridge.clone();
            let pos = verts.binary_search(&q).unwrap_err();
            verts.insert(pos, q);
            let plane = facet_plane(&pts, &verts, &interior)?;
            let mut neighbors = vec![usize::MAX; d];
            neighbors[pos] = outer;
            // re-link the outer facet across the shared ridge
            let outer_slot = facets[outer]
                .verts
                .iter()
                .position(|v| ridge.binary_search(v).is_err())
                .unwrap();
            facets[outer].neighbors[outer_slot] = id;
            for (slot, &w) in verts.iter().enumerate() {
                if w == q {
                    continue;
                }
                let key: Vec<usize> = verts.iter().copied().filter(|&v| v != w).collect();
                if let Some((other, other_slot)) = open_ridges.remove(&key) {
                    neighbors[slot] = other;
                    facets[other].neighbors[other_slot] = id;
                } else {
                    open_ridges.insert(key, (id, slot));
                }
            }
            facets.push(WorkFacet { verts, neighbors, plane, alive: true });
            visible_flag.push(false);
        }
        if !open_ridges.is_empty() {
            return Err(Error::NotGeneral(format!("unmatched horizon ridges at point {q}")));
        }
        for &f in &visible {
            facets[f].alive = false;
            visible_flag[f] = false;
        }
        alive.retain(|&f| facets[f].alive);
        alive.extend(first_new..facets.len());
    }

    let mut remap = vec![usize::MAX; facets.len()];
    for (new, &old) in alive.iter().enumerate() {
        remap[old] = new;
    }
    let mut out = HullComplex {
        cloud,
        facets: Vec::with_capacity(alive.len()),
        normals: Vec::with_capacity(alive.len()),
        offsets: Vec::with_capacity(alive.len()),
        adjacency: Vec::with_capacity(alive.len()),
    };
    for &old in &alive {
        let f = &facets[old];
        out.facets.push(Face::from_sorted(f.verts.clone()));
        out.normals.push(f.plane.normal.clone());
        out.offsets.push(f.plane.offset);
        out.adjacency.push(f.neighbors.iter().map(|&nb| remap[nb]).collect());
    }
    Ok(out)
}

/// All faces of the hull grouped by dimension `0..=n`, each group sorted.
pub fn enumerate_faces<T: Real>(hull: &HullComplex<T>) -> Vec<Vec<Face>> {
    faces_of(hull.facets(), hull.n())
}

pub(crate) fn faces_of<'a>(facets: impl IntoIterator<Item = &'a Face>, n: usize) -> Vec<Vec<Face>> {
    let mut by_dim: Vec<HashSet<Face>> = vec![HashSet::new(); n + 1];
    for f in facets {
        for sub in f.subfaces() {
            by_dim[sub.dim()].insert(sub);
        }
    }
    by_dim
        .into_iter()
        .map(|set| {
            let mut v: Vec<Face> = set.into_iter().collect();
            v.sort_unstable();
            v
        })
        .collect()
}

/// Alternating sum `Σ (−1)^j f_j` of face counts.
pub fn euler_characteristic(faces: &[Vec<Face>]) -> i64 {
    faces
        .iter()
        .enumerate()
        .map(|(j, f)| if j % 2 == 0 { f.len() as i64 } else { -(f.len() as i64) })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::UnitVector;

    fn cloud(points: &[&[f64]]) -> PointCloud<f64> {
        PointCloud::from_points(
            points.iter().map(|p| UnitVector::normalized(p.to_vec()).unwrap()).collect(),
        )
        .unwrap()
    }

    fn tetrahedron() -> PointCloud<f64> {
        cloud(&[&[1.0, 1.0, 1.0], &[1.0, -1.0, -1.0], &[-1.0, 1.0, -1.0], &[-1.0, -1.0, 1.0]])
    }

    #[test]
    fn face_basics() {
        let f = Face::new(vec![3, 1, 2]).unwrap();
        assert_eq!(f.vertices(), &[1, 2, 3]);
        assert_eq!(f.dim(), 2);
        assert_eq!(f.subfaces().count(), 7);
        assert!(Face::new(vec![1, 1]).is_err());
        assert!(Face::new(vec![]).is_err());
        assert_eq!(f.without(&[2]).unwrap().vertices(), &[1, 3]);
    }

    #[test]
    fn tetrahedron_hull() {
        let hull = build_hull(tetrahedron()).unwrap();
        assert_eq!(hull.facets().len(), 4);
        let faces = enumerate_faces(&hull);
        assert_eq!(faces.iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 6, 4]);
        assert!(hull.ridges_are_manifold());
        assert!(hull.containment_violation() <= 1e-9);
        for i in 0..4 {
            assert!(hull.offset(i) > 0.0);
        }
    }

    #[test]
    fn polygon_on_circle() {
        let angles = [0.1f64, 1.7, 2.9, 4.4, 5.5];
        let pts: Vec<Vec<f64>> = angles.iter().map(|a| vec![a.cos(), a.sin()]).collect();
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let hull = build_hull(cloud(&refs)).unwrap();
        let faces = enumerate_faces(&hull);
        assert_eq!(faces[0].len(), 5);
        assert_eq!(faces[1].len(), 5);
        // edges connect angular neighbours
        let mut expected: Vec<Face> =
            (0..5).map(|i| Face::new(vec![i, (i + 1) % 5]).unwrap()).collect();
        expected.sort();
        assert_eq!(faces[1], expected);
        assert!(hull.ridges_are_manifold());
    }

    #[test]
    fn too_few_and_flat_inputs() {
        let few = cloud(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert!(matches!(build_hull(few), Err(Error::DegenerateInput(_))));
        // all points on one great circle
        let flat = cloud(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[-1.0, 0.0, 0.0], &[0.0, -1.0, 0.0]]);
        assert!(matches!(build_hull(flat), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn cospherical_points_are_rejected() {
        // four points on one small circle plus a pole
        let z = 0.5f64;
        let r = (1.0 - z * z).sqrt();
        let pts = cloud(&[
            &[0.0, 0.0, -1.0],
            &[r, 0.0, z],
            &[0.0, r, z],
            &[-r, 0.0, z],
            &[0.0, -r, z],
        ]);
        assert!(matches!(build_hull(pts), Err(Error::NotGeneral(_))));
    }
}
