//! Property tests for geometry, hull, and mosaic, including a brute-force
//! oracle for the radius function.

use std::collections::HashMap;

use proptest::prelude::*;
use sphere_mosaic::geom::{geodesic_distance, smallest_circumscribed_cap, UnitVector};
use sphere_mosaic::hull::{build_hull, enumerate_faces, euler_characteristic};
use sphere_mosaic::mosaic::{build_mosaic, census, morse_euler, radius_and_intervals};
use sphere_mosaic::sampling::{sample_stream, ProcessSpec};
use sphere_mosaic::{Face, PointCloud};

fn uniform_cloud(n: usize, count: usize, seed: u64) -> PointCloud {
    sample_stream(&ProcessSpec::uniform(n, count, seed), 0, 0).unwrap()
}

/// Smallest radius of an empty cap with all of `q` on its boundary, found by
/// trying every superset of `q` with at most `n + 1` points.
fn brute_force_radius(pts: &[Vec<f64>], q: &[usize], n: usize) -> Option<f64> {
    let others: Vec<usize> = (0..pts.len()).filter(|i| !q.contains(i)).collect();
    let extra_max = n + 1 - q.len();
    let mut best: Option<f64> = None;
    let mut chosen = Vec::new();
    fn rec(
        pts: &[Vec<f64>],
        q: &[usize],
        others: &[usize],
        start: usize,
        left: usize,
        chosen: &mut Vec<usize>,
        best: &mut Option<f64>,
    ) {
        let mut ids: Vec<usize> = q.iter().chain(chosen.iter()).copied().collect();
        ids.sort_unstable();
        let sub: Vec<&[f64]> = ids.iter().map(|&i| pts[i].as_slice()).collect();
        if let Ok(cap) = smallest_circumscribed_cap(&sub) {
            let empty = pts
                .iter()
                .enumerate()
                .all(|(i, p)| ids.contains(&i) || geodesic_distance(cap.center.coords(), p).unwrap() > cap.geo_radius + 1e-12);
            if empty && best.is_none_or(|b| cap.geo_radius < b) {
                *best = Some(cap.geo_radius);
            }
        }
        if left == 0 {
            return;
        }
        for i in start..others.len() {
            chosen.push(others[i]);
            rec(pts, q, others, i + 1, left - 1, chosen, best);
            chosen.pop();
        }
    }
    rec(pts, q, &others, 0, extra_max, &mut chosen, &mut best);
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn geodesic_triangle_inequality(seed in any::<u64>(), n in 1usize..5) {
        let c = uniform_cloud(n, n + 2, seed);
        let p = c.points();
        let d = |a: usize, b: usize| geodesic_distance(&p[a], &p[b]).unwrap();
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-12);
        prop_assert!((d(0, 1) - d(1, 0)).abs() <= 1e-15);
        prop_assert!(d(0, 0) == 0.0);
        prop_assert!(d(0, 1) <= std::f64::consts::PI);
    }

    #[test]
    fn hull_is_a_sphere_and_partition_holds(seed in any::<u64>(), n in 1usize..4, extra in 0usize..40) {
        let count = n + 2 + extra;
        let cloud = uniform_cloud(n, count, seed);
        let hull = match build_hull(cloud) { Ok(h) => h, Err(e) => { prop_assume!(!e.is_general_position()); unreachable!() } };
        prop_assert!(hull.ridges_are_manifold());
        prop_assert!(hull.containment_violation() <= 1e-9);
        let faces = enumerate_faces(&hull);
        prop_assert_eq!(euler_characteristic(&faces), 1 + if n % 2 == 0 { 1 } else { -1 });
        if n == 2 && faces[0].len() == count {
            prop_assert_eq!(faces[2].len(), 2 * count - 4);
            prop_assert_eq!(faces[1].len(), 3 * count - 6);
        }
        let mosaic = build_mosaic(hull).unwrap();
        let intervals = match radius_and_intervals(&mosaic) { Ok(iv) => iv, Err(e) => { prop_assume!(!e.is_general_position()); unreachable!() } };
        let c = census(&intervals, 1.0, n).unwrap();
        prop_assert_eq!(c.partition_total(), mosaic.face_count());
        let euler = morse_euler(&intervals);
        let hemisphere_free = mosaic.delaunay_facet_flags().iter().all(|&f| f);
        if hemisphere_free {
            prop_assert_eq!(euler, 1 + if n % 2 == 0 { 1 } else { -1 });
            prop_assert_eq!(c.count(0, 0), count);
        }
    }

    #[test]
    fn radius_matches_brute_force(seed in any::<u64>(), count in 5usize..=12) {
        let n = 2;
        let cloud = uniform_cloud(n, count, seed);
        let pts: Vec<Vec<f64>> = cloud.points().iter().map(|p| p.coords().to_vec()).collect();
        let mosaic = build_mosaic(build_hull(cloud).unwrap()).unwrap();
        let intervals = radius_and_intervals(&mosaic).unwrap();
        let mut radius: HashMap<Face, f64> = HashMap::new();
        for iv in &intervals {
            for q in iv.members() {
                radius.insert(q, iv.geo_radius);
            }
        }
        for dim_faces in mosaic.faces() {
            for f in dim_faces {
                let r = radius[f];
                let oracle = brute_force_radius(&pts, f.vertices(), n);
                prop_assert!(oracle.is_some(), "mosaic face {f:?} has no empty cap");
                prop_assert!((oracle.unwrap() - r).abs() <= 1e-9, "face {f:?}: {r} vs {oracle:?}");
                // radius is monotone along faces
                for sub in f.subfaces() {
                    prop_assert!(radius[&sub] <= r + 1e-12);
                }
            }
        }
        // triangles with an empty circumcap are exactly the mosaic's
        for a in 0..count { for b in a + 1..count { for c in b + 1..count {
            let t = Face::new(vec![a, b, c]).unwrap();
            let sub: Vec<&[f64]> = [a, b, c].iter().map(|&i| pts[i].as_slice()).collect();
            let cap = smallest_circumscribed_cap(&sub).unwrap();
            let inside = pts.iter().enumerate().any(|(i, p)| ![a, b, c].contains(&i) && geodesic_distance(cap.center.coords(), p).unwrap() < cap.geo_radius);
            prop_assert_eq!(mosaic.contains(&t), !inside);
        }}}
    }

    #[test]
    fn census_is_permutation_invariant(seed in any::<u64>(), count in 8usize..40, shift in 1usize..7) {
        let n = 2;
        let cloud = uniform_cloud(n, count, seed);
        let mut pts: Vec<UnitVector<f64>> = cloud.points().to_vec();
        pts.rotate_left(shift % count);
        pts.reverse();
        let permuted = PointCloud::from_points(pts).unwrap();
        let run = |c: PointCloud| {
            let m = build_mosaic(build_hull(c).unwrap()).unwrap();
            census(&radius_and_intervals(&m).unwrap(), 1.0, n).unwrap()
        };
        let a = run(cloud);
        let b = run(permuted);
        prop_assert_eq!(a.simplex_counts.clone(), b.simplex_counts.clone());
        for (key, ra) in &a.radii {
            let rb = &b.radii[key];
            prop_assert_eq!(ra.len(), rb.len());
            for (x, y) in ra.iter().zip(rb) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn f32_pipeline_agrees_with_f64() {
    // f32 works at a coarse tolerance, so some draws are rejected and redrawn
    let mut compared = 0;
    for seed in 0..10 {
        let cloud = uniform_cloud(2, 60, seed);
        let pts32: Vec<sphere_mosaic::UnitVectorF32> = cloud.points().iter().map(|p| p.cast()).collect();
        let c32 = sphere_mosaic::sampling::PointCloud::from_points(pts32).unwrap();
        let Ok(m32) = build_hull(c32).and_then(build_mosaic) else { continue };
        let Ok(iv32) = radius_and_intervals(&m32) else { continue };
        let m64 = build_mosaic(build_hull(cloud).unwrap()).unwrap();
        let iv64 = radius_and_intervals(&m64).unwrap();
        assert_eq!(m64.faces(), m32.faces());
        assert_eq!(m64.faces().iter().map(Vec::len).collect::<Vec<_>>(), vec![60, 174, 116]);
        let r32: HashMap<&Face, f32> = iv32.iter().map(|iv| (&iv.upper, iv.geo_radius)).collect();
        for iv in &iv64 {
            assert!((r32[&iv.upper] as f64 - iv.geo_radius).abs() < 1e-4);
        }
        compared += 1;
    }
    assert!(compared >= 5, "only {compared} of 10 f32 draws were usable");
}
