//! Fisher-metric isometry checks against a path-length oracle.

use proptest::prelude::*;
use rand::Rng;
use sphere_mosaic::fisher::{fisher_delaunay, fisher_distance, to_sphere};
use sphere_mosaic::Distribution;
use sphere_mosaic::geom::geodesic_distance;
use sphere_mosaic::mosaic::morse_euler;
use sphere_mosaic::quadrature::Integrator;
use sphere_mosaic::sampling::stream_rng;

/// Length of `t ↦ γ(t)` under `ds² = ½ Σ dx_i² / x_i`, using a
/// fourth-order difference stencil for the velocity and adaptive quadrature.
fn fisher_path_length<F: Fn(f64) -> Vec<f64>>(curve: F) -> f64 {
    let h = 1e-4;
    let speed = |t: f64| {
        let (m2, m1, p1, p2) = (curve(t - 2.0 * h), curve(t - h), curve(t + h), curve(t + 2.0 * h));
        let x = curve(t);
        let s: f64 = (0..x.len())
            .map(|i| {
                let v = (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * h);
                v * v / x[i]
            })
            .sum();
        (0.5 * s).sqrt()
    };
    Integrator::new(1e-9).integrate(speed, 0.0, 1.0, &[]).unwrap().value
}

/// The preimage of the great-circle arc between the images of `x` and `y`.
fn geodesic_curve(x: &Distribution, y: &Distribution) -> impl Fn(f64) -> Vec<f64> {
    let a = to_sphere(x).into_inner();
    let b = to_sphere(y).into_inner();
    let cos: f64 = a.iter().zip(&b).map(|(p, q)| p * q).sum();
    let theta = cos.clamp(-1.0, 1.0).acos();
    move |t: f64| {
        let (wa, wb) = (((1.0 - t) * theta).sin() / theta.sin(), (t * theta).sin() / theta.sin());
        a.iter().zip(&b).map(|(p, q)| (wa * p + wb * q).powi(2)).collect()
    }
}

fn random_interior(rng: &mut impl Rng, n: usize) -> Distribution {
    let w: Vec<f64> = (0..=n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    Distribution::new(w.into_iter().map(|x| x / s).collect()).unwrap()
}

#[test]
fn closed_form_matches_path_integral() {
    let mut rng = stream_rng(31, 0, 0);
    for i in 0..100 {
        let n = 1 + i % 4;
        let x = random_interior(&mut rng, n);
        let y = random_interior(&mut rng, n);
        let oracle = fisher_path_length(geodesic_curve(&x, &y));
        let d = fisher_distance(&x, &y).unwrap();
        assert!((oracle - d).abs() <= 1e-6, "{oracle} vs {d}");
    }
}

proptest! {
    #[test]
    fn isometry_and_triangle_inequality(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = stream_rng(seed, 0, 0);
        let x = random_interior(&mut rng, n);
        let y = random_interior(&mut rng, n);
        let z = random_interior(&mut rng, n);
        let dxy = fisher_distance(&x, &y).unwrap();
        let sphere = geodesic_distance(&to_sphere(&x), &to_sphere(&y)).unwrap();
        prop_assert_eq!(dxy, std::f64::consts::SQRT_2 * sphere);
        prop_assert!(fisher_distance(&x, &z).unwrap() <= dxy + fisher_distance(&y, &z).unwrap() + 1e-10);
        let u = to_sphere(&x);
        prop_assert!(u.iter().all(|&c| c >= 0.0));
        prop_assert!((u.iter().map(|c| c * c).sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(dxy <= std::f64::consts::SQRT_2 * std::f64::consts::FRAC_PI_2 + 1e-12);
    }
}

#[test]
fn clustered_distributions_give_a_disk() {
    let mut rng = stream_rng(5, 0, 0);
    let pts: Vec<Distribution> = (0..40)
        .map(|_| {
            let w: Vec<f64> = (0..3).map(|_| 1.0 + rng.random_range(-0.1..0.1)).collect();
            let s: f64 = w.iter().sum();
            Distribution::new(w.into_iter().map(|x| x / s).collect()).unwrap()
        })
        .collect();
    let fm = fisher_delaunay(&pts).unwrap();
    assert_eq!(morse_euler(&fm.intervals), 1);
    assert!(fm.non_delaunay[2] > 0);
    for (g, f) in fm.geodesic_radii().iter().zip(fm.fisher_radii()) {
        assert_eq!(f, g * std::f64::consts::SQRT_2);
    }
}

#[test]
fn seven_points_distances_agree_both_ways() {
    let seven = [
        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        [0.6, 0.2, 0.2],
        [0.2, 0.6, 0.2],
        [0.2, 0.2, 0.6],
        [0.45, 0.45, 0.1],
        [0.1, 0.45, 0.45],
        [0.45, 0.1, 0.45],
    ];
    let pts: Vec<Distribution> = seven.iter().map(|p| Distribution::new(p.to_vec()).unwrap()).collect();
    for a in &pts {
        for b in &pts {
            let bc: f64 = a.probs().iter().zip(b.probs()).map(|(x, y)| (x * y).sqrt()).sum();
            let closed = std::f64::consts::SQRT_2 * bc.min(1.0).acos();
            assert!((fisher_distance(a, b).unwrap() - closed).abs() <= 1e-7_f64.min(1e-10 + 1e-7 * closed));
        }
    }
}
