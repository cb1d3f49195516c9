//! Invariants of the special functions, the formulas built on them, and the
//! Monte Carlo constants.

use approx::assert_relative_eq;
use proptest::prelude::*;
use sphere_mosaic::constants::{draw_simplex, estimate_e, estimate_e_all, ConstantEstimate, ConstantTable};
use sphere_mosaic::sampling::stream_rng;
use sphere_mosaic::specfun::{beta, beta_inc, cap_area, gamma, gamma_lower, grassmannian_measure, sphere_area};
use sphere_mosaic::theory::{
    expected_intervals_asymptotic, expected_intervals_exact, expected_simplices, geodesic_threshold,
    typical_radius_cdf,
};

proptest! {
    #[test]
    fn beta_inc_monotone_and_complete(a in 0.1f64..8.0, b in 0.1f64..8.0, u in 0.0f64..1.0, du in 0.0f64..0.5) {
        let lo = beta_inc(u, a, b).unwrap();
        let hi = beta_inc((u + du).min(1.0), a, b).unwrap();
        prop_assert!(hi >= lo * (1.0 - 1e-14));
        let full = beta_inc(1.0, a, b).unwrap();
        prop_assert!((full * gamma(a + b) / (gamma(a) * gamma(b)) - 1.0).abs() <= 1e-10);
        prop_assert!((full / beta(a, b) - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn cap_area_antipodal_complement(theta in 0.0f64..=std::f64::consts::PI, n in 1usize..8) {
        let total = cap_area(theta, n).unwrap() + cap_area(std::f64::consts::PI - theta, n).unwrap();
        prop_assert!((total / sphere_area(n + 1) - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn cap_area_derivative_is_zonal_element(theta in 0.05f64..3.09, n in 1usize..7) {
        let h = 1e-5;
        let numeric = (cap_area(theta + h, n).unwrap() - cap_area(theta - h, n).unwrap()) / (2.0 * h);
        let exact = sphere_area(n) * theta.sin().powi(n as i32 - 1);
        prop_assert!((numeric / exact - 1.0).abs() <= 1e-6, "{numeric} vs {exact}");
    }

    #[test]
    fn gamma_lower_rises_to_gamma(k in 0.2f64..12.0) {
        let mut last = 0.0;
        for u in [0.0, 0.1, 1.0, 5.0, 20.0, 80.0, 400.0] {
            let g = gamma_lower(u, k).unwrap();
            prop_assert!(g >= last);
            last = g;
        }
        prop_assert!((last / gamma(k) - 1.0).abs() <= 1e-12);
        prop_assert_eq!(gamma_lower(f64::INFINITY, k).unwrap(), gamma(k));
    }

    #[test]
    fn grassmannian_duality(n in 2usize..9, k in 1usize..8) {
        prop_assume!(k < n);
        assert_relative_eq!(grassmannian_measure(k, n).unwrap(), grassmannian_measure(n - k, n).unwrap(), max_relative = 1e-12);
    }
}

fn table(n: usize, values: &[((usize, usize), f64)]) -> ConstantTable {
    let mut t = ConstantTable::new(n);
    for &((ell, k), c) in values {
        t.insert(ConstantEstimate { ell, k, n, e_mean: c, e_stderr: 0.0, c_value: c, c_stderr: 0.0, samples: 1, seed: 0 });
    }
    t
}

#[test]
fn exact_converges_to_asymptotic() {
    let n = 2;
    for (ell, k) in [(1, 1), (1, 2), (2, 2)] {
        for r0 in [0.5, 1.0, 2.0, f64::INFINITY] {
            let mut prev = f64::INFINITY;
            for rho in [1e2, 1e3, 1e4] {
                let ex = expected_intervals_exact(ell, k, n, rho, geodesic_threshold(r0, rho, n), 1.0).unwrap().value;
                let asy = expected_intervals_asymptotic(ell, k, n, rho, r0, 1.0).unwrap().value;
                let gap = (ex / asy - 1.0).abs();
                assert!(gap < prev, "({ell},{k}) R0={r0} rho={rho}: gap {gap} after {prev}");
                prev = gap;
            }
            assert!(prev < 0.05);
        }
    }
}

#[test]
fn typical_radius_cdf_is_a_distribution() {
    let t = table(2, &[((1, 1), 2.0), ((1, 2), 1.0), ((2, 2), 1.0)]);
    for j in 1..=2 {
        let mut last = 0.0;
        assert_eq!(typical_radius_cdf(j, 2, 0.0, &t).unwrap().value, 0.0);
        for i in 1..=60 {
            let g = typical_radius_cdf(j, 2, i as f64 * 0.05, &t).unwrap().value;
            assert!((0.0..=1.0).contains(&g) && g >= last);
            last = g;
        }
        assert!(last > 0.999);
        assert_eq!(typical_radius_cdf(j, 2, f64::INFINITY, &t).unwrap().value, 1.0);
    }
}

#[test]
fn simplex_count_equals_sum_over_types() {
    let cs = [((1, 1), 2.1), ((1, 2), 0.9), ((2, 2), 1.05), ((1, 3), 0.3), ((2, 3), 0.7), ((3, 3), 0.4)];
    for n in [2usize, 3] {
        let vals: Vec<_> = cs.iter().copied().filter(|((_, k), _)| *k <= n).collect();
        let t = table(n, &vals);
        let rho = 17.0;
        for j in 1..=n {
            let direct = expected_simplices(j, n, rho, f64::INFINITY, &t).unwrap().value;
            let mut by_type = 0.0;
            for &((ell, k), c) in &vals {
                if ell <= j && j <= k {
                    let b = sphere_mosaic::specfun::binomial(k - ell, k - j);
                    by_type += b * expected_intervals_asymptotic(ell, k, n, rho, f64::INFINITY, c).unwrap().value;
                }
            }
            assert_relative_eq!(direct, by_type, max_relative = 1e-12);
        }
    }
}

#[test]
fn separating_counts_partition_every_sample() {
    for k in 1..=4 {
        let mut rng = stream_rng(1, 2, 3);
        let mut hist = vec![0usize; k + 1];
        for _ in 0..5000 {
            let d = draw_simplex(&mut rng, k);
            assert!(d.volume >= 0.0);
            if let Some(s) = d.separating {
                hist[s] += 1;
            }
        }
        // ℓ = k − separating ≥ 1 always
        assert_eq!(hist[k], 0);
        // with ℓ = k the origin is inside: probability 2^{-k} for k+1 points (Wendel)
        let inside = hist[0] as f64 / 5000.0;
        if k > 1 {
            assert!((inside - 0.5f64.powi(k as i32)).abs() < 0.03, "k={k}: {inside}");
        }
    }
}

#[test]
fn stderr_shrinks_with_root_samples() {
    let a = estimate_e(1, 2, 2, 50_000, 8).unwrap();
    let b = estimate_e(1, 2, 2, 200_000, 8).unwrap();
    let ratio = a.e_stderr / b.e_stderr;
    assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
    let all = estimate_e_all(2, 2, 50_000, 8).unwrap();
    assert_eq!(all[0], a);
}
