//! Expected-count formulas for interval types and simplices, the typical
//! radius distribution, and a Monte Carlo check of the integral-geometric
//! change of variables behind them.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::constants::{batched_mean, draw_simplex, ConstantTable};
use crate::error::{Error, Result};
use crate::geom::project_origin;
use crate::quadrature::Integrator;
use crate::report::fmt_num;
use crate::sampling::uniform_direction;
use crate::specfun::{
    ball_volume, binomial, cap_area, factorial, gamma, gamma_lower, grassmannian_measure, sphere_area,
};

const QUAD_TOL: f64 = 1e-10;

/// A formula value with its numerical integration error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryValue {
    pub value: f64,
    pub quadrature_error: f64,
    pub formula_tag: &'static str,
}

impl TheoryValue {
    fn closed(value: f64, formula_tag: &'static str) -> Self {
        Self { value, quadrature_error: 0.0, formula_tag }
    }
}

fn check_type(ell: usize, k: usize, n: usize) -> Result<()> {
    if !(1 <= ell && ell <= k && k <= n) {
        return Err(Error::Domain(format!("need 1 <= ell <= k <= n, got ({ell}, {k}, {n})")));
    }
    Ok(())
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("{name} must be positive and finite, got {x}")));
    }
    Ok(())
}

/// `γ_v(k)/Γ(k)` with `v = R₀^n ν_n`; `R₀ = ∞` gives 1.
fn radius_factor(k: usize, n: usize, r0: f64) -> Result<f64> {
    if r0.is_nan() || r0 < 0.0 {
        return Err(Error::Domain(format!("threshold must be >= 0, got {r0}")));
    }
    if k == 0 {
        return Ok(1.0);
    }
    let v = if r0.is_infinite() { f64::INFINITY } else { r0.powi(n as i32) * ball_volume(n) };
    Ok(gamma_lower(v, k as f64)? / gamma(k as f64))
}

/// The geodesic threshold `θ₀` matching normalized radius `R₀` at density
/// `ρ`, clamped to the hemisphere.
pub fn geodesic_threshold(r0: f64, density: f64, n: usize) -> f64 {
    (r0 / density.powf(1.0 / n as f64)).min(std::f64::consts::FRAC_PI_2)
}

/// The inner integral of the finite-density count,
/// `∫₀^{θ₀} 2ρ^k sin^{kn−1}φ cos^{n−k}φ e^{−ρA(φ)} dφ`.
pub fn finite_density_integral(k: usize, n: usize, density: f64, theta0: f64) -> Result<(f64, f64)> {
    if theta0 <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let ln_rho = density.ln();
    let kf = k as f64;
    let integrand = |phi: f64| {
        if phi <= 0.0 {
            return 0.0;
        }
        let area = cap_area(phi, n).unwrap_or(f64::INFINITY);
        let log = std::f64::consts::LN_2 + kf * ln_rho + (kf * n as f64 - 1.0) * phi.sin().ln()
            + (n - k) as f64 * phi.cos().ln()
            - density * area;
        if log.is_nan() { 0.0 } else { log.exp() }
    };
    // the mass sits near the scale where ρ ν_n φ^n ≈ k
    let scale = (kf / (density * ball_volume(n))).powf(1.0 / n as f64);
    let breaks: Vec<f64> = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0].iter().map(|m| m * scale).collect();
    let r = Integrator::new(QUAD_TOL).integrate(integrand, 0.0, theta0, &breaks)?;
    Ok((r.value, r.error))
}

/// Expected number of intervals of type `(ℓ,k)` with geodesic radius at
/// most `θ₀`, exact at density `ρ` given the constant `C_{ℓ,k}^n`.
pub fn expected_intervals_exact(ell: usize, k: usize, n: usize, density: f64, theta0: f64, c: f64) -> Result<TheoryValue> {
    check_type(ell, k, n)?;
    check_positive("density", density)?;
    if theta0.is_nan() || !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta0) {
        return Err(Error::Domain(format!("theta0 must lie in [0, pi/2], got {theta0}")));
    }
    let pre = density * sphere_area(n + 1) * sphere_area(n).powi(k as i32)
        / (2.0 * gamma(k as f64) * (n as f64).powi(k as i32 - 1))
        * c;
    let (integral, err) = finite_density_integral(k, n, density, theta0)?;
    Ok(TheoryValue { value: pre * integral, quadrature_error: (pre * err).abs(), formula_tag: "eq5" })
}

/// Large-density limit of [`finite_density_integral`], `2Γ(k)/(n ν_n^k)`.
pub fn finite_density_integral_limit(k: usize, n: usize) -> f64 {
    2.0 * gamma(k as f64) / (n as f64 * ball_volume(n).powi(k as i32))
}

/// Expected number of intervals of type `(ℓ,k)` with normalized radius at
/// most `R₀`, to first order in `ρ`.
pub fn expected_intervals_asymptotic(ell: usize, k: usize, n: usize, density: f64, r0: f64, c: f64) -> Result<TheoryValue> {
    check_type(ell, k, n)?;
    check_positive("density", density)?;
    let v = density * sphere_area(n + 1) * radius_factor(k, n, r0)? * c;
    Ok(TheoryValue::closed(v, "eq6"))
}

/// Uniform-model version: `N` points in place of `ρσ_{n+1}`.
pub fn expected_intervals_uniform(ell: usize, k: usize, n: usize, count: usize, r0: f64, c: f64) -> Result<TheoryValue> {
    check_type(ell, k, n)?;
    let v = count as f64 * radius_factor(k, n, r0)? * c;
    Ok(TheoryValue::closed(v, "uniform"))
}

fn simplex_sum(j: usize, n: usize, r0: f64, table: &ConstantTable) -> Result<f64> {
    if j > n || table.n != n {
        return Err(Error::Domain(format!("need j <= n and a table for n = {n}")));
    }
    let mut total = 0.0;
    for k in j..=n {
        let f = radius_factor(k, n, r0)?;
        for ell in 0..=j {
            total += f * binomial(k - ell, k - j) * table.get(ell, k)?.0;
        }
    }
    Ok(total)
}

/// Expected number of `j`-simplices with normalized radius at most `R₀`.
pub fn expected_simplices(j: usize, n: usize, density: f64, r0: f64, table: &ConstantTable) -> Result<TheoryValue> {
    check_positive("density", density)?;
    let s = simplex_sum(j, n, r0, table)?;
    Ok(TheoryValue::closed(density * sphere_area(n + 1) * s, "eq8"))
}

/// Distribution function of the normalized radius of the typical
/// `j`-simplex.
pub fn typical_radius_cdf(j: usize, n: usize, r0: f64, table: &ConstantTable) -> Result<TheoryValue> {
    let total = simplex_sum(j, n, f64::INFINITY, table)?;
    if total <= 0.0 {
        return Err(Error::Domain(format!("D_{j}^{n} is not positive")));
    }
    let v = simplex_sum(j, n, r0, table)? / total;
    Ok(TheoryValue::closed(v.clamp(0.0, 1.0), "eq9"))
}

/// Rotationally symmetric test function `h(t)` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RadialProfile {
    Constant(f64),
    Linear,
    /// `1` for `t ≤ threshold`, else `0`.
    Indicator(f64),
    /// Piecewise-linear through sorted `(t, h)` knots, flat beyond the ends.
    Tabulated(Vec<(f64, f64)>),
}

impl RadialProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Linear => t,
            Self::Indicator(s) => f64::from(t <= *s),
            Self::Tabulated(knots) => {
                let i = knots.partition_point(|&(x, _)| x < t);
                match (i, knots.len()) {
                    (_, 0) => 0.0,
                    (0, _) => knots[0].1,
                    (i, len) if i == len => knots[len - 1].1,
                    (i, _) => {
                        let (x0, y0) = knots[i - 1];
                        let (x1, y1) = knots[i];
                        y0 + (y1 - y0) * (t - x0) / (x1 - x0)
                    }
                }
            }
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Indicator(s) => vec![*s],
            Self::Tabulated(knots) => knots.iter().map(|k| k.0).collect(),
            _ => Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::Constant(c) => c.is_finite() && *c >= 0.0,
            Self::Linear => true,
            Self::Indicator(s) => s.is_finite(),
            Self::Tabulated(k) => {
                k.windows(2).all(|w| w[0].0 < w[1].0) && k.iter().all(|p| p.1.is_finite() && p.1 >= 0.0)
            }
        };
        if ok { Ok(()) } else { Err(Error::Domain(format!("invalid radial profile {self:?}"))) }
    }
}

impl std::str::FromStr for RadialProfile {
    type Err = Error;

    /// Accepts `t`, `indicator:<s>`, `table:t0=h0,t1=h1,...`, or a constant.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |e: &dyn std::fmt::Display| Error::Parse(format!("profile {s:?}: {e}"));
        let p = if s == "t" {
            Self::Linear
        } else if let Some(x) = s.strip_prefix("indicator:") {
            Self::Indicator(x.parse().map_err(|e| bad(&e))?)
        } else if let Some(list) = s.strip_prefix("table:") {
            let knots = list
                .split(',')
                .map(|kv| {
                    let (a, b) = kv.split_once('=').ok_or_else(|| bad(&"expected t=h"))?;
                    Ok((a.trim().parse().map_err(|e| bad(&e))?, b.trim().parse().map_err(|e| bad(&e))?))
                })
                .collect::<Result<Vec<(f64, f64)>>>()?;
            Self::Tabulated(knots)
        } else {
            Self::Constant(s.parse().map_err(|e| bad(&e))?)
        };
        p.validate()?;
        Ok(p)
    }
}

/// Both sides of the integral-geometric identity with their error bars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BpCheck {
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub rhs_err: f64,
}

impl BpCheck {
    pub fn combined_error(&self) -> f64 {
        self.lhs_se.hypot(self.rhs_err)
    }

    pub fn agrees(&self, sigmas: f64) -> bool {
        (self.lhs - self.rhs).abs() <= sigmas * self.combined_error()
    }
}

const BP_STREAM_LHS: u64 = 0xb9_0001;
const BP_STREAM_RHS: u64 = 0xb9_0002;

/// Compares `∫ h(t(x)) dx` over `(S^n)^{k+1}`, estimated directly, with the
/// same integral rewritten through planes, foot points, and simplex shapes.
/// `t(x)` is the squared distance from the affine hull's foot point to the
/// points, i.e. `1 − ‖p‖²`.
pub fn bp_check(n: usize, k: usize, profile: &RadialProfile, samples: usize, seed: u64) -> Result<BpCheck> {
    if !(1 <= k && k <= n) {
        return Err(Error::Domain(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    if samples < 2 {
        return Err(Error::Domain("need at least two samples".into()));
    }
    profile.validate()?;
    let area = sphere_area(n + 1);

    let (mean_h, se_h) = batched_mean(samples, seed, BP_STREAM_LHS, |rng| loop {
        let pts: Vec<Vec<f64>> = (0..=k).map(|_| uniform_direction(rng, n + 1)).collect();
        if let Ok(c) = project_origin::<f64, _>(&pts) {
            break profile.eval(c.t);
        }
    });
    let scale_l = area.powi(k as i32 + 1);

    let exponent = (n - k + 1) as i32;
    let (mean_v, se_v) = batched_mean(samples, seed, BP_STREAM_RHS, |rng| draw_simplex(rng, k).volume.powi(exponent));
    let vol_scale = sphere_area(k).powi(k as i32 + 1) * factorial(k).powi(exponent);

    let kn = (k * n) as i32;
    let integrand = |phi: f64| {
        let (s, c) = phi.sin_cos();
        2.0 * s.powi(kn - 1) * c.powi((n - k) as i32) * profile.eval(s * s)
    };
    let breaks: Vec<f64> = profile
        .breakpoints()
        .into_iter()
        .filter(|t| (0.0..=1.0).contains(t))
        .map(|t| t.sqrt().asin())
        .collect();
    let j = Integrator::new(QUAD_TOL).integrate(integrand, 0.0, std::f64::consts::FRAC_PI_2, &breaks)?;
    let outer = 0.5 * area * grassmannian_measure(k, n)? * vol_scale;
    Ok(BpCheck {
        lhs: scale_l * mean_h,
        lhs_se: scale_l * se_h,
        rhs: outer * j.value * mean_v,
        rhs_err: outer * (j.value * se_v + j.error * mean_v),
    })
}

/// One row of a theory table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryRow {
    pub formula_tag: String,
    pub n: usize,
    /// `None` for simplex-level formulas.
    pub ell: Option<usize>,
    pub k_or_j: usize,
    pub rho_or_n: f64,
    pub threshold: f64,
    pub value: f64,
    pub error: f64,
}

/// Writes rows as `formula_tag,n,ell,k_or_j,rho_or_N,threshold,value,error`.
pub fn write_theory_csv<W: Write>(rows: &[TheoryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["formula_tag", "n", "ell", "k_or_j", "rho_or_N", "threshold", "value", "error"])?;
    for r in rows {
        w.write_record([
            r.formula_tag.clone(),
            r.n.to_string(),
            r.ell.map(|e| e.to_string()).unwrap_or_default(),
            r.k_or_j.to_string(),
            fmt_num(r.rho_or_n),
            fmt_num(r.threshold),
            fmt_num(r.value),
            fmt_num(r.error),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::ConstantEstimate;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn table_n1() -> ConstantTable {
        let mut t = ConstantTable::new(1);
        t.insert(ConstantEstimate {
            ell: 1, k: 1, n: 1, e_mean: 1.0, e_stderr: 0.0, c_value: 1.0, c_stderr: 0.0, samples: 1, seed: 0,
        });
        t
    }

    #[test]
    fn asymptotic_examples() {
        let rho = 3.0;
        assert_eq!(expected_intervals_asymptotic(1, 1, 1, rho, 0.0, 1.0).unwrap().value, 0.0);
        assert_relative_eq!(
            expected_intervals_asymptotic(1, 2, 2, rho, f64::INFINITY, 0.7).unwrap().value,
            rho * 4.0 * PI * 0.7,
            max_relative = 1e-14
        );
        // v = R0 ν_1 = 2 R0 = 1
        let v = expected_intervals_asymptotic(1, 1, 1, rho, 0.5, 1.0).unwrap().value;
        assert_relative_eq!(v, rho * 2.0 * PI * (1.0 - (-1.0f64).exp()), max_relative = 1e-12);
        assert!(expected_intervals_asymptotic(2, 1, 1, rho, 1.0, 1.0).is_err());
    }

    #[test]
    fn uniform_matches_poisson_at_equal_mean() {
        let n = 2;
        let count = 500;
        let rho = count as f64 / sphere_area(n + 1);
        for r0 in [0.3, 1.0, f64::INFINITY] {
            let u = expected_intervals_uniform(1, 2, n, count, r0, 1.3).unwrap().value;
            let p = expected_intervals_asymptotic(1, 2, n, rho, r0, 1.3).unwrap().value;
            assert_relative_eq!(u, p, max_relative = 1e-12);
        }
        assert_eq!(expected_intervals_uniform(1, 1, 1, 0, 1.0, 1.0).unwrap().value, 0.0);
    }

    #[test]
    fn exact_formula_basics() {
        assert_eq!(expected_intervals_exact(1, 1, 2, 100.0, 0.0, 1.0).unwrap().value, 0.0);
        let mut last = 0.0;
        for theta in [0.01, 0.05, 0.1, 0.3, 1.0, PI / 2.0] {
            let v = expected_intervals_exact(1, 2, 2, 100.0, theta, 1.0).unwrap();
            assert!(v.value >= last);
            assert!(v.quadrature_error <= 1e-8 * v.value.max(1e-300));
            last = v.value;
        }
        assert!(expected_intervals_exact(1, 1, 2, 100.0, 2.0, 1.0).is_err());
        assert!(expected_intervals_exact(1, 1, 2, -1.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn n1_exact_has_closed_form() {
        // on the circle: integrand 2ρ e^{-2ρφ}, prefactor ρσ_2·σ_1/2 = 2πρ
        let rho = 7.0;
        let theta = 0.2;
        let v = expected_intervals_exact(1, 1, 1, rho, theta, 1.0).unwrap().value;
        assert_relative_eq!(v, 2.0 * PI * rho * (1.0 - (-2.0 * rho * theta).exp()), max_relative = 1e-10);
    }

    #[test]
    fn exact_integral_approaches_limit() {
        for (k, n) in [(1, 2), (2, 2), (2, 3)] {
            let big = finite_density_integral(k, n, 1e6, 0.5).unwrap().0;
            assert_relative_eq!(big, finite_density_integral_limit(k, n), max_relative = 1e-2);
        }
    }

    #[test]
    fn simplex_and_cdf_examples() {
        let t = table_n1();
        let rho = 2.5;
        assert_relative_eq!(
            expected_simplices(1, 1, rho, f64::INFINITY, &t).unwrap().value,
            rho * 2.0 * PI,
            max_relative = 1e-14
        );
        assert_eq!(expected_simplices(1, 1, rho, 0.0, &t).unwrap().value, 0.0);
        for r0 in [0.0, 0.1, 0.7, 3.0] {
            let g = typical_radius_cdf(1, 1, r0, &t).unwrap().value;
            assert_relative_eq!(g, 1.0 - (-2.0 * r0).exp(), max_relative = 1e-12, epsilon = 1e-15);
        }
        assert_eq!(typical_radius_cdf(1, 1, f64::INFINITY, &t).unwrap().value, 1.0);
        assert!(matches!(expected_simplices(1, 2, rho, 1.0, &ConstantTable::new(2)), Err(Error::MissingConstant { .. })));
    }

    #[test]
    fn profiles_parse_and_evaluate() {
        assert_eq!("t".parse::<RadialProfile>().unwrap(), RadialProfile::Linear);
        assert_eq!("1".parse::<RadialProfile>().unwrap(), RadialProfile::Constant(1.0));
        let ind: RadialProfile = "indicator:0.5".parse().unwrap();
        assert_eq!((ind.eval(0.5), ind.eval(0.51)), (1.0, 0.0));
        let tab: RadialProfile = "table:0=0,1=2".parse().unwrap();
        assert_relative_eq!(tab.eval(0.25), 0.5);
        assert!("table:1=0,0=1".parse::<RadialProfile>().is_err());
        assert!("-1".parse::<RadialProfile>().is_err());
    }

    #[test]
    fn bp_constant_profile_n1() {
        let r = bp_check(1, 1, &RadialProfile::Constant(1.0), 20_000, 1).unwrap();
        assert_relative_eq!(r.lhs, 4.0 * PI * PI, max_relative = 1e-12);
        assert!(r.agrees(3.0), "{r:?}");
    }

    #[test]
    fn theory_csv_header() {
        let mut buf = Vec::new();
        write_theory_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "formula_tag,n,ell,k_or_j,rho_or_N,threshold,value,error\n");
    }
}
