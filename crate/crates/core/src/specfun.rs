//! Special functions: sphere areas, ball volumes, complete and incomplete
//! Beta and Gamma functions, spherical cap areas, and the measure of the
//! Grassmannian.
//!
//! Everything here works in `f64`; the incomplete functions target a
//! relative accuracy of about 1e-12.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const CF_MAX_ITER: usize = 10_000;

/// `n!` as a float; exact up to `22!` and correctly rounded beyond.
pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Binomial coefficient; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn lanczos_sum(x: f64) -> f64 {
    LANCZOS_COEF[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS_COEF[0], |acc, (i, &c)| acc + c / (x + (i + 1) as f64))
}

/// Natural logarithm of `Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let t = x + LANCZOS_G + 0.5;
        0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + lanczos_sum(x).ln()
    }
}

/// `Γ(x)`. Positive integers are evaluated as exact factorials.
pub fn gamma(x: f64) -> f64 {
    if x.is_infinite() && x > 0.0 {
        return f64::INFINITY;
    }
    if x > 0.0 && x.fract() == 0.0 && x <= 171.0 {
        return factorial(x as usize - 1);
    }
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else if x > 140.0 {
        ln_gamma(x).exp()
    } else {
        let x = x - 1.0;
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * lanczos_sum(x)
    }
}

/// Complete Beta function `B(a, b) = Γ(a)Γ(b)/Γ(a+b)`.
pub fn beta(a: f64, b: f64) -> f64 {
    if a + b < 140.0 {
        gamma(a) * gamma(b) / gamma(a + b)
    } else {
        (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
    }
}

/// Modified Lentz evaluation of the incomplete Beta continued fraction.
fn beta_cf(u: f64, a: f64, b: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * u / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * u / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * u / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Incomplete Beta function `B_u(a, b) = ∫₀ᵘ t^{a-1} (1-t)^{b-1} dt`
/// (not regularized).
pub fn beta_inc(u: f64, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) || u.is_nan() {
        return Err(Error::Domain(format!("beta_inc: u = {u} outside [0, 1]")));
    }
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!("beta_inc: a = {a}, b = {b} must be positive")));
    }
    Ok(beta_inc_unchecked(u, a, b))
}

fn beta_inc_unchecked(u: f64, a: f64, b: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    if u == 1.0 {
        return beta(a, b);
    }
    if u < (a + 1.0) / (a + b + 2.0) {
        let front = (a * u.ln() + b * (-u).ln_1p()).exp();
        front * beta_cf(u, a, b) / a
    } else {
        let w = 1.0 - u;
        let front = (b * w.ln() + a * u.ln()).exp();
        beta(a, b) - front * beta_cf(w, b, a) / b
    }
}

/// Lower incomplete Gamma function `γ_u(k) = ∫₀ᵘ t^{k-1} e^{-t} dt`.
/// `u = +∞` yields the complete `Γ(k)`.
pub fn gamma_lower(u: f64, k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::Domain(format!("gamma_lower: k = {k} must be positive")));
    }
    if !(u >= 0.0) {
        return Err(Error::Domain(format!("gamma_lower: u = {u} must be nonnegative")));
    }
    Ok(gamma_lower_unchecked(u, k))
}

fn gamma_lower_unchecked(u: f64, k: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    if u.is_infinite() {
        return gamma(k);
    }
    let log_front = -u + k * u.ln();
    if u < k + 1.0 {
        let mut ap = k;
        let mut del = 1.0 / k;
        let mut sum = del;
        for _ in 0..CF_MAX_ITER {
            ap += 1.0;
            del *= u / ap;
            sum += del;
            if del.abs() < sum.abs() * CF_EPS {
                break;
            }
        }
        sum * log_front.exp()
    } else {
        // upper tail by continued fraction, then complement
        let mut b = u + 1.0 - k;
        let mut c = 1.0 / CF_TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=CF_MAX_ITER {
            let i = i as f64;
            let an = -i * (i - k);
            b += 2.0;
            d = an * d + b;
            if d.abs() < CF_TINY {
                d = CF_TINY;
            }
            c = b + an / c;
            if c.abs() < CF_TINY {
                c = CF_TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < CF_EPS {
                break;
            }
        }
        gamma(k) - log_front.exp() * h
    }
}

/// Regularized lower incomplete Gamma `γ_u(k)/Γ(k)`.
pub fn gamma_lower_regularized(u: f64, k: f64) -> Result<f64> {
    Ok((gamma_lower(u, k)? / gamma(k)).clamp(0.0, 1.0))
}

/// `σ_n`, the area of the unit sphere `S^{n-1} ⊂ R^n`.
pub fn sphere_area(n: usize) -> f64 {
    assert!(n >= 1, "sphere_area requires n >= 1");
    // σ_{n+2} = 2π σ_n / n
    let (mut m, mut area) = if n % 2 == 1 { (1, 2.0) } else { (2, 2.0 * PI) };
    while m < n {
        area *= 2.0 * PI / m as f64;
        m += 2;
    }
    area
}

/// `ν_n`, the volume of the unit ball in `R^n`.
pub fn ball_volume(n: usize) -> f64 {
    sphere_area(n) / n as f64
}

/// Fraction of `S^n` covered by a cap of geodesic radius `θ ≤ π/2`.
fn cap_fraction_small(theta: f64, n: usize) -> f64 {
    let s = theta.sin().powi(2).min(1.0);
    let a = n as f64 / 2.0;
    0.5 * beta_inc_unchecked(s, a, 0.5) / beta(a, 0.5)
}

/// Fraction of `S^n` covered by a cap of geodesic radius `θ ∈ [0, π]`.
pub fn cap_fraction(theta: f64, n: usize) -> Result<f64> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Domain(format!("cap radius {theta} outside [0, π]")));
    }
    if n == 0 {
        return Err(Error::Domain("cap_fraction requires n >= 1".into()));
    }
    Ok(if theta <= PI / 2.0 {
        cap_fraction_small(theta, n)
    } else {
        1.0 - cap_fraction_small(PI - theta, n)
    })
}

/// Area `A(θ)` of a cap with geodesic radius `θ` on the unit `S^n`.
pub fn cap_area(theta: f64, n: usize) -> Result<f64> {
    Ok(cap_fraction(theta, n)? * sphere_area(n + 1))
}

/// Measure of the Grassmannian of `k`-planes through the origin of `R^n`.
pub fn grassmannian_measure(k: usize, n: usize) -> Result<f64> {
    if k < 1 || k > n {
        return Err(Error::Domain(format!("grassmannian G({k},{n}) needs 1 <= k <= n")));
    }
    let num: f64 = (n - k + 1..=n).map(sphere_area).product();
    let den: f64 = (1..=k).map(sphere_area).product();
    Ok(num / den)
}
