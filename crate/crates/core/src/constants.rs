//! Monte Carlo estimation of the constants `E_{ℓ,k}^n`, `C_{ℓ,k}^n`, and
//! `D_j^n` that scale the expected interval and simplex counts.
//!
//! `E_{ℓ,k}^n` is the mean of `Vol(u)^{n−k+1}` restricted to the event that
//! exactly `k−ℓ` facets of the random simplex `u` separate it from the
//! origin, where `u` is `k+1` uniform points on `S^{k−1}`. `C` multiplies
//! `E` by a closed-form prefactor. Types with `ℓ = 0` are exact: one
//! critical vertex per point and no other intervals containing vertices.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{affine_coordinates, simplex_volume};
use crate::sampling::{stream_rng, uniform_direction};
use crate::specfun::{binomial, factorial, gamma, grassmannian_measure, sphere_area};

/// Samples per parallel batch; fixes the reduction layout.
pub const BATCH_SIZE: usize = 1 << 14;
/// Default number of samples per constant.
pub const DEFAULT_SAMPLES: usize = 1_000_000;
const SEPARATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub ell: usize,
    pub k: usize,
    pub n: usize,
    pub e_mean: f64,
    pub e_stderr: f64,
    pub c_value: f64,
    pub c_stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DConstant {
    pub j: usize,
    pub n: usize,
    pub value: f64,
    pub stderr: f64,
}

/// `‖G(k,n)‖ Γ(k) n^{k−1} k!^{n−k} σ_k^{k+1} / ((k+1) σ_n^k)`.
pub fn prefactor(k: usize, n: usize) -> Result<f64> {
    if k < 1 || k > n {
        return Err(Error::Domain(format!("prefactor needs 1 <= k <= n, got k={k}, n={n}")));
    }
    let g = grassmannian_measure(k, n)?;
    let kf = k as f64;
    Ok(g * gamma(kf) * (n as f64).powi(k as i32 - 1) * factorial(k).powi((n - k) as i32)
        * sphere_area(k).powi(k as i32 + 1)
        / ((kf + 1.0) * sphere_area(n).powi(k as i32)))
}

fn check_indices(ell: usize, k: usize, n: usize) -> Result<()> {
    if !(1 <= ell && ell <= k && k <= n) {
        return Err(Error::Domain(format!("need 1 <= ell <= k <= n, got ({ell}, {k}, {n})")));
    }
    Ok(())
}

/// Outcome of one simplex draw on `S^{k−1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexDraw {
    pub volume: f64,
    /// Facets separating the simplex from the origin; `None` for a
    /// degenerate (zero-volume) simplex.
    pub separating: Option<usize>,
}

/// Draws `k + 1` uniform points on `S^{k−1}` and classifies the simplex;
/// redraws when the origin is within tolerance of a facet plane.
pub fn draw_simplex<R: rand::Rng + ?Sized>(rng: &mut R, k: usize) -> SimplexDraw {
    loop {
        let pts: Vec<Vec<f64>> = (0..=k).map(|_| uniform_direction(rng, k)).collect();
        let volume = simplex_volume(&pts);
        if volume == 0.0 {
            return SimplexDraw { volume, separating: None };
        }
        let origin = vec![0.0; k];
        let coords = match affine_coordinates(&pts, &origin) {
            Ok(c) => c,
            Err(_) => return SimplexDraw { volume: 0.0, separating: None },
        };
        if coords.iter().any(|c| c.abs() <= SEPARATION_TOL) {
            continue;
        }
        let separating = coords.iter().filter(|&&c| c < 0.0).count();
        return SimplexDraw { volume, separating: Some(separating) };
    }
}

#[derive(Clone)]
struct Moments {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

/// Mean and standard error of `f(rng)` over `samples` draws, processed in
/// fixed-size batches keyed by `(seed, batch, stream)` and merged in batch
/// order so the result does not depend on thread scheduling.
pub fn batched_mean<F>(samples: usize, seed: u64, stream: u64, f: F) -> (f64, f64)
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Sync,
{
    let batches = samples.div_ceil(BATCH_SIZE);
    let parts: Vec<(f64, f64)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let size = BATCH_SIZE.min(samples - b * BATCH_SIZE);
            let mut rng = stream_rng(seed, b as u64, stream);
            (0..size).fold((0.0, 0.0), |(s, s2), _| {
                let x = f(&mut rng);
                (s + x, s2 + x * x)
            })
        })
        .collect();
    let (sum, sum_sq) = parts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    mean_and_stderr(sum, sum_sq, samples)
}

fn mean_and_stderr(sum: f64, sum_sq: f64, samples: usize) -> (f64, f64) {
    let nf = samples as f64;
    let mean = sum / nf;
    if samples < 2 {
        return (mean, f64::INFINITY);
    }
    let var = ((sum_sq / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

/// Estimates `E_{ℓ,k}^n` for every `ℓ = 1..=k` from one shared sample.
pub fn estimate_e_all(k: usize, n: usize, samples: usize, seed: u64) -> Result<Vec<ConstantEstimate>> {
    check_indices(1, k, n)?;
    if samples < 2 {
        return Err(Error::Domain("need at least two samples".into()));
    }
    let stream = ((n as u64) << 16) | k as u64;
    let batches = samples.div_ceil(BATCH_SIZE);
    let exponent = (n - k + 1) as i32;
    let parts: Vec<Moments> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let size = BATCH_SIZE.min(samples - b * BATCH_SIZE);
            let mut rng = stream_rng(seed, b as u64, stream);
            let mut m = Moments { sum: vec![0.0; k + 1], sum_sq: vec![0.0; k + 1] };
            for _ in 0..size {
                let draw = draw_simplex(&mut rng, k);
                if let Some(sep) = draw.separating {
                    let w = draw.volume.powi(exponent);
                    m.sum[sep] += w;
                    m.sum_sq[sep] += w * w;
                }
            }
            m
        })
        .collect();
    let mut total = Moments { sum: vec![0.0; k + 1], sum_sq: vec![0.0; k + 1] };
    for p in parts {
        for i in 0..=k {
            total.sum[i] += p.sum[i];
            total.sum_sq[i] += p.sum_sq[i];
        }
    }
    let pre = prefactor(k, n)?;
    Ok((1..=k)
        .map(|ell| {
            let sep = k - ell;
            let (mean, se) = mean_and_stderr(total.sum[sep], total.sum_sq[sep], samples);
            ConstantEstimate {
                ell,
                k,
                n,
                e_mean: mean,
                e_stderr: se,
                c_value: pre * mean,
                c_stderr: pre * se,
                samples,
                seed,
            }
        })
        .collect())
}

/// Estimates `E_{ℓ,k}^n` and the matching `C_{ℓ,k}^n`.
pub fn estimate_e(ell: usize, k: usize, n: usize, samples: usize, seed: u64) -> Result<ConstantEstimate> {
    check_indices(ell, k, n)?;
    Ok(estimate_e_all(k, n, samples, seed)?.swap_remove(ell - 1))
}

/// `C = prefactor · E`, with the standard error scaled alike.
pub fn constant_c(est: &ConstantEstimate) -> Result<(f64, f64)> {
    let pre = prefactor(est.k, est.n)?;
    Ok((pre * est.e_mean, pre * est.e_stderr))
}

/// `C_{ℓ,k}^n` values with standard errors for one `n`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConstantTable {
    pub n: usize,
    entries: BTreeMap<(usize, usize), ConstantEstimate>,
}

impl ConstantTable {
    pub fn new(n: usize) -> Self {
        Self { n, entries: BTreeMap::new() }
    }

    pub fn insert(&mut self, est: ConstantEstimate) {
        self.entries.insert((est.ell, est.k), est);
    }

    /// Estimates all `1 ≤ ℓ ≤ k ≤ n`.
    pub fn estimate(n: usize, samples: usize, seed: u64) -> Result<Self> {
        let mut table = Self::new(n);
        for k in 1..=n {
            for est in estimate_e_all(k, n, samples, seed)? {
                table.insert(est);
            }
        }
        Ok(table)
    }

    /// `(C, stderr)`; types with `ℓ = 0` are exact.
    pub fn get(&self, ell: usize, k: usize) -> Result<(f64, f64)> {
        if ell > k || k > self.n {
            return Err(Error::Domain(format!("no constant for ({ell}, {k}) at n = {}", self.n)));
        }
        if ell == 0 {
            return Ok((if k == 0 { 1.0 } else { 0.0 }, 0.0));
        }
        self.entries
            .get(&(ell, k))
            .map(|e| (e.c_value, e.c_stderr))
            .ok_or(Error::MissingConstant { ell, k })
    }

    pub fn estimates(&self) -> impl Iterator<Item = &ConstantEstimate> {
        self.entries.values()
    }

    /// Writes `n,ell,k,E_mean,E_stderr,C,C_stderr,samples,seed`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "ell", "k", "E_mean", "E_stderr", "C", "C_stderr", "samples", "seed"])?;
        for e in self.entries.values() {
            w.write_record([
                e.n.to_string(),
                e.ell.to_string(),
                e.k.to_string(),
                crate::report::fmt_num(e.e_mean),
                crate::report::fmt_num(e.e_stderr),
                crate::report::fmt_num(e.c_value),
                crate::report::fmt_num(e.c_stderr),
                e.samples.to_string(),
                e.seed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV written by [`ConstantTable::write_csv`]; rows for other
    /// dimensions than `n` are ignored.
    pub fn read_csv<R: Read>(input: R, n: usize) -> Result<Self> {
        let mut table = Self::new(n);
        let mut r = csv::Reader::from_reader(input);
        for rec in r.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).ok_or_else(|| Error::Parse(format!("missing column {i}")));
            let int = |i: usize| -> Result<u64> {
                field(i)?.trim().parse().map_err(|e| Error::Parse(format!("column {i}: {e}")))
            };
            let real = |i: usize| -> Result<f64> {
                field(i)?.trim().parse().map_err(|e| Error::Parse(format!("column {i}: {e}")))
            };
            if int(0)? as usize != n {
                continue;
            }
            table.insert(ConstantEstimate {
                n,
                ell: int(1)? as usize,
                k: int(2)? as usize,
                e_mean: real(3)?,
                e_stderr: real(4)?,
                c_value: real(5)?,
                c_stderr: real(6)?,
                samples: int(7)? as usize,
                seed: int(8)?,
            });
        }
        Ok(table)
    }
}

/// `D_j^n = Σ_{k=j}^n Σ_{ℓ=0}^j binom(k−ℓ, k−j) C_{ℓ,k}^n`, with standard
/// errors combined in quadrature.
pub fn constant_d(j: usize, n: usize, table: &ConstantTable) -> Result<DConstant> {
    if j > n {
        return Err(Error::Domain(format!("j = {j} exceeds n = {n}")));
    }
    let mut value = 0.0;
    let mut var = 0.0;
    for k in j..=n {
        for ell in 0..=j {
            let b = binomial(k - ell, k - j);
            let (c, se) = table.get(ell, k)?;
            value += b * c;
            var += (b * se).powi(2);
        }
    }
    Ok(DConstant { j, n, value, stderr: var.sqrt() })
}
