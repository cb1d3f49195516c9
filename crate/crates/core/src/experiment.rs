//! Batch experiments: repeated sampling, mosaic construction, interval
//! census, and comparison of the averaged counts with theory.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{ConstantTable, DEFAULT_SAMPLES};
use crate::error::{Error, Result};
use crate::hull::build_hull;
use crate::mosaic::{build_mosaic, census, morse_euler, non_delaunay_face_count, radius_and_intervals, IntervalCensus};
use crate::report::Format;
use crate::sampling::{sample_stream, Model, PointCloud, ProcessSpec};
use crate::specfun::{gamma, gamma_lower, sphere_area, ball_volume};
use crate::theory::{
    expected_intervals_asymptotic, expected_intervals_exact, expected_simplices, geodesic_threshold,
    typical_radius_cdf,
};

/// Largest tolerated fraction of discarded samples.
pub const MAX_DISCARD_RATE: f64 = 0.01;
const MAX_ATTEMPTS_PER_TRIAL: u64 = 16;

/// Where the constants `C_{ℓ,k}^n` come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConstantsSource {
    MonteCarlo { samples: usize },
    File(PathBuf),
}

impl ConstantsSource {
    pub fn load(&self, n: usize, seed: u64) -> Result<ConstantTable> {
        match self {
            Self::MonteCarlo { samples } => ConstantTable::estimate(n, *samples, seed),
            Self::File(path) => ConstantTable::read_csv(std::fs::File::open(path)?, n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub model: Model,
    pub orthant_only: bool,
    pub trials: usize,
    pub seed: u64,
    /// Normalized-radius thresholds, ascending; may end in `inf`.
    pub thresholds: Vec<f64>,
    pub constants: ConstantsSource,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl ExperimentConfig {
    pub fn new(n: usize, model: Model, trials: usize, seed: u64) -> Self {
        Self {
            n,
            model,
            orthant_only: false,
            trials,
            seed,
            thresholds: vec![f64::INFINITY],
            constants: ConstantsSource::MonteCarlo { samples: DEFAULT_SAMPLES },
            output: None,
            format: Format::Csv,
        }
    }

    pub fn process(&self) -> ProcessSpec {
        ProcessSpec { n: self.n, model: self.model.clone(), orthant_only: self.orthant_only, seed: self.seed }
    }

    pub fn validate(&self) -> Result<()> {
        self.process().validate()?;
        if self.trials < 1 {
            return Err(Error::Domain("trials must be at least 1".into()));
        }
        if self.thresholds.is_empty() {
            return Err(Error::Domain("at least one threshold is required".into()));
        }
        if self.thresholds.iter().any(|t| t.is_nan() || *t < 0.0) {
            return Err(Error::Domain("thresholds must be nonnegative".into()));
        }
        if self.thresholds.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Domain("thresholds must be sorted ascending".into()));
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment. Keys: `n`, `model`
    /// (`poisson` or `uniform`), `density`, `expected_points`, `count`,
    /// `orthant`, `trials`, `seed`, `thresholds` (comma separated, `inf`
    /// allowed), `constants` (`mc:<samples>` or `file:<path>`), `output`,
    /// `format`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        fn num<T: FromStr>(kv: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
        where
            T::Err: std::fmt::Display,
        {
            kv.get(key)
                .map(|v| v.parse::<T>().map_err(|e| Error::Parse(format!("{key}: {e}"))))
                .transpose()
        }
        let known = [
            "n", "model", "density", "expected_points", "count", "orthant", "trials", "seed", "thresholds",
            "constants", "output", "format",
        ];
        if let Some(k) = kv.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(Error::Parse(format!("unknown key {k:?}")));
        }
        let n: usize = num(&kv, "n")?.ok_or_else(|| Error::Parse("missing key n".into()))?;
        let orthant_only = num::<bool>(&kv, "orthant")?.unwrap_or(false);
        let model = match kv.get("model").map(String::as_str).unwrap_or("poisson") {
            "poisson" => {
                let density = match (num::<f64>(&kv, "density")?, num::<f64>(&kv, "expected_points")?) {
                    (Some(d), None) => d,
                    (None, Some(e)) => {
                        let spec = ProcessSpec { n, model: Model::Poisson { density: 1.0 }, orthant_only, seed: 0 };
                        e / spec.region_area()
                    }
                    _ => return Err(Error::Parse("poisson needs exactly one of density, expected_points".into())),
                };
                Model::Poisson { density }
            }
            "uniform" => Model::Uniform {
                count: num(&kv, "count")?.ok_or_else(|| Error::Parse("uniform needs count".into()))?,
            },
            other => return Err(Error::Parse(format!("unknown model {other:?}"))),
        };
        let mut cfg = Self::new(n, model, num(&kv, "trials")?.unwrap_or(1), num(&kv, "seed")?.unwrap_or(0));
        cfg.orthant_only = orthant_only;
        if let Some(t) = kv.get("thresholds") {
            cfg.thresholds = t
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| Error::Parse(format!("thresholds: {e}"))))
                .collect::<Result<_>>()?;
        }
        if let Some(c) = kv.get("constants") {
            cfg.constants = if let Some(s) = c.strip_prefix("mc:") {
                ConstantsSource::MonteCarlo { samples: s.trim().parse().map_err(|e| Error::Parse(format!("constants: {e}")))? }
            } else if let Some(p) = c.strip_prefix("file:") {
                ConstantsSource::File(PathBuf::from(p.trim()))
            } else {
                return Err(Error::Parse(format!("constants must be mc:<samples> or file:<path>, got {c:?}")));
            };
        }
        cfg.output = kv.get("output").map(PathBuf::from);
        if let Some(f) = kv.get("format") {
            cfg.format = f.parse()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Everything one trial contributes to the report.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: u64,
    pub stream: u64,
    pub discards: u64,
    pub points: usize,
    pub census: IntervalCensus,
    pub face_total: usize,
    pub morse_euler: i64,
    /// Hull faces per dimension missing from the mosaic.
    pub non_delaunay: Vec<usize>,
}

/// Builds hull, mosaic, and intervals for one cloud.
pub fn analyze_cloud(cloud: PointCloud<f64>, density: f64) -> Result<TrialOutcome> {
    let n = cloud.n();
    let points = cloud.len();
    let hull = build_hull(cloud)?;
    let mosaic = build_mosaic(hull)?;
    let intervals = radius_and_intervals(&mosaic)?;
    let census = census(&intervals, density, n)?;
    Ok(TrialOutcome {
        trial: 0,
        stream: 0,
        discards: 0,
        points,
        face_total: mosaic.face_count(),
        morse_euler: morse_euler(&intervals),
        non_delaunay: non_delaunay_face_count(mosaic.hull(), &mosaic),
        census,
    })
}

/// Runs one trial, redrawing from the next stream whenever the sample is
/// not in general position.
pub fn run_trial(spec: &ProcessSpec, trial: u64) -> Result<TrialOutcome> {
    let density = spec.effective_density();
    let mut discards = 0;
    for stream in 0..MAX_ATTEMPTS_PER_TRIAL {
        let attempt = sample_stream::<f64>(spec, trial, stream).and_then(|c| analyze_cloud(c, density));
        match attempt {
            Ok(mut out) => {
                out.trial = trial;
                out.stream = stream;
                out.discards = discards;
                info!("trial {trial}: stream {stream}, {} points, {discards} discards", out.points);
                return Ok(out);
            }
            Err(e) if e.is_general_position() || matches!(e, Error::TooFewPoints { .. }) => {
                warn!("trial {trial}: discarding stream {stream}: {e}");
                discards += 1;
            }
            Err(e) => {
                warn!("trial {trial}: aborted: {e}");
                return Err(e);
            }
        }
    }
    Err(Error::ExcessiveDiscards { discards: discards as usize, trials: 1 })
}

/// Empirical versus predicted interval counts for one type and threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub n: usize,
    pub ell: usize,
    pub k: usize,
    pub threshold: f64,
    pub empirical_mean: f64,
    pub empirical_se: f64,
    pub eq5: f64,
    pub eq6: f64,
    pub zscore: f64,
}

impl ComparisonRow {
    /// `|mean − eq6| ≤ sigmas·SE + rel_slack·eq6`, with the combined
    /// standard error recovered from the z-score.
    pub fn within(&self, sigmas: f64, rel_slack: f64) -> bool {
        let d = (self.empirical_mean - self.eq6).abs();
        let slack = rel_slack * self.eq6.abs();
        if d <= slack || self.zscore == 0.0 {
            return true;
        }
        d <= sigmas * d / self.zscore.abs() + slack
    }
}

/// Empirical versus predicted `j`-simplex counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexRow {
    pub n: usize,
    pub j: usize,
    pub threshold: f64,
    pub empirical_mean: f64,
    pub empirical_se: f64,
    pub eq8: f64,
    pub zscore: f64,
}

/// Kolmogorov–Smirnov distance of pooled normalized radii from their
/// limiting law; `kind` is `interval_k` (all types with upper dimension
/// `index`) or `simplex_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsRow {
    pub n: usize,
    pub kind: String,
    pub index: usize,
    pub samples: usize,
    pub statistic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialLog {
    pub trial: u64,
    pub stream: u64,
    pub discards: u64,
    pub points: usize,
    pub face_total: usize,
    pub partition_total: usize,
    pub morse_euler: i64,
    pub non_delaunay_facets: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub n: usize,
    pub trials: usize,
    pub discards: u64,
    pub rows: Vec<ComparisonRow>,
    pub simplex_rows: Vec<SimplexRow>,
    pub ks_rows: Vec<KsRow>,
    pub trial_log: Vec<TrialLog>,
}

impl ComparisonReport {
    /// Largest `|z|` over the interval rows; 0 when there are none.
    pub fn max_abs_z(&self) -> f64 {
        self.rows.iter().map(|r| r.zscore.abs()).fold(0.0, f64::max)
    }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn zscore(observed: f64, expected: f64, se: f64) -> f64 {
    let d = observed - expected;
    if se > 0.0 {
        d / se
    } else if d == 0.0 {
        0.0
    } else {
        d.signum() * f64::INFINITY
    }
}

/// `sup |F_n − F|` for sorted `xs`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    })
}

/// Averages trial outcomes and sets them against the formulas.
pub fn aggregate(config: &ExperimentConfig, table: &ConstantTable, outcomes: &[TrialOutcome]) -> Result<ComparisonReport> {
    let n = config.n;
    let spec = config.process();
    let density = spec.effective_density();
    let expected_points = spec.expected_count();
    let area_ratio = spec.region_area() / sphere_area(n + 1);
    let mut rows = Vec::new();
    for k in 0..=n {
        for ell in (if k == 0 { 0 } else { 1 })..=k {
            let (c, c_se) = table.get(ell, k)?;
            for &r0 in &config.thresholds {
                let counts: Vec<f64> = outcomes.iter().map(|o| o.census.count_within(ell, k, r0) as f64).collect();
                let (mean, se) = mean_se(&counts);
                let (eq5, eq6) = if k == 0 {
                    (expected_points, expected_points)
                } else {
                    let theta0 = geodesic_threshold(r0, density, n);
                    (
                        expected_intervals_exact(ell, k, n, density, theta0, c)?.value * area_ratio,
                        expected_intervals_asymptotic(ell, k, n, density, r0, c)?.value * area_ratio,
                    )
                };
                let c_part = if c > 0.0 { eq6 * c_se / c } else { 0.0 };
                rows.push(ComparisonRow {
                    n, ell, k, threshold: r0, empirical_mean: mean, empirical_se: se, eq5, eq6,
                    zscore: zscore(mean, eq6, se.hypot(c_part)),
                });
            }
        }
    }

    let mut simplex_rows = Vec::new();
    for j in 0..=n {
        for &r0 in &config.thresholds {
            let counts: Vec<f64> = outcomes.iter().map(|o| o.census.simplices_within(j, r0) as f64).collect();
            let (mean, se) = mean_se(&counts);
            let eq8 = expected_simplices(j, n, density, r0, table)?.value * area_ratio;
            simplex_rows.push(SimplexRow {
                n, j, threshold: r0, empirical_mean: mean, empirical_se: se, eq8, zscore: zscore(mean, eq8, se),
            });
        }
    }

    let mut ks_rows = Vec::new();
    let vn = ball_volume(n);
    for k in 1..=n {
        let mut pooled: Vec<f64> = outcomes
            .iter()
            .flat_map(|o| (1..=k).flat_map(move |ell| o.census.normalized_radii(ell, k)))
            .collect();
        if pooled.is_empty() {
            continue;
        }
        pooled.sort_by(f64::total_cmp);
        let kf = k as f64;
        let stat = ks_statistic(&pooled, |r| {
            gamma_lower(r.powi(n as i32) * vn, kf).map_or(f64::NAN, |g| g / gamma(kf))
        });
        ks_rows.push(KsRow { n, kind: "interval_k".into(), index: k, samples: pooled.len(), statistic: stat });
    }
    for j in 1..=n {
        let mut pooled: Vec<f64> = outcomes.iter().flat_map(|o| o.census.simplex_radii(j)).collect();
        if pooled.is_empty() {
            continue;
        }
        pooled.sort_by(f64::total_cmp);
        // surfaces missing constants once, so the closure below cannot fail
        typical_radius_cdf(j, n, f64::INFINITY, table)?;
        let stat = ks_statistic(&pooled, |r| typical_radius_cdf(j, n, r, table).map_or(f64::NAN, |v| v.value));
        ks_rows.push(KsRow { n, kind: "simplex_j".into(), index: j, samples: pooled.len(), statistic: stat });
    }

    let trial_log = outcomes
        .iter()
        .map(|o| TrialLog {
            trial: o.trial,
            stream: o.stream,
            discards: o.discards,
            points: o.points,
            face_total: o.face_total,
            partition_total: o.census.partition_total(),
            morse_euler: o.morse_euler,
            non_delaunay_facets: o.non_delaunay.get(n).copied().unwrap_or(0),
        })
        .collect();
    Ok(ComparisonReport {
        n,
        trials: outcomes.len(),
        discards: outcomes.iter().map(|o| o.discards).sum(),
        rows,
        simplex_rows,
        ks_rows,
        trial_log,
    })
}

/// Samples `config.trials` mosaics and compares them with theory.
pub fn run(config: &ExperimentConfig) -> Result<ComparisonReport> {
    config.validate()?;
    let table = config.constants.load(config.n, config.seed)?;
    run_with_constants(config, &table)
}

/// As [`run`], with the constants supplied by the caller.
pub fn run_with_constants(config: &ExperimentConfig, table: &ConstantTable) -> Result<ComparisonReport> {
    config.validate()?;
    let spec = config.process();
    let outcomes: Vec<TrialOutcome> = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(&spec, t))
        .collect::<Result<_>>()?;
    let discards: u64 = outcomes.iter().map(|o| o.discards).sum();
    let attempts = config.trials as u64 + discards;
    if discards as f64 > MAX_DISCARD_RATE * attempts as f64 {
        return Err(Error::ExcessiveDiscards { discards: discards as usize, trials: config.trials });
    }
    aggregate(config, table, &outcomes)
}
