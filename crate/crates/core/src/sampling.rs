//! Reproducible point processes on `S^n`.
//!
//! Every draw is keyed by `(seed, trial, stream)`. The key selects a
//! ChaCha8 block-counter generator: `seed` and `trial` form the 256-bit
//! key and `stream` the stream id, so trials can be generated in any order
//! or in parallel without coupling their sequences.

use std::fmt;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::UnitVector;
use crate::scalar::Real;
use crate::specfun::{cap_area, sphere_area};

/// Name recorded in output metadata.
pub const RNG_NAME: &str = "chacha8";

/// Deterministic generator for one `(seed, trial, stream)` key.
pub fn stream_rng(seed: u64, trial: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Uniform direction in `R^m` by normalizing a standard Gaussian vector.
pub fn uniform_direction<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1e-150 {
            return v.into_iter().map(|x| x / len).collect();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    /// Poisson process with `density` expected points per unit area.
    Poisson { density: f64 },
    /// Exactly `count` i.i.d. uniform points.
    Uniform { count: usize },
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Poisson { density } => write!(f, "poisson(density={density})"),
            Model::Uniform { count } => write!(f, "uniform(count={count})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub n: usize,
    pub model: Model,
    /// Restrict to the nonnegative orthant by taking absolute values.
    pub orthant_only: bool,
    pub seed: u64,
}

impl ProcessSpec {
    pub fn poisson(n: usize, density: f64, seed: u64) -> Self {
        Self { n, model: Model::Poisson { density }, orthant_only: false, seed }
    }

    pub fn uniform(n: usize, count: usize, seed: u64) -> Self {
        Self { n, model: Model::Uniform { count }, orthant_only: false, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::Domain("sphere dimension n must be at least 1".into()));
        }
        match self.model {
            Model::Poisson { density } if !(density > 0.0 && density.is_finite()) => {
                Err(Error::Domain(format!("density {density} must be positive")))
            }
            Model::Uniform { count } if count < self.n + 2 => {
                Err(Error::Domain(format!("count {count} must be at least n + 2 = {}", self.n + 2)))
            }
            _ => Ok(()),
        }
    }

    /// Area of the sampled region: the sphere or one orthant of it.
    pub fn region_area(&self) -> f64 {
        let full = sphere_area(self.n + 1);
        if self.orthant_only {
            full / 2f64.powi(self.n as i32 + 1)
        } else {
            full
        }
    }

    /// Expected number of points.
    pub fn expected_count(&self) -> f64 {
        match self.model {
            Model::Poisson { density } => density * self.region_area(),
            Model::Uniform { count } => count as f64,
        }
    }

    /// Points per unit area: `ρ` for Poisson, `N / area` for uniform.
    pub fn effective_density(&self) -> f64 {
        match self.model {
            Model::Poisson { density } => density,
            Model::Uniform { count } => count as f64 / self.region_area(),
        }
    }
}

/// Finite point set on `S^n`, optionally tagged with the process that
/// generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T> {
    n: usize,
    points: Vec<UnitVector<T>>,
    spec: Option<ProcessSpec>,
    effective_density: Option<f64>,
}

impl<T: Real> PointCloud<T> {
    /// Wraps explicit points; all must share one ambient dimension ≥ 2.
    pub fn from_points(points: Vec<UnitVector<T>>) -> Result<Self> {
        let m = points.first().map(|p| p.ambient_dim()).unwrap_or(0);
        if m < 2 {
            return Err(Error::Domain("points must live in R^{n+1} with n >= 1".into()));
        }
        if let Some(bad) = points.iter().find(|p| p.ambient_dim() != m) {
            return Err(Error::DimensionMismatch { expected: m, found: bad.ambient_dim() });
        }
        Ok(Self { n: m - 1, points, spec: None, effective_density: None })
    }

    /// Attaches a density used to normalize radii.
    pub fn with_density(mut self, density: f64) -> Self {
        self.effective_density = Some(density);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> &[UnitVector<T>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn spec(&self) -> Option<&ProcessSpec> {
        self.spec.as_ref()
    }

    pub fn effective_density(&self) -> Option<f64> {
        self.effective_density
    }

    /// Writes the dump format: `#`-prefixed `key = value` metadata lines
    /// followed by one point per line with space-separated coordinates.
    pub fn write_dump<W: Write>(&self, mut out: W, trial: u64, stream: u64) -> Result<()> {
        writeln!(out, "# sphere-mosaic point cloud")?;
        writeln!(out, "# n = {}", self.n)?;
        if let Some(spec) = &self.spec {
            match spec.model {
                Model::Poisson { density } => {
                    writeln!(out, "# model = poisson")?;
                    writeln!(out, "# density = {density}")?;
                }
                Model::Uniform { count } => {
                    writeln!(out, "# model = uniform")?;
                    writeln!(out, "# requested = {count}")?;
                }
            }
            writeln!(out, "# orthant = {}", spec.orthant_only)?;
            writeln!(out, "# seed = {}", spec.seed)?;
            writeln!(out, "# trial = {trial}")?;
            writeln!(out, "# stream = {stream}")?;
            writeln!(out, "# rng = {RNG_NAME}")?;
        }
        if let Some(rho) = self.effective_density {
            writeln!(out, "# effective_density = {rho}")?;
        }
        writeln!(out, "# count = {}", self.points.len())?;
        for p in &self.points {
            let line: Vec<String> = p.iter().map(|c| format!("{c}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    /// Parses the dump format. Points within 1e-6 of unit length are
    /// renormalized; anything farther off is rejected.
    pub fn read_dump<R: BufRead>(input: R) -> Result<Self> {
        let mut points = Vec::new();
        let mut meta = std::collections::HashMap::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            let coords = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            let len = coords.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (len - 1.0).abs() > 1e-6 {
                return Err(Error::Parse(format!("line {}: point norm {len} is not 1", lineno + 1)));
            }
            let coords: Vec<T> = coords.into_iter().map(T::lit).collect();
            // points written by `write_dump` are already unit; keep their exact bits
            let v = if (len - 1.0).abs() <= 4.0 * f64::EPSILON {
                UnitVector::new(coords)?
            } else {
                UnitVector::normalized(coords)?
            };
            points.push(v);
        }
        let mut cloud = Self::from_points(points)?;
        let parse_f = |k: &str| meta.get(k).and_then(|v| v.parse::<f64>().ok());
        let parse_u = |k: &str| meta.get(k).and_then(|v| v.parse::<u64>().ok());
        let model = match meta.get("model").map(String::as_str) {
            Some("poisson") => parse_f("density").map(|density| Model::Poisson { density }),
            Some("uniform") => parse_u("requested").map(|c| Model::Uniform { count: c as usize }),
            _ => None,
        };
        if let Some(model) = model {
            cloud.spec = Some(ProcessSpec {
                n: cloud.n,
                model,
                orthant_only: meta.get("orthant").map(|v| v == "true").unwrap_or(false),
                seed: parse_u("seed").unwrap_or(0),
            });
        }
        cloud.effective_density = parse_f("effective_density");
        Ok(cloud)
    }
}

/// Draws the cloud for `(spec.seed, trial 0, stream 0)`.
pub fn sample<T: Real>(spec: &ProcessSpec) -> Result<PointCloud<T>> {
    sample_stream(spec, 0, 0)
}

/// Draws the cloud for one `(trial, stream)` key. Returns `TooFewPoints`
/// when a Poisson draw leaves fewer than `n + 2` points.
pub fn sample_stream<T: Real>(spec: &ProcessSpec, trial: u64, stream: u64) -> Result<PointCloud<T>> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, trial, stream);
    let count = match spec.model {
        Model::Poisson { .. } => {
            let mean = spec.expected_count();
            let dist = Poisson::new(mean).map_err(|e| Error::Domain(e.to_string()))?;
            let draw: f64 = dist.sample(&mut rng);
            draw as usize
        }
        Model::Uniform { count } => count,
    };
    let m = spec.n + 1;
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let mut v = uniform_direction(&mut rng, m);
        if spec.orthant_only {
            v.iter_mut().for_each(|c| *c = c.abs());
        }
        points.push(UnitVector::normalized(v.into_iter().map(T::lit).collect())?);
    }
    if count < spec.n + 2 {
        return Err(Error::TooFewPoints { found: count, required: spec.n + 2 });
    }
    Ok(PointCloud {
        n: spec.n,
        points,
        spec: Some(*spec),
        effective_density: Some(spec.effective_density()),
    })
}

/// Probability `e^{−ρ A(θ)}` that a cap of geodesic radius `θ` on `S^n`
/// holds no point of a Poisson process with density `ρ`.
pub fn empty_cap_probability(density: f64, theta: f64, n: usize) -> Result<f64> {
    if !(density > 0.0) {
        return Err(Error::Domain(format!("density {density} must be positive")));
    }
    Ok((-density * cap_area(theta, n)?).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn expected_counts() {
        let spec = ProcessSpec::poisson(2, 10.0, 1);
        assert!((spec.expected_count() - 40.0 * PI).abs() < 1e-12);
        let mut orth = spec;
        orth.orthant_only = true;
        assert!((orth.expected_count() - 5.0 * PI).abs() < 1e-12);
        let uni = ProcessSpec::uniform(2, 100, 1);
        assert!((uni.effective_density() - 100.0 / (4.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn uniform_count_is_exact() {
        let cloud: PointCloud<f64> = sample(&ProcessSpec::uniform(2, 100, 7)).unwrap();
        assert_eq!(cloud.len(), 100);
        for p in cloud.points() {
            let len: f64 = p.iter().map(|c| c * c).sum::<f64>().sqrt();
            assert!((len - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn same_key_same_cloud() {
        let spec = ProcessSpec::poisson(3, 5.0, 99);
        let a: PointCloud<f64> = sample_stream(&spec, 4, 1).unwrap();
        let b: PointCloud<f64> = sample_stream(&spec, 4, 1).unwrap();
        assert_eq!(a, b);
        let c: PointCloud<f64> = sample_stream(&spec, 4, 2).unwrap();
        assert_ne!(a, c);
        let d: PointCloud<f64> = sample_stream(&spec, 5, 1).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn orthant_points_are_nonnegative() {
        let mut spec = ProcessSpec::uniform(3, 50, 3);
        spec.orthant_only = true;
        let cloud: PointCloud<f64> = sample(&spec).unwrap();
        assert!(cloud.points().iter().all(|p| p.iter().all(|&c| c >= 0.0)));
    }

    #[test]
    fn too_few_points() {
        let spec = ProcessSpec::poisson(2, 1e-3, 0);
        assert!(matches!(sample::<f64>(&spec), Err(Error::TooFewPoints { .. })));
        assert!(ProcessSpec::uniform(2, 3, 0).validate().is_err());
        assert!(ProcessSpec::poisson(2, 0.0, 0).validate().is_err());
    }

    #[test]
    fn empty_cap_examples() {
        assert_eq!(empty_cap_probability(3.0, 0.0, 2).unwrap(), 1.0);
        let rho = 2f64.ln() / (4.0 * PI);
        assert!((empty_cap_probability(rho, PI, 2).unwrap() - 0.5).abs() < 1e-12);
        assert!(empty_cap_probability(0.0, 1.0, 2).is_err());
    }

    #[test]
    fn dump_round_trip() {
        let spec = ProcessSpec::poisson(2, 3.0, 11);
        let cloud: PointCloud<f64> = sample_stream(&spec, 2, 0).unwrap();
        let mut buf = Vec::new();
        cloud.write_dump(&mut buf, 2, 0).unwrap();
        let back: PointCloud<f64> = PointCloud::read_dump(buf.as_slice()).unwrap();
        assert_eq!(back.points(), cloud.points());
        assert_eq!(back.spec(), cloud.spec());
        assert_eq!(back.effective_density(), cloud.effective_density());
    }

    #[test]
    fn dump_rejects_off_sphere_points() {
        let text = "# n = 2\n1 0 0\n0.5 0 0\n";
        assert!(PointCloud::<f64>::read_dump(text.as_bytes()).is_err());
    }
}
