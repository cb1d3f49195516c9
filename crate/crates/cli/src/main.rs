//! `sphere-mosaic`: sample point clouds on spheres, build their Delaunay
//! mosaics, estimate constants, and compare simulations with theory.

mod table;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use log::info;

use sphere_mosaic::constants::{constant_d, ConstantTable, DEFAULT_SAMPLES};
use sphere_mosaic::experiment::{self, ConstantsSource, ExperimentConfig};
use sphere_mosaic::fisher::{fisher_delaunay, read_distributions};
use sphere_mosaic::hull::{build_hull, enumerate_faces, euler_characteristic};
use sphere_mosaic::mosaic::{build_mosaic, morse_euler, non_delaunay_face_count, radius_and_intervals};
use sphere_mosaic::report::{emit, write_comparison_csv, Format};
use sphere_mosaic::sampling::{sample_stream, Model, ProcessSpec};
use sphere_mosaic::specfun::sphere_area;
use sphere_mosaic::theory::{
    bp_check, expected_intervals_asymptotic, expected_intervals_exact, expected_simplices, geodesic_threshold,
    typical_radius_cdf, write_theory_csv, RadialProfile, TheoryRow,
};
use sphere_mosaic::{Error, Face, PointCloud};

use table::{Cell, Table};

const EXIT_VALIDATION: u8 = 2;
const EXIT_STATISTICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "sphere-mosaic", version, about = "Poisson-Delaunay mosaics on the n-sphere")]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<Format>,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args, Clone)]
struct ProcessArgs {
    /// Sphere dimension n (points live on S^n in R^{n+1}).
    #[arg(long)]
    n: usize,
    /// Points per unit area (Poisson model).
    #[arg(long, conflicts_with_all = ["count", "expected_points"])]
    density: Option<f64>,
    /// Mean number of points (Poisson model).
    #[arg(long, conflicts_with = "count")]
    expected_points: Option<f64>,
    /// Exact number of points (uniform model).
    #[arg(long)]
    count: Option<usize>,
    /// Restrict to the nonnegative orthant.
    #[arg(long)]
    orthant: bool,
    #[arg(long, default_value_t = 0)]
    trial: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
}

impl ProcessArgs {
    fn spec(&self, seed: u64) -> anyhow::Result<ProcessSpec> {
        let mut spec = ProcessSpec { n: self.n, model: Model::Poisson { density: 1.0 }, orthant_only: self.orthant, seed };
        spec.model = match (self.density, self.expected_points, self.count) {
            (Some(density), None, None) => Model::Poisson { density },
            (None, Some(e), None) => Model::Poisson { density: e / spec.region_area() },
            (None, None, Some(count)) => Model::Uniform { count },
            _ => return Err(Error::Domain("give exactly one of --density, --expected-points, --count".into()).into()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args)]
struct CloudSource {
    /// Point-cloud dump to read; sampled from the process options otherwise.
    #[arg(long, conflicts_with_all = ["n", "density", "expected_points", "count"])]
    input: Option<PathBuf>,
    #[arg(long, required_unless_present = "input")]
    n: Option<usize>,
    #[arg(long, conflicts_with_all = ["count", "expected_points"])]
    density: Option<f64>,
    #[arg(long, conflicts_with = "count")]
    expected_points: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    orthant: bool,
    #[arg(long, default_value_t = 0)]
    trial: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
}

impl CloudSource {
    fn load(&self, seed: u64) -> anyhow::Result<PointCloud> {
        if let Some(path) = &self.input {
            let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            return Ok(PointCloud::read_dump(BufReader::new(f))?);
        }
        let p = ProcessArgs {
            n: self.n.unwrap_or(0),
            density: self.density,
            expected_points: self.expected_points,
            count: self.count,
            orthant: self.orthant,
            trial: self.trial,
            stream: self.stream,
        };
        Ok(sample_stream(&p.spec(seed)?, p.trial, p.stream)?)
    }
}

#[derive(Args)]
struct ConstantArgs {
    /// Constants CSV to read instead of estimating.
    #[arg(long)]
    constants: Option<PathBuf>,
    /// Monte Carlo samples per constant when estimating.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
}

impl ConstantArgs {
    fn source(&self) -> ConstantsSource {
        match &self.constants {
            Some(p) => ConstantsSource::File(p.clone()),
            None => ConstantsSource::MonteCarlo { samples: self.samples },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Draw a point cloud and write it in the dump format.
    Sample(ProcessArgs),
    /// Build the hull and mosaic; report face counts per dimension.
    Mosaic(CloudSource),
    /// List the intervals of the radius function.
    Intervals(CloudSource),
    /// Estimate the constants C for all types at dimension n.
    Constants {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
    },
    /// Evaluate the expected-count formulas.
    Theory {
        #[arg(long)]
        n: usize,
        /// Points per unit area.
        #[arg(long, conflicts_with = "count")]
        density: Option<f64>,
        /// Number of points (uniform model, matched density).
        #[arg(long)]
        count: Option<usize>,
        /// Normalized-radius thresholds; `inf` allowed.
        #[arg(long, value_delimiter = ',', default_value = "inf")]
        thresholds: Vec<f64>,
        #[command(flatten)]
        constants: ConstantArgs,
    },
    /// Run a batch experiment from a key=value config file.
    Compare {
        config: PathBuf,
        /// Exit with status 3 when any type misses its prediction by more
        /// than 3 standard errors plus 5%.
        #[arg(long)]
        strict: bool,
    },
    /// Delaunay mosaic of probability distributions under the Fisher metric.
    Fisher {
        /// CSV with one distribution per row.
        #[arg(long)]
        input: PathBuf,
    },
    /// Monte Carlo check of the plane/foot-point change of variables.
    BpCheck {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// `1`, `t`, `indicator:<s>`, or `table:t=h,...`.
        #[arg(long, default_value = "1")]
        profile: String,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
    },
}

struct Output {
    path: Option<PathBuf>,
    format: Format,
}

impl Output {
    fn writer(&self) -> anyhow::Result<Box<dyn Write>> {
        Ok(match &self.path {
            Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    fn table(&self, t: &Table) -> anyhow::Result<()> {
        let mut w = self.writer()?;
        t.write(self.format, &mut w)?;
        w.flush()?;
        Ok(())
    }
}

fn face_label(f: &Face) -> String {
    f.vertices().iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn cloud_density(cloud: &PointCloud) -> f64 {
    cloud.effective_density().unwrap_or_else(|| cloud.len() as f64 / sphere_area(cloud.n() + 1))
}

fn cmd_sample(p: &ProcessArgs, seed: u64, out: &Output) -> anyhow::Result<()> {
    let cloud: PointCloud = sample_stream(&p.spec(seed)?, p.trial, p.stream)?;
    info!("sampled {} points on S^{}", cloud.len(), cloud.n());
    let mut w = out.writer()?;
    cloud.write_dump(&mut w, p.trial, p.stream)?;
    w.flush()?;
    Ok(())
}

fn cmd_mosaic(src: &CloudSource, seed: u64, out: &Output) -> anyhow::Result<()> {
    let cloud = src.load(seed)?;
    let hull = build_hull(cloud)?;
    let hull_faces = enumerate_faces(&hull);
    info!("hull Euler characteristic {}", euler_characteristic(&hull_faces));
    let mosaic = build_mosaic(hull)?;
    let missing = non_delaunay_face_count(mosaic.hull(), &mosaic);
    let mut t = Table::new(&["dim", "hull_faces", "mosaic_faces", "non_delaunay"]);
    for (dim, faces) in hull_faces.iter().enumerate() {
        t.push(vec![dim.into(), faces.len().into(), mosaic.faces()[dim].len().into(), missing[dim].into()]);
    }
    out.table(&t)
}

fn cmd_intervals(src: &CloudSource, seed: u64, out: &Output) -> anyhow::Result<()> {
    let cloud = src.load(seed)?;
    let density = cloud_density(&cloud);
    let n = cloud.n();
    let mosaic = build_mosaic(build_hull(cloud)?)?;
    let intervals = radius_and_intervals(&mosaic)?;
    info!("{} intervals, Morse-Euler sum {}", intervals.len(), morse_euler(&intervals));
    let mut t = Table::new(&["ell", "k", "lower", "upper", "geo_radius", "normalized_radius"]);
    for iv in &intervals {
        t.push(vec![
            iv.ell.into(),
            iv.k.into(),
            face_label(&iv.lower).into(),
            face_label(&iv.upper).into(),
            iv.geo_radius.into(),
            iv.normalized_radius(density, n).into(),
        ]);
    }
    out.table(&t)
}

fn cmd_constants(n: usize, samples: usize, seed: u64, out: &Output) -> anyhow::Result<()> {
    let table = ConstantTable::estimate(n, samples, seed)?;
    for j in 0..=n {
        let d = constant_d(j, n, &table)?;
        info!("D_{j}^{n} = {} +- {}", d.value, d.stderr);
    }
    match out.format {
        Format::Csv => {
            let mut w = out.writer()?;
            table.write_csv(&mut w)?;
            w.flush()?;
        }
        Format::Json => {
            let mut w = out.writer()?;
            let rows: Vec<_> = table.estimates().collect();
            serde_json::to_writer_pretty(&mut w, &rows)?;
            writeln!(w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn cmd_theory(
    n: usize,
    density: Option<f64>,
    count: Option<usize>,
    thresholds: &[f64],
    constants: &ConstantArgs,
    seed: u64,
    out: &Output,
) -> anyhow::Result<()> {
    let area = sphere_area(n + 1);
    let (density, label) = match (density, count) {
        (Some(d), None) => (d, d),
        (None, Some(c)) => (c as f64 / area, c as f64),
        _ => return Err(Error::Domain("give exactly one of --density, --count".into()).into()),
    };
    let table = constants.source().load(n, seed)?;
    let mut rows = Vec::new();
    for &r0 in thresholds {
        for k in 1..=n {
            for ell in 1..=k {
                let c = table.get(ell, k)?.0;
                let theta0 = geodesic_threshold(r0, density, n);
                for v in [
                    expected_intervals_exact(ell, k, n, density, theta0, c)?,
                    expected_intervals_asymptotic(ell, k, n, density, r0, c)?,
                ] {
                    rows.push(TheoryRow {
                        formula_tag: v.formula_tag.into(),
                        n,
                        ell: Some(ell),
                        k_or_j: k,
                        rho_or_n: label,
                        threshold: r0,
                        value: v.value,
                        error: v.quadrature_error,
                    });
                }
            }
        }
        for j in 1..=n {
            for v in [expected_simplices(j, n, density, r0, &table)?, typical_radius_cdf(j, n, r0, &table)?] {
                rows.push(TheoryRow {
                    formula_tag: v.formula_tag.into(),
                    n,
                    ell: None,
                    k_or_j: j,
                    rho_or_n: label,
                    threshold: r0,
                    value: v.value,
                    error: v.quadrature_error,
                });
            }
        }
    }
    let mut w = out.writer()?;
    match out.format {
        Format::Csv => write_theory_csv(&rows, &mut w)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &rows)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Every type agrees with its first-order prediction within 3 standard
/// errors plus 5%.
fn passes_strict(report: &experiment::ComparisonReport) -> bool {
    report.rows.iter().all(|r| r.within(3.0, 0.05))
}

fn cmd_compare(config: &Path, strict: bool, cli: &Cli) -> anyhow::Result<bool> {
    let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if cli.out.is_some() {
        cfg.output = cli.out.clone();
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    let report = experiment::run(&cfg)?;
    match &cfg.output {
        Some(path) => {
            for p in emit(&report, cfg.format, path)? {
                info!("wrote {}", p.display());
            }
        }
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            match cfg.format {
                Format::Csv => write_comparison_csv(&report.rows, &mut w)?,
                Format::Json => {
                    serde_json::to_writer_pretty(&mut w, &sphere_mosaic::report::report_json(&report))?;
                    writeln!(w)?;
                }
            }
            w.flush()?;
        }
    }
    Ok(!strict || passes_strict(&report))
}

fn cmd_fisher(input: &Path, out: &Output) -> anyhow::Result<()> {
    let f = File::open(input).with_context(|| format!("opening {}", input.display()))?;
    let points = read_distributions(BufReader::new(f))?;
    let fm = fisher_delaunay(&points)?;
    info!("non-Delaunay hull faces per dimension: {:?}", fm.non_delaunay);
    let mut t = Table::new(&["ell", "k", "lower", "upper", "geo_radius", "fisher_radius"]);
    for iv in &fm.intervals {
        t.push(vec![
            iv.ell.into(),
            iv.k.into(),
            face_label(&iv.lower).into(),
            face_label(&iv.upper).into(),
            iv.geo_radius.into(),
            (iv.geo_radius * std::f64::consts::SQRT_2).into(),
        ]);
    }
    out.table(&t)
}

fn cmd_bp_check(n: usize, k: usize, profile: &str, samples: usize, seed: u64, out: &Output) -> anyhow::Result<()> {
    let profile: RadialProfile = profile.parse()?;
    let r = bp_check(n, k, &profile, samples, seed)?;
    let mut t = Table::new(&["n", "k", "lhs", "lhs_se", "rhs", "rhs_err", "within_3se"]);
    t.push(vec![
        n.into(),
        k.into(),
        r.lhs.into(),
        r.lhs_se.into(),
        r.rhs.into(),
        r.rhs_err.into(),
        Cell::from(if r.agrees(3.0) { "true" } else { "false" }),
    ]);
    out.table(&t)
}

fn dispatch(cli: &Cli) -> anyhow::Result<bool> {
    let out = Output { path: cli.out.clone(), format: cli.format.unwrap_or_default() };
    match &cli.command {
        Command::Sample(p) => cmd_sample(p, cli.seed, &out)?,
        Command::Mosaic(src) => cmd_mosaic(src, cli.seed, &out)?,
        Command::Intervals(src) => cmd_intervals(src, cli.seed, &out)?,
        Command::Constants { n, samples } => cmd_constants(*n, *samples, cli.seed, &out)?,
        Command::Theory { n, density, count, thresholds, constants } => {
            cmd_theory(*n, *density, *count, thresholds, constants, cli.seed, &out)?
        }
        Command::Compare { config, strict } => return cmd_compare(config, *strict, cli),
        Command::Fisher { input } => cmd_fisher(input, &out)?,
        Command::BpCheck { n, k, profile, samples } => cmd_bp_check(*n, *k, profile, *samples, cli.seed, &out)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    }
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("statistical acceptance failed");
            ExitCode::from(EXIT_STATISTICAL)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(err) if err.is_validation() => ExitCode::from(EXIT_VALIDATION),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

