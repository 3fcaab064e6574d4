//! Command-line front end.
//!
//! Inputs are JSON arrays of measure records; outputs are CSV (or JSON for
//! `interpolate`). Every output is assembled in memory, then written to a
//! temporary file in the target directory and renamed into place, so a
//! failing run leaves no partial files.
//!
//! Exit codes: 0 success, 1 I/O, 2 schema, 3 numerical, 4 mesh too coarse.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bures::GaussianMeasure;
use crate::coupling::{ClosedForm, Gaussian1D, Measure1D, PointCloud};
use crate::error::Error;
use crate::harness::{
    generate_counterexample_trajectories, run_rate_experiment, CounterexampleCoupling, CurveKind,
    SyntheticGaussianCurve,
};
use crate::spline1d::{InterpKind, TimeGrid};
use crate::thinplate::{fit_measure_field, Site};
use crate::transport_spline::{Observation, Observations, TransportSpline};

pub const EXIT_IO: u8 = 1;
pub const EXIT_SCHEMA: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_MESH: u8 = 4;

/// Environment variable supplying the default seed.
pub const SEED_ENV: &str = "TSPLINE_SEED";

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn schema(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_SCHEMA,
            message: message.into(),
        }
    }

    fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("{}: {err}", path.display()),
        }
    }

    /// Errors raised while validating input records.
    fn load(err: Error) -> Self {
        Self::schema(err.to_string())
    }

    /// Errors raised while computing.
    fn numerical(err: Error) -> Self {
        let code = match err {
            Error::MeshTooCoarse { .. } => EXIT_MESH,
            _ => EXIT_NUMERICAL,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "tspline", version, about = "Interpolate probability measures with transport splines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a transport spline to time-stamped measures and evaluate it.
    Interpolate(InterpolateArgs),
    /// Convergence-rate experiment on an analytic Gaussian curve.
    Rate(RateArgs),
    /// Thin-plate field of 1D measures over planar sites, written as a raster.
    Thinplate(ThinplateArgs),
    /// Trajectories for the N(0, (1-t)^2 + t^2) data.
    Counterexample(CounterexampleArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Cubic,
    Linear,
}

impl From<KindArg> for InterpKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Cubic => InterpKind::Cubic,
            KindArg::Linear => InterpKind::Linear,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct InterpolateArgs {
    /// JSON array of measure records.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "cubic")]
    pub kind: KindArg,
    /// Comma-separated evaluation times (default: knots and interval midpoints).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub times: Option<Vec<f64>>,
    /// Number of sampled trajectories.
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Where CSV trajectory rows go (default: `<out stem>_samples.csv`).
    #[arg(long)]
    pub samples_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CurveArg {
    Sinusoid,
    Counterexample,
    DiagonalPair,
}

impl From<CurveArg> for CurveKind {
    fn from(c: CurveArg) -> Self {
        match c {
            CurveArg::Sinusoid => CurveKind::Sinusoid,
            CurveArg::Counterexample => CurveKind::Counterexample,
            CurveArg::DiagonalPair => CurveKind::DiagonalPair,
        }
    }
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[arg(long, value_enum, default_value = "sinusoid")]
    pub curve: CurveArg,
    #[arg(long, value_enum, default_value = "cubic")]
    pub kind: KindArg,
    /// Meshes as interval counts (`16`) or mesh sizes (`1/16`, `0.0625`).
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
    pub meshes: Vec<String>,
    /// Target mesh ratio; values below 1 alternate interval lengths.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// CSV report; the summary goes to the same path with a `.json` extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ThinplateArgs {
    /// JSON array of records carrying `site` instead of `time`.
    pub input: PathBuf,
    /// Raster size as `WxH`.
    #[arg(long, default_value = "50x50")]
    pub grid: String,
    /// Raster extent `xmin,xmax,ymin,ymax` (default: bounding box of the sites).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub bbox: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,0.9")]
    pub quantiles: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CouplingArg {
    Independent,
    Transport,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    #[arg(long, value_enum, default_value = "transport")]
    pub coupling: CouplingArg,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Knot intervals on `t_i = i/N` for the transport coupling.
    #[arg(long, default_value_t = 4)]
    pub intervals: usize,
    /// Evaluation times (default: 21 evenly spaced points on [0,1]).
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_SCHEMA } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("tspline: {}", e.message);
            e.code
        }
    }
}

pub fn execute(command: &Command) -> CliResult<()> {
    match command {
        Command::Interpolate(a) => cmd_interpolate(a),
        Command::Rate(a) => cmd_rate(a),
        Command::Thinplate(a) => cmd_thinplate(a),
        Command::Counterexample(a) => cmd_counterexample(a),
    }
}

// ---------------------------------------------------------------- records

/// One input measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureFileRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<[f64; 2]>,
    #[serde(flatten)]
    pub body: RecordBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum RecordBody {
    #[serde(rename = "gaussian")]
    Gaussian { mean: Vec<f64>, cov: Vec<f64> },
    #[serde(rename = "measure1d")]
    Measure1D { quantiles: QuantileSpec },
    #[serde(rename = "cloud")]
    Cloud { points: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QuantileSpec {
    Table { levels: Vec<f64>, values: Vec<f64> },
    Closed(ClosedSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum ClosedSpec {
    #[serde(rename = "gaussian")]
    Gaussian { m: f64, sigma: f64 },
    #[serde(rename = "uniform")]
    Uniform { a: f64, b: f64 },
}

impl MeasureFileRecord {
    /// Validates the record and converts it into an observation.
    pub fn to_observation(&self) -> crate::Result<Observation> {
        Ok(match &self.body {
            RecordBody::Gaussian { mean, cov } => Observation::Gaussian(GaussianMeasure::from_parts(mean, cov)?),
            RecordBody::Measure1D { quantiles } => Observation::Measure1D(match quantiles {
                QuantileSpec::Table { levels, values } => Measure1D::from_quantiles(levels.clone(), values.clone())?,
                QuantileSpec::Closed(ClosedSpec::Gaussian { m, sigma }) => Measure1D::gaussian(*m, *sigma)?,
                QuantileSpec::Closed(ClosedSpec::Uniform { a, b }) => Measure1D::uniform(*a, *b)?,
            }),
            RecordBody::Cloud { points } => Observation::Cloud(PointCloud::new(
                points.iter().map(|p| DVector::from_column_slice(p)).collect(),
            )?),
        })
    }
}

pub fn read_records(path: &Path) -> CliResult<Vec<MeasureFileRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::schema(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------- output

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Shortest representation that parses back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x}")
}

fn sibling(path: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

// ---------------------------------------------------------------- interpolate

#[derive(Debug, Serialize)]
struct JsonInterpolation {
    family: &'static str,
    laws: Vec<serde_json::Value>,
    samples: Vec<JsonSample>,
}

#[derive(Debug, Serialize)]
struct JsonSample {
    time: f64,
    sample: usize,
    x: Vec<f64>,
}

fn default_times(knots: &[f64]) -> Vec<f64> {
    let mut out = vec![knots[0]];
    for w in knots.windows(2) {
        out.push(0.5 * (w[0] + w[1]));
        out.push(w[1]);
    }
    out
}

fn cmd_interpolate(a: &InterpolateArgs) -> CliResult<()> {
    let mut records = read_records(&a.input)?;
    if records.iter().any(|r| r.time.is_none()) {
        return Err(CliError::schema("every record needs a \"time\""));
    }
    records.sort_by(|x, y| x.time.partial_cmp(&y.time).unwrap_or(std::cmp::Ordering::Equal));
    let knots: Vec<f64> = records.iter().map(|r| r.time.unwrap()).collect();
    let grid = TimeGrid::new(knots).map_err(CliError::load)?;
    let items = records
        .iter()
        .map(|r| r.to_observation())
        .collect::<crate::Result<Vec<_>>>()
        .map_err(CliError::load)?;
    let obs = Observations::from_items(items).map_err(CliError::load)?;
    let family = obs.family().name();
    let spline = TransportSpline::fit(&grid, obs, a.kind.into()).map_err(CliError::numerical)?;
    let times = a.times.clone().unwrap_or_else(|| default_times(grid.knots()));

    // laws: header + rows, and the same content as JSON values
    let mut header: Vec<String> = vec!["time".into()];
    let mut rows = Vec::new();
    let mut laws = Vec::new();
    match family {
        "gaussian" => {
            let d = spline.gaussians().map_err(CliError::numerical)?[0].dim();
            header.extend((0..d).map(|i| format!("mean_{i}")));
            header.extend((0..d * d).map(|k| format!("cov_{}_{}", k / d, k % d)));
            for &t in &times {
                let law = spline.propagate_gaussian_law(t).map_err(CliError::numerical)?;
                let mean: Vec<f64> = law.mean().iter().copied().collect();
                let cov: Vec<f64> = law.cov().as_matrix().transpose().iter().copied().collect();
                let mut row = vec![num(t)];
                row.extend(mean.iter().chain(&cov).map(|&v| num(v)));
                rows.push(row);
                laws.push(serde_json::json!({ "time": t, "mean": mean, "cov": cov }));
            }
        }
        "measure1d" => {
            header.extend(["level".into(), "quantile".into(), "valid".into()]);
            for &t in &times {
                let law = spline.law_1d(t).map_err(CliError::numerical)?;
                for (u, q) in law.levels.iter().zip(&law.values) {
                    rows.push(vec![num(t), num(*u), num(*q), law.valid.to_string()]);
                }
                laws.push(serde_json::json!({ "time": t, "levels": law.levels, "values": law.values, "valid": law.valid }));
            }
        }
        _ => {
            let d = spline.clouds().map_err(CliError::numerical)?[0].dim();
            header.push("point".into());
            header.extend((0..d).map(|i| format!("x_{i}")));
            for &t in &times {
                let pts = spline.cloud_positions(t).map_err(CliError::numerical)?;
                for (j, p) in pts.iter().enumerate() {
                    let mut row = vec![num(t), j.to_string()];
                    row.extend(p.iter().map(|&v| num(v)));
                    rows.push(row);
                }
                let pts: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().copied().collect()).collect();
                laws.push(serde_json::json!({ "time": t, "points": pts }));
            }
        }
    }

    let samples = sample_trajectories(&spline, family, &times, a.samples, a.seed)?;
    match a.format {
        FormatArg::Csv => {
            let laws_csv = csv_bytes(&header, &rows);
            let samples_csv = (a.samples > 0).then(|| {
                let d = samples.first().map_or(0, |s| s.x.len());
                let mut h: Vec<String> = vec!["time".into(), "sample".into()];
                h.extend((0..d).map(|i| format!("x_{i}")));
                let rows: Vec<Vec<String>> = samples
                    .iter()
                    .map(|s| {
                        let mut r = vec![num(s.time), s.sample.to_string()];
                        r.extend(s.x.iter().map(|&v| num(v)));
                        r
                    })
                    .collect();
                csv_bytes(&h, &rows)
            });
            write_atomic(&a.out, &laws_csv)?;
            if let Some(bytes) = samples_csv {
                let path = a.samples_out.clone().unwrap_or_else(|| sibling(&a.out, "_samples", "csv"));
                write_atomic(&path, &bytes)?;
            }
        }
        FormatArg::Json => {
            let doc = JsonInterpolation { family, laws, samples };
            let mut bytes = serde_json::to_vec_pretty(&doc).expect("serializable");
            bytes.push(b'\n');
            write_atomic(&a.out, &bytes)?;
        }
    }
    Ok(())
}

/// Sampled trajectories in time-major order.
fn sample_trajectories(
    spline: &TransportSpline,
    family: &str,
    times: &[f64],
    n: usize,
    seed: u64,
) -> CliResult<Vec<JsonSample>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut paths: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n);
    match family {
        "gaussian" => {
            let g0 = &spline.gaussians().map_err(CliError::numerical)?[0];
            let root = g0.cov().sqrt();
            for _ in 0..n {
                let z = DVector::from_fn(g0.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
                let x0 = g0.mean() + root.as_matrix() * z;
                let path = spline.sample_trajectory(&x0, times).map_err(CliError::numerical)?;
                paths.push(path.iter().map(|v| v.iter().copied().collect()).collect());
            }
        }
        "measure1d" => {
            for _ in 0..n {
                // open interval keeps the level inside (0, 1)
                let u: f64 = rng.gen_range(f64::EPSILON..1.0);
                let path = times
                    .iter()
                    .map(|&t| spline.quantile_at(t, u).map(|q| vec![q]))
                    .collect::<crate::Result<Vec<_>>>()
                    .map_err(CliError::numerical)?;
                paths.push(path);
            }
        }
        _ => {
            let m = spline.clouds().map_err(CliError::numerical)?[0].len();
            for _ in 0..n {
                let j = rng.gen_range(0..m);
                let path = spline.cloud_trajectory(j, times).map_err(CliError::numerical)?;
                paths.push(path.iter().map(|v| v.iter().copied().collect()).collect());
            }
        }
    }
    let mut out = Vec::with_capacity(n * times.len());
    for (k, &t) in times.iter().enumerate() {
        for (s, p) in paths.iter().enumerate() {
            out.push(JsonSample {
                time: t,
                sample: s,
                x: p[k].clone(),
            });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- rate

/// Parses a mesh as an interval count, `1/n`, or a decimal mesh size whose
/// reciprocal is an integer.
pub fn parse_mesh(s: &str) -> CliResult<usize> {
    let bad = || CliError::schema(format!("bad mesh '{s}'"));
    let s = s.trim();
    if let Some(den) = s.strip_prefix("1/") {
        return den.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(bad);
    }
    if let Ok(n) = s.parse::<usize>() {
        return if n > 0 { Ok(n) } else { Err(bad()) };
    }
    let d: f64 = s.parse().map_err(|_| bad())?;
    if !(d > 0.0 && d <= 1.0) {
        return Err(bad());
    }
    let n = (1.0 / d).round();
    if ((1.0 / d) - n).abs() > 1e-9 * n {
        return Err(bad());
    }
    Ok(n as usize)
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct RateSummary {
    pub curve: String,
    pub kind: String,
    pub alpha: f64,
    pub slope: f64,
    pub lipschitz: f64,
    pub curvature: f64,
    pub lambda_min: f64,
    pub mesh_limit: f64,
    pub knot_errors: Vec<f64>,
    pub max_ratio: f64,
    pub max_refinement_change: f64,
}

fn cmd_rate(a: &RateArgs) -> CliResult<()> {
    let intervals = a.meshes.iter().map(|s| parse_mesh(s)).collect::<CliResult<Vec<_>>>()?;
    let curve = SyntheticGaussianCurve::new(a.curve.into());
    let kind: InterpKind = a.kind.into();
    let report = run_rate_experiment(&curve, kind, &intervals, a.alpha).map_err(|e| match e {
        Error::InvalidGrid(_) | Error::TooFewObservations { .. } => CliError::load(e),
        e => CliError::numerical(e),
    })?;
    let header: Vec<String> = ["delta", "sup_error", "bound", "ratio"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| vec![num(r.delta), num(r.sup_error), num(r.bound), num(r.ratio)])
        .collect();
    let summary = RateSummary {
        curve: curve.kind().name().into(),
        kind: match kind {
            InterpKind::Cubic => "cubic",
            InterpKind::Linear => "linear",
        }
        .into(),
        alpha: a.alpha,
        slope: report.slope,
        lipschitz: curve.lipschitz(),
        curvature: curve.curvature(),
        lambda_min: curve.lambda_min(),
        mesh_limit: curve.mesh_limit(),
        knot_errors: report.rows.iter().map(|r| r.knot_error).collect(),
        max_ratio: report.max_ratio(),
        max_refinement_change: report.max_refinement_change(),
    };
    let mut json = serde_json::to_vec_pretty(&summary).expect("serializable");
    json.push(b'\n');
    write_atomic(&a.out, &csv_bytes(&header, &rows))?;
    write_atomic(&a.out.with_extension("json"), &json)?;
    Ok(())
}

// ---------------------------------------------------------------- thinplate

fn parse_grid(s: &str) -> CliResult<(usize, usize)> {
    let bad = || CliError::schema(format!("bad grid '{s}', expected WxH"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let (w, h): (usize, usize) = (w.trim().parse().map_err(|_| bad())?, h.trim().parse().map_err(|_| bad())?);
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn cmd_thinplate(a: &ThinplateArgs) -> CliResult<()> {
    let (w, h) = parse_grid(&a.grid)?;
    if let Some(q) = a.quantiles.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
        return Err(CliError::schema(format!("quantile level {q} outside (0, 1)")));
    }
    let records = read_records(&a.input)?;
    let mut sites: Vec<Site> = Vec::with_capacity(records.len());
    let mut measures = Vec::with_capacity(records.len());
    for r in &records {
        let site = r.site.ok_or_else(|| CliError::schema("every record needs a \"site\""))?;
        sites.push(site);
        measures.push(match r.to_observation().map_err(CliError::load)? {
            Observation::Measure1D(m) => m,
            Observation::Gaussian(g) if g.dim() == 1 => {
                let sd = g.cov().as_matrix()[(0, 0)].sqrt();
                let g1 = Gaussian1D::new(g.mean()[0], sd).map_err(CliError::load)?;
                Measure1D::from_closed_form(ClosedForm::Gaussian(g1)).map_err(CliError::load)?
            }
            _ => return Err(CliError::schema("thin-plate input must be 1D measures")),
        });
    }
    let [x0, x1, y0, y1] = match &a.bbox {
        Some(b) if b.len() == 4 => [b[0], b[1], b[2], b[3]],
        Some(_) => return Err(CliError::schema("bbox needs xmin,xmax,ymin,ymax")),
        None => {
            let fold = |f: fn(f64, f64) -> f64, init: f64, k: usize| sites.iter().map(|s| s[k]).fold(init, f);
            [
                fold(f64::min, f64::INFINITY, 0),
                fold(f64::max, f64::NEG_INFINITY, 0),
                fold(f64::min, f64::INFINITY, 1),
                fold(f64::max, f64::NEG_INFINITY, 1),
            ]
        }
    };
    let field = fit_measure_field(&sites, &measures).map_err(|e| match e {
        Error::CollinearSites | Error::SingularMatrix => CliError::numerical(e),
        e => CliError::load(e),
    })?;
    let mut header: Vec<String> = ["x", "y", "mean", "std"].map(String::from).to_vec();
    header.extend(a.quantiles.iter().map(|q| format!("q_{q}")));
    header.push("degenerate".into());
    let mut rows = Vec::with_capacity(w * h);
    for &y in &axis(y0, y1, h) {
        for &x in &axis(x0, x1, w) {
            let p = field.at([x, y]);
            let mut row = vec![num(x), num(y), num(p.mean), num(p.std)];
            for &q in &a.quantiles {
                row.push(num(field.quantile([x, y], q).map_err(CliError::numerical)?));
            }
            row.push(p.degenerate.to_string());
            rows.push(row);
        }
    }
    write_atomic(&a.out, &csv_bytes(&header, &rows))
}

// ---------------------------------------------------------------- counterexample

fn cmd_counterexample(a: &CounterexampleArgs) -> CliResult<()> {
    let times = a
        .times
        .clone()
        .unwrap_or_else(|| (0..=20).map(|k| k as f64 / 20.0).collect());
    if times.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(CliError::schema("times must lie in [0, 1]"));
    }
    let coupling = match a.coupling {
        CouplingArg::Independent => CounterexampleCoupling::Independent,
        CouplingArg::Transport => CounterexampleCoupling::Transport { n_intervals: a.intervals },
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let set = generate_counterexample_trajectories(a.samples, coupling, &times, &mut rng).map_err(|e| match e {
        Error::TooFewObservations { .. } | Error::InvalidGrid(_) => CliError::load(e),
        e => CliError::numerical(e),
    })?;
    let header: Vec<String> = ["time", "sample", "x"].map(String::from).to_vec();
    let mut rows = Vec::with_capacity(set.paths.len() * times.len());
    for (k, &t) in times.iter().enumerate() {
        for (s, p) in set.paths.iter().enumerate() {
            rows.push(vec![num(t), s.to_string(), num(p[k])]);
        }
    }
    write_atomic(&a.out, &csv_bytes(&header, &rows))
}
