//! `affine` — command-line front end for the affine process toolkit.
//!
//! One binary, verb-style subcommands, a stable JSON model schema, CSV/JSON
//! outputs. Exit codes: 0 success, 2 validation/schema failure, 3 blow-up
//! or explosion results (outputs still written), 4 domain errors, 1
//! anything else.

mod output;

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use affine_core::error::AffineError;
use affine_core::expansion;
use affine_core::martingale;
use affine_core::model::{validate_canonical, validate_wishart, CanonicalAffineModel, WishartModel};
use affine_core::moments;
use affine_core::riccati::{self, SolveStatus};
use affine_core::schema::{AnyModel, ModelDocument};
use affine_core::simulate::{self, SnapshotMode};
use affine_core::transform::{self, TransformValue};
use affine_core::wishart;

use output::{emit, fmt_f64, to_json};

const EXIT_OK: i32 = 0;
const EXIT_OTHER: i32 = 1;
const EXIT_VALIDATION: i32 = 2;
const EXIT_BLOWUP: i32 = 3;
const EXIT_DOMAIN: i32 = 4;

#[derive(Parser)]
#[command(
    name = "affine",
    version,
    about = "Affine process toolkit: validation, Riccati solving, transforms, densities, moments, Wishart calculus, simulation, martingale checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct OutArg {
    /// Output path; `-` streams to standard output.
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a model file against every admissibility constraint.
    Validate {
        model: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Solve the generalized Riccati system and emit the trajectory as CSV.
    Riccati {
        model: PathBuf,
        /// Real part of the initial datum u (comma-separated).
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        u: Vec<f64>,
        /// Imaginary part of u (defaults to zero).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        u_imag: Option<Vec<f64>>,
        #[arg(long)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Number of output rows on [0, T].
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Evaluate the affine transform (MGF) at one point.
    Transform {
        model: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        u: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        u_imag: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        x: Vec<f64>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Transition-density samples by Fourier inversion or the polynomial
    /// expansion proxy.
    Density {
        model: PathBuf,
        #[arg(long, value_enum)]
        method: DensityMethod,
        #[arg(long)]
        t: f64,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        x: Vec<f64>,
        /// Grid lower corner, one value per coordinate.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        grid_min: Vec<f64>,
        /// Grid upper corner, one value per coordinate.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        grid_max: Vec<f64>,
        /// Points per coordinate.
        #[arg(long, value_delimiter = ',', required = true)]
        grid_points: Vec<usize>,
        /// Damping vector η for the Fourier method (defaults to zero).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        eta: Option<Vec<f64>>,
        /// Expansion order N for the expansion method.
        #[arg(long, default_value_t = 10)]
        order: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Decay-exponent diagnostic of the characteristic function.
    Decay {
        model: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        x: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        direction: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        r_min: f64,
        #[arg(long, default_value_t = 3.0)]
        decades: f64,
        #[arg(long, default_value_t = 25)]
        points: usize,
        #[arg(long, default_value_t = 10)]
        k_max: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Exact conditional moments via the generator's matrix exponential.
    Moments {
        model: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        x: Vec<f64>,
        /// Maximum total degree.
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Simulate paths; emits long-format CSV and/or a JSON summary.
    Simulate {
        model: PathBuf,
        /// Initial state: comma-separated vector, or semicolon-separated
        /// rows for matrix models ("1,0;0,1").
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        #[arg(long)]
        t_end: f64,
        #[arg(long)]
        nsteps: usize,
        #[arg(long)]
        npaths: usize,
        /// Mandatory seed: no silent nondeterminism.
        #[arg(long)]
        seed: u64,
        /// Write every snapshot in long format (path, t, coordinates).
        #[arg(long)]
        out: Option<String>,
        /// Emit a JSON summary (moments, empirical MGF, boundary report).
        #[arg(long)]
        summary: bool,
        /// Evaluation point for the empirical MGF in the summary.
        #[arg(long, allow_hyphen_values = true)]
        u: Option<String>,
    },
    /// Non-central Wishart distribution calculus.
    Wishart {
        #[command(subcommand)]
        cmd: WishartCommand,
    },
    /// Martingale verdict for e^{<theta, X>}.
    Martingale {
        model: PathBuf,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        theta: Vec<f64>,
        #[arg(long)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Subcommand)]
enum WishartCommand {
    /// Transition parameters (shape, scale, non-centrality) at time t.
    Params {
        model: PathBuf,
        #[arg(long)]
        t: f64,
        /// Initial state as semicolon-separated rows.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// Laplace transform of the time-t transition law at a psd matrix u.
    Laplace {
        model: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, allow_hyphen_values = true)]
        u: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// Existence validation of (d, p, sigma, omega) parameters.
    Validate {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, allow_hyphen_values = true)]
        sigma: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        omega: Option<String>,
        /// Apply the tighter rank bound rank(omega) <= 2p for 2p < d-1.
        #[arg(long)]
        strict: bool,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DensityMethod {
    Fourier,
    Expansion,
}

struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<AffineError> for CliError {
    fn from(e: AffineError) -> Self {
        let code = match &e {
            AffineError::Domain(_) => EXIT_DOMAIN,
            AffineError::Dimension(_)
            | AffineError::Structure(_)
            | AffineError::Config(_)
            | AffineError::Unsupported(_)
            | AffineError::MomentDomain { .. } => EXIT_VALIDATION,
            AffineError::Stiff { .. } | AffineError::Inconclusive(_) => EXIT_OTHER,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(EXIT_OTHER, format!("io error: {e}"))
    }
}

fn main() {
    // AFFINE_THREADS caps internal parallelism; outputs are deterministic
    // regardless of the pool size.
    if let Ok(s) = std::env::var("AFFINE_THREADS") {
        if let Ok(n) = s.parse::<usize>() {
            if n > 0 {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .ok();
            }
        }
    }
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {}", err.message);
            std::process::exit(err.code);
        }
    }
}

fn load_model(path: &PathBuf) -> Result<AnyModel, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::new(EXIT_VALIDATION, format!("cannot read {path:?}: {e}")))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let doc: ModelDocument = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        CliError::new(
            EXIT_VALIDATION,
            format!("schema error at /{}: {}", e.path(), e.inner()),
        )
    })?;
    doc.to_domain().map_err(CliError::from)
}

fn canonical_model(path: &PathBuf) -> Result<CanonicalAffineModel, CliError> {
    match load_model(path)? {
        AnyModel::Canonical(m) => Ok(m),
        AnyModel::Psd(_) => Err(CliError::new(
            EXIT_VALIDATION,
            "this subcommand needs a canonical-space model",
        )),
    }
}

fn psd_model(path: &PathBuf) -> Result<WishartModel, CliError> {
    match load_model(path)? {
        AnyModel::Psd(m) => Ok(m),
        AnyModel::Canonical(_) => Err(CliError::new(
            EXIT_VALIDATION,
            "this subcommand needs a psd-space model",
        )),
    }
}

fn parse_matrix(text: &str) -> Result<DMatrix<f64>, CliError> {
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
        })
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::new(EXIT_VALIDATION, format!("cannot parse matrix: {e}")))?;
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::new(EXIT_VALIDATION, "ragged or empty matrix"));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn parse_vector(text: &str) -> Result<DVector<f64>, CliError> {
    let vals: Vec<f64> = text
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::new(EXIT_VALIDATION, format!("cannot parse vector: {e}")))?;
    Ok(DVector::from_vec(vals))
}

fn complex_u(re: &[f64], im: &Option<Vec<f64>>) -> Result<Vec<Complex64>, CliError> {
    match im {
        None => Ok(re.iter().map(|&r| Complex64::new(r, 0.0)).collect()),
        Some(im) => {
            if im.len() != re.len() {
                return Err(CliError::new(
                    EXIT_VALIDATION,
                    "--u and --u-imag must have the same length",
                ));
            }
            Ok(re
                .iter()
                .zip(im.iter())
                .map(|(&r, &i)| Complex64::new(r, i))
                .collect())
        }
    }
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Validate { model, out } => cmd_validate(&model, &out),
        Command::Riccati {
            model,
            u,
            u_imag,
            t_end,
            tol,
            grid,
            out,
        } => cmd_riccati(&model, &u, &u_imag, t_end, tol, grid, &out),
        Command::Transform {
            model,
            t,
            u,
            u_imag,
            x,
            tol,
            out,
        } => cmd_transform(&model, t, &u, &u_imag, &x, tol, &out),
        Command::Density {
            model,
            method,
            t,
            x,
            grid_min,
            grid_max,
            grid_points,
            eta,
            order,
            tol,
            out,
        } => cmd_density(
            &model, method, t, &x, &grid_min, &grid_max, &grid_points, &eta, order, tol, &out,
        ),
        Command::Decay {
            model,
            t,
            x,
            direction,
            r_min,
            decades,
            points,
            k_max,
            tol,
            out,
        } => cmd_decay(
            &model, t, &x, &direction, r_min, decades, points, k_max, tol, &out,
        ),
        Command::Moments { model, t, x, k, out } => cmd_moments(&model, t, &x, k, &out),
        Command::Simulate {
            model,
            x0,
            t_end,
            nsteps,
            npaths,
            seed,
            out,
            summary,
            u,
        } => cmd_simulate(&model, &x0, t_end, nsteps, npaths, seed, &out, summary, &u),
        Command::Wishart { cmd } => match cmd {
            WishartCommand::Params { model, t, x, out } => cmd_wishart_params(&model, t, &x, &out),
            WishartCommand::Laplace { model, t, x, u, out } => {
                cmd_wishart_laplace(&model, t, &x, &u, &out)
            }
            WishartCommand::Validate {
                d,
                p,
                sigma,
                omega,
                strict,
                out,
            } => cmd_wishart_validate(d, p, &sigma, &omega, strict, &out),
        },
        Command::Martingale {
            model,
            theta,
            t_end,
            tol,
            out,
        } => cmd_martingale(&model, &theta, t_end, tol, &out),
    }
}

fn cmd_validate(path: &PathBuf, out: &OutArg) -> Result<i32, CliError> {
    let report = match load_model(path)? {
        AnyModel::Canonical(m) => validate_canonical(&m)?,
        AnyModel::Psd(m) => validate_wishart(&m)?,
    };
    emit(&out.out, &to_json(&report)?)?;
    Ok(if report.verdict { EXIT_OK } else { EXIT_VALIDATION })
}

fn cmd_riccati(
    path: &PathBuf,
    u: &[f64],
    u_imag: &Option<Vec<f64>>,
    t_end: f64,
    tol: f64,
    grid: usize,
    out: &OutArg,
) -> Result<i32, CliError> {
    let model = canonical_model(path)?;
    let uc = complex_u(u, u_imag)?;
    let sol = riccati::solve_model(&model, &uc, t_end, tol)?;
    let d = model.dim();
    let mut csv = String::new();
    csv.push('t');
    for i in 1..=d {
        csv.push_str(&format!(",re_psi_{i}"));
    }
    for i in 1..=d {
        csv.push_str(&format!(",im_psi_{i}"));
    }
    csv.push_str(",re_phi,im_phi\n");
    let grid = grid.max(2);
    for k in 0..=grid {
        let t = sol.covered_end * k as f64 / grid as f64;
        let psi = sol.psi(t)?;
        let phi = sol.phi(t)?;
        csv.push_str(&fmt_f64(t));
        for z in &psi {
            csv.push_str(&format!(",{}", fmt_f64(z.re)));
        }
        for z in &psi {
            csv.push_str(&format!(",{}", fmt_f64(z.im)));
        }
        csv.push_str(&format!(",{},{}\n", fmt_f64(phi.re), fmt_f64(phi.im)));
    }
    let code = match &sol.status {
        SolveStatus::Complete => EXIT_OK,
        SolveStatus::BlowUp { t_star, bracket } => {
            csv.push_str(&format!(
                "# blowup t_star={} bracket_lo={} bracket_hi={}\n",
                fmt_f64(*t_star),
                fmt_f64(bracket.0),
                fmt_f64(bracket.1)
            ));
            EXIT_BLOWUP
        }
    };
    emit(&out.out, &csv)?;
    Ok(code)
}

#[derive(Serialize)]
struct TransformOut {
    t: f64,
    u_re: Vec<f64>,
    u_im: Vec<f64>,
    x: Vec<f64>,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    value_re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value_im: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_star: Option<f64>,
}

fn cmd_transform(
    path: &PathBuf,
    t: f64,
    u: &[f64],
    u_imag: &Option<Vec<f64>>,
    x: &[f64],
    tol: f64,
    out: &OutArg,
) -> Result<i32, CliError> {
    let model = canonical_model(path)?;
    let uc = complex_u(u, u_imag)?;
    let xv = DVector::from_vec(x.to_vec());
    let res = transform::mgf(&model, t, &uc, &xv, tol)?;
    let (doc, code) = match res.value {
        TransformValue::Finite(v) => (
            TransformOut {
                t,
                u_re: uc.iter().map(|z| z.re).collect(),
                u_im: uc.iter().map(|z| z.im).collect(),
                x: x.to_vec(),
                status: "finite",
                value_re: Some(v.re),
                value_im: Some(v.im),
                t_star: None,
            },
            EXIT_OK,
        ),
        TransformValue::Explodes { t_star } => (
            TransformOut {
                t,
                u_re: uc.iter().map(|z| z.re).collect(),
                u_im: uc.iter().map(|z| z.im).collect(),
                x: x.to_vec(),
                status: "explodes",
                value_re: None,
                value_im: None,
                t_star: Some(t_star),
            },
            EXIT_BLOWUP,
        ),
    };
    emit(&out.out, &to_json(&doc)?)?;
    Ok(code)
}

#[allow(clippy::too_many_arguments)]
fn cmd_density(
    path: &PathBuf,
    method: DensityMethod,
    t: f64,
    x: &[f64],
    grid_min: &[f64],
    grid_max: &[f64],
    grid_points: &[usize],
    eta: &Option<Vec<f64>>,
    order: usize,
    tol: f64,
    out: &OutArg,
) -> Result<i32, CliError> {
    let model = canonical_model(path)?;
    let d = model.dim();
    if grid_min.len() != d || grid_max.len() != d || grid_points.len() != d {
        return Err(CliError::new(
            EXIT_VALIDATION,
            format!("grid specs must have {d} entries each"),
        ));
    }
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let n = grid_points[j].max(2);
            (0..n)
                .map(|i| grid_min[j] + (grid_max[j] - grid_min[j]) * i as f64 / (n - 1) as f64)
                .collect()
        })
        .collect();
    let xv = DVector::from_vec(x.to_vec());

    let mut csv = String::new();
    for j in 1..=d {
        csv.push_str(&format!("xi_{j},"));
    }
    csv.push_str("density\n");
    match method {
        DensityMethod::Fourier => {
            let eta_v = match eta {
                Some(e) => DVector::from_vec(e.clone()),
                None => DVector::zeros(d),
            };
            let res = transform::invert_density(&model, t, &xv, &axes, &eta_v, tol)?;
            if let Some(w) = &res.warning {
                eprintln!("warning: {w}");
            }
            for (p, v) in res.points.iter().zip(res.values.iter()) {
                for c in p.iter() {
                    csv.push_str(&format!("{},", fmt_f64(*c)));
                }
                csv.push_str(&format!("{}\n", fmt_f64(*v)));
            }
        }
        DensityMethod::Expansion => {
            let exp = expansion::build_expansion(&model, t, &xv, order, None)?;
            let mut points: Vec<Vec<f64>> = vec![vec![]];
            for axis in &axes {
                let mut next = Vec::new();
                for p in &points {
                    for &v in axis {
                        let mut q = p.clone();
                        q.push(v);
                        next.push(q);
                    }
                }
                points = next;
            }
            for p in &points {
                let xi = DVector::from_vec(p.clone());
                let v = if exp.weight.supports(&xi) {
                    expansion::evaluate_expansion(&exp, &xi)?
                } else {
                    0.0
                };
                for c in p {
                    csv.push_str(&format!("{},", fmt_f64(*c)));
                }
                csv.push_str(&format!("{}\n", fmt_f64(v)));
            }
        }
    }
    emit(&out.out, &csv)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct DecayOut {
    slope: Option<f64>,
    super_polynomial: bool,
    per_k: Vec<DecayKOut>,
}

#[derive(Serialize)]
struct DecayKOut {
    k: usize,
    pass: bool,
}

#[allow(clippy::too_many_arguments)]
fn cmd_decay(
    path: &PathBuf,
    t: f64,
    x: &[f64],
    direction: &[f64],
    r_min: f64,
    decades: f64,
    points: usize,
    k_max: usize,
    tol: f64,
    out: &OutArg,
) -> Result<i32, CliError> {
    let model = canonical_model(path)?;
    let radii = transform::log_radii(r_min, decades, points.max(4));
    let report = transform::decay_exponent(
        &model,
        t,
        &DVector::from_vec(x.to_vec()),
        &DVector::from_vec(direction.to_vec()),
        &radii,
        k_max,
        tol,
    )?;
    let doc = DecayOut {
        slope: report.slope,
        super_polynomial: report.super_polynomial,
        per_k: report
            .per_k
            .iter()
            .map(|&(k, pass)| DecayKOut { k, pass })
            .collect(),
    };
    emit(&out.out, &to_json(&doc)?)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct MomentsOut {
    k: usize,
    t: f64,
    x: Vec<f64>,
    moments: Vec<MomentEntry>,
}

#[derive(Serialize)]
struct MomentEntry {
    alpha: Vec<usize>,
    value: f64,
}

fn cmd_moments(path: &PathBuf, t: f64, x: &[f64], k: usize, out: &OutArg) -> Result<i32, CliError> {
    let model = canonical_model(path)?;
    let xv = DVector::from_vec(x.to_vec());
    let (op, vals) = moments::moments(&model, t, &xv, k)?;
    let doc = MomentsOut {
        k,
        t,
        x: x.to_vec(),
        moments: op
            .basis
            .iter()
            .enumerate()
            .map(|(i, alpha)| MomentEntry {
                alpha: alpha.clone(),
                value: vals[i],
            })
            .collect(),
    };
    emit(&out.out, &to_json(&doc)?)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SummaryOut {
    npaths: usize,
    nsteps: usize,
    horizon: f64,
    scheme: String,
    mean: Vec<f64>,
    second_moment: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    empirical_mgf: Option<simulate::MgfEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    boundary: Option<simulate::BoundaryReport>,
    /// Canonical models: quantiles of the per-path minimum positive
    /// coordinate.
    #[serde(skip_serializing_if = "Option::is_none")]
    min_positive_coordinate_quantiles: Option<Vec<(f64, f64)>>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    path: &PathBuf,
    x0: &str,
    t_end: f64,
    nsteps: usize,
    npaths: usize,
    seed: u64,
    out: &Option<String>,
    summary: bool,
    u: &Option<String>,
) -> Result<i32, CliError> {
    let mode = if out.is_some() {
        SnapshotMode::Full
    } else {
        SnapshotMode::TerminalOnly
    };
    match load_model(path)? {
        AnyModel::Canonical(model) => {
            let x0v = parse_vector(x0)?;
            let ens =
                simulate::simulate_canonical(&model, &x0v, t_end, nsteps, npaths, seed, mode)?;
            if let Some(out_path) = out {
                let d = ens.dim;
                let mut csv = String::from("path,t");
                for j in 1..=d {
                    csv.push_str(&format!(",x_{j}"));
                }
                csv.push('\n');
                let snaps = ens.snapshots.as_ref().expect("full mode");
                for (pid, states) in snaps.iter().enumerate() {
                    for step in 0..=nsteps {
                        let t = t_end * step as f64 / nsteps as f64;
                        csv.push_str(&format!("{pid},{}", fmt_f64(t)));
                        for j in 0..d {
                            csv.push_str(&format!(",{}", fmt_f64(states[step * d + j])));
                        }
                        csv.push('\n');
                    }
                }
                emit(out_path, &csv)?;
            }
            if summary || out.is_none() {
                let d = ens.dim;
                let n = ens.npaths as f64;
                let mut mean = vec![0.0; d];
                let mut second = vec![0.0; d];
                for term in &ens.terminal {
                    for j in 0..d {
                        mean[j] += term[j];
                        second[j] += term[j] * term[j];
                    }
                }
                for j in 0..d {
                    mean[j] /= n;
                    second[j] /= n;
                }
                let emp = match u {
                    Some(u) => Some(simulate::empirical_mgf_vector(&ens, &parse_vector(u)?)),
                    None => None,
                };
                let mut sorted = ens.boundary_min.clone();
                sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let quant = if ens.positive > 0 {
                    Some(
                        [0.0, 0.25, 0.5, 0.75, 1.0]
                            .iter()
                            .map(|&q| {
                                let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
                                (q, sorted[idx])
                            })
                            .collect(),
                    )
                } else {
                    None
                };
                let doc = SummaryOut {
                    npaths,
                    nsteps,
                    horizon: t_end,
                    scheme: ens.scheme.to_string(),
                    mean,
                    second_moment: second,
                    empirical_mgf: emp,
                    boundary: None,
                    min_positive_coordinate_quantiles: quant,
                };
                emit("-", &to_json(&doc)?)?;
            }
            Ok(EXIT_OK)
        }
        AnyModel::Psd(model) => {
            let x0m = parse_matrix(x0)?;
            let ens = simulate::simulate_wishart(&model, &x0m, t_end, nsteps, npaths, seed, mode)?;
            if let Some(out_path) = out {
                let d = ens.d;
                let mut csv = String::from("path,t");
                for i in 1..=d {
                    for j in 1..=d {
                        csv.push_str(&format!(",x_{i}_{j}"));
                    }
                }
                csv.push('\n');
                let snaps = ens.snapshots.as_ref().expect("full mode");
                for (pid, states) in snaps.iter().enumerate() {
                    for step in 0..=nsteps {
                        let t = t_end * step as f64 / nsteps as f64;
                        csv.push_str(&format!("{pid},{}", fmt_f64(t)));
                        // Snapshots are column-major per state; emit row-major.
                        let base = step * d * d;
                        for i in 0..d {
                            for j in 0..d {
                                csv.push_str(&format!(",{}", fmt_f64(states[base + j * d + i])));
                            }
                        }
                        csv.push('\n');
                    }
                }
                emit(out_path, &csv)?;
            }
            if summary || out.is_none() {
                let d = ens.d;
                let n = ens.npaths as f64;
                let mut mean = vec![0.0; d * d];
                let mut second = vec![0.0; d * d];
                for term in &ens.terminal {
                    for i in 0..d {
                        for j in 0..d {
                            let v = term[(i, j)];
                            mean[i * d + j] += v;
                            second[i * d + j] += v * v;
                        }
                    }
                }
                for v in mean.iter_mut().chain(second.iter_mut()) {
                    *v /= n;
                }
                let emp = match u {
                    Some(u) => Some(simulate::empirical_mgf_matrix(&ens, &parse_matrix(u)?)),
                    None => None,
                };
                let doc = SummaryOut {
                    npaths,
                    nsteps,
                    horizon: t_end,
                    scheme: ens.scheme.to_string(),
                    mean,
                    second_moment: second,
                    empirical_mgf: emp,
                    boundary: Some(simulate::boundary_report(&ens)),
                    min_positive_coordinate_quantiles: None,
                };
                emit("-", &to_json(&doc)?)?;
            }
            Ok(EXIT_OK)
        }
    }
}

#[derive(Serialize)]
struct WishartParamsOut {
    d: usize,
    shape: f64,
    scale: Vec<Vec<f64>>,
    noncentrality: Vec<Vec<f64>>,
    existence: wishart::ExistenceReport,
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn cmd_wishart_params(path: &PathBuf, t: f64, x: &str, out: &OutArg) -> Result<i32, CliError> {
    let model = psd_model(path)?;
    let xm = parse_matrix(x)?;
    let dist = wishart::transition_params(&model, t, &xm)?;
    let doc = WishartParamsOut {
        d: dist.d,
        shape: dist.shape,
        scale: matrix_rows(&dist.scale),
        noncentrality: matrix_rows(&dist.noncentrality),
        existence: dist.existence.clone(),
    };
    let verdict = dist.existence.verdict;
    emit(&out.out, &to_json(&doc)?)?;
    Ok(if verdict { EXIT_OK } else { EXIT_VALIDATION })
}

#[derive(Serialize)]
struct WishartLaplaceOut {
    t: f64,
    value: f64,
}

fn cmd_wishart_laplace(
    path: &PathBuf,
    t: f64,
    x: &str,
    u: &str,
    out: &OutArg,
) -> Result<i32, CliError> {
    let model = psd_model(path)?;
    let dist = wishart::transition_params(&model, t, &parse_matrix(x)?)?;
    let value = wishart::laplace(&dist, &parse_matrix(u)?)?;
    emit(&out.out, &to_json(&WishartLaplaceOut { t, value })?)?;
    Ok(EXIT_OK)
}

fn cmd_wishart_validate(
    d: usize,
    p: f64,
    sigma: &Option<String>,
    omega: &Option<String>,
    strict: bool,
    out: &OutArg,
) -> Result<i32, CliError> {
    let sigma = match sigma {
        Some(s) => parse_matrix(s)?,
        None => DMatrix::zeros(d, d),
    };
    let omega = match omega {
        Some(s) => parse_matrix(s)?,
        None => DMatrix::zeros(d, d),
    };
    let report = wishart::validate_params(d, p, &sigma, &omega, strict)?;
    emit(&out.out, &to_json(&report)?)?;
    Ok(if report.verdict { EXIT_OK } else { EXIT_VALIDATION })
}

fn cmd_martingale(
    path: &PathBuf,
    theta: &[f64],
    t_end: f64,
    tol: f64,
    out: &OutArg,
) -> Result<i32, CliError> {
    let model = canonical_model(path)?;
    let report =
        martingale::martingale_check(&model, &DVector::from_vec(theta.to_vec()), t_end, tol)?;
    emit(&out.out, &to_json(&report)?)?;
    Ok(EXIT_OK)
}
