//! The affine transform formula and Fourier-analytic diagnostics.
//!
//! `mgf` evaluates E[e^{⟨u,X_t⟩} | X_0 = x] = e^{φ(t,u)+⟨ψ(t,u),x⟩} through
//! the Riccati solver and reports `Explodes` when the solution blows up
//! before `t`. `invert_density` recovers transition densities on ℝ or ℝ²
//! by damped Fourier inversion, and `decay_exponent` estimates the
//! polynomial decay order of the characteristic function, the empirical
//! stand-in for the density-existence criterion.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{AffineError, Result};
use crate::exponents::{CharacteristicExponents, Exponents};
use crate::model::CanonicalAffineModel;
use crate::riccati::{self, DenseMode, RiccatiSolution, SolveStatus};

#[derive(Clone, Debug)]
pub enum TransformValue {
    Finite(Complex64),
    /// The MGF is infinite: the Riccati solution blew up at `t_star ≤ t`.
    Explodes { t_star: f64 },
}

impl TransformValue {
    pub fn finite(&self) -> Option<Complex64> {
        match self {
            TransformValue::Finite(v) => Some(*v),
            TransformValue::Explodes { .. } => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TransformResult {
    pub value: TransformValue,
    pub t: f64,
    pub u: Vec<Complex64>,
    pub x: DVector<f64>,
    pub solution: RiccatiSolution,
}

fn check_state(model: &CanonicalAffineModel, x: &DVector<f64>) -> Result<()> {
    if x.len() != model.dim() {
        return Err(AffineError::Dimension(format!(
            "x must have length {}, got {}",
            model.dim(),
            x.len()
        )));
    }
    if !model.contains(x) {
        return Err(AffineError::Domain(
            "x outside the state space: positive coordinates must be ≥ 0".into(),
        ));
    }
    Ok(())
}

/// MGF through generic exponents (used for tilted models as well).
pub fn mgf_exponents<E: Exponents>(
    exps: &E,
    t: f64,
    u: &[Complex64],
    x: &DVector<f64>,
    tol: f64,
) -> Result<TransformResult> {
    let sol = riccati::solve_with(exps, u, t, tol, DenseMode::Full)?;
    let value = match &sol.status {
        SolveStatus::Complete => {
            let psi = sol.psi_terminal();
            let phi = sol.phi_terminal();
            let mut exponent = phi;
            for (p, xi) in psi.iter().zip(x.iter()) {
                exponent += p * *xi;
            }
            TransformValue::Finite(exponent.exp())
        }
        SolveStatus::BlowUp { t_star, .. } => TransformValue::Explodes { t_star: *t_star },
    };
    Ok(TransformResult {
        value,
        t,
        u: u.to_vec(),
        x: x.clone(),
        solution: sol,
    })
}

/// E[e^{⟨u,X_t⟩} | X_0 = x] by the affine transform formula.
pub fn mgf(
    model: &CanonicalAffineModel,
    t: f64,
    u: &[Complex64],
    x: &DVector<f64>,
    tol: f64,
) -> Result<TransformResult> {
    check_state(model, x)?;
    let exps = CharacteristicExponents::new(model);
    mgf_exponents(&exps, t, u, x, tol)
}

/// Characteristic function Φ(t, y, x) = mgf at u = i·y; finite for every
/// admissible conservative model, with |Φ| ≤ 1.
pub fn charfn(
    model: &CanonicalAffineModel,
    t: f64,
    y: &DVector<f64>,
    x: &DVector<f64>,
    tol: f64,
) -> Result<Complex64> {
    check_state(model, x)?;
    let u: Vec<Complex64> = y.iter().map(|&v| Complex64::new(0.0, v)).collect();
    let res = mgf(model, t, &u, x, tol)?;
    match res.value {
        TransformValue::Finite(v) => Ok(v),
        TransformValue::Explodes { t_star } => Err(AffineError::Domain(format!(
            "characteristic function unavailable: Riccati blow-up at t = {t_star}"
        ))),
    }
}

/// Terminal transform value without dense-output storage; grid workhorse.
fn transform_terminal(
    exps: &CharacteristicExponents,
    t: f64,
    u: &[Complex64],
    x: &DVector<f64>,
    tol: f64,
) -> Result<Complex64> {
    let sol = riccati::solve_with(exps, u, t, tol, DenseMode::TerminalOnly)?;
    match sol.status {
        SolveStatus::Complete => {
            let psi = sol.psi_terminal();
            let mut exponent = sol.phi_terminal();
            for (p, xi) in psi.iter().zip(x.iter()) {
                exponent += p * *xi;
            }
            Ok(exponent.exp())
        }
        SolveStatus::BlowUp { t_star, .. } => Err(AffineError::Domain(format!(
            "transform explodes at t = {t_star}"
        ))),
    }
}

#[derive(Clone, Debug)]
pub struct DecayReport {
    /// Least-squares slope of log|Φ| against log r over the largest decade;
    /// `None` when |Φ| underflowed (super-polynomial decay).
    pub slope: Option<f64>,
    /// Per-integer-k verdicts of the empirical criterion `slope < −k`.
    pub per_k: Vec<(usize, bool)>,
    pub super_polynomial: bool,
    pub radii: Vec<f64>,
    pub log_abs: Vec<f64>,
}

/// Estimates the decay exponent of r ↦ |Φ(t, r·direction, x)|.
pub fn decay_exponent(
    model: &CanonicalAffineModel,
    t: f64,
    x: &DVector<f64>,
    direction: &DVector<f64>,
    radii: &[f64],
    k_max: usize,
    tol: f64,
) -> Result<DecayReport> {
    check_state(model, x)?;
    if radii.len() < 4 || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return Err(AffineError::Config(
            "radii must be a positive increasing list".into(),
        ));
    }
    let span = radii[radii.len() - 1] / radii[0];
    if span < 1e3 * (1.0 - 1e-9) {
        return Err(AffineError::Config(format!(
            "radii must span at least 3 decades, got factor {span}"
        )));
    }
    let dir = direction / direction.norm();
    let exps = CharacteristicExponents::new(model);
    let values: Vec<f64> = radii
        .par_iter()
        .map(|&r| {
            let u: Vec<Complex64> = dir.iter().map(|&v| Complex64::new(0.0, r * v)).collect();
            transform_terminal(&exps, t, &u, x, tol).map(|z| z.norm())
        })
        .collect::<Result<_>>()?;

    if values.iter().any(|&v| v < 1e-300) {
        return Ok(DecayReport {
            slope: None,
            per_k: (0..=k_max).map(|k| (k, true)).collect(),
            super_polynomial: true,
            radii: radii.to_vec(),
            log_abs: values.iter().map(|v| v.max(1e-300).ln()).collect(),
        });
    }

    // Fit on the largest decade.
    let r_max = radii[radii.len() - 1];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (r, v) in radii.iter().zip(values.iter()) {
        if *r >= r_max / 10.0 {
            xs.push(r.ln());
            ys.push(v.ln());
        }
    }
    let nf = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(ys.iter())
        .map(|(a, b)| (a - mx) * (b - my))
        .sum();
    let slope = sxy / sxx;
    let per_k = (0..=k_max).map(|k| (k, slope < -(k as f64))).collect();
    Ok(DecayReport {
        slope: Some(slope),
        per_k,
        super_polynomial: false,
        radii: radii.to_vec(),
        log_abs: values.iter().map(|v| v.ln()).collect(),
    })
}

/// Log-spaced radii spanning `decades` decades from `r_min`.
pub fn log_radii(r_min: f64, decades: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| r_min * 10f64.powf(decades * i as f64 / (points - 1) as f64))
        .collect()
}

#[derive(Clone, Debug)]
pub struct DensityResult {
    /// Tensor grid points, row-major over the input axes.
    pub points: Vec<DVector<f64>>,
    pub values: Vec<f64>,
    pub warning: Option<String>,
    /// Frequency truncation actually used per dimension.
    pub truncation: Vec<f64>,
}

const INTEGRAND_TAIL: f64 = 1e-10;
const MAX_FREQ_EVALS: usize = 400_000;

/// Damped Fourier inversion of the transform to transition-density samples
/// on a coordinate grid (d ≤ 2).
///
/// density(ξ) = (2π)^{-d} ∫ e^{−⟨η+iy,ξ⟩} g(t, η+iy, x) dy, evaluated by the
/// trapezoid rule on a symmetric grid. The frequency step is π/(8·span) of
/// the requested coordinate grid; the truncation radius is taken where the
/// integrand falls below 1e−10, capped by an evaluation budget when the
/// decay is slow.
pub fn invert_density(
    model: &CanonicalAffineModel,
    t: f64,
    x: &DVector<f64>,
    axes: &[Vec<f64>],
    eta: &DVector<f64>,
    tol: f64,
) -> Result<DensityResult> {
    check_state(model, x)?;
    let d = model.dim();
    if d > 2 {
        return Err(AffineError::Config(
            "Fourier inversion supports d ≤ 2; use the expansion route for higher dimensions"
                .into(),
        ));
    }
    if axes.len() != d || axes.iter().any(|a| a.is_empty()) {
        return Err(AffineError::Dimension(format!(
            "expected {d} non-empty coordinate axes"
        )));
    }
    if eta.len() != d {
        return Err(AffineError::Dimension("eta must have length d".into()));
    }
    let exps = CharacteristicExponents::new(model);

    // The damping point must have a finite transform.
    let eta_c: Vec<Complex64> = eta.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let at_eta = transform_terminal(&exps, t, &eta_c, x, tol).map_err(|e| {
        AffineError::Config(format!("transform not finite at damping η: {e}"))
    })?;
    let at_eta_abs = at_eta.norm();

    // Decay pre-scan along each axis for the k = 0 criterion and for the
    // truncation choice.
    let mut warning = None;
    let mut truncation = Vec::with_capacity(d);
    let mut steps = Vec::with_capacity(d);
    for (j, axis) in axes.iter().enumerate() {
        let span = axis.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let dy = std::f64::consts::PI / (8.0 * span);
        let dir = DVector::from_fn(d, |i, _| if i == j { 1.0 } else { 0.0 });
        let radii = log_radii(dy.max(1e-3), 4.0, 25);
        let scan: Vec<f64> = radii
            .par_iter()
            .map(|&r| {
                let u: Vec<Complex64> = (0..d)
                    .map(|i| Complex64::new(eta[i], r * dir[i]))
                    .collect();
                transform_terminal(&exps, t, &u, x, tol).map(|z| z.norm())
            })
            .collect::<Result<_>>()?;
        // k = 0 empirical criterion: the transform modulus must decay at all.
        let head = scan.first().copied().unwrap_or(1.0).max(1e-300);
        let tail = scan.last().copied().unwrap_or(1.0).max(1e-300);
        let slope = (tail.ln() - head.ln()) / (radii[radii.len() - 1] / radii[0]).ln();
        if slope > -0.05 {
            warning = Some(
                "density may not exist: characteristic function shows no decay (k = 0 test failed)"
                    .to_string(),
            );
        }
        // Truncation: first scanned radius below the tail threshold,
        // extrapolated with the fitted slope otherwise.
        let target = INTEGRAND_TAIL * at_eta_abs.max(1e-12);
        let y_cut = match radii.iter().zip(scan.iter()).find(|(_, &v)| v < target) {
            Some((&r, _)) => r,
            None => {
                if slope < -0.05 {
                    let r_last = radii[radii.len() - 1];
                    r_last * ((target / tail).ln() / slope).exp()
                } else {
                    f64::INFINITY
                }
            }
        };
        let budget_each = (MAX_FREQ_EVALS as f64).powf(1.0 / d as f64);
        let y_budget = dy * budget_each;
        truncation.push(y_cut.min(y_budget));
        steps.push(dy);
    }

    // Tensor grid of ξ points, row-major.
    let mut points = Vec::new();
    match d {
        1 => {
            for &v in &axes[0] {
                points.push(DVector::from_vec(vec![v]));
            }
        }
        _ => {
            for &v0 in &axes[0] {
                for &v1 in &axes[1] {
                    points.push(DVector::from_vec(vec![v0, v1]));
                }
            }
        }
    }

    let values = match d {
        1 => invert_1d(
            &exps, t, x, eta[0], steps[0], truncation[0], &points, tol,
        )?,
        _ => invert_2d(&exps, t, x, eta, &steps, &truncation, &points, tol)?,
    };

    Ok(DensityResult {
        points,
        values,
        warning,
        truncation,
    })
}

#[allow(clippy::too_many_arguments)]
fn invert_1d(
    exps: &CharacteristicExponents,
    t: f64,
    x: &DVector<f64>,
    eta: f64,
    dy: f64,
    y_max: f64,
    points: &[DVector<f64>],
    tol: f64,
) -> Result<Vec<f64>> {
    let count = ((y_max / dy).ceil() as usize).max(16);
    // Transform values on the nonnegative half-grid; the negative half is
    // the complex conjugate because the model coefficients and η are real.
    let phi: Vec<Complex64> = (0..=count)
        .into_par_iter()
        .map(|j| {
            let u = [Complex64::new(eta, j as f64 * dy)];
            transform_terminal(exps, t, &u, x, tol)
        })
        .collect::<Result<_>>()?;
    let values = points
        .par_iter()
        .map(|xi| {
            let xi = xi[0];
            // (1/2π)∫_{-Y}^{Y} e^{-(η+iy)ξ} g dy folded onto y ≥ 0.
            let mut acc = 0.5 * (Complex64::new(-eta * xi, 0.0).exp() * phi[0]).re;
            for (j, p) in phi.iter().enumerate().skip(1) {
                let y = j as f64 * dy;
                let w = if j == count { 0.5 } else { 1.0 };
                let damp = Complex64::new(-eta * xi, -y * xi).exp();
                acc += w * (damp * p).re;
            }
            acc * dy / std::f64::consts::PI
        })
        .collect();
    Ok(values)
}

#[allow(clippy::too_many_arguments)]
fn invert_2d(
    exps: &CharacteristicExponents,
    t: f64,
    x: &DVector<f64>,
    eta: &DVector<f64>,
    dys: &[f64],
    y_maxes: &[f64],
    points: &[DVector<f64>],
    tol: f64,
) -> Result<Vec<f64>> {
    let c0 = ((y_maxes[0] / dys[0]).ceil() as usize).max(8);
    let c1 = ((y_maxes[1] / dys[1]).ceil() as usize).max(8);
    // Half-plane j0 ≥ 0 with full range in j1; the other half is conjugate.
    let mut freq = Vec::with_capacity((c0 + 1) * (2 * c1 + 1));
    for j0 in 0..=c0 {
        for j1 in -(c1 as i64)..=(c1 as i64) {
            freq.push((j0, j1));
        }
    }
    let phi: Vec<Complex64> = freq
        .par_iter()
        .map(|&(j0, j1)| {
            let u = [
                Complex64::new(eta[0], j0 as f64 * dys[0]),
                Complex64::new(eta[1], j1 as f64 * dys[1]),
            ];
            transform_terminal(exps, t, &u, x, tol)
        })
        .collect::<Result<_>>()?;
    let values = points
        .par_iter()
        .map(|xi| {
            let mut acc = 0.0;
            for (idx, &(j0, j1)) in freq.iter().enumerate() {
                let y0 = j0 as f64 * dys[0];
                let y1 = j1 as f64 * dys[1];
                let mut w = if j0 == 0 { 0.5 } else { 1.0 };
                if j0 == c0 {
                    w *= 0.5;
                }
                if j1.unsigned_abs() as usize == c1 {
                    w *= 0.5;
                }
                let damp = Complex64::new(
                    -(eta[0] * xi[0] + eta[1] * xi[1]),
                    -(y0 * xi[0] + y1 * xi[1]),
                )
                .exp();
                acc += w * (damp * phi[idx]).re;
            }
            // Factor 2 restores the conjugate half-plane.
            acc * 2.0 * dys[0] * dys[1] / (4.0 * std::f64::consts::PI * std::f64::consts::PI)
        })
        .collect();
    Ok(values)
}
