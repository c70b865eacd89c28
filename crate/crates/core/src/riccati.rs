//! Generalized Riccati solver with dense output and blow-up detection.
//!
//! The system ∂ψ = R(ψ), ψ(0) = u and ∂φ = F(ψ), φ(0) = 0 is integrated in
//! real arithmetic over 2d+2 coordinates (real and imaginary parts of ψ plus
//! φ appended as a quadrature coordinate). The integrator is an embedded
//! Dormand–Prince 5(4) pair with PI step-size control and the method's
//! fourth-order continuous extension as dense output, so interpolation
//! error tracks the step-error tolerance.
//!
//! Blow-up is declared when ‖ψ‖ exceeds `1e8·(1+‖u‖)` and the step size has
//! collapsed (or the norm has run past the stall threshold); the explosion
//! time is then localized by integrating into the singularity, with a final
//! bisection on the last step's interpolant. Step-size collapse without norm
//! growth is reported as stiffness, never as blow-up.

use num_complex::Complex64;

use crate::error::{AffineError, Result};
use crate::exponents::{CharacteristicExponents, Exponents};
use crate::model::CanonicalAffineModel;

/// Documented tolerance range for `solve`.
pub const TOL_MIN: f64 = 1e-13;
pub const TOL_MAX: f64 = 1e-3;

const BLOWUP_CAP: f64 = 1e8;
const STALL_NORM: f64 = 1e14;
const H_FLOOR_REL: f64 = 1e-12;
const MAX_STEPS: usize = 2_000_000;
const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 5.0;

#[derive(Clone, Debug, PartialEq)]
pub enum SolveStatus {
    Complete,
    BlowUp {
        t_star: f64,
        /// (t_lo, t_hi) with the solution alive at t_lo and the norm past
        /// the blow-up cap by t_hi.
        bracket: (f64, f64),
    },
}

impl SolveStatus {
    pub fn is_complete(&self) -> bool {
        matches!(self, SolveStatus::Complete)
    }
}

#[derive(Clone, Debug, Default)]
pub struct SolverStats {
    pub steps: usize,
    pub rejected: usize,
    pub tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DenseMode {
    Full,
    TerminalOnly,
}

// Weights of the fifth dense-output coefficient (Dormand–Prince 5(4)).
const D_CONT: [f64; 7] = [
    -12_715_105_075.0 / 11_282_082_432.0,
    0.0,
    87_487_479_700.0 / 32_700_410_799.0,
    -10_690_763_975.0 / 1_880_347_072.0,
    701_980_252_875.0 / 199_316_789_632.0,
    -1_453_857_185.0 / 822_651_844.0,
    69_997_945.0 / 29_380_423.0,
];

/// One accepted step with the fourth-order continuous-extension
/// coefficients: y(t0+θh) = c1 + θ(c2 + (1−θ)(c3 + θ(c4 + (1−θ)c5))).
#[derive(Clone, Debug)]
struct Segment {
    t0: f64,
    h: f64,
    cont: [Vec<f64>; 5],
}

impl Segment {
    fn from_step(t0: f64, h: f64, y0: &[f64], y1: &[f64], ks: &[Vec<f64>]) -> Self {
        let n = y0.len();
        let mut c1 = vec![0.0; n];
        let mut c2 = vec![0.0; n];
        let mut c3 = vec![0.0; n];
        let mut c4 = vec![0.0; n];
        let mut c5 = vec![0.0; n];
        for i in 0..n {
            let dy = y1[i] - y0[i];
            c1[i] = y0[i];
            c2[i] = dy;
            c3[i] = h * ks[0][i] - dy;
            c4[i] = dy - h * ks[6][i] - c3[i];
            let mut acc = 0.0;
            for (j, k) in ks.iter().enumerate() {
                if D_CONT[j] != 0.0 {
                    acc += D_CONT[j] * k[i];
                }
            }
            c5[i] = h * acc;
        }
        Segment {
            t0,
            h,
            cont: [c1, c2, c3, c4, c5],
        }
    }

    fn eval(&self, t: f64, out: &mut [f64]) {
        let s = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let s1 = 1.0 - s;
        let [c1, c2, c3, c4, c5] = &self.cont;
        for i in 0..out.len() {
            out[i] = c1[i] + s * (c2[i] + s1 * (c3[i] + s * (c4[i] + s1 * c5[i])));
        }
    }

    fn y0(&self) -> &[f64] {
        &self.cont[0]
    }
}

/// Dense-output trajectory of (ψ, φ) with blow-up status.
#[derive(Clone, Debug)]
pub struct RiccatiSolution {
    dim: usize,
    pub u: Vec<Complex64>,
    pub horizon: f64,
    pub status: SolveStatus,
    pub stats: SolverStats,
    /// Last time covered by the trajectory (equals `horizon` when Complete).
    pub covered_end: f64,
    terminal: Vec<f64>,
    segments: Vec<Segment>,
}

impl RiccatiSolution {
    fn state_at(&self, t: f64) -> Result<Vec<f64>> {
        let slack = 1e-9 * (1.0 + self.covered_end.abs());
        if t < -slack || t > self.covered_end + slack {
            return Err(AffineError::Domain(format!(
                "t = {t} outside the covered interval [0, {}]",
                self.covered_end
            )));
        }
        let t = t.clamp(0.0, self.covered_end);
        if self.segments.is_empty() {
            if (t - self.covered_end).abs() <= slack {
                return Ok(self.terminal.clone());
            }
            return Err(AffineError::Domain(
                "dense output not stored for this solution".into(),
            ));
        }
        // Binary search for the segment containing t.
        let idx = self
            .segments
            .partition_point(|s| s.t0 + s.h < t)
            .min(self.segments.len() - 1);
        let seg = &self.segments[idx];
        let mut out = vec![0.0; 2 * self.dim + 2];
        seg.eval(t, &mut out);
        Ok(out)
    }

    pub fn psi(&self, t: f64) -> Result<Vec<Complex64>> {
        let y = self.state_at(t)?;
        Ok((0..self.dim)
            .map(|i| Complex64::new(y[i], y[self.dim + i]))
            .collect())
    }

    pub fn phi(&self, t: f64) -> Result<Complex64> {
        let y = self.state_at(t)?;
        Ok(Complex64::new(y[2 * self.dim], y[2 * self.dim + 1]))
    }

    pub fn psi_terminal(&self) -> Vec<Complex64> {
        (0..self.dim)
            .map(|i| Complex64::new(self.terminal[i], self.terminal[self.dim + i]))
            .collect()
    }

    pub fn phi_terminal(&self) -> Complex64 {
        Complex64::new(self.terminal[2 * self.dim], self.terminal[2 * self.dim + 1])
    }

    /// Maximum residual of the integral equation
    /// ‖ψ(t) − u − ∫₀ᵗ R(ψ(s)) ds‖ over an `npoints` check grid, computed
    /// from the dense output with per-segment Simpson quadrature.
    pub fn integral_residual<E: Exponents>(&self, exps: &E, npoints: usize) -> Result<f64> {
        if self.segments.is_empty() {
            return Err(AffineError::Domain(
                "residual check needs dense output".into(),
            ));
        }
        let d = self.dim;
        let mut r_buf = vec![Complex64::new(0.0, 0.0); d];
        let mut eval_r = |y: &[f64]| -> Result<Vec<Complex64>> {
            let psi: Vec<Complex64> =
                (0..d).map(|i| Complex64::new(y[i], y[d + i])).collect();
            exps.r(&psi, &mut r_buf)?;
            Ok(r_buf.clone())
        };
        // Cumulative ∫ R at segment boundaries.
        let mut cumulative = vec![vec![Complex64::new(0.0, 0.0); d]];
        let mut mid = vec![0.0; 2 * d + 2];
        let mut end = vec![0.0; 2 * d + 2];
        for seg in &self.segments {
            seg.eval(seg.t0 + 0.5 * seg.h, &mut mid);
            seg.eval(seg.t0 + seg.h, &mut end);
            let r0 = eval_r(seg.y0())?;
            let rm = eval_r(&mid)?;
            let r1 = eval_r(&end)?;
            let last = cumulative.last().unwrap().clone();
            let next: Vec<Complex64> = (0..d)
                .map(|i| last[i] + (r0[i] + rm[i] * 4.0 + r1[i]) * (seg.h / 6.0))
                .collect();
            cumulative.push(next);
        }
        let mut worst: f64 = 0.0;
        for k in 0..=npoints {
            let t = self.covered_end * k as f64 / npoints as f64;
            let idx = self
                .segments
                .partition_point(|s| s.t0 + s.h < t)
                .min(self.segments.len() - 1);
            let seg = &self.segments[idx];
            // Partial Simpson on [seg.t0, t].
            let h_part = t - seg.t0;
            let mut integral = cumulative[idx].clone();
            if h_part > 0.0 {
                let mut ymid = vec![0.0; 2 * d + 2];
                let mut yend = vec![0.0; 2 * d + 2];
                seg.eval(seg.t0 + 0.5 * h_part, &mut ymid);
                seg.eval(t, &mut yend);
                let r0 = eval_r(seg.y0())?;
                let rm = eval_r(&ymid)?;
                let r1 = eval_r(&yend)?;
                for i in 0..d {
                    integral[i] += (r0[i] + rm[i] * 4.0 + r1[i]) * (h_part / 6.0);
                }
            }
            let psi_t = self.psi(t)?;
            let res: f64 = (0..d)
                .map(|i| (psi_t[i] - self.u[i] - integral[i]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(res);
        }
        Ok(worst)
    }
}

struct Integrator<'a, E: Exponents> {
    exps: &'a E,
    dim: usize,
    n: usize,
}

impl<'a, E: Exponents> Integrator<'a, E> {
    fn new(exps: &'a E) -> Self {
        let dim = exps.dim();
        Self {
            exps,
            dim,
            n: 2 * dim + 2,
        }
    }

    /// RHS of the real system; Err on domain exits, non-finite values are
    /// surfaced as Ok with infinities and caught by the error norm.
    fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let d = self.dim;
        let psi: Vec<Complex64> = (0..d).map(|i| Complex64::new(y[i], y[d + i])).collect();
        let mut r = vec![Complex64::new(0.0, 0.0); d];
        self.exps.r(&psi, &mut r)?;
        let f = self.exps.f(&psi)?;
        for i in 0..d {
            dy[i] = r[i].re;
            dy[d + i] = r[i].im;
        }
        dy[2 * d] = f.re;
        dy[2 * d + 1] = f.im;
        Ok(())
    }
}

fn psi_norm(y: &[f64], dim: usize) -> f64 {
    y[..2 * dim].iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn wrms(err: &[f64], y0: &[f64], y1: &[f64], tol: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..err.len() {
        let sc = tol * (1.0 + y0[i].abs().max(y1[i].abs()));
        let q = err[i] / sc;
        acc += q * q;
    }
    (acc / err.len() as f64).sqrt()
}

// Dormand–Prince 5(4) tableau; the system is autonomous so the stage
// times are not needed.
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// y1 − ŷ1 weights (5th minus embedded 4th order).
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Solves the Riccati system for initial datum `u` on [0, t_end] with full
/// dense output.
pub fn solve<E: Exponents>(
    exps: &E,
    u: &[Complex64],
    t_end: f64,
    tol: f64,
) -> Result<RiccatiSolution> {
    solve_with(exps, u, t_end, tol, DenseMode::Full)
}

/// Convenience: solve for a model's own exponents.
pub fn solve_model(
    model: &CanonicalAffineModel,
    u: &[Complex64],
    t_end: f64,
    tol: f64,
) -> Result<RiccatiSolution> {
    let exps = CharacteristicExponents::new(model);
    solve_with(&exps, u, t_end, tol, DenseMode::Full)
}

pub fn solve_with<E: Exponents>(
    exps: &E,
    u: &[Complex64],
    t_end: f64,
    tol: f64,
    mode: DenseMode,
) -> Result<RiccatiSolution> {
    if !(t_end > 0.0) {
        return Err(AffineError::Config(format!("horizon T = {t_end} must be > 0")));
    }
    if !(TOL_MIN..=TOL_MAX).contains(&tol) {
        return Err(AffineError::Config(format!(
            "tol = {tol} outside [{TOL_MIN}, {TOL_MAX}]"
        )));
    }
    let dim = exps.dim();
    if u.len() != dim {
        return Err(AffineError::Dimension(format!(
            "u must have length {dim}, got {}",
            u.len()
        )));
    }
    let integ = Integrator::new(exps);
    let n = integ.n;
    let u_norm: f64 = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let cap = BLOWUP_CAP * (1.0 + u_norm);
    let stall = STALL_NORM * (1.0 + u_norm);
    let h_floor = H_FLOOR_REL * t_end;

    let mut y: Vec<f64> = Vec::with_capacity(n);
    for z in u {
        y.push(z.re);
    }
    for z in u {
        y.push(z.im);
    }
    y.push(0.0);
    y.push(0.0);

    let mut f0 = vec![0.0; n];
    integ.rhs(&y, &mut f0).map_err(|e| match e {
        AffineError::Domain(msg) => AffineError::Domain(format!(
            "initial datum outside the exponent domain: {msg}"
        )),
        other => other,
    })?;

    // Initial step size (two-evaluation heuristic).
    let mut h = {
        let sc: Vec<f64> = y.iter().map(|v| tol * (1.0 + v.abs())).collect();
        let d0 = (y.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n as f64).sqrt();
        let d1 = (f0.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n as f64).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6 * t_end
        } else {
            0.01 * d0 / d1
        };
        let mut y1 = y.clone();
        for i in 0..n {
            y1[i] += h0 * f0[i];
        }
        let mut f1 = vec![0.0; n];
        let h1 = if integ.rhs(&y1, &mut f1).is_ok() {
            let d2 = (f1
                .iter()
                .zip(&f0)
                .zip(&sc)
                .map(|((a, b), s)| ((a - b) / s).powi(2))
                .sum::<f64>()
                / n as f64)
                .sqrt()
                / h0;
            let dmax = d1.max(d2);
            if dmax > 1e-15 {
                (0.01 / dmax).powf(0.2)
            } else {
                h0 * 100.0
            }
        } else {
            h0
        };
        (100.0 * h0).min(h1).min(t_end)
    };

    let mut t = 0.0;
    let mut stats = SolverStats {
        tol,
        ..Default::default()
    };
    let mut segments: Vec<Segment> = Vec::new();
    let mut err_prev: f64 = 1.0;
    let mut ks: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; n]).collect();
    ks[0].copy_from_slice(&f0);
    let mut growing = false;

    loop {
        if t_end - t <= 1e-14 * t_end {
            return Ok(finish_complete(dim, u, t_end, stats, y, segments, mode));
        }
        if stats.steps + stats.rejected > MAX_STEPS {
            return Err(AffineError::Stiff { t, h });
        }
        let h_try = h.min(t_end - t);

        // Seven stages; the first is FSAL from the previous step.
        let mut failed = false;
        let mut y_stage = vec![0.0; n];
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, k) in ks.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc += a * k[i];
                    }
                }
                y_stage[i] = y[i] + h_try * acc;
            }
            let (head, tail) = ks.split_at_mut(s);
            let _ = head;
            if integ.rhs(&y_stage, &mut tail[0]).is_err() {
                failed = true;
                break;
            }
            if tail[0].iter().any(|v| !v.is_finite()) {
                failed = true;
                break;
            }
        }

        let mut err_norm = f64::INFINITY;
        let mut y_new = vec![0.0; n];
        if !failed {
            // Stage 7 state equals the 5th-order solution (FSAL).
            for i in 0..n {
                let mut acc = 0.0;
                for (j, k) in ks.iter().enumerate().take(6) {
                    let a = A[6][j];
                    if a != 0.0 {
                        acc += a * k[i];
                    }
                }
                y_new[i] = y[i] + h_try * acc;
            }
            if y_new.iter().all(|v| v.is_finite()) {
                let mut err = vec![0.0; n];
                for i in 0..n {
                    let mut acc = 0.0;
                    for (j, k) in ks.iter().enumerate() {
                        if E[j] != 0.0 {
                            acc += E[j] * k[i];
                        }
                    }
                    err[i] = h_try * acc;
                }
                err_norm = wrms(&err, &y, &y_new, tol);
            }
        }

        if err_norm <= 1.0 {
            // Accepted.
            let f_end = ks[6].clone();
            if mode == DenseMode::Full {
                segments.push(Segment::from_step(t, h_try, &y, &y_new, &ks));
            }
            t += h_try;
            y = y_new;
            ks[0].copy_from_slice(&f_end);
            stats.steps += 1;

            let norm = psi_norm(&y, dim);
            if norm > cap {
                growing = true;
            }
            if growing && norm > stall {
                return finish_blowup(
                    &integ, dim, u, t_end, stats, t, y, h_try, segments, mode,
                );
            }

            // PI controller.
            let e = err_norm.max(1e-10);
            let factor =
                SAFETY * e.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
            err_prev = e;
            h = h_try * factor.clamp(MIN_SCALE, MAX_SCALE);
        } else {
            stats.rejected += 1;
            let factor = if err_norm.is_finite() {
                (SAFETY * err_norm.powf(-0.2)).clamp(MIN_SCALE, 1.0)
            } else {
                0.25
            };
            h = h_try * factor;
            if h < h_floor {
                let norm = psi_norm(&y, dim);
                let deriv = psi_norm(&ks[0], dim);
                // Norm past the cap, or a derivative that would carry it
                // past the cap within the horizon, is explosion; anything
                // else is stiffness.
                let blow_up_like = norm > cap || deriv * t_end > cap;
                if blow_up_like {
                    return finish_blowup(
                        &integ, dim, u, t_end, stats, t, y, h_try, segments, mode,
                    );
                }
                return Err(AffineError::Stiff { t, h });
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn finish_complete(
    dim: usize,
    u: &[Complex64],
    t_end: f64,
    stats: SolverStats,
    y: Vec<f64>,
    segments: Vec<Segment>,
    mode: DenseMode,
) -> RiccatiSolution {
    RiccatiSolution {
        dim,
        u: u.to_vec(),
        horizon: t_end,
        status: SolveStatus::Complete,
        stats,
        covered_end: t_end,
        terminal: y,
        segments: if mode == DenseMode::Full { segments } else { vec![] },
    }
}

/// Finalizes a blow-up: the trajectory is alive at `t`, the remaining
/// lifetime is bounded from the current norm and derivative, and the last
/// step's interpolant is bisected for the stall-crossing refinement.
#[allow(clippy::too_many_arguments)]
fn finish_blowup<E: Exponents>(
    integ: &Integrator<E>,
    dim: usize,
    u: &[Complex64],
    t_end: f64,
    stats: SolverStats,
    t: f64,
    y: Vec<f64>,
    last_h: f64,
    mut segments: Vec<Segment>,
    mode: DenseMode,
) -> Result<RiccatiSolution> {
    let norm = psi_norm(&y, dim);
    let mut deriv = vec![0.0; integ.n];
    let deriv_norm = if integ.rhs(&y, &mut deriv).is_ok() {
        psi_norm(&deriv, dim)
    } else {
        f64::INFINITY
    };
    // For superlinear (at least quadratic) growth the remaining lifetime is
    // bounded by ‖ψ‖/‖R(ψ)‖; factor 2 covers the approach region.
    let rem = if deriv_norm.is_finite() && deriv_norm > norm {
        (2.0 * norm / deriv_norm).max(f64::MIN_POSITIVE)
    } else {
        4.0 * last_h.max(f64::MIN_POSITIVE)
    };

    // Refine the lower bracket end inside the final accepted step: bisect the
    // Hermite interpolant for the stall-norm crossing when one exists there.
    let t_lo = if let Some(seg) = segments.last() {
        let u_norm: f64 = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let stall = STALL_NORM * (1.0 + u_norm);
        let mut buf = vec![0.0; integ.n];
        seg.eval(seg.t0, &mut buf);
        let n0 = psi_norm(&buf, dim);
        if n0 < stall && norm > stall {
            let (mut a, mut b) = (seg.t0, seg.t0 + seg.h);
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                seg.eval(mid, &mut buf);
                if psi_norm(&buf, dim) < stall {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            a
        } else {
            t
        }
    } else {
        t
    };

    let t_hi = t + rem;
    let t_star = 0.5 * (t_lo.max(t) + t_hi);
    if mode == DenseMode::TerminalOnly {
        segments.clear();
    }
    Ok(RiccatiSolution {
        dim,
        u: u.to_vec(),
        horizon: t_end,
        status: SolveStatus::BlowUp {
            t_star,
            bracket: (t_lo, t_hi),
        },
        stats,
        covered_end: t,
        terminal: y,
        segments,
    })
}

/// Blow-up time of the real-data solution started at `u`, censored at
/// `t_max` (`None` means no explosion up to the censoring horizon).
pub fn explosion_time(
    model: &CanonicalAffineModel,
    u: &nalgebra::DVector<f64>,
    t_max: f64,
    tol: f64,
) -> Result<Option<f64>> {
    let uc: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let exps = CharacteristicExponents::new(model);
    let sol = solve_with(&exps, &uc, t_max, tol, DenseMode::TerminalOnly)?;
    match sol.status {
        SolveStatus::Complete => Ok(None),
        SolveStatus::BlowUp { t_star, .. } => Ok(Some(t_star)),
    }
}

/// Closed-form scalar CIR ψ by separation of variables:
/// ψ(t) = u e^{βt} / (1 − u σ²(e^{βt}−1)/(2β)), the independent oracle used
/// throughout the tests.
pub fn cir_psi_closed_form(b: f64, beta: f64, sigma: f64, u: f64, t: f64) -> (f64, f64) {
    let _ = b;
    let expbt = (beta * t).exp();
    let denom = 1.0 - u * sigma * sigma * (expbt - 1.0) / (2.0 * beta);
    let psi = u * expbt / denom;
    (psi, denom)
}

/// Closed-form φ(t) = ∫₀ᵗ b·ψ(s) ds = −(2b/σ²)·ln(denominator(t)).
pub fn cir_phi_closed_form(b: f64, beta: f64, sigma: f64, u: f64, t: f64) -> f64 {
    let (_, denom) = cir_psi_closed_form(b, beta, sigma, u, t);
    -(2.0 * b / (sigma * sigma)) * denom.ln()
}

/// Closed-form CIR explosion time (1/β)·ln(1 + 2β/(σ²u)) for β, u > 0.
pub fn cir_explosion_closed_form(beta: f64, sigma: f64, u: f64) -> f64 {
    (1.0 / beta) * (1.0 + 2.0 * beta / (sigma * sigma * u)).ln()
}
