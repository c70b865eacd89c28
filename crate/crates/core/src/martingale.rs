//! Martingale verification for exponentially affine functionals.
//!
//! e^{⟨θ,X⟩} has constant expectation only when F(θ) = R(θ) = 0; the
//! remaining question is conservativeness of the exponentially tilted
//! process, probed here by solving the tilted Riccati system from the
//! perturbed initial data g(0) = −ε·𝟙 for a ladder of ε values. Linear
//! decay of sup‖g‖ with ε is the falsifiable surrogate for "the trivial
//! solution is the only non-positive one"; an ε-independent escape toward a
//! non-trivial non-positive solution is the strict-local signature.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{AffineError, Result};
use crate::exponents::CharacteristicExponents;
use crate::model::CanonicalAffineModel;
use crate::riccati::{self, DenseMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MartingaleVerdict {
    Martingale,
    StrictLocal,
    NotLocal,
}

#[derive(Clone, Debug, Serialize)]
pub struct MartingaleEvidence {
    pub f_theta: f64,
    pub r_theta: Vec<f64>,
    pub zero_tolerance: f64,
    pub epsilons: Vec<f64>,
    /// sup‖g_ε‖ over [0, T] per ε (NaN when that solve blew up).
    pub sup_norms: Vec<f64>,
    /// sup‖g_ε‖ / ε per ε.
    pub decay_ratios: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MartingaleReport {
    pub verdict: MartingaleVerdict,
    pub evidence: MartingaleEvidence,
}

/// Exponentially tilted functional characteristics (F̃, R̃) for a real θ in
/// the finiteness domain.
pub fn tilt(model: &CanonicalAffineModel, theta: &DVector<f64>) -> Result<CharacteristicExponents> {
    CharacteristicExponents::new(model).tilt(theta)
}

const EPS_LADDER: [f64; 3] = [1e-3, 1e-5, 1e-7];
const RATIO_FACTOR: f64 = 10.0;

fn parameter_scale(model: &CanonicalAffineModel) -> f64 {
    let mut s = model.a.amax().max(model.beta.amax()).max(model.b.amax());
    for al in &model.alpha {
        s = s.max(al.amax());
    }
    s
}

/// Deterministic martingale criterion for M = e^{⟨θ,X⟩} on [0, T].
pub fn martingale_check(
    model: &CanonicalAffineModel,
    theta: &DVector<f64>,
    horizon: f64,
    tol: f64,
) -> Result<MartingaleReport> {
    let d = model.dim();
    if theta.len() != d {
        return Err(AffineError::Dimension(format!(
            "theta must have length {d}"
        )));
    }
    let base = CharacteristicExponents::new(model);
    let (f_theta, r_theta) = base.eval_real(theta)?;
    let zero_tol = 1e-10 * (1.0 + theta.norm() * parameter_scale(model));

    let mut evidence = MartingaleEvidence {
        f_theta,
        r_theta: r_theta.iter().copied().collect(),
        zero_tolerance: zero_tol,
        epsilons: EPS_LADDER.to_vec(),
        sup_norms: vec![],
        decay_ratios: vec![],
    };

    // Constant expectation requires F(θ) = 0 and R(θ) = 0.
    if f_theta.abs() > zero_tol || r_theta.amax() > zero_tol {
        return Ok(MartingaleReport {
            verdict: MartingaleVerdict::NotLocal,
            evidence,
        });
    }

    // Conservativeness probe on the tilted exponents.
    let tilted = base.tilt(theta)?;
    for &eps in &EPS_LADDER {
        let g0: Vec<Complex64> = (0..d).map(|_| Complex64::new(-eps, 0.0)).collect();
        match riccati::solve_with(&tilted, &g0, horizon, tol, DenseMode::Full) {
            Ok(sol) => {
                let mut sup = 0.0f64;
                for k in 0..=200 {
                    let t = sol.covered_end * k as f64 / 200.0;
                    let g = sol.psi(t)?;
                    let norm: f64 = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    sup = sup.max(norm);
                }
                if !sol.status.is_complete() {
                    // Escape through blow-up counts as a non-trivial solution.
                    sup = f64::INFINITY;
                }
                evidence.sup_norms.push(sup);
                evidence.decay_ratios.push(sup / eps);
            }
            Err(AffineError::Stiff { t, h }) => {
                return Err(AffineError::Inconclusive(format!(
                    "tilted Riccati solve stiffened at t = {t} (h = {h}) for ε = {eps}; \
                     F(θ) = {f_theta}, R(θ) max = {}",
                    r_theta.amax()
                )));
            }
            Err(e) => return Err(e),
        }
    }

    let ratios = &evidence.decay_ratios;
    let max_ratio = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let min_ratio = ratios.iter().cloned().fold(f64::MAX, f64::min);
    let sups = &evidence.sup_norms;
    let max_sup = sups.iter().cloned().fold(f64::MIN, f64::max);
    let min_sup = sups.iter().cloned().fold(f64::MAX, f64::min);

    let verdict = if max_sup == 0.0 || max_ratio <= RATIO_FACTOR * min_ratio {
        // sup‖g‖ shrinks proportionally with ε: trivial solution attracts.
        MartingaleVerdict::Martingale
    } else if !max_sup.is_finite() || max_sup <= RATIO_FACTOR * min_sup {
        // sup‖g‖ is ε-independent (or infinite): g escapes to a non-trivial
        // non-positive solution.
        MartingaleVerdict::StrictLocal
    } else {
        return Err(AffineError::Inconclusive(format!(
            "perturbation decay neither linear nor saturating: sup norms {:?} for ε {:?}",
            evidence.sup_norms, evidence.epsilons
        )));
    };

    Ok(MartingaleReport { verdict, evidence })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::Exponents;
    use crate::transform;
    use approx::assert_relative_eq;

    #[test]
    fn cir_root_theta_is_martingale() {
        // b = 0, β = −0.5, σ = 1, θ = 1: F(θ) = 0, R(θ) = 0.5 − 0.5 = 0.
        let model = CanonicalAffineModel::cir(0.0, -0.5, 1.0);
        let theta = DVector::from_element(1, 1.0);
        let report = martingale_check(&model, &theta, 2.0, 1e-10).unwrap();
        assert_eq!(report.verdict, MartingaleVerdict::Martingale);
        assert!(report.evidence.f_theta.abs() < 1e-14);

        // Cross-check: the MGF at θ is flat in t.
        let x = DVector::from_element(1, 0.8);
        for k in 1..=10 {
            let t = 2.0 * k as f64 / 10.0;
            let v = transform::mgf(
                &model,
                t,
                &[Complex64::new(1.0, 0.0)],
                &x,
                1e-10,
            )
            .unwrap()
            .value
            .finite()
            .unwrap();
            assert_relative_eq!(v.re, (0.8f64).exp(), max_relative = 1e-6);
        }
    }

    #[test]
    fn positive_constant_drift_breaks_locality() {
        // b = 0.2 with σ²/2 + β = 0 at θ = 1: F(θ) = 0.2 ≠ 0.
        let model = CanonicalAffineModel::cir(0.2, -0.5, 1.0);
        let theta = DVector::from_element(1, 1.0);
        let report = martingale_check(&model, &theta, 2.0, 1e-10).unwrap();
        assert_eq!(report.verdict, MartingaleVerdict::NotLocal);
        assert_relative_eq!(report.evidence.f_theta, 0.2, epsilon = 1e-14);
    }

    #[test]
    fn zero_theta_is_trivially_martingale() {
        let model = CanonicalAffineModel::cir(0.3, -0.7, 0.4);
        let report =
            martingale_check(&model, &DVector::zeros(1), 1.5, 1e-10).unwrap();
        assert_eq!(report.verdict, MartingaleVerdict::Martingale);
    }

    #[test]
    fn explosive_tilt_flags_strict_local() {
        // Strongly explosive tilted drift with a horizon long enough for the
        // perturbed solutions to escape to the non-trivial root.
        let model = CanonicalAffineModel::cir(0.0, -2.0, 2.0);
        let theta = DVector::from_element(1, 1.0); // −2β/σ² = 1
        let report = martingale_check(&model, &theta, 20.0, 1e-10).unwrap();
        assert_eq!(report.verdict, MartingaleVerdict::StrictLocal);
    }

    #[test]
    fn double_tilt_restores_exponents() {
        let model = CanonicalAffineModel::cir(0.1, -0.4, 0.8);
        let theta = DVector::from_element(1, 0.5);
        let there = tilt(&model, &theta).unwrap();
        let back = there.tilt(&(-theta)).unwrap();
        let base = CharacteristicExponents::new(&model);
        for &x in &[0.0, 0.3, -0.6, 0.9] {
            let u = [Complex64::new(x, 0.1)];
            let mut r0 = [Complex64::default()];
            let mut r1 = [Complex64::default()];
            base.r(&u, &mut r0).unwrap();
            back.r(&u, &mut r1).unwrap();
            assert!((r0[0] - r1[0]).norm() < 1e-12);
            assert!((base.f(&u).unwrap() - back.f(&u).unwrap()).norm() < 1e-12);
        }
    }
}
