//! Non-central Wishart transition calculus.
//!
//! For a jump-free Wishart model with b = 2p·α the transition law of X_t
//! given X_0 = x is non-central Wishart with shape p, scale
//! σ_t = ∫₀ᵗ e^{sβ}·2α·e^{sβᵀ} ds and non-centrality ω_t = e^{tβ} x e^{tβᵀ}.
//! The parameter-domain validation implements the Gindikin shape set
//! and the non-centrality rank bounds (the confirmed tighter bound in
//! strict mode).

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{AffineError, Result};
use crate::linalg;
use crate::model::{validate_wishart, WishartModel};

/// Existence verdict for a (d, p, σ, ω) parameter set.
#[derive(Clone, Debug, Serialize)]
pub struct ExistenceReport {
    pub d: usize,
    pub two_p: f64,
    pub gindikin_ok: bool,
    pub omega_rank: usize,
    pub rank_bound: f64,
    pub rank_ok: bool,
    pub strict: bool,
    pub verdict: bool,
}

/// Non-central Wishart distribution parameters with a cached existence
/// verdict (non-strict mode).
#[derive(Clone, Debug)]
pub struct WishartDistribution {
    pub d: usize,
    pub shape: f64,
    pub scale: DMatrix<f64>,
    pub noncentrality: DMatrix<f64>,
    pub existence: ExistenceReport,
}

const GINDIKIN_TOL: f64 = 1e-9;

/// Shape/rank validation: 2p must lie in {0,1,…,d−2} ∪ [d−1, ∞) and
/// rank(ω) ≤ 2p+1; strict mode tightens the bound to rank(ω) ≤ 2p whenever
/// 2p < d−1.
pub fn validate_params(
    d: usize,
    p: f64,
    sigma: &DMatrix<f64>,
    omega: &DMatrix<f64>,
    strict: bool,
) -> Result<ExistenceReport> {
    if p < 0.0 {
        return Err(AffineError::Structure(format!(
            "shape parameter p = {p} must be ≥ 0"
        )));
    }
    for (name, m) in [("sigma", sigma), ("omega", omega)] {
        if m.nrows() != d || m.ncols() != d {
            return Err(AffineError::Dimension(format!("{name} must be {d}x{d}")));
        }
        if !linalg::is_symmetric(m, linalg::scaled_tol(m)) {
            return Err(AffineError::Structure(format!("{name} must be symmetric")));
        }
    }

    let two_p = 2.0 * p;
    // Exact half-integer membership for the discrete part of the Gindikin
    // set; the set is a discrete union, so no float fuzz beyond the declared
    // tolerance is allowed.
    let rounded = two_p.round();
    let discrete = (two_p - rounded).abs() <= GINDIKIN_TOL
        && rounded >= -GINDIKIN_TOL
        && rounded <= (d as f64 - 2.0) + GINDIKIN_TOL;
    let continuous = two_p >= (d as f64 - 1.0) - GINDIKIN_TOL;
    let gindikin_ok = discrete || continuous;

    let omega_rank = linalg::psd_rank(omega, 1e-12)?;
    let tight = strict && two_p < (d as f64 - 1.0) - GINDIKIN_TOL;
    let rank_bound = if tight { two_p } else { two_p + 1.0 };
    let rank_ok = (omega_rank as f64) <= rank_bound + GINDIKIN_TOL;

    Ok(ExistenceReport {
        d,
        two_p,
        gindikin_ok,
        omega_rank,
        rank_bound,
        rank_ok,
        strict,
        verdict: gindikin_ok && rank_ok,
    })
}

/// Rank of a symmetric psd matrix with explicit tolerance.
pub fn psd_rank(omega: &DMatrix<f64>, tol: f64) -> Result<usize> {
    linalg::psd_rank(omega, tol)
}

/// Transition parameters of the jump-free Wishart process with b = 2p·α.
pub fn transition_params(
    model: &WishartModel,
    t: f64,
    x: &DMatrix<f64>,
) -> Result<WishartDistribution> {
    let report = validate_wishart(model)?;
    if !report.verdict {
        return Err(AffineError::Structure(format!(
            "model fails admissibility: {:?}",
            report
                .failures()
                .map(|c| c.name.clone())
                .collect::<Vec<_>>()
        )));
    }
    if model
        .jump
        .as_ref()
        .map(|j| j.rate > 0.0)
        .unwrap_or(false)
    {
        return Err(AffineError::Unsupported(
            "Wishart transition parameters require a jump-free model".into(),
        ));
    }
    let d = model.d;
    if x.nrows() != d || x.ncols() != d {
        return Err(AffineError::Dimension(format!("x must be {d}x{d}")));
    }
    if !linalg::is_symmetric(x, linalg::scaled_tol(x)) || !linalg::is_psd(x) {
        return Err(AffineError::Domain("x must be symmetric psd".into()));
    }
    let alpha = model.alpha();
    // b must equal 2p·α for some p ≥ 0.
    let tr_alpha = alpha.trace();
    if tr_alpha <= linalg::PSD_TOL {
        return Err(AffineError::Unsupported(
            "α = QᵀQ vanishes; the transition law is not Wishart".into(),
        ));
    }
    let p = model.b.trace() / (2.0 * tr_alpha);
    let residual = &model.b - &alpha * (2.0 * p);
    if residual.amax() > 1e-10 * (1.0 + model.b.amax()) {
        return Err(AffineError::Unsupported(
            "constant drift is not proportional to α: b = 2p·QᵀQ required".into(),
        ));
    }

    if t < 0.0 {
        return Err(AffineError::Config("t must be ≥ 0".into()));
    }
    let (scale, noncentrality) = if t == 0.0 {
        (DMatrix::zeros(d, d), x.clone())
    } else {
        let sigma_t = linalg::lyapunov_integral(&model.beta, &(&alpha * 2.0), t);
        let e_tb = linalg::expm(&(&model.beta * t));
        let omega_t = &e_tb * x * e_tb.transpose();
        (sigma_t, linalg::symmetrize(&omega_t))
    };

    let existence = validate_params(d, p, &scale, &noncentrality, false)?;
    Ok(WishartDistribution {
        d,
        shape: p,
        scale,
        noncentrality,
        existence,
    })
}

/// Laplace transform det(I + σu)^{−p} · exp(−tr(u(I + σu)^{−1}ω)) at a
/// symmetric psd argument.
pub fn laplace(dist: &WishartDistribution, u: &DMatrix<f64>) -> Result<f64> {
    let d = dist.d;
    if u.nrows() != d || u.ncols() != d {
        return Err(AffineError::Dimension(format!("u must be {d}x{d}")));
    }
    let id = DMatrix::<f64>::identity(d, d);
    let m = &id + &dist.scale * u;
    let lu = m.lu();
    let det = lu.determinant();
    if det.abs() < 1e-300 {
        return Err(AffineError::Domain(
            "I + σu is singular; u outside the transform domain".into(),
        ));
    }
    let inv = lu
        .try_inverse()
        .ok_or_else(|| AffineError::Domain("I + σu not invertible".into()))?;
    let trace_term = (u * inv * &dist.noncentrality).trace();
    Ok(det.powf(-dist.shape) * (-trace_term).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn wishart_2d() -> WishartModel {
        // d = 2, p = 1, β = −0.5 I, Q = I (α = I, b = 2I).
        WishartModel::diffusion(
            2,
            DMatrix::identity(2, 2) * 2.0,
            DMatrix::identity(2, 2) * -0.5,
            DMatrix::identity(2, 2),
        )
    }

    #[test]
    fn laplace_total_mass() {
        let dist = transition_params(&wishart_2d(), 1.0, &DMatrix::identity(2, 2)).unwrap();
        assert_relative_eq!(laplace(&dist, &DMatrix::zeros(2, 2)).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn laplace_central_determinant_case() {
        // ω = 0, σ = I, u = I, p = 1, d = 2: det(2I)^{-1} = 1/4.
        let dist = WishartDistribution {
            d: 2,
            shape: 1.0,
            scale: DMatrix::identity(2, 2),
            noncentrality: DMatrix::zeros(2, 2),
            existence: validate_params(
                2,
                1.0,
                &DMatrix::identity(2, 2),
                &DMatrix::zeros(2, 2),
                false,
            )
            .unwrap(),
        };
        assert_relative_eq!(
            laplace(&dist, &DMatrix::identity(2, 2)).unwrap(),
            0.25,
            epsilon = 1e-14
        );
    }

    #[test]
    fn transition_small_time_degenerates_to_point_mass() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.7]);
        let dist = transition_params(&wishart_2d(), 1e-9, &x).unwrap();
        assert!(dist.scale.amax() < 1e-8);
        assert_relative_eq!(dist.noncentrality[(0, 0)], 1.0, epsilon = 1e-8);
        // Laplace transform ≈ e^{−tr(ux)}.
        let u = DMatrix::identity(2, 2) * 0.3;
        let lap = laplace(&dist, &u).unwrap();
        assert_relative_eq!(lap, (-0.3 * (1.0 + 0.7f64)).exp(), epsilon = 1e-6);
    }

    #[test]
    fn transition_zero_beta_direct_integral() {
        // β = 0, α = I: σ_t = 2tI, ω_t = x.
        let model = WishartModel::diffusion(
            2,
            DMatrix::identity(2, 2) * 2.0,
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
        );
        let x = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.9]);
        let dist = transition_params(&model, 1.7, &x).unwrap();
        assert_relative_eq!(dist.scale[(0, 0)], 3.4, max_relative = 1e-12);
        assert_relative_eq!(dist.scale[(1, 1)], 3.4, max_relative = 1e-12);
        assert!(dist.scale[(0, 1)].abs() < 1e-12);
        assert_relative_eq!(dist.noncentrality[(0, 1)], 0.1, max_relative = 1e-12);
    }

    #[test]
    fn rejects_drift_not_proportional_to_alpha() {
        let model = WishartModel::diffusion(
            2,
            DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]),
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
        );
        assert!(matches!(
            transition_params(&model, 1.0, &DMatrix::identity(2, 2)),
            Err(AffineError::Unsupported(_))
        ));
    }

    #[test]
    fn gindikin_examples() {
        let sig = DMatrix::identity(3, 3);
        // d=3, p=0.5, rank(ω)=1: valid; strict also valid (1 ≤ 2p = 1).
        let omega = {
            let v = nalgebra::DVector::from_vec(vec![1.0, 0.0, 0.0]);
            &v * v.transpose()
        };
        let rep = validate_params(3, 0.5, &sig, &omega, false).unwrap();
        assert!(rep.verdict && rep.gindikin_ok && rep.rank_ok);
        let rep_strict = validate_params(3, 0.5, &sig, &omega, true).unwrap();
        assert!(rep_strict.verdict);

        // d=3, p=0.7: 2p = 1.4 not in {0,1} and < 2: invalid.
        let rep = validate_params(3, 0.7, &sig, &DMatrix::zeros(3, 3), false).unwrap();
        assert!(!rep.gindikin_ok && !rep.verdict);

        // d=4, p=0.5, rank(ω)=2: non-strict valid, strict invalid.
        let sig4 = DMatrix::identity(4, 4);
        let omega4 = DMatrix::from_partial_diagonal(4, 4, &[1.0, 1.0]);
        let rep = validate_params(4, 0.5, &sig4, &omega4, false).unwrap();
        assert!(rep.verdict, "rank 2 ≤ 2p+1 = 2");
        let rep = validate_params(4, 0.5, &sig4, &omega4, true).unwrap();
        assert!(!rep.verdict, "rank 2 > 2p = 1 in strict mode");
    }

    #[test]
    fn negative_shape_is_structural() {
        let sig = DMatrix::identity(2, 2);
        assert!(matches!(
            validate_params(2, -0.3, &sig, &DMatrix::zeros(2, 2), false),
            Err(AffineError::Structure(_))
        ));
    }

    #[test]
    fn gindikin_upward_closure_in_half_steps() {
        // If (d, p) is valid then (d, p+1/2) is valid.
        let sig = DMatrix::identity(5, 5);
        let omega = DMatrix::zeros(5, 5);
        for k in 0..20 {
            let p = 0.5 * k as f64;
            let cur = validate_params(5, p, &sig, &omega, false).unwrap();
            if cur.verdict {
                let next = validate_params(5, p + 0.5, &sig, &omega, false).unwrap();
                assert!(next.verdict, "closure fails at p = {p}");
            }
        }
    }

    #[test]
    fn laplace_monotone_and_log_convex_on_rays() {
        let dist = transition_params(&wishart_2d(), 1.0, &DMatrix::identity(2, 2)).unwrap();
        let u = DMatrix::from_row_slice(2, 2, &[0.4, 0.1, 0.1, 0.3]);
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let vals: Vec<f64> = grid
            .iter()
            .map(|&s| laplace(&dist, &(&u * s)).unwrap())
            .collect();
        for w in vals.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "not decreasing along the ray");
        }
        let logs: Vec<f64> = vals.iter().map(|v| v.ln()).collect();
        for w in logs.windows(3) {
            assert!(
                w[0] + w[2] - 2.0 * w[1] >= -1e-9,
                "log-convexity violated"
            );
        }
    }
}
