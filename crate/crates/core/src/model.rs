//! Model parameter sets on the two supported state spaces and their
//! admissibility validation.
//!
//! Canonical models live on ℝ₊^m × ℝⁿ with diffusion `a + Σ xᵢ αᵢ`, drift
//! `b + βx` and finite-activity jumps with intensity `λ₀ + Σ λᵢ xᵢ`. Wishart
//! models live on S_d^+ with diffusion coefficient `α = QᵀQ`, drift
//! `b + βx + xβᵀ` and a matrix subordinator.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{AffineError, Result};
use crate::jumps::{JumpSpec, MatrixJumpSpec};
use crate::linalg;

/// Affine model on the canonical state space ℝ₊^m × ℝⁿ.
///
/// Coordinates `0..m` are the positive ones, `m..m+n` the real ones. The
/// state drift is `b + beta·x` (so the exponent R carries `betaᵀu`).
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalAffineModel {
    pub m: usize,
    pub n: usize,
    /// Constant diffusion, d×d symmetric.
    pub a: DMatrix<f64>,
    /// Linear diffusion per positive coordinate, m entries of d×d.
    pub alpha: Vec<DMatrix<f64>>,
    /// Constant drift.
    pub b: DVector<f64>,
    /// Linear drift matrix; drift(x) = b + beta·x.
    pub beta: DMatrix<f64>,
    /// State-independent jumps (intensity λ₀).
    pub jump0: Option<JumpSpec>,
    /// Jumps with intensity λᵢ·xᵢ, one optional entry per positive coordinate.
    pub jumps_linear: Vec<Option<JumpSpec>>,
}

impl CanonicalAffineModel {
    pub fn dim(&self) -> usize {
        self.m + self.n
    }

    /// Pure-diffusion constructor with empty jump slots.
    pub fn diffusion(
        m: usize,
        n: usize,
        a: DMatrix<f64>,
        alpha: Vec<DMatrix<f64>>,
        b: DVector<f64>,
        beta: DMatrix<f64>,
    ) -> Self {
        Self {
            m,
            n,
            a,
            alpha,
            b,
            beta,
            jump0: None,
            jumps_linear: vec![None; m],
        }
    }

    /// Scalar CIR model: dX = (b + βX)dt + σ√X dW on ℝ₊.
    pub fn cir(b: f64, beta: f64, sigma: f64) -> Self {
        Self::diffusion(
            1,
            0,
            DMatrix::zeros(1, 1),
            vec![DMatrix::from_element(1, 1, sigma * sigma)],
            DVector::from_element(1, b),
            DMatrix::from_element(1, 1, beta),
        )
    }

    fn check_dims(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(AffineError::Dimension("state dimension is zero".into()));
        }
        if self.a.nrows() != d || self.a.ncols() != d {
            return Err(AffineError::Dimension(format!(
                "a must be {d}x{d}, got {}x{}",
                self.a.nrows(),
                self.a.ncols()
            )));
        }
        if self.alpha.len() != self.m {
            return Err(AffineError::Dimension(format!(
                "expected {} alpha matrices, got {}",
                self.m,
                self.alpha.len()
            )));
        }
        for (i, al) in self.alpha.iter().enumerate() {
            if al.nrows() != d || al.ncols() != d {
                return Err(AffineError::Dimension(format!(
                    "alpha[{i}] must be {d}x{d}"
                )));
            }
        }
        if self.b.len() != d {
            return Err(AffineError::Dimension(format!(
                "b must have length {d}, got {}",
                self.b.len()
            )));
        }
        if self.beta.nrows() != d || self.beta.ncols() != d {
            return Err(AffineError::Dimension(format!("beta must be {d}x{d}")));
        }
        if self.jumps_linear.len() != self.m {
            return Err(AffineError::Dimension(format!(
                "expected {} linear jump slots, got {}",
                self.m,
                self.jumps_linear.len()
            )));
        }
        if let Some(j) = &self.jump0 {
            if j.law.dim() != d {
                return Err(AffineError::Dimension("jump0 law dimension mismatch".into()));
            }
        }
        for (i, j) in self.jumps_linear.iter().enumerate() {
            if let Some(j) = j {
                if j.law.dim() != d {
                    return Err(AffineError::Dimension(format!(
                        "jump[{i}] law dimension mismatch"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Is `x` in the state space (positive coordinates ≥ 0)?
    pub fn contains(&self, x: &DVector<f64>) -> bool {
        x.len() == self.dim() && x.iter().take(self.m).all(|&c| c >= 0.0)
    }

    /// Iterator over all jump specs present, with their intensity kind.
    pub fn jump_specs(&self) -> impl Iterator<Item = (&JumpSpec, Option<usize>)> {
        self.jump0
            .iter()
            .map(|j| (j, None))
            .chain(
                self.jumps_linear
                    .iter()
                    .enumerate()
                    .filter_map(|(i, j)| j.as_ref().map(move |j| (j, Some(i)))),
            )
    }

    /// The model with every jump removed.
    pub fn without_jumps(&self) -> Self {
        let mut out = self.clone();
        out.jump0 = None;
        out.jumps_linear = vec![None; self.m];
        out
    }
}

/// Affine model on S_d^+: dX = (b + βX + Xβᵀ)dt + √X dW Q + Qᵀ dWᵀ √X + dL.
#[derive(Clone, Debug, PartialEq)]
pub struct WishartModel {
    pub d: usize,
    /// Constant drift, symmetric psd.
    pub b: DMatrix<f64>,
    /// Linear drift factor.
    pub beta: DMatrix<f64>,
    /// Diffusion factor; α = QᵀQ.
    pub q: DMatrix<f64>,
    pub jump: Option<MatrixJumpSpec>,
}

impl WishartModel {
    pub fn diffusion(d: usize, b: DMatrix<f64>, beta: DMatrix<f64>, q: DMatrix<f64>) -> Self {
        Self {
            d,
            b,
            beta,
            q,
            jump: None,
        }
    }

    /// α = QᵀQ.
    pub fn alpha(&self) -> DMatrix<f64> {
        self.q.transpose() * &self.q
    }

    fn check_dims(&self) -> Result<()> {
        let d = self.d;
        if d == 0 {
            return Err(AffineError::Dimension("matrix dimension is zero".into()));
        }
        for (name, m) in [("b", &self.b), ("beta", &self.beta), ("q", &self.q)] {
            if m.nrows() != d || m.ncols() != d {
                return Err(AffineError::Dimension(format!("{name} must be {d}x{d}")));
            }
        }
        if let Some(j) = &self.jump {
            if j.law.dim() != d {
                return Err(AffineError::Dimension("jump law dimension mismatch".into()));
            }
        }
        Ok(())
    }

    /// Strong-solution capability: b − (d+1)·QᵀQ ⪰ 0.
    pub fn strong_capable(&self) -> bool {
        let shifted = &self.b - self.alpha() * (self.d as f64 + 1.0);
        linalg::is_psd(&shifted)
    }
}

/// One named constraint with its outcome and, on failure, the offending entry.
#[derive(Clone, Debug, Serialize)]
pub struct ConstraintCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Informational checks do not enter the overall verdict.
    pub informational: bool,
}

impl ConstraintCheck {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
            informational: false,
        }
    }

    fn info(mut self) -> Self {
        self.informational = true;
        self
    }
}

/// Full admissibility report; `verdict` is the conjunction of all
/// non-informational checks.
#[derive(Clone, Debug, Serialize)]
pub struct AdmissibilityReport {
    pub checks: Vec<ConstraintCheck>,
    pub verdict: bool,
}

impl AdmissibilityReport {
    fn from_checks(checks: Vec<ConstraintCheck>) -> Self {
        let verdict = checks.iter().filter(|c| !c.informational).all(|c| c.passed);
        Self { checks, verdict }
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConstraintCheck> {
        self.checks
            .iter()
            .filter(|c| !c.passed && !c.informational)
    }
}

/// Validates every admissibility constraint of a canonical model.
pub fn validate_canonical(model: &CanonicalAffineModel) -> Result<AdmissibilityReport> {
    model.check_dims()?;
    let d = model.dim();
    let m = model.m;
    let mut checks = Vec::new();

    let tol_a = linalg::scaled_tol(&model.a);
    checks.push(ConstraintCheck::new(
        "a symmetric",
        linalg::is_symmetric(&model.a, tol_a),
        "constant diffusion must be symmetric",
    ));
    checks.push(ConstraintCheck::new(
        "a ⪰ 0",
        linalg::min_eigenvalue(&linalg::symmetrize(&model.a)) >= -tol_a,
        format!("min eigenvalue {}", linalg::min_eigenvalue(&linalg::symmetrize(&model.a))),
    ));

    // Positive coordinates carry no constant diffusion.
    let mut bad_entry = None;
    'outer_a: for k in 0..d {
        for l in 0..d {
            if (k < m || l < m) && model.a[(k, l)].abs() > tol_a {
                bad_entry = Some((k, l));
                break 'outer_a;
            }
        }
    }
    checks.push(ConstraintCheck::new(
        "a vanishes on positive rows/columns",
        bad_entry.is_none(),
        match bad_entry {
            Some((k, l)) => format!("a[{k},{l}] = {} must be 0", model.a[(k, l)]),
            None => String::new(),
        },
    ));

    for (i, al) in model.alpha.iter().enumerate() {
        let tol = linalg::scaled_tol(al);
        checks.push(ConstraintCheck::new(
            format!("alpha[{i}] symmetric"),
            linalg::is_symmetric(al, tol),
            "linear diffusion must be symmetric",
        ));
        checks.push(ConstraintCheck::new(
            format!("alpha[{i}] ⪰ 0"),
            linalg::min_eigenvalue(&linalg::symmetrize(al)) >= -tol,
            format!("min eigenvalue {}", linalg::min_eigenvalue(&linalg::symmetrize(al))),
        ));
        // alpha[i] may touch only entry (i,i) and the block spanned by
        // coordinate i together with the real coordinates.
        let mut bad = None;
        'outer: for k in 0..d {
            for l in 0..d {
                let allowed = (k == i || k >= m) && (l == i || l >= m);
                if !allowed && al[(k, l)].abs() > tol {
                    bad = Some((k, l));
                    break 'outer;
                }
            }
        }
        checks.push(ConstraintCheck::new(
            format!("alpha[{i}] support"),
            bad.is_none(),
            match bad {
                Some((k, l)) => format!("alpha[{i}][{k},{l}] = {} must be 0", al[(k, l)]),
                None => String::new(),
            },
        ));
    }

    // b ∈ D.
    let bad_b = (0..m).find(|&i| model.b[i] < 0.0);
    checks.push(ConstraintCheck::new(
        "b ∈ D",
        bad_b.is_none(),
        match bad_b {
            Some(i) => format!("b[{i}] = {} must be ≥ 0", model.b[i]),
            None => String::new(),
        },
    ));

    // Inward-pointing linear drift: for a positive coordinate k the
    // dependence on another positive coordinate i must be nonnegative and
    // the dependence on real coordinates must vanish.
    let tol_beta = linalg::scaled_tol(&model.beta);
    let mut bad_cross = None;
    let mut bad_real = None;
    for k in 0..m {
        for i in 0..d {
            if i < m && i != k && model.beta[(k, i)] < -tol_beta {
                bad_cross.get_or_insert((k, i));
            }
            if i >= m && model.beta[(k, i)].abs() > tol_beta {
                bad_real.get_or_insert((k, i));
            }
        }
    }
    checks.push(ConstraintCheck::new(
        "β_{ki} ≥ 0 for distinct positive k,i",
        bad_cross.is_none(),
        match bad_cross {
            Some((k, i)) => format!(
                "β_{{{}{}}} = {} must be ≥ 0",
                k + 1,
                i + 1,
                model.beta[(k, i)]
            ),
            None => String::new(),
        },
    ));
    checks.push(ConstraintCheck::new(
        "β positive×real block vanishes",
        bad_real.is_none(),
        match bad_real {
            Some((k, i)) => format!(
                "β_{{{}{}}} = {} must be 0 (real coordinate driving a positive one)",
                k + 1,
                i + 1,
                model.beta[(k, i)]
            ),
            None => String::new(),
        },
    ));

    // Jumps: valid parameters (which also pin a finite exponential moment
    // bound for every library law) and state-space invariance.
    for (spec, which) in model.jump_specs() {
        let label = match which {
            None => "jump0".to_string(),
            Some(i) => format!("jump[{i}]"),
        };
        let params_ok = spec.check_params();
        checks.push(ConstraintCheck::new(
            format!("{label} parameters"),
            params_ok.is_ok(),
            params_ok.err().map(|e| e.to_string()).unwrap_or_default(),
        ));
        checks.push(ConstraintCheck::new(
            format!("{label} keeps D invariant"),
            spec.law.keeps_state_space(m),
            "jump support must have nonnegative positive-coordinate components",
        ));
    }

    Ok(AdmissibilityReport::from_checks(checks))
}

/// Validates a Wishart model: the weak drift condition, the strong one
/// (informational), and finite variation of the jump part.
pub fn validate_wishart(model: &WishartModel) -> Result<AdmissibilityReport> {
    model.check_dims()?;
    if !linalg::is_symmetric(&model.b, linalg::scaled_tol(&model.b)) {
        return Err(AffineError::Structure(
            "constant drift b must be symmetric".into(),
        ));
    }
    let d = model.d as f64;
    let alpha = model.alpha();
    let mut checks = Vec::new();

    let weak = &model.b - &alpha * (d - 1.0);
    checks.push(ConstraintCheck::new(
        "b − (d−1)α ⪰ 0",
        linalg::is_psd(&weak),
        format!("min eigenvalue {}", linalg::min_eigenvalue(&weak)),
    ));

    let strong = &model.b - &alpha * (d + 1.0);
    checks.push(
        ConstraintCheck::new(
            "b − (d+1)α ⪰ 0 (strong solutions)",
            linalg::is_psd(&strong),
            format!("min eigenvalue {}", linalg::min_eigenvalue(&strong)),
        )
        .info(),
    );

    checks.push(ConstraintCheck::new(
        "b ⪰ 0",
        linalg::is_psd(&model.b),
        format!("min eigenvalue {}", linalg::min_eigenvalue(&model.b)),
    ));

    if let Some(jump) = &model.jump {
        let params_ok = jump.check_params();
        checks.push(ConstraintCheck::new(
            "jump parameters",
            params_ok.is_ok(),
            params_ok.err().map(|e| e.to_string()).unwrap_or_default(),
        ));
        let mean_norm = jump.law.mean().norm();
        checks.push(ConstraintCheck::new(
            "jump finite variation",
            mean_norm.is_finite(),
            format!("mean norm {mean_norm}"),
        ));
    }

    Ok(AdmissibilityReport::from_checks(checks))
}

/// Infinite decomposability of the transition laws holds exactly when the
/// diffusion vanishes or d = 1.
pub fn infinitely_decomposable(model: &WishartModel) -> bool {
    let alpha = model.alpha();
    model.d == 1 || alpha.amax() <= linalg::PSD_TOL
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jumps::VectorJump;

    fn cir_model() -> CanonicalAffineModel {
        CanonicalAffineModel::cir(0.2, -0.1, 0.5)
    }

    #[test]
    fn cir_passes_all_constraints() {
        let report = validate_canonical(&cir_model()).unwrap();
        assert!(report.verdict, "failures: {:?}", report.failures().collect::<Vec<_>>());
    }

    #[test]
    fn negative_constant_drift_fails_b_in_d() {
        let mut model = cir_model();
        model.b[0] = -0.1;
        let report = validate_canonical(&model).unwrap();
        assert!(!report.verdict);
        assert!(report.failures().any(|c| c.name == "b ∈ D"));
    }

    #[test]
    fn inward_pointing_offdiagonal_violation() {
        let model = CanonicalAffineModel::diffusion(
            2,
            0,
            DMatrix::zeros(2, 2),
            vec![
                DMatrix::from_partial_diagonal(2, 2, &[1.0]),
                DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0])),
            ],
            DVector::from_vec(vec![0.1, 0.1]),
            DMatrix::from_row_slice(2, 2, &[-1.0, -0.5, 0.2, -1.0]),
        );
        let report = validate_canonical(&model).unwrap();
        assert!(!report.verdict);
        let failing: Vec<_> = report.failures().map(|c| c.name.clone()).collect();
        assert!(failing.iter().any(|n| n.contains("β")), "{failing:?}");
        assert!(report
            .failures()
            .any(|c| c.detail.contains("β_{12}")));
    }

    #[test]
    fn heston_like_cross_drift_is_admissible() {
        // Variance drives the real coordinate's drift; that direction is free.
        let mut alpha1 = DMatrix::zeros(2, 2);
        alpha1[(0, 0)] = 0.09;
        alpha1[(0, 1)] = -0.3 * 0.3 * 0.5; // correlation block
        alpha1[(1, 0)] = alpha1[(0, 1)];
        alpha1[(1, 1)] = 1.0;
        let model = CanonicalAffineModel::diffusion(
            1,
            1,
            DMatrix::zeros(2, 2),
            vec![alpha1],
            DVector::from_vec(vec![0.08, 0.0]),
            DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, -0.5, 0.0]),
        );
        let report = validate_canonical(&model).unwrap();
        assert!(report.verdict, "failures: {:?}", report.failures().collect::<Vec<_>>());
    }

    #[test]
    fn dimension_mismatch_is_structural() {
        let mut model = cir_model();
        model.a = DMatrix::zeros(2, 2);
        assert!(matches!(
            validate_canonical(&model),
            Err(AffineError::Dimension(_))
        ));
    }

    #[test]
    fn jump_removal_is_monotone() {
        let mut model = cir_model();
        model.jump0 = Some(JumpSpec {
            rate: 1.0,
            law: VectorJump::ExponentialRay {
                direction: DVector::from_element(1, 1.0),
                rate: 2.0,
            },
        });
        assert!(validate_canonical(&model).unwrap().verdict);
        assert!(validate_canonical(&model.without_jumps()).unwrap().verdict);
    }

    #[test]
    fn wishart_boundary_drift_cases() {
        let id = DMatrix::identity(2, 2);
        let model = WishartModel::diffusion(2, id.clone(), DMatrix::zeros(2, 2), id.clone());
        // b − α = 0 ⪰ 0: boundary case passes.
        assert!(validate_wishart(&model).unwrap().verdict);

        let weakly_bad = WishartModel::diffusion(2, &id * 0.5, DMatrix::zeros(2, 2), id.clone());
        assert!(!validate_wishart(&weakly_bad).unwrap().verdict);

        // d = 1 reduces to b ≥ 0.
        let scalar = WishartModel::diffusion(
            1,
            DMatrix::from_element(1, 1, 0.3),
            DMatrix::zeros(1, 1),
            DMatrix::from_element(1, 1, 1.0),
        );
        assert!(validate_wishart(&scalar).unwrap().verdict);
    }

    #[test]
    fn wishart_non_symmetric_b_is_structural() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.5, 1.0]);
        let model = WishartModel::diffusion(2, b, DMatrix::zeros(2, 2), DMatrix::identity(2, 2));
        assert!(matches!(
            validate_wishart(&model),
            Err(AffineError::Structure(_))
        ));
    }

    #[test]
    fn strong_capable_flag() {
        let id = DMatrix::identity(2, 2);
        let strong = WishartModel::diffusion(2, &id * 3.5, DMatrix::zeros(2, 2), id.clone());
        assert!(strong.strong_capable());
        let weak_only = WishartModel::diffusion(2, &id * 1.5, DMatrix::zeros(2, 2), id.clone());
        assert!(!weak_only.strong_capable());
        assert!(validate_wishart(&weak_only).unwrap().verdict);
    }

    #[test]
    fn decomposability_cases() {
        let zero_q = WishartModel::diffusion(
            3,
            DMatrix::identity(3, 3),
            DMatrix::zeros(3, 3),
            DMatrix::zeros(3, 3),
        );
        assert!(infinitely_decomposable(&zero_q));
        let scalar = WishartModel::diffusion(
            1,
            DMatrix::from_element(1, 1, 0.3),
            DMatrix::zeros(1, 1),
            DMatrix::from_element(1, 1, 1.0),
        );
        assert!(infinitely_decomposable(&scalar));
        let generic = WishartModel::diffusion(
            2,
            DMatrix::identity(2, 2) * 2.0,
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
        );
        assert!(!infinitely_decomposable(&generic));
    }

    #[test]
    fn drift_scaling_eventually_violates() {
        // With α ≠ 0 and d > 1, b/n fails the weak condition for large n.
        let id = DMatrix::identity(2, 2);
        let base = WishartModel::diffusion(2, id.clone(), DMatrix::zeros(2, 2), id.clone());
        assert!(validate_wishart(&base).unwrap().verdict);
        for n in [2u32, 8, 64, 1024] {
            let scaled = WishartModel {
                b: &base.b / n as f64,
                ..base.clone()
            };
            assert!(
                !validate_wishart(&scaled).unwrap().verdict,
                "b/{n} should violate the weak drift condition"
            );
        }
    }
}
