//! Functional characteristics (F, R) of a canonical model.
//!
//! `F(u) = ⟨b,u⟩ + ½⟨u,au⟩ + λ₀(L₀(u) − 1)` and, per positive coordinate i,
//! `R_i(u) = ½⟨u,αᵢu⟩ + (βᵀu)_i + λᵢ(Lᵢ(u) − 1)`; real coordinates only carry
//! the linear term `(βᵀu)_i`. Exponential tilting by a real vector θ shifts
//! the argument and subtracts the value at θ, so tilted exponents are
//! represented by the same struct with a shift and offsets.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{AffineError, Result};
use crate::model::CanonicalAffineModel;

/// Anything the Riccati machinery can integrate: a dimension, R and F.
pub trait Exponents: Sync {
    fn dim(&self) -> usize;
    fn r(&self, u: &[Complex64], out: &mut [Complex64]) -> Result<()>;
    fn f(&self, u: &[Complex64]) -> Result<Complex64>;
}

/// Model-backed evaluators for F and R, optionally exponentially tilted.
#[derive(Clone, Debug)]
pub struct CharacteristicExponents {
    model: CanonicalAffineModel,
    /// Real tilt θ; zero for the base model.
    shift: DVector<f64>,
    f_offset: f64,
    r_offset: DVector<f64>,
}

impl CharacteristicExponents {
    pub fn new(model: &CanonicalAffineModel) -> Self {
        let d = model.dim();
        Self {
            model: model.clone(),
            shift: DVector::zeros(d),
            f_offset: 0.0,
            r_offset: DVector::zeros(d),
        }
    }

    /// Exponential tilt by a real θ in the finiteness domain: the tilted
    /// exponents are F̃(u) = F(u+θ) − F(θ) and R̃(u) = R(u+θ) − R(θ).
    /// Tilting an already tilted object composes the shifts.
    pub fn tilt(&self, theta: &DVector<f64>) -> Result<CharacteristicExponents> {
        let d = self.model.dim();
        if theta.len() != d {
            return Err(AffineError::Dimension(format!(
                "theta must have length {d}, got {}",
                theta.len()
            )));
        }
        let total_shift = &self.shift + theta;
        let base = CharacteristicExponents::new(&self.model);
        let theta_c: Vec<Complex64> = total_shift
            .iter()
            .map(|&t| Complex64::new(t, 0.0))
            .collect();
        let f_at = base.f(&theta_c)?;
        let mut r_at = vec![Complex64::new(0.0, 0.0); d];
        base.r(&theta_c, &mut r_at)?;
        Ok(CharacteristicExponents {
            model: self.model.clone(),
            shift: total_shift,
            f_offset: f_at.re,
            r_offset: DVector::from_iterator(d, r_at.iter().map(|z| z.re)),
        })
    }

    pub fn model(&self) -> &CanonicalAffineModel {
        &self.model
    }

    pub fn shift(&self) -> &DVector<f64> {
        &self.shift
    }

    /// Real-part evaluation of (F, R) at a real argument, as used by the
    /// martingale criterion.
    pub fn eval_real(&self, u: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let uc: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let f = self.f(&uc)?;
        let mut r = vec![Complex64::new(0.0, 0.0); u.len()];
        self.r(&uc, &mut r)?;
        Ok((f.re, DVector::from_iterator(u.len(), r.iter().map(|z| z.re))))
    }

    fn shifted(&self, u: &[Complex64]) -> Vec<Complex64> {
        u.iter()
            .zip(self.shift.iter())
            .map(|(z, &s)| z + s)
            .collect()
    }
}

fn quadratic_form(mat: &nalgebra::DMatrix<f64>, u: &[Complex64]) -> Complex64 {
    let d = u.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..d {
        for q in 0..d {
            let c = mat[(p, q)];
            if c != 0.0 {
                acc += u[p] * u[q] * c;
            }
        }
    }
    acc
}

impl Exponents for CharacteristicExponents {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn f(&self, u: &[Complex64]) -> Result<Complex64> {
        let model = &self.model;
        let v = self.shifted(u);
        let mut acc = Complex64::new(-self.f_offset, 0.0);
        for (p, &bp) in model.b.iter().enumerate() {
            acc += v[p] * bp;
        }
        acc += quadratic_form(&model.a, &v) * 0.5;
        if let Some(jump) = &model.jump0 {
            if jump.rate > 0.0 {
                acc += (jump.law.laplace(&v)? - 1.0) * jump.rate;
            }
        }
        Ok(acc)
    }

    fn r(&self, u: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let model = &self.model;
        let d = model.dim();
        debug_assert_eq!(u.len(), d);
        debug_assert_eq!(out.len(), d);
        let v = self.shifted(u);
        // (βᵀ v)_i = Σ_k β_{ki} v_k.
        for i in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..d {
                let c = model.beta[(k, i)];
                if c != 0.0 {
                    acc += v[k] * c;
                }
            }
            out[i] = acc;
        }
        for i in 0..model.m {
            out[i] += quadratic_form(&model.alpha[i], &v) * 0.5;
            if let Some(jump) = &model.jumps_linear[i] {
                if jump.rate > 0.0 {
                    out[i] += (jump.law.laplace(&v)? - 1.0) * jump.rate;
                }
            }
            out[i] -= self.r_offset[i];
        }
        for i in model.m..d {
            out[i] -= self.r_offset[i];
        }
        Ok(())
    }
}

/// Evaluates (F(u), R(u)) for a model at one complex argument.
pub fn eval_exponents(
    model: &CanonicalAffineModel,
    u: &[Complex64],
) -> Result<(Complex64, Vec<Complex64>)> {
    let exps = CharacteristicExponents::new(model);
    if u.len() != model.dim() {
        return Err(AffineError::Dimension(format!(
            "u must have length {}, got {}",
            model.dim(),
            u.len()
        )));
    }
    let f = exps.f(u)?;
    let mut r = vec![Complex64::new(0.0, 0.0); u.len()];
    exps.r(u, &mut r)?;
    Ok((f, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jumps::{JumpSpec, VectorJump};
    use crate::model::CanonicalAffineModel;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    #[test]
    fn conservativeness_at_zero() {
        let model = CanonicalAffineModel::cir(0.2, -0.1, 0.5);
        let (f, r) = eval_exponents(&model, &[Complex64::new(0.0, 0.0)]).unwrap();
        assert_eq!(f, Complex64::new(0.0, 0.0));
        assert_eq!(r[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn cir_exponents_match_closed_form() {
        let (b, beta, sigma) = (0.2, -0.1, 0.5);
        let model = CanonicalAffineModel::cir(b, beta, sigma);
        let u = 0.7;
        let (f, r) = eval_exponents(&model, &[Complex64::new(u, 0.0)]).unwrap();
        assert_relative_eq!(f.re, b * u, epsilon = 1e-15);
        assert_relative_eq!(r[0].re, sigma * sigma * u * u / 2.0 + beta * u, epsilon = 1e-15);
    }

    #[test]
    fn levy_ou_r_is_linear() {
        // Pure OU on ℝ²: R(u) = βᵀu.
        let beta = DMatrix::from_row_slice(2, 2, &[-1.0, 0.3, 0.0, -2.0]);
        let model = CanonicalAffineModel::diffusion(
            0,
            2,
            DMatrix::identity(2, 2),
            vec![],
            DVector::zeros(2),
            beta.clone(),
        );
        let u = [Complex64::new(0.4, 0.1), Complex64::new(-0.2, 0.0)];
        let (_, r) = eval_exponents(&model, &u).unwrap();
        for i in 0..2 {
            let expect = u[0] * beta[(0, i)] + u[1] * beta[(1, i)];
            assert_relative_eq!(r[i].re, expect.re, epsilon = 1e-15);
            assert_relative_eq!(r[i].im, expect.im, epsilon = 1e-15);
        }
    }

    #[test]
    fn jump_domain_error_names_spec() {
        let mut model = CanonicalAffineModel::cir(0.2, -0.1, 0.5);
        model.jump0 = Some(JumpSpec {
            rate: 1.0,
            law: VectorJump::ExponentialRay {
                direction: DVector::from_element(1, 1.0),
                rate: 0.5,
            },
        });
        let err = eval_exponents(&model, &[Complex64::new(0.9, 0.0)]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("exponential_ray"), "{msg}");
    }

    #[test]
    fn tilt_identities() {
        let model = CanonicalAffineModel::cir(0.0, -0.5, 1.0);
        let base = CharacteristicExponents::new(&model);
        let theta = DVector::from_element(1, 1.0);
        let tilted = base.tilt(&theta).unwrap();

        // F̃(0) = 0 and R̃(0) = 0 by construction.
        let zero = [Complex64::new(0.0, 0.0)];
        assert!(tilted.f(&zero).unwrap().norm() < 1e-14);
        let mut r = [Complex64::new(0.0, 0.0)];
        tilted.r(&zero, &mut r).unwrap();
        assert!(r[0].norm() < 1e-14);

        // CIR: R̃(u) = σ²u²/2 + (β + σ²θ)u.
        let u = [Complex64::new(0.3, 0.0)];
        let mut rt = [Complex64::new(0.0, 0.0)];
        tilted.r(&u, &mut rt).unwrap();
        let expect = 0.5 * 0.3 * 0.3 + (-0.5 + 1.0) * 0.3;
        assert_relative_eq!(rt[0].re, expect, epsilon = 1e-14);

        // Double tilt by −θ restores the base exponents.
        let back = tilted.tilt(&(-theta.clone())).unwrap();
        for &x in &[0.2, -0.4, 0.9] {
            let u = [Complex64::new(x, 0.05)];
            let mut r0 = [Complex64::new(0.0, 0.0)];
            let mut r1 = [Complex64::new(0.0, 0.0)];
            base.r(&u, &mut r0).unwrap();
            back.r(&u, &mut r1).unwrap();
            assert!((r0[0] - r1[0]).norm() < 1e-12);
            assert!((base.f(&u).unwrap() - back.f(&u).unwrap()).norm() < 1e-12);
        }
    }
}
