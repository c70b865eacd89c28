//! Finite-activity jump specifications.
//!
//! The jump library is deliberately small: every member has a closed-form
//! two-sided Laplace transform, closed-form polynomial moments, and a direct
//! sampler, which keeps the functional characteristics and the moment
//! operator exact.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Normal};

use crate::error::{AffineError, Result};
use crate::linalg;

/// Jump-size law for processes on the canonical state space.
#[derive(Clone, Debug, PartialEq)]
pub enum VectorJump {
    /// Deterministic displacement ξ₀.
    PointMass { displacement: DVector<f64> },
    /// ξ = W·direction with W ~ Exp(rate) (mean 1/rate).
    ExponentialRay { direction: DVector<f64>, rate: f64 },
    /// ξ = W·direction with W ~ Gamma(shape, scale).
    GammaRay {
        direction: DVector<f64>,
        shape: f64,
        scale: f64,
    },
}

impl VectorJump {
    pub fn dim(&self) -> usize {
        match self {
            VectorJump::PointMass { displacement } => displacement.len(),
            VectorJump::ExponentialRay { direction, .. }
            | VectorJump::GammaRay { direction, .. } => direction.len(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            VectorJump::PointMass { .. } => "point_mass".into(),
            VectorJump::ExponentialRay { rate, .. } => format!("exponential_ray(rate={rate})"),
            VectorJump::GammaRay { shape, scale, .. } => {
                format!("gamma_ray(shape={shape}, scale={scale})")
            }
        }
    }

    /// Parameter sanity; support constraints live in model validation.
    pub fn check_params(&self) -> Result<()> {
        match self {
            VectorJump::PointMass { .. } => Ok(()),
            VectorJump::ExponentialRay { rate, .. } => {
                if *rate > 0.0 {
                    Ok(())
                } else {
                    Err(AffineError::Structure(
                        "exponential_ray rate must be positive".into(),
                    ))
                }
            }
            VectorJump::GammaRay { shape, scale, .. } => {
                if *shape > 0.0 && *scale > 0.0 {
                    Ok(())
                } else {
                    Err(AffineError::Structure(
                        "gamma_ray shape and scale must be positive".into(),
                    ))
                }
            }
        }
    }

    /// Does `x + ξ` stay in ℝ₊^m × ℝⁿ for every x there? True iff the first
    /// `m` components of the support direction are nonnegative.
    pub fn keeps_state_space(&self, m: usize) -> bool {
        let v = match self {
            VectorJump::PointMass { displacement } => displacement,
            VectorJump::ExponentialRay { direction, .. }
            | VectorJump::GammaRay { direction, .. } => direction,
        };
        v.iter().take(m).all(|&c| c >= 0.0)
    }

    /// True when `E[e^{⟨u,ξ⟩}]` is finite at real part `re_u`.
    pub fn in_domain(&self, re_u: &[f64]) -> bool {
        match self {
            VectorJump::PointMass { .. } => true,
            VectorJump::ExponentialRay { direction, rate } => {
                dot_real(re_u, direction) < *rate
            }
            VectorJump::GammaRay {
                direction, scale, ..
            } => dot_real(re_u, direction) < 1.0 / scale,
        }
    }

    /// Two-sided Laplace transform `E[e^{⟨u,ξ⟩}]` at complex u.
    pub fn laplace(&self, u: &[Complex64]) -> Result<Complex64> {
        match self {
            VectorJump::PointMass { displacement } => {
                let z = dot_complex(u, displacement);
                Ok(z.exp())
            }
            VectorJump::ExponentialRay { direction, rate } => {
                let z = dot_complex(u, direction);
                if z.re >= *rate {
                    return Err(self.domain_error(z.re));
                }
                Ok(Complex64::new(*rate, 0.0) / (Complex64::new(*rate, 0.0) - z))
            }
            VectorJump::GammaRay {
                direction,
                shape,
                scale,
            } => {
                let z = dot_complex(u, direction);
                if z.re >= 1.0 / scale {
                    return Err(self.domain_error(z.re));
                }
                // (1 - scale·z)^{-shape}; Re(1 - scale·z) > 0 so the
                // principal branch is safe.
                let base = Complex64::new(1.0, 0.0) - z * *scale;
                Ok((-shape * base.ln()).exp())
            }
        }
    }

    fn domain_error(&self, re: f64) -> AffineError {
        AffineError::Domain(format!(
            "Re⟨u, direction⟩ = {re} outside the finiteness domain of jump spec {}",
            self.describe()
        ))
    }

    pub fn mean(&self) -> DVector<f64> {
        match self {
            VectorJump::PointMass { displacement } => displacement.clone(),
            VectorJump::ExponentialRay { direction, rate } => direction / *rate,
            VectorJump::GammaRay {
                direction,
                shape,
                scale,
            } => direction * (shape * scale),
        }
    }

    /// Mixed moment `E[ξ^α]`; finite for every order in this library.
    pub fn moment(&self, alpha: &[usize]) -> f64 {
        match self {
            VectorJump::PointMass { displacement } => alpha
                .iter()
                .enumerate()
                .map(|(j, &p)| displacement[j].powi(p as i32))
                .product(),
            VectorJump::ExponentialRay { direction, rate } => {
                let n: usize = alpha.iter().sum();
                let mut w = 1.0;
                for k in 1..=n {
                    w *= k as f64 / rate;
                }
                w * dir_power(direction, alpha)
            }
            VectorJump::GammaRay {
                direction,
                shape,
                scale,
            } => {
                let n: usize = alpha.iter().sum();
                let mut w = 1.0;
                for k in 0..n {
                    w *= scale * (shape + k as f64);
                }
                w * dir_power(direction, alpha)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        match self {
            VectorJump::PointMass { displacement } => displacement.clone(),
            VectorJump::ExponentialRay { direction, rate } => {
                let w = Exp::new(*rate).expect("validated rate").sample(rng);
                direction * w
            }
            VectorJump::GammaRay {
                direction,
                shape,
                scale,
            } => {
                let w = Gamma::new(*shape, *scale)
                    .expect("validated shape/scale")
                    .sample(rng);
                direction * w
            }
        }
    }
}

fn dot_real(u: &[f64], v: &DVector<f64>) -> f64 {
    u.iter().zip(v.iter()).map(|(a, b)| a * b).sum()
}

fn dot_complex(u: &[Complex64], v: &DVector<f64>) -> Complex64 {
    u.iter().zip(v.iter()).map(|(a, b)| a * b).sum()
}

fn dir_power(direction: &DVector<f64>, alpha: &[usize]) -> f64 {
    alpha
        .iter()
        .enumerate()
        .map(|(j, &p)| direction[j].powi(p as i32))
        .product()
}

/// Compound-Poisson jump component: arrival rate plus a size law.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpSpec {
    pub rate: f64,
    pub law: VectorJump,
}

impl JumpSpec {
    pub fn check_params(&self) -> Result<()> {
        if self.rate < 0.0 {
            return Err(AffineError::Structure("jump rate must be >= 0".into()));
        }
        self.law.check_params()
    }
}

/// Jump-size law on the psd cone; every member is supported on S_d^+ and
/// has finite mean norm (finite variation).
#[derive(Clone, Debug, PartialEq)]
pub enum MatrixJump {
    /// Deterministic psd displacement.
    PointMass { displacement: DMatrix<f64> },
    /// W·vvᵀ with W ~ Exp(rate).
    ExponentialRankOne { direction: DVector<f64>, rate: f64 },
    /// ξξᵀ with ξ ~ N(0, cov).
    GaussianRankOne { cov: DMatrix<f64> },
}

impl MatrixJump {
    pub fn dim(&self) -> usize {
        match self {
            MatrixJump::PointMass { displacement } => displacement.nrows(),
            MatrixJump::ExponentialRankOne { direction, .. } => direction.len(),
            MatrixJump::GaussianRankOne { cov } => cov.nrows(),
        }
    }

    pub fn check_params(&self) -> Result<()> {
        match self {
            MatrixJump::PointMass { displacement } => {
                if !linalg::is_symmetric(displacement, linalg::scaled_tol(displacement)) {
                    return Err(AffineError::Structure(
                        "matrix point-mass displacement must be symmetric".into(),
                    ));
                }
                if !linalg::is_psd(displacement) {
                    return Err(AffineError::Structure(
                        "matrix point-mass displacement must be psd".into(),
                    ));
                }
                Ok(())
            }
            MatrixJump::ExponentialRankOne { rate, .. } => {
                if *rate > 0.0 {
                    Ok(())
                } else {
                    Err(AffineError::Structure(
                        "exponential_rank_one rate must be positive".into(),
                    ))
                }
            }
            MatrixJump::GaussianRankOne { cov } => {
                if !linalg::is_symmetric(cov, linalg::scaled_tol(cov)) || !linalg::is_psd(cov) {
                    Err(AffineError::Structure(
                        "gaussian_rank_one covariance must be symmetric psd".into(),
                    ))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn mean(&self) -> DMatrix<f64> {
        match self {
            MatrixJump::PointMass { displacement } => displacement.clone(),
            MatrixJump::ExponentialRankOne { direction, rate } => {
                (direction * direction.transpose()) / *rate
            }
            MatrixJump::GaussianRankOne { cov } => cov.clone(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64> {
        match self {
            MatrixJump::PointMass { displacement } => displacement.clone(),
            MatrixJump::ExponentialRankOne { direction, rate } => {
                let w = Exp::new(*rate).expect("validated rate").sample(rng);
                (direction * direction.transpose()) * w
            }
            MatrixJump::GaussianRankOne { cov } => {
                let d = cov.nrows();
                let root = linalg::psd_sqrt(cov);
                let std = Normal::new(0.0, 1.0).unwrap();
                let z = DVector::from_iterator(d, (0..d).map(|_| std.sample(rng)));
                let xi = root * z;
                &xi * xi.transpose()
            }
        }
    }
}

/// Compound-Poisson matrix subordinator.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixJumpSpec {
    pub rate: f64,
    pub law: MatrixJump,
}

impl MatrixJumpSpec {
    pub fn check_params(&self) -> Result<()> {
        if self.rate < 0.0 {
            return Err(AffineError::Structure("jump rate must be >= 0".into()));
        }
        self.law.check_params()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn laplace_conservative_at_zero() {
        let laws = [
            VectorJump::PointMass {
                displacement: DVector::from_vec(vec![1.0, -2.0]),
            },
            VectorJump::ExponentialRay {
                direction: DVector::from_vec(vec![1.0, 0.5]),
                rate: 3.0,
            },
            VectorJump::GammaRay {
                direction: DVector::from_vec(vec![2.0, 0.0]),
                shape: 1.7,
                scale: 0.4,
            },
        ];
        let zero = [Complex64::new(0.0, 0.0); 2];
        for law in &laws {
            let l = law.laplace(&zero).unwrap();
            assert_relative_eq!(l.re, 1.0, epsilon = 1e-15);
            assert_relative_eq!(l.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn exponential_ray_domain_boundary() {
        let law = VectorJump::ExponentialRay {
            direction: DVector::from_vec(vec![1.0]),
            rate: 2.0,
        };
        assert!(law.in_domain(&[1.9]));
        assert!(!law.in_domain(&[2.0]));
        assert!(law.laplace(&[Complex64::new(2.5, 0.0)]).is_err());
        let v = law.laplace(&[Complex64::new(1.0, 0.0)]).unwrap();
        assert_relative_eq!(v.re, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn exponential_ray_moments() {
        // E[W^n] = n!/θ^n, so E[ξ²] = (2/θ²)·v².
        let law = VectorJump::ExponentialRay {
            direction: DVector::from_vec(vec![0.5]),
            rate: 2.0,
        };
        assert_relative_eq!(law.moment(&[1]), 0.25, epsilon = 1e-14);
        assert_relative_eq!(law.moment(&[2]), 0.125, epsilon = 1e-14);
    }

    #[test]
    fn gamma_ray_moments() {
        let law = VectorJump::GammaRay {
            direction: DVector::from_vec(vec![2.0]),
            shape: 3.0,
            scale: 0.5,
        };
        // E[W] = 1.5, E[W²] = 0.25·3·4 = 3 ⇒ E[ξ] = 3, E[ξ²] = 12.
        assert_relative_eq!(law.moment(&[1]), 3.0, epsilon = 1e-14);
        assert_relative_eq!(law.moment(&[2]), 12.0, epsilon = 1e-14);
        assert_relative_eq!(law.mean()[0], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn matrix_jump_means() {
        let v = DVector::from_vec(vec![1.0, 2.0]);
        let law = MatrixJump::ExponentialRankOne {
            direction: v.clone(),
            rate: 4.0,
        };
        let mean = law.mean();
        assert_relative_eq!(mean[(0, 0)], 0.25, epsilon = 1e-14);
        assert_relative_eq!(mean[(1, 1)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(mean[(0, 1)], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn state_space_invariance_check() {
        let ok = VectorJump::PointMass {
            displacement: DVector::from_vec(vec![1.0, -3.0]),
        };
        assert!(ok.keeps_state_space(1));
        assert!(!ok.keeps_state_space(2));
    }
}
