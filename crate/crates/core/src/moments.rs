//! Exact conditional moments through the polynomial property.
//!
//! The generator maps polynomials of degree ≤ k into themselves, so its
//! action on the monomial basis is a finite matrix A and conditional moments
//! evolve as e^{tA} applied to the monomial evaluation vector. Multi-indices
//! are ordered graded-lexicographically, which makes the degree
//! block-triangularity of A visible.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{AffineError, Result};
use crate::linalg;
use crate::model::CanonicalAffineModel;

/// Graded-lexicographic multi-indices over `d` variables with |α| ≤ k.
pub fn multi_indices(d: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for degree in 0..=k {
        let mut stack = vec![(Vec::new(), degree)];
        let mut level = Vec::new();
        while let Some((prefix, rem)) = stack.pop() {
            if prefix.len() == d - 1 {
                let mut idx = prefix.clone();
                idx.push(rem);
                level.push(idx);
            } else {
                // Lexicographic: larger leading entries first.
                for v in 0..=rem {
                    let mut p = prefix.clone();
                    p.push(v);
                    stack.push((p, rem - v));
                }
            }
        }
        level.sort_by(|a, b| b.cmp(a));
        out.extend(level);
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

fn multi_binomial(alpha: &[usize], gamma: &[usize]) -> f64 {
    alpha
        .iter()
        .zip(gamma.iter())
        .map(|(&a, &g)| binomial(a, g))
        .product()
}

/// Multi-indices γ ≤ α (componentwise), excluding γ = α.
fn proper_sub_indices(alpha: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &a in alpha {
        let mut next = Vec::with_capacity(out.len() * (a + 1));
        for prefix in &out {
            for v in 0..=a {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out.retain(|g| g.as_slice() != alpha);
    out
}

/// The generator's matrix action on monomials of degree ≤ k.
#[derive(Clone, Debug)]
pub struct MomentOperator {
    pub degree: usize,
    pub basis: Vec<Vec<usize>>,
    /// Row α: coefficients of 𝒜 x^α in the monomial basis.
    pub matrix: DMatrix<f64>,
    index: HashMap<Vec<usize>, usize>,
}

impl MomentOperator {
    pub fn position(&self, alpha: &[usize]) -> Option<usize> {
        self.index.get(alpha).copied()
    }

    /// Evaluation vector (x^γ)_γ over the basis.
    pub fn monomial_vector(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.basis.len(),
            self.basis.iter().map(|alpha| {
                alpha
                    .iter()
                    .enumerate()
                    .map(|(j, &p)| x[j].powi(p as i32))
                    .product::<f64>()
            }),
        )
    }
}

/// Builds the moment operator by symbolic expansion of drift, diffusion and
/// jump-moment contributions applied to each monomial.
pub fn generator_matrix(model: &CanonicalAffineModel, k: usize) -> Result<MomentOperator> {
    let d = model.dim();
    let basis = multi_indices(d, k);
    let index: HashMap<Vec<usize>, usize> = basis
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), i))
        .collect();
    let size = basis.len();
    let mut a_mat = DMatrix::<f64>::zeros(size, size);

    // Every library jump law has all polynomial moments; the moment-domain
    // error arm exists for laws that do not.
    for (spec, _) in model.jump_specs() {
        spec.check_params().map_err(|e| {
            AffineError::MomentDomain {
                spec: format!("{e}"),
                order: k,
            }
        })?;
    }

    let add = |row: usize, gamma: &[usize], coeff: f64, a_mat: &mut DMatrix<f64>| {
        if coeff != 0.0 {
            let col = index
                .get(gamma)
                .copied()
                .expect("generator stays inside the degree-k basis");
            a_mat[(row, col)] += coeff;
        }
    };

    for (row, alpha) in basis.iter().enumerate() {
        // Drift: Σ_p α_p (b_p + (βx)_p) x^{α-e_p}.
        for p in 0..d {
            if alpha[p] == 0 {
                continue;
            }
            let ap = alpha[p] as f64;
            let mut gamma = alpha.clone();
            gamma[p] -= 1;
            add(row, &gamma, ap * model.b[p], &mut a_mat);
            for q in 0..d {
                let c = model.beta[(p, q)];
                if c != 0.0 {
                    let mut g2 = gamma.clone();
                    g2[q] += 1;
                    add(row, &g2, ap * c, &mut a_mat);
                }
            }
        }

        // Diffusion: ½ Σ_{p,q} A(x)_{pq} ∂_p ∂_q x^α with
        // A(x) = a + Σ_i x_i α_i.
        for p in 0..d {
            for q in 0..d {
                let factor = if p == q {
                    let ap = alpha[p];
                    if ap < 2 {
                        continue;
                    }
                    (ap * (ap - 1)) as f64
                } else {
                    if alpha[p] == 0 || alpha[q] == 0 {
                        continue;
                    }
                    (alpha[p] * alpha[q]) as f64
                };
                let mut gamma = alpha.clone();
                if p == q {
                    gamma[p] -= 2;
                } else {
                    gamma[p] -= 1;
                    gamma[q] -= 1;
                }
                let const_c = model.a[(p, q)];
                if const_c != 0.0 {
                    add(row, &gamma, 0.5 * factor * const_c, &mut a_mat);
                }
                for (i, al) in model.alpha.iter().enumerate() {
                    let lin_c = al[(p, q)];
                    if lin_c != 0.0 {
                        let mut g2 = gamma.clone();
                        g2[i] += 1;
                        add(row, &g2, 0.5 * factor * lin_c, &mut a_mat);
                    }
                }
            }
        }

        // Jumps: ∫ ((x+ξ)^α − x^α) dν = Σ_{γ<α} C(α,γ) E[ξ^{α−γ}] x^γ,
        // multiplied by λ₀ or λ_i x_i.
        if alpha.iter().any(|&a| a > 0) {
            let subs = proper_sub_indices(alpha);
            for gamma in &subs {
                let delta: Vec<usize> = alpha
                    .iter()
                    .zip(gamma.iter())
                    .map(|(&a, &g)| a - g)
                    .collect();
                let comb = multi_binomial(alpha, gamma);
                if let Some(jump) = &model.jump0 {
                    if jump.rate > 0.0 {
                        add(
                            row,
                            gamma,
                            jump.rate * comb * jump.law.moment(&delta),
                            &mut a_mat,
                        );
                    }
                }
                for (i, jump) in model.jumps_linear.iter().enumerate() {
                    if let Some(jump) = jump {
                        if jump.rate > 0.0 {
                            let mut g2 = gamma.clone();
                            g2[i] += 1;
                            add(
                                row,
                                &g2,
                                jump.rate * comb * jump.law.moment(&delta),
                                &mut a_mat,
                            );
                        }
                    }
                }
            }
        }
    }

    Ok(MomentOperator {
        degree: k,
        basis,
        matrix: a_mat,
        index,
    })
}

/// Conditional moments E[X_t^α | X_0 = x] for all |α| ≤ k, computed as
/// e^{tA} applied to the monomial evaluation vector.
pub fn moments(
    model: &CanonicalAffineModel,
    t: f64,
    x: &DVector<f64>,
    k: usize,
) -> Result<(MomentOperator, DVector<f64>)> {
    if x.len() != model.dim() {
        return Err(AffineError::Dimension(format!(
            "x must have length {}, got {}",
            model.dim(),
            x.len()
        )));
    }
    let op = generator_matrix(model, k)?;
    let e = linalg::expm(&(&op.matrix * t));
    let vals = e * op.monomial_vector(x);
    Ok((op, vals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jumps::{JumpSpec, VectorJump};
    use approx::assert_relative_eq;

    #[test]
    fn graded_lex_ordering() {
        let idx = multi_indices(2, 2);
        let expect: Vec<Vec<usize>> = vec![
            vec![0, 0],
            vec![1, 0],
            vec![0, 1],
            vec![2, 0],
            vec![1, 1],
            vec![0, 2],
        ];
        assert_eq!(idx, expect);
        assert_eq!(multi_indices(3, 4).len(), 35); // C(3+4,4)
    }

    #[test]
    fn degree_zero_operator_is_zero() {
        let model = CanonicalAffineModel::cir(0.2, -0.1, 0.5);
        let op = generator_matrix(&model, 0).unwrap();
        assert_eq!(op.matrix.nrows(), 1);
        assert_eq!(op.matrix[(0, 0)], 0.0);
    }

    #[test]
    fn cir_first_order_row() {
        let model = CanonicalAffineModel::cir(0.2, -0.1, 0.5);
        let op = generator_matrix(&model, 1).unwrap();
        // Basis (1, x); row for x is (b, β).
        let row = op.position(&[1]).unwrap();
        assert_relative_eq!(op.matrix[(row, 0)], 0.2, epsilon = 1e-15);
        assert_relative_eq!(op.matrix[(row, row)], -0.1, epsilon = 1e-15);
        // Constants are harmonic.
        let zero_row = op.position(&[0]).unwrap();
        assert!(op.matrix.row(zero_row).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn levy_ou_jump_compensator_in_mean() {
        // OU with state-independent jumps of mean m₁: row for x is
        // (b + λ₀ m₁, β).
        let mut model = CanonicalAffineModel::diffusion(
            0,
            1,
            DMatrix::zeros(1, 1),
            vec![],
            DVector::from_element(1, 0.3),
            DMatrix::from_element(1, 1, -0.7),
        );
        model.jump0 = Some(JumpSpec {
            rate: 2.0,
            law: VectorJump::ExponentialRay {
                direction: DVector::from_element(1, 1.0),
                rate: 4.0, // mean 0.25
            },
        });
        let op = generator_matrix(&model, 1).unwrap();
        let row = op.position(&[1]).unwrap();
        assert_relative_eq!(op.matrix[(row, 0)], 0.3 + 2.0 * 0.25, epsilon = 1e-14);
        assert_relative_eq!(op.matrix[(row, row)], -0.7, epsilon = 1e-14);
    }

    #[test]
    fn moments_at_time_zero_are_monomials() {
        let model = CanonicalAffineModel::cir(0.2, -0.1, 0.5);
        let x = DVector::from_element(1, 1.7);
        let (op, vals) = moments(&model, 0.0, &x, 3).unwrap();
        let mono = op.monomial_vector(&x);
        for i in 0..vals.len() {
            assert_relative_eq!(vals[i], mono[i], epsilon = 1e-13);
        }
    }

    #[test]
    fn cir_mean_matches_closed_form() {
        let (b, beta) = (0.2, -0.1);
        let model = CanonicalAffineModel::cir(b, beta, 0.5);
        let x = DVector::from_element(1, 1.0);
        let (op, vals) = moments(&model, 2.0, &x, 1).unwrap();
        let mean = vals[op.position(&[1]).unwrap()];
        let expect = (beta * 2.0f64).exp() * 1.0 + b * ((beta * 2.0f64).exp() - 1.0) / beta;
        assert_relative_eq!(mean, expect, max_relative = 1e-12);
        assert_relative_eq!(vals[op.position(&[0]).unwrap()], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_ou_second_moment() {
        let (a, beta, t, x0) = (0.3, -0.4, 1.3, 0.7);
        let model = CanonicalAffineModel::diffusion(
            0,
            1,
            DMatrix::from_element(1, 1, a),
            vec![],
            DVector::zeros(1),
            DMatrix::from_element(1, 1, beta),
        );
        let x = DVector::from_element(1, x0);
        let (op, vals) = moments(&model, t, &x, 2).unwrap();
        let m = (beta * t).exp() * x0;
        let v = a * ((2.0 * beta * t).exp() - 1.0) / (2.0 * beta);
        let second = vals[op.position(&[2]).unwrap()];
        assert_relative_eq!(second, v + m * m, max_relative = 1e-12);
    }

    #[test]
    fn degree_closure_block_triangularity() {
        // Moments of order ≤ j agree whether computed with k = j or k = j+2.
        let mut model = CanonicalAffineModel::cir(0.3, -0.2, 0.6);
        model.jumps_linear[0] = Some(JumpSpec {
            rate: 0.5,
            law: VectorJump::GammaRay {
                direction: DVector::from_element(1, 1.0),
                shape: 2.0,
                scale: 0.3,
            },
        });
        let x = DVector::from_element(1, 0.8);
        let (op2, v2) = moments(&model, 1.5, &x, 2).unwrap();
        let (op4, v4) = moments(&model, 1.5, &x, 4).unwrap();
        for alpha in &op2.basis {
            let a = v2[op2.position(alpha).unwrap()];
            let b = v4[op4.position(alpha).unwrap()];
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{alpha:?}: {a} vs {b}");
        }
    }
}
