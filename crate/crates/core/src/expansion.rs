//! Weighted-L² polynomial density proxy.
//!
//! A product weight (Gaussian per real coordinate, gamma per positive one)
//! carries an orthonormal polynomial family built by three-term recurrence
//! (Hermite and generalized Laguerre in standardized variables, never
//! Gram-Schmidt on monomials). The proxy density is
//! ĝ(ξ) = w(ξ)·Σ_{|α|≤N} c_α p_α(ξ) with c_α = E[p_α(X_t) | X_0 = x]
//! computed from the exact moments of the `moments` module.

use nalgebra::{DMatrix, DVector};

use crate::error::{AffineError, Result};
use crate::model::CanonicalAffineModel;
use crate::moments::{self, multi_indices};

#[derive(Clone, Debug, PartialEq)]
pub enum CoordinateWeight {
    Gaussian { mean: f64, var: f64 },
    Gamma { shape: f64, scale: f64 },
}

impl CoordinateWeight {
    pub fn check(&self) -> Result<()> {
        match self {
            CoordinateWeight::Gaussian { var, .. } => {
                if *var > 0.0 {
                    Ok(())
                } else {
                    Err(AffineError::Config("Gaussian weight needs var > 0".into()))
                }
            }
            CoordinateWeight::Gamma { shape, scale } => {
                if *shape > 0.0 && *scale > 0.0 {
                    Ok(())
                } else {
                    Err(AffineError::Config(
                        "gamma weight needs shape > 0 and scale > 0".into(),
                    ))
                }
            }
        }
    }

    pub fn supports(&self, xi: f64) -> bool {
        match self {
            CoordinateWeight::Gaussian { .. } => true,
            CoordinateWeight::Gamma { .. } => xi >= 0.0,
        }
    }

    /// Probability density of the weight at ξ.
    pub fn density(&self, xi: f64) -> f64 {
        match self {
            CoordinateWeight::Gaussian { mean, var } => {
                let z = xi - mean;
                (-(z * z) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
            }
            CoordinateWeight::Gamma { shape, scale } => {
                if xi < 0.0 {
                    return 0.0;
                }
                let z = xi / scale;
                ((shape - 1.0) * z.max(f64::MIN_POSITIVE).ln() - z - ln_gamma(*shape)).exp()
                    / scale
            }
        }
    }

    /// Standardization ξ = c + s·z used for the recurrences.
    fn standardize(&self) -> (f64, f64) {
        match self {
            CoordinateWeight::Gaussian { mean, var } => (*mean, var.sqrt()),
            CoordinateWeight::Gamma { scale, .. } => (0.0, *scale),
        }
    }

    /// Jacobi recurrence coefficients (a_n, b_n) in the standardized
    /// variable: z·p_n = √b_{n+1}·p_{n+1} + a_n·p_n + √b_n·p_{n−1}.
    fn jacobi(&self, n: usize) -> (f64, f64) {
        match self {
            CoordinateWeight::Gaussian { .. } => (0.0, n as f64),
            CoordinateWeight::Gamma { shape, .. } => {
                (2.0 * n as f64 + shape, n as f64 * (n as f64 + shape - 1.0))
            }
        }
    }

    /// Orthonormal p_0..p_n at ξ by the three-term recurrence.
    pub fn eval_orthonormal(&self, n: usize, xi: f64) -> Vec<f64> {
        let (c, s) = self.standardize();
        let z = (xi - c) / s;
        let mut vals = Vec::with_capacity(n + 1);
        vals.push(1.0);
        if n == 0 {
            return vals;
        }
        let mut prev = 0.0;
        let mut cur = 1.0;
        for m in 0..n {
            let (a_m, b_m) = self.jacobi(m);
            let (_, b_next) = self.jacobi(m + 1);
            let next = ((z - a_m) * cur - b_m.sqrt() * prev) / b_next.sqrt();
            vals.push(next);
            prev = cur;
            cur = next;
        }
        vals
    }

    /// Monomial coefficients (in ξ) of p_0..p_n; row m holds the
    /// coefficients of p_m on powers ξ⁰..ξ^m.
    pub fn monomial_coefficients(&self, n: usize) -> Vec<Vec<f64>> {
        let (c, s) = self.standardize();
        // Recurrence on coefficient vectors in z.
        let mut in_z: Vec<Vec<f64>> = vec![vec![1.0]];
        if n >= 1 {
            let mut prev = vec![1.0];
            let mut cur;
            {
                let (a_0, _) = self.jacobi(0);
                let (_, b_1) = self.jacobi(1);
                cur = vec![-a_0 / b_1.sqrt(), 1.0 / b_1.sqrt()];
            }
            in_z.push(cur.clone());
            for m in 1..n {
                let (a_m, b_m) = self.jacobi(m);
                let (_, b_next) = self.jacobi(m + 1);
                let mut next = vec![0.0; m + 2];
                for (p, &coef) in cur.iter().enumerate() {
                    next[p + 1] += coef;
                    next[p] -= a_m * coef;
                }
                for (p, &coef) in prev.iter().enumerate() {
                    next[p] -= b_m.sqrt() * coef;
                }
                for v in &mut next {
                    *v /= b_next.sqrt();
                }
                prev = cur;
                cur = next.clone();
                in_z.push(next);
            }
        }
        // Substitute z = (ξ − c)/s.
        in_z
            .iter()
            .map(|zc| {
                let deg = zc.len() - 1;
                let mut out = vec![0.0; deg + 1];
                for (p, &coef) in zc.iter().enumerate() {
                    // coef·((ξ − c)/s)^p expanded binomially.
                    let base = coef / s.powi(p as i32);
                    for j in 0..=p {
                        let comb = binom(p, j);
                        out[j] += base * comb * (-c).powi((p - j) as i32);
                    }
                }
                out
            })
            .collect()
    }

    /// Gauss quadrature (nodes, weights) exact for polynomial degree
    /// ≤ 2·npoints − 1 against this probability weight.
    ///
    /// Nodes are the Jacobi-matrix eigenvalues; weights use the Christoffel
    /// form 1/Σ_k p_k(x)², which keeps relative accuracy for far-tail nodes
    /// where eigenvector components sink below the double-precision noise
    /// floor.
    pub fn gauss_rule(&self, npoints: usize) -> (Vec<f64>, Vec<f64>) {
        assert!(npoints >= 1);
        let mut j = DMatrix::<f64>::zeros(npoints, npoints);
        for m in 0..npoints {
            let (a_m, _) = self.jacobi(m);
            j[(m, m)] = a_m;
            if m + 1 < npoints {
                let (_, b_next) = self.jacobi(m + 1);
                j[(m, m + 1)] = b_next.sqrt();
                j[(m + 1, m)] = b_next.sqrt();
            }
        }
        let mut nodes_z = j.symmetric_eigen().eigenvalues.as_slice().to_vec();
        nodes_z.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (c, s) = self.standardize();
        let mut nodes = Vec::with_capacity(npoints);
        let mut weights = Vec::with_capacity(npoints);
        for z in nodes_z {
            let xi = c + s * z;
            let vals = self.eval_orthonormal(npoints - 1, xi);
            let denom: f64 = vals.iter().map(|p| p * p).sum();
            nodes.push(xi);
            weights.push(1.0 / denom);
        }
        (nodes, weights)
    }
}

fn binom(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation, g = 7, n = 9.
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Product weight over the state coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSpec {
    pub coords: Vec<CoordinateWeight>,
}

impl WeightSpec {
    /// Auto weight: gamma per positive coordinate, Gaussian per real one,
    /// moment-matched to order two with independence across coordinates.
    pub fn auto(model: &CanonicalAffineModel, t: f64, x: &DVector<f64>) -> Result<WeightSpec> {
        let d = model.dim();
        let (op, vals) = moments::moments(model, t, x, 2)?;
        let mut coords = Vec::with_capacity(d);
        for j in 0..d {
            let mut e1 = vec![0usize; d];
            e1[j] = 1;
            let mut e2 = vec![0usize; d];
            e2[j] = 2;
            let mean = vals[op.position(&e1).unwrap()];
            let var = vals[op.position(&e2).unwrap()] - mean * mean;
            if var <= 0.0 {
                return Err(AffineError::Config(format!(
                    "degenerate coordinate {j}: variance {var} ≤ 0, cannot auto-match a weight"
                )));
            }
            if j < model.m {
                if mean <= 0.0 {
                    return Err(AffineError::Config(format!(
                        "coordinate {j} has nonpositive mean {mean}; gamma matching impossible"
                    )));
                }
                coords.push(CoordinateWeight::Gamma {
                    shape: mean * mean / var,
                    scale: var / mean,
                });
            } else {
                coords.push(CoordinateWeight::Gaussian { mean, var });
            }
        }
        Ok(WeightSpec { coords })
    }

    /// The weight must share the state-space support: gamma on positive
    /// coordinates, Gaussian on real ones.
    pub fn check_support(&self, model: &CanonicalAffineModel) -> Result<()> {
        if self.coords.len() != model.dim() {
            return Err(AffineError::Dimension(format!(
                "weight has {} coordinates, model has {}",
                self.coords.len(),
                model.dim()
            )));
        }
        for (j, w) in self.coords.iter().enumerate() {
            w.check()?;
            let positive = j < model.m;
            match (positive, w) {
                (true, CoordinateWeight::Gamma { .. }) => {}
                (false, CoordinateWeight::Gaussian { .. }) => {}
                (true, CoordinateWeight::Gaussian { .. }) => {
                    return Err(AffineError::Config(format!(
                        "coordinate {j} is positive but the weight is Gaussian (support mismatch)"
                    )));
                }
                (false, CoordinateWeight::Gamma { .. }) => {
                    return Err(AffineError::Config(format!(
                        "coordinate {j} is real but the weight is gamma (support mismatch)"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn density(&self, xi: &DVector<f64>) -> f64 {
        self.coords
            .iter()
            .zip(xi.iter())
            .map(|(w, &v)| w.density(v))
            .product()
    }

    pub fn supports(&self, xi: &DVector<f64>) -> bool {
        self.coords
            .iter()
            .zip(xi.iter())
            .all(|(w, &v)| w.supports(v))
    }
}

/// Truncated weighted-L² expansion of a transition density.
#[derive(Clone, Debug)]
pub struct DensityExpansion {
    pub order: usize,
    pub weight: WeightSpec,
    pub basis: Vec<Vec<usize>>,
    /// Coefficients c_α = E[p_α(X_t) | X_0 = x] in basis order.
    pub coeffs: Vec<f64>,
}

/// Builds the order-N expansion; `weight = None` selects the auto weight.
pub fn build_expansion(
    model: &CanonicalAffineModel,
    t: f64,
    x: &DVector<f64>,
    order: usize,
    weight: Option<WeightSpec>,
) -> Result<DensityExpansion> {
    let d = model.dim();
    let weight = match weight {
        Some(w) => w,
        None => WeightSpec::auto(model, t, x)?,
    };
    weight.check_support(model)?;

    let (op, vals) = moments::moments(model, t, x, order)?;
    let per_coord: Vec<Vec<Vec<f64>>> = weight
        .coords
        .iter()
        .map(|w| w.monomial_coefficients(order))
        .collect();

    let basis = multi_indices(d, order);
    let mut coeffs = Vec::with_capacity(basis.len());
    for alpha in &basis {
        // c_α = Σ_{γ ≤ α} (Π_j coef_j[α_j][γ_j])·E[X^γ].
        let mut c = 0.0;
        let mut gamma = vec![0usize; d];
        loop {
            let mut w = 1.0;
            for j in 0..d {
                w *= per_coord[j][alpha[j]][gamma[j]];
            }
            if w != 0.0 {
                c += w * vals[op.position(&gamma).unwrap()];
            }
            // Odometer over γ ≤ α.
            let mut j = 0;
            loop {
                if j == d {
                    break;
                }
                if gamma[j] < alpha[j] {
                    gamma[j] += 1;
                    break;
                }
                gamma[j] = 0;
                j += 1;
            }
            if j == d {
                break;
            }
        }
        coeffs.push(c);
    }

    Ok(DensityExpansion {
        order,
        weight,
        basis,
        coeffs,
    })
}

/// Proxy density value ĝ(ξ) = w(ξ)·Σ c_α p_α(ξ); may be negative from
/// truncation and is reported as-is.
pub fn evaluate_expansion(exp: &DensityExpansion, xi: &DVector<f64>) -> Result<f64> {
    if xi.len() != exp.weight.coords.len() {
        return Err(AffineError::Dimension("ξ dimension mismatch".into()));
    }
    if !exp.weight.supports(xi) {
        return Err(AffineError::Domain(format!(
            "ξ = {:?} outside the weight support",
            xi.as_slice()
        )));
    }
    let per_coord: Vec<Vec<f64>> = exp
        .weight
        .coords
        .iter()
        .zip(xi.iter())
        .map(|(w, &v)| w.eval_orthonormal(exp.order, v))
        .collect();
    let mut series = 0.0;
    for (alpha, &c) in exp.basis.iter().zip(exp.coeffs.iter()) {
        let mut p = 1.0;
        for (j, &aj) in alpha.iter().enumerate() {
            p *= per_coord[j][aj];
        }
        series += c * p;
    }
    Ok(exp.weight.density(xi) * series)
}

impl DensityExpansion {
    /// Partial Parseval sum Σ_{|α|≤N} c_α², a lower bound for ‖g/w‖²_w.
    pub fn parseval_partial(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Restriction to a smaller order (the coefficients are nested).
    pub fn truncated(&self, order: usize) -> DensityExpansion {
        assert!(order <= self.order);
        let keep: Vec<usize> = self
            .basis
            .iter()
            .enumerate()
            .filter(|(_, a)| a.iter().sum::<usize>() <= order)
            .map(|(i, _)| i)
            .collect();
        DensityExpansion {
            order,
            weight: self.weight.clone(),
            basis: keep.iter().map(|&i| self.basis[i].clone()).collect(),
            coeffs: keep.iter().map(|&i| self.coeffs[i]).collect(),
        }
    }
}

/// Max deviation of the Gram matrix of {p_α} from the identity, computed by
/// tensor Gauss quadrature; orthonormality diagnostic.
pub fn gram_deviation(weight: &WeightSpec, order: usize, quad_points: usize) -> f64 {
    let d = weight.coords.len();
    let rules: Vec<(Vec<f64>, Vec<f64>)> = weight
        .coords
        .iter()
        .map(|w| w.gauss_rule(quad_points))
        .collect();
    let basis = multi_indices(d, order);
    let size = basis.len();
    let mut gram = DMatrix::<f64>::zeros(size, size);
    let mut node_idx = vec![0usize; d];
    loop {
        let mut wq = 1.0;
        let mut polys: Vec<&[f64]> = Vec::with_capacity(d);
        let mut evals: Vec<Vec<f64>> = Vec::with_capacity(d);
        for j in 0..d {
            let (nodes, weights) = &rules[j];
            wq *= weights[node_idx[j]];
            evals.push(weight.coords[j].eval_orthonormal(order, nodes[node_idx[j]]));
        }
        for e in &evals {
            polys.push(e);
        }
        let vals: Vec<f64> = basis
            .iter()
            .map(|alpha| {
                alpha
                    .iter()
                    .enumerate()
                    .map(|(j, &aj)| polys[j][aj])
                    .product()
            })
            .collect();
        for i in 0..size {
            for j in i..size {
                gram[(i, j)] += wq * vals[i] * vals[j];
            }
        }
        // Odometer.
        let mut j = 0;
        loop {
            if j == d {
                break;
            }
            node_idx[j] += 1;
            if node_idx[j] < quad_points {
                break;
            }
            node_idx[j] = 0;
            j += 1;
        }
        if j == d {
            break;
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..size {
        for j in i..size {
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - expect).abs());
        }
    }
    worst
}

/// ∫ ξ^α ĝ(ξ) dξ by tensor Gauss quadrature (exact for the proxy when the
/// rule covers degree |α| + N).
pub fn expansion_moment(exp: &DensityExpansion, alpha: &[usize], quad_points: usize) -> f64 {
    let d = exp.weight.coords.len();
    let rules: Vec<(Vec<f64>, Vec<f64>)> = exp
        .weight
        .coords
        .iter()
        .map(|w| w.gauss_rule(quad_points))
        .collect();
    let mut acc = 0.0;
    let mut node_idx = vec![0usize; d];
    loop {
        let mut wq = 1.0;
        let mut mono = 1.0;
        let mut series = 0.0;
        let mut polys: Vec<Vec<f64>> = Vec::with_capacity(d);
        for j in 0..d {
            let (nodes, weights) = &rules[j];
            let node = nodes[node_idx[j]];
            wq *= weights[node_idx[j]];
            mono *= node.powi(alpha[j] as i32);
            polys.push(exp.weight.coords[j].eval_orthonormal(exp.order, node));
        }
        for (basis_alpha, &c) in exp.basis.iter().zip(exp.coeffs.iter()) {
            let mut p = 1.0;
            for (j, &aj) in basis_alpha.iter().enumerate() {
                p *= polys[j][aj];
            }
            series += c * p;
        }
        acc += wq * mono * series;
        let mut j = 0;
        loop {
            if j == d {
                break;
            }
            node_idx[j] += 1;
            if node_idx[j] < quad_points {
                break;
            }
            node_idx[j] = 0;
            j += 1;
        }
        if j == d {
            break;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hermite_orthonormality_by_quadrature() {
        let w = WeightSpec {
            coords: vec![CoordinateWeight::Gaussian {
                mean: 0.4,
                var: 2.0,
            }],
        };
        assert!(gram_deviation(&w, 8, 24) < 1e-10);
    }

    #[test]
    fn laguerre_orthonormality_by_quadrature() {
        let w = WeightSpec {
            coords: vec![CoordinateWeight::Gamma {
                shape: 3.5,
                scale: 0.7,
            }],
        };
        assert!(gram_deviation(&w, 10, 40) < 1e-9);
    }

    #[test]
    fn product_weight_orthonormality() {
        let w = WeightSpec {
            coords: vec![
                CoordinateWeight::Gamma {
                    shape: 2.0,
                    scale: 0.5,
                },
                CoordinateWeight::Gaussian {
                    mean: -1.0,
                    var: 0.8,
                },
            ],
        };
        assert!(gram_deviation(&w, 4, 16) < 1e-10);
    }

    #[test]
    fn coefficients_match_recurrence_evaluation() {
        let w = CoordinateWeight::Gamma {
            shape: 2.3,
            scale: 0.6,
        };
        let coefs = w.monomial_coefficients(6);
        for &xi in &[0.1, 0.9, 2.7] {
            let direct = w.eval_orthonormal(6, xi);
            for n in 0..=6 {
                let from_coefs: f64 = coefs[n]
                    .iter()
                    .enumerate()
                    .map(|(p, &c)| c * xi.powi(p as i32))
                    .sum();
                assert_relative_eq!(direct[n], from_coefs, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn gauss_rule_integrates_moments() {
        let w = CoordinateWeight::Gamma {
            shape: 4.0,
            scale: 0.5,
        };
        let (nodes, weights) = w.gauss_rule(12);
        // Gamma(4, 0.5): E[ξ] = 2, E[ξ²] = 0.25·4·5 = 5.
        let m1: f64 = nodes.iter().zip(&weights).map(|(n, w)| n * w).sum();
        let m2: f64 = nodes.iter().zip(&weights).map(|(n, w)| n * n * w).sum();
        assert_relative_eq!(m1, 2.0, max_relative = 1e-12);
        assert_relative_eq!(m2, 5.0, max_relative = 1e-12);
        assert_relative_eq!(weights.iter().sum::<f64>(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn order_zero_proxy_is_the_weight() {
        let model = CanonicalAffineModel::cir(0.2, -0.1, 0.5);
        let x = DVector::from_element(1, 1.0);
        let exp = build_expansion(&model, 1.0, &x, 0, None).unwrap();
        assert_eq!(exp.coeffs.len(), 1);
        assert_relative_eq!(exp.coeffs[0], 1.0, epsilon = 1e-12);
        let xi = DVector::from_element(1, 0.9);
        let v = evaluate_expansion(&exp, &xi).unwrap();
        assert_relative_eq!(v, exp.weight.density(&xi), max_relative = 1e-12);
    }

    #[test]
    fn gaussian_target_in_own_basis_has_trivial_coefficients() {
        // OU with the weight matched to the exact Gaussian law: all
        // higher coefficients vanish.
        let (a, beta, t, x0) = (0.3, -0.4, 1.0, 0.7);
        let model = CanonicalAffineModel::diffusion(
            0,
            1,
            DMatrix::from_element(1, 1, a),
            vec![],
            DVector::zeros(1),
            DMatrix::from_element(1, 1, beta),
        );
        let x = DVector::from_element(1, x0);
        let exp = build_expansion(&model, t, &x, 8, None).unwrap();
        assert_relative_eq!(exp.coeffs[0], 1.0, epsilon = 1e-10);
        for (alpha, c) in exp.basis.iter().zip(exp.coeffs.iter()).skip(1) {
            assert!(
                c.abs() < 1e-8,
                "c_{alpha:?} = {c} should vanish for the matched Gaussian"
            );
        }
    }

    #[test]
    fn unmatched_support_is_a_configuration_error() {
        let model = CanonicalAffineModel::cir(0.2, -0.1, 0.5);
        let x = DVector::from_element(1, 1.0);
        let bad = WeightSpec {
            coords: vec![CoordinateWeight::Gaussian {
                mean: 1.0,
                var: 1.0,
            }],
        };
        assert!(matches!(
            build_expansion(&model, 1.0, &x, 3, Some(bad)),
            Err(AffineError::Config(_))
        ));
    }

    #[test]
    fn outside_support_evaluation_errors() {
        let model = CanonicalAffineModel::cir(0.2, -0.1, 0.5);
        let x = DVector::from_element(1, 1.0);
        let exp = build_expansion(&model, 1.0, &x, 2, None).unwrap();
        let err = evaluate_expansion(&exp, &DVector::from_element(1, -0.1)).unwrap_err();
        assert!(matches!(err, AffineError::Domain(_)));
    }

    #[test]
    fn parseval_partial_nondecreasing() {
        let model = CanonicalAffineModel::cir(0.2, -0.1, 0.5);
        let x = DVector::from_element(1, 1.0);
        let full = build_expansion(&model, 1.0, &x, 12, None).unwrap();
        let mut prev = 0.0;
        for n in 0..=12 {
            let p = full.truncated(n).parseval_partial();
            assert!(p + 1e-15 >= prev, "parseval decreased at N={n}");
            prev = p;
        }
    }

    #[test]
    fn ln_gamma_reference_values() {
        assert_relative_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-12);
        assert_relative_eq!(ln_gamma(5.0), 24.0f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(ln_gamma(0.5), std::f64::consts::PI.sqrt().ln(), max_relative = 1e-12);
    }
}
