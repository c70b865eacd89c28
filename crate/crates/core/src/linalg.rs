//! Dense symmetric-matrix helpers and the matrix exponential.
//!
//! Everything here works on small matrices (state dimensions of a handful,
//! moment bases of a few hundred), so plain dense algorithms are used
//! throughout.

use nalgebra::{DMatrix, DVector};

use crate::error::{AffineError, Result};

/// Base tolerance for positive-semidefiniteness and structural-zero tests.
pub const PSD_TOL: f64 = 1e-12;

/// Scale-aware tolerance `PSD_TOL * (1 + max |entry|)` for a matrix.
pub fn scaled_tol(m: &DMatrix<f64>) -> f64 {
    PSD_TOL * (1.0 + m.amax())
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return false;
            }
        }
    }
    true
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    let mut ev = m.clone().symmetric_eigen().eigenvalues;
    ev.as_mut_slice()
        .sort_by(|a, b| a.partial_cmp(b).expect("non-finite eigenvalue"));
    ev
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).min()
}

/// Positive semidefiniteness with the scale-aware eigenvalue tolerance.
pub fn is_psd(m: &DMatrix<f64>) -> bool {
    min_eigenvalue(m) >= -scaled_tol(m)
}

/// Symmetric part `(M + Mᵀ)/2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Spectral projection onto the psd cone: symmetrize, clip negative
/// eigenvalues to zero.
pub fn psd_project(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = symmetrize(m);
    let eig = sym.symmetric_eigen();
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose()
}

/// Symmetric psd square root; negative eigenvalues are clipped to zero first.
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    psd_sqrt_into(m, &mut out);
    out
}

/// Allocation-free psd square root for hot loops: closed forms for d ≤ 2,
/// eigen fallback above.
pub fn psd_sqrt_into(m: &DMatrix<f64>, out: &mut DMatrix<f64>) {
    let d = m.nrows();
    match d {
        1 => out[(0, 0)] = m[(0, 0)].max(0.0).sqrt(),
        2 => {
            // For psd X: X^{1/2} = (X + √det·I)/√(tr + 2√det).
            let a = m[(0, 0)];
            let b = m[(1, 1)];
            let c = 0.5 * (m[(0, 1)] + m[(1, 0)]);
            let tr = a + b;
            let det = (a * b - c * c).max(0.0);
            let s = det.sqrt();
            let denom_sq = tr + 2.0 * s;
            if denom_sq <= 0.0 {
                out.fill(0.0);
                return;
            }
            // Tiny negative eigenvalues from rounding: clip through the
            // eigen fallback only when clearly indefinite.
            let lmin = 0.5 * tr - ((0.5 * (a - b)).powi(2) + c * c).sqrt();
            if lmin < -1e-13 * (1.0 + tr.abs()) {
                eigen_sqrt_into(m, out);
                return;
            }
            let t = denom_sq.sqrt();
            out[(0, 0)] = (a + s) / t;
            out[(1, 1)] = (b + s) / t;
            out[(0, 1)] = c / t;
            out[(1, 0)] = c / t;
        }
        _ => eigen_sqrt_into(m, out),
    }
}

fn eigen_sqrt_into(m: &DMatrix<f64>, out: &mut DMatrix<f64>) {
    let eig = symmetrize(m).symmetric_eigen();
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    out.copy_from(&(&eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()));
}

/// Minimum eigenvalue with a closed form for d ≤ 2.
pub fn min_eigenvalue_fast(m: &DMatrix<f64>) -> f64 {
    match m.nrows() {
        1 => m[(0, 0)],
        2 => {
            let a = m[(0, 0)];
            let b = m[(1, 1)];
            let c = 0.5 * (m[(0, 1)] + m[(1, 0)]);
            0.5 * (a + b) - ((0.5 * (a - b)).powi(2) + c * c).sqrt()
        }
        _ => min_eigenvalue(m),
    }
}

/// Number of eigenvalues above `tol * max(1, λ_max)` for a symmetric matrix.
pub fn psd_rank(m: &DMatrix<f64>, tol: f64) -> Result<usize> {
    if !is_symmetric(m, scaled_tol(m)) {
        return Err(AffineError::Structure(
            "psd_rank requires a symmetric matrix".into(),
        ));
    }
    let ev = sym_eigenvalues(m);
    let lmax = ev.max().max(0.0);
    let cut = tol * lmax.max(1.0);
    Ok(ev.iter().filter(|&&l| l > cut).count())
}

// Padé coefficients for the [13/13] diagonal approximant of exp.
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

const PADE9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];

const PADE7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];

const PADE5: [f64; 6] = [30_240.0, 15_120.0, 3_360.0, 420.0, 30.0, 1.0];

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];

const THETA3: f64 = 1.495_585_217_958_292e-2;
const THETA5: f64 = 2.539_398_330_063_23e-1;
const THETA7: f64 = 9.504_178_996_162_932e-1;
const THETA9: f64 = 2.097_847_961_257_068;
const THETA13: f64 = 5.371_920_351_148_152;

fn pade_uv(a: &DMatrix<f64>, b: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    // U = A (b1 I + b3 A² + ...), V = b0 I + b2 A² + ...
    let n = a.nrows();
    let a2 = a * a;
    let mut even = DMatrix::<f64>::identity(n, n) * b[0];
    let mut odd = DMatrix::<f64>::identity(n, n) * b[1];
    let mut pow = DMatrix::<f64>::identity(n, n);
    let mut k = 2;
    while k < b.len() {
        pow = &pow * &a2;
        even += &pow * b[k];
        if k + 1 < b.len() {
            odd += &pow * b[k + 1];
        }
        k += 2;
    }
    (a * odd, even)
}

fn pade13_uv(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let b = &PADE13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let id = DMatrix::<f64>::identity(n, n);
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &id * b[1];
    let u = a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &id * b[0];
    (u, v)
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling-and-squaring with diagonal Padé
/// approximants (orders 3/5/7/9/13 selected from the 1-norm).
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(a.is_square(), "expm requires a square matrix");
    let norm = one_norm(a);
    let (u, v, squarings) = if norm <= THETA3 {
        let (u, v) = pade_uv(a, &PADE3);
        (u, v, 0u32)
    } else if norm <= THETA5 {
        let (u, v) = pade_uv(a, &PADE5);
        (u, v, 0)
    } else if norm <= THETA7 {
        let (u, v) = pade_uv(a, &PADE7);
        (u, v, 0)
    } else if norm <= THETA9 {
        let (u, v) = pade_uv(a, &PADE9);
        (u, v, 0)
    } else {
        let s = ((norm / THETA13).log2().ceil().max(0.0)) as u32;
        let scaled = a / 2f64.powi(s as i32);
        let (u, v) = pade13_uv(&scaled);
        (u, v, s)
    };
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .expect("Padé denominator singular in expm");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// Evaluates `∫₀ᵗ e^{sβ} C e^{sβᵀ} ds` through one exponential of the
/// block matrix `[[-β, C], [0, βᵀ]]`: the (1,2) block of its exponential
/// equals `e^{-tβ}` times the desired integral.
pub fn lyapunov_integral(beta: &DMatrix<f64>, c: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let d = beta.nrows();
    assert_eq!(beta.ncols(), d);
    assert_eq!(c.nrows(), d);
    assert_eq!(c.ncols(), d);
    let mut block = DMatrix::<f64>::zeros(2 * d, 2 * d);
    block.view_mut((0, 0), (d, d)).copy_from(&(-beta));
    block.view_mut((0, d), (d, d)).copy_from(c);
    block
        .view_mut((d, d), (d, d))
        .copy_from(&beta.transpose());
    let e = expm(&(block * t));
    let top_left = e.view((0, 0), (d, d)).clone_owned(); // e^{-tβ}
    let top_right = e.view((0, d), (d, d)).clone_owned();
    let inv = top_left
        .lu()
        .solve(&top_right)
        .expect("singular e^{-tβ} block in lyapunov_integral");
    // Numerical asymmetry from the solve is below 1e-13 for the sizes here.
    symmetrize(&inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn expm_matches_series_small() {
        let a = DMatrix::from_row_slice(2, 2, &[0.1, -0.3, 0.2, 0.05]);
        // Taylor series reference with many terms.
        let mut sum = DMatrix::<f64>::identity(2, 2);
        let mut term = DMatrix::<f64>::identity(2, 2);
        for k in 1..40 {
            term = &term * &a / k as f64;
            sum += &term;
        }
        let e = expm(&a);
        assert_relative_eq!(e, sum, epsilon = 1e-13);
    }

    #[test]
    fn expm_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-3.0, 0.0, 7.5]));
        let e = expm(&a);
        assert_relative_eq!(e[(0, 0)], (-3.0f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(e[(1, 1)], 1.0, max_relative = 1e-12);
        assert_relative_eq!(e[(2, 2)], 7.5f64.exp(), max_relative = 1e-12);
        assert!(e[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn expm_large_norm_uses_squaring() {
        // Nilpotent: exp is exact polynomial regardless of norm.
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 40.0, 0.0, 0.0]);
        let e = expm(&a);
        assert_relative_eq!(e[(0, 1)], 40.0, max_relative = 1e-12);
        assert_relative_eq!(e[(0, 0)], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn lyapunov_integral_commuting_case() {
        // β = -0.5 I, C = 2 I: ∫ e^{-s} 2 ds = 2(1 - e^{-t}).
        let beta = DMatrix::from_diagonal_element(2, 2, -0.5);
        let c = DMatrix::from_diagonal_element(2, 2, 2.0);
        let g = lyapunov_integral(&beta, &c, 1.0);
        let expect = 2.0 * (1.0 - (-1.0f64).exp());
        assert_relative_eq!(g[(0, 0)], expect, max_relative = 1e-12);
        assert_relative_eq!(g[(1, 1)], expect, max_relative = 1e-12);
        assert!(g[(0, 1)].abs() < 1e-13);
    }

    #[test]
    fn lyapunov_integral_beta_zero() {
        let beta = DMatrix::zeros(2, 2);
        let c = DMatrix::identity(2, 2) * 2.0;
        let g = lyapunov_integral(&beta, &c, 3.0);
        assert_relative_eq!(g, DMatrix::identity(2, 2) * 6.0, epsilon = 1e-12);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let s = psd_sqrt(&m);
        assert_relative_eq!(&s * &s, m, epsilon = 1e-12);
        let m3 = {
            let v = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, 2.0, -0.3, 0.0, -0.3, 0.5]);
            v
        };
        let s3 = psd_sqrt(&m3);
        assert_relative_eq!(&s3 * &s3, m3, epsilon = 1e-12);
    }

    #[test]
    fn fast_min_eigenvalue_matches_eigen() {
        for m in [
            DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
            DMatrix::from_row_slice(2, 2, &[0.3, -0.9, -0.9, 4.0]),
        ] {
            assert_relative_eq!(min_eigenvalue_fast(&m), min_eigenvalue(&m), epsilon = 1e-12);
        }
    }

    #[test]
    fn psd_rank_tolerance_semantics() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-18]));
        assert_eq!(psd_rank(&m, 1e-12).unwrap(), 1);
        assert_eq!(psd_rank(&DMatrix::zeros(3, 3), 1e-12).unwrap(), 0);
        let v = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let vvt = &v * v.transpose();
        assert_eq!(psd_rank(&vvt, 1e-12).unwrap(), 1);
    }
}
