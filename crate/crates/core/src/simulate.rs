//! Path simulation with reproducible counter-based randomness.
//!
//! Each path draws from its own ChaCha stream keyed by a SplitMix64 mix of
//! (seed, path index), so path i is bit-identical whether simulated alone,
//! in a batch, or across different thread counts. Canonical models use an
//! Euler scheme with full truncation on positive coordinates; matrix models
//! use Euler–Maruyama with per-step symmetrization and spectral clipping.
//! Compound-Poisson jumps are thinned against the intensity frozen at each
//! step's left endpoint.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};
use rayon::prelude::*;

use crate::error::{AffineError, Result};
use crate::linalg;
use crate::model::{validate_wishart, CanonicalAffineModel, WishartModel};

/// SplitMix64 finalizer over seed and path index.
fn path_seed(seed: u64, path: u64) -> u64 {
    let mut z = seed
        .wrapping_add(path.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(path_seed(seed, path))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnapshotMode {
    /// Keep every state snapshot (CSV export, small runs).
    Full,
    /// Keep terminal states and running statistics only (large batches).
    TerminalOnly,
}

/// Ensemble of canonical-state paths.
#[derive(Clone, Debug)]
pub struct VectorEnsemble {
    pub npaths: usize,
    pub nsteps: usize,
    pub horizon: f64,
    pub dim: usize,
    pub positive: usize,
    pub scheme: &'static str,
    pub path_seeds: Vec<u64>,
    pub terminal: Vec<DVector<f64>>,
    /// Per path: min over time of the smallest positive coordinate
    /// (+∞ when there are no positive coordinates).
    pub boundary_min: Vec<f64>,
    /// Per path, time-major flattened snapshots (only in Full mode).
    pub snapshots: Option<Vec<Vec<f64>>>,
}

/// Ensemble of psd-matrix paths.
#[derive(Clone, Debug)]
pub struct MatrixEnsemble {
    pub npaths: usize,
    pub nsteps: usize,
    pub horizon: f64,
    pub d: usize,
    pub scheme: &'static str,
    pub path_seeds: Vec<u64>,
    pub x0_norm: f64,
    pub terminal: Vec<DMatrix<f64>>,
    /// Per path: min eigenvalue over time.
    pub boundary_min: Vec<f64>,
    pub snapshots: Option<Vec<Vec<f64>>>,
}

/// Euler with full truncation: diffusion and intensity arguments use the
/// projected state, snapshots are projected back onto the state space.
pub fn simulate_canonical(
    model: &CanonicalAffineModel,
    x0: &DVector<f64>,
    horizon: f64,
    nsteps: usize,
    npaths: usize,
    seed: u64,
    mode: SnapshotMode,
) -> Result<VectorEnsemble> {
    if !model.contains(x0) {
        return Err(AffineError::Domain(
            "x0 outside the state space (positive coordinates must be ≥ 0)".into(),
        ));
    }
    if nsteps == 0 || npaths == 0 || horizon <= 0.0 {
        return Err(AffineError::Config(
            "nsteps ≥ 1, npaths ≥ 1 and horizon > 0 required".into(),
        ));
    }
    let d = model.dim();
    let m = model.m;
    let dt = horizon / nsteps as f64;
    let sqrt_dt = dt.sqrt();
    let normal = Normal::new(0.0, 1.0).unwrap();

    struct PathOut {
        seed: u64,
        terminal: DVector<f64>,
        boundary_min: f64,
        snaps: Option<Vec<f64>>,
    }

    let has_diffusion = model.a.amax() > 0.0 || model.alpha.iter().any(|a| a.amax() > 0.0);
    let has_jumps = model.jump_specs().any(|(j, _)| j.rate > 0.0);
    let paths: Vec<PathOut> = (0..npaths as u64)
        .into_par_iter()
        .map(|pid| {
            let mut rng = path_rng(seed, pid);
            let mut x = x0.clone();
            let mut boundary = if m == 0 {
                f64::INFINITY
            } else {
                x.iter().take(m).fold(f64::INFINITY, |a, &v| a.min(v))
            };
            let mut snaps = match mode {
                SnapshotMode::Full => {
                    let mut s = Vec::with_capacity((nsteps + 1) * d);
                    s.extend(x.iter());
                    Some(s)
                }
                SnapshotMode::TerminalOnly => None,
            };
            let mut drift = DVector::<f64>::zeros(d);
            let mut diffusion = DMatrix::<f64>::zeros(d, d);
            let mut root = DMatrix::<f64>::zeros(d, d);
            let mut z = DVector::<f64>::zeros(d);
            let mut noise = DVector::<f64>::zeros(d);
            let mut lambda_lin = vec![0.0; m];
            for _ in 0..nsteps {
                // Everything is frozen at the step's left endpoint; the
                // diffusion and intensity arguments use the projected state
                // (full truncation), which the previous projection ensures.
                drift.copy_from(&model.b);
                drift.gemv(1.0, &model.beta, &x, 1.0);

                if has_diffusion {
                    diffusion.copy_from(&model.a);
                    for i in 0..m {
                        let w = x[i].max(0.0);
                        if w > 0.0 {
                            for (dst, src) in diffusion.iter_mut().zip(model.alpha[i].iter()) {
                                *dst += w * src;
                            }
                        }
                    }
                    linalg::psd_sqrt_into(&diffusion, &mut root);
                    for v in z.iter_mut() {
                        *v = normal.sample(&mut rng) * sqrt_dt;
                    }
                    noise.gemv(1.0, &root, &z, 0.0);
                } else {
                    noise.fill(0.0);
                }

                // Jump thinning against λ₀ + Σ λᵢ xᵢ⁺.
                let mut jump_total = DVector::<f64>::zeros(0);
                if has_jumps {
                    let lambda0 = model.jump0.as_ref().map(|j| j.rate).unwrap_or(0.0);
                    let mut total = lambda0;
                    for i in 0..m {
                        lambda_lin[i] = model.jumps_linear[i]
                            .as_ref()
                            .map(|j| j.rate * x[i].max(0.0))
                            .unwrap_or(0.0);
                        total += lambda_lin[i];
                    }
                    if total > 0.0 {
                        let count = Poisson::new(total * dt)
                            .map(|p| p.sample(&mut rng) as u64)
                            .unwrap_or(0);
                        if count > 0 {
                            jump_total = DVector::zeros(d);
                            for _ in 0..count {
                                let pick = rng.random_range(0.0..total);
                                let mut acc = lambda0;
                                let mut chosen: Option<&crate::jumps::JumpSpec> =
                                    if pick < acc { model.jump0.as_ref() } else { None };
                                if chosen.is_none() {
                                    for i in 0..m {
                                        acc += lambda_lin[i];
                                        if pick < acc {
                                            chosen = model.jumps_linear[i].as_ref();
                                            break;
                                        }
                                    }
                                }
                                if let Some(spec) = chosen.or(model.jump0.as_ref()) {
                                    jump_total += spec.law.sample(&mut rng);
                                }
                            }
                        }
                    }
                }

                x.axpy(dt, &drift, 1.0);
                x += &noise;
                if jump_total.len() == d {
                    x += &jump_total;
                }
                // Scheme projection back onto ℝ₊^m × ℝⁿ.
                for i in 0..m {
                    x[i] = x[i].max(0.0);
                }
                if m > 0 {
                    boundary = boundary.min(x.iter().take(m).fold(f64::INFINITY, |a, &v| a.min(v)));
                }
                if let Some(s) = &mut snaps {
                    s.extend(x.iter());
                }
            }
            PathOut {
                seed: path_seed(seed, pid),
                terminal: x,
                boundary_min: boundary,
                snaps,
            }
        })
        .collect();

    let mut out = VectorEnsemble {
        npaths,
        nsteps,
        horizon,
        dim: d,
        positive: m,
        scheme: "euler-full-truncation",
        path_seeds: Vec::with_capacity(npaths),
        terminal: Vec::with_capacity(npaths),
        boundary_min: Vec::with_capacity(npaths),
        snapshots: match mode {
            SnapshotMode::Full => Some(Vec::with_capacity(npaths)),
            SnapshotMode::TerminalOnly => None,
        },
    };
    for p in paths {
        out.path_seeds.push(p.seed);
        out.terminal.push(p.terminal);
        out.boundary_min.push(p.boundary_min);
        if let (Some(all), Some(s)) = (&mut out.snapshots, p.snaps) {
            all.push(s);
        }
    }
    Ok(out)
}

/// Exact CIR terminal samples: X_t | X_0 = x0 is a scaled non-central
/// chi-squared, sampled through the Poisson–gamma mixture.
pub fn simulate_cir_exact(
    b: f64,
    beta: f64,
    sigma: f64,
    x0: f64,
    t: f64,
    npaths: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if sigma <= 0.0 || b < 0.0 {
        return Err(AffineError::Config("requires σ > 0 and b ≥ 0".into()));
    }
    if x0 < 0.0 || t <= 0.0 {
        return Err(AffineError::Config("requires x0 ≥ 0 and t > 0".into()));
    }
    let (c, lambda) = cir_transition_constants(beta, sigma, x0, t);
    let nu = 4.0 * b / (sigma * sigma);
    let samples: Vec<f64> = (0..npaths as u64)
        .into_par_iter()
        .map(|pid| {
            let mut rng = path_rng(seed, pid);
            let n = if lambda > 0.0 {
                Poisson::new(0.5 * lambda)
                    .map(|p| p.sample(&mut rng) as u64)
                    .unwrap_or(0)
            } else {
                0
            };
            let shape = 0.5 * nu + n as f64;
            if shape == 0.0 {
                0.0
            } else {
                let y = Gamma::new(shape, 2.0).unwrap().sample(&mut rng);
                y / (2.0 * c)
            }
        })
        .collect();
    Ok(samples)
}

/// (c_t, λ_t) with X_t = Y/(2c_t), Y ~ χ²_ν(λ_t).
pub fn cir_transition_constants(beta: f64, sigma: f64, x0: f64, t: f64) -> (f64, f64) {
    let c = if beta.abs() < 1e-12 {
        2.0 / (sigma * sigma * t)
    } else {
        -2.0 * beta / (sigma * sigma * (1.0 - (beta * t).exp()))
    };
    let lambda = 2.0 * c * x0 * (beta * t).exp();
    (c, lambda)
}

/// Euler–Maruyama on the matrix SDE with symmetrization, spectral clipping
/// and a compound-Poisson subordinator.
pub fn simulate_wishart(
    model: &WishartModel,
    x0: &DMatrix<f64>,
    horizon: f64,
    nsteps: usize,
    npaths: usize,
    seed: u64,
    mode: SnapshotMode,
) -> Result<MatrixEnsemble> {
    let report = validate_wishart(model)?;
    if !report.verdict {
        return Err(AffineError::Structure(format!(
            "model fails the weak drift condition: {:?}",
            report
                .failures()
                .map(|c| c.name.clone())
                .collect::<Vec<_>>()
        )));
    }
    let d = model.d;
    if x0.nrows() != d || x0.ncols() != d {
        return Err(AffineError::Dimension(format!("x0 must be {d}x{d}")));
    }
    if !linalg::is_symmetric(x0, linalg::scaled_tol(x0)) || !linalg::is_psd(x0) {
        return Err(AffineError::Domain("x0 must be symmetric psd".into()));
    }
    if nsteps == 0 || npaths == 0 || horizon <= 0.0 {
        return Err(AffineError::Config(
            "nsteps ≥ 1, npaths ≥ 1 and horizon > 0 required".into(),
        ));
    }
    let dt = horizon / nsteps as f64;
    let sqrt_dt = dt.sqrt();
    let normal = Normal::new(0.0, 1.0).unwrap();

    struct PathOut {
        seed: u64,
        terminal: DMatrix<f64>,
        boundary_min: f64,
        snaps: Option<Vec<f64>>,
    }

    let beta_t = model.beta.transpose();
    let paths: Vec<PathOut> = (0..npaths as u64)
        .into_par_iter()
        .map(|pid| {
            let mut rng = path_rng(seed, pid);
            let mut x = x0.clone();
            let mut min_eig = linalg::min_eigenvalue(&x);
            let mut snaps = match mode {
                SnapshotMode::Full => {
                    let mut s = Vec::with_capacity((nsteps + 1) * d * d);
                    s.extend(x.iter());
                    Some(s)
                }
                SnapshotMode::TerminalOnly => None,
            };
            let mut root = DMatrix::<f64>::zeros(d, d);
            let mut drift = DMatrix::<f64>::zeros(d, d);
            let mut g = DMatrix::<f64>::zeros(d, d);
            let mut tmp = DMatrix::<f64>::zeros(d, d);
            let mut noise = DMatrix::<f64>::zeros(d, d);
            for _ in 0..nsteps {
                // x is psd from the previous projection (up to rounding).
                linalg::psd_sqrt_into(&x, &mut root);
                drift.copy_from(&model.b);
                drift.gemm(1.0, &model.beta, &x, 1.0);
                drift.gemm(1.0, &x, &beta_t, 1.0);
                for v in g.iter_mut() {
                    *v = normal.sample(&mut rng) * sqrt_dt;
                }
                tmp.gemm(1.0, &root, &g, 0.0);
                noise.gemm(1.0, &tmp, &model.q, 0.0);
                for (dst, src) in x.iter_mut().zip(drift.iter()) {
                    *dst += dt * src;
                }
                for i in 0..d {
                    for j in 0..d {
                        x[(i, j)] += noise[(i, j)] + noise[(j, i)];
                    }
                }
                // Subordinator jumps at constant rate.
                if let Some(jump) = &model.jump {
                    if jump.rate > 0.0 {
                        let count = Poisson::new(jump.rate * dt)
                            .map(|p| p.sample(&mut rng) as u64)
                            .unwrap_or(0);
                        for _ in 0..count {
                            x += jump.law.sample(&mut rng);
                        }
                    }
                }
                // Symmetrize, then clip negative eigenvalues to zero.
                for i in 0..d {
                    for j in (i + 1)..d {
                        let v = 0.5 * (x[(i, j)] + x[(j, i)]);
                        x[(i, j)] = v;
                        x[(j, i)] = v;
                    }
                }
                let lmin = linalg::min_eigenvalue_fast(&x);
                min_eig = min_eig.min(lmin);
                if lmin < 0.0 {
                    let eig_next = x.clone().symmetric_eigen();
                    let clip = eig_next.eigenvalues.map(|l| l.max(0.0));
                    x = &eig_next.eigenvectors
                        * DMatrix::from_diagonal(&clip)
                        * eig_next.eigenvectors.transpose();
                    x = linalg::symmetrize(&x);
                }
                if let Some(s) = &mut snaps {
                    s.extend(x.iter());
                }
            }
            PathOut {
                seed: path_seed(seed, pid),
                terminal: x,
                boundary_min: min_eig,
                snaps,
            }
        })
        .collect();

    let mut out = MatrixEnsemble {
        npaths,
        nsteps,
        horizon,
        d,
        scheme: "euler-spectral-clip",
        path_seeds: Vec::with_capacity(npaths),
        x0_norm: x0.norm(),
        terminal: Vec::with_capacity(npaths),
        boundary_min: Vec::with_capacity(npaths),
        snapshots: match mode {
            SnapshotMode::Full => Some(Vec::with_capacity(npaths)),
            SnapshotMode::TerminalOnly => None,
        },
    };
    for p in paths {
        out.path_seeds.push(p.seed);
        out.terminal.push(p.terminal);
        out.boundary_min.push(p.boundary_min);
        if let (Some(all), Some(s)) = (&mut out.snapshots, p.snaps) {
            all.push(s);
        }
    }
    Ok(out)
}

/// Boundary non-attainment summary for a matrix ensemble.
#[derive(Clone, Debug, serde::Serialize)]
pub struct BoundaryReport {
    /// (quantile, value) pairs of the per-path minimum eigenvalue.
    pub min_eig_quantiles: Vec<(f64, f64)>,
    /// Fraction of paths whose minimum eigenvalue dropped below the
    /// hitting tolerance 1e−8·‖x0‖.
    pub hitting_fraction: f64,
    pub hitting_tol: f64,
}

pub fn boundary_report(ensemble: &MatrixEnsemble) -> BoundaryReport {
    let tol = 1e-8 * ensemble.x0_norm;
    let mut sorted = ensemble.boundary_min.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| -> f64 {
        let idx = ((sorted.len() - 1) as f64 * p).round() as usize;
        sorted[idx]
    };
    let hits = sorted.iter().filter(|&&v| v < tol).count();
    BoundaryReport {
        min_eig_quantiles: [0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0]
            .iter()
            .map(|&p| (p, q(p)))
            .collect(),
        hitting_fraction: hits as f64 / sorted.len() as f64,
        hitting_tol: tol,
    }
}

/// Sample mean and standard error of e^{⟨u,X_T⟩}, with the count of paths
/// whose exponent saturated the overflow guard at 700.
#[derive(Clone, Debug, serde::Serialize)]
pub struct MgfEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub saturated: usize,
}

fn empirical_from_exponents(exponents: impl Iterator<Item = f64>) -> MgfEstimate {
    let mut n = 0usize;
    let mut saturated = 0usize;
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for e in exponents {
        let e = if e > 700.0 {
            saturated += 1;
            700.0
        } else {
            e
        };
        let v = e.exp();
        n += 1;
        sum += v;
        sumsq += v * v;
    }
    let mean = sum / n as f64;
    let var = (sumsq / n as f64 - mean * mean).max(0.0);
    MgfEstimate {
        estimate: mean,
        std_error: (var / n as f64).sqrt(),
        saturated,
    }
}

pub fn empirical_mgf_vector(ensemble: &VectorEnsemble, u: &DVector<f64>) -> MgfEstimate {
    empirical_from_exponents(ensemble.terminal.iter().map(|x| u.dot(x)))
}

/// Matrix ensembles pair through the trace form e^{tr(uX)}.
pub fn empirical_mgf_matrix(ensemble: &MatrixEnsemble, u: &DMatrix<f64>) -> MgfEstimate {
    empirical_from_exponents(ensemble.terminal.iter().map(|x| (u * x).trace()))
}

/// Empirical mean of e^{−tr(uX_T)}, the Laplace-transform counterpart.
pub fn empirical_laplace_matrix(ensemble: &MatrixEnsemble, u: &DMatrix<f64>) -> MgfEstimate {
    empirical_from_exponents(ensemble.terminal.iter().map(|x| -(u * x).trace()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jumps::{JumpSpec, VectorJump};
    use approx::assert_relative_eq;

    #[test]
    fn deterministic_flow_matches_ode() {
        // σ = 0, no jumps: terminal equals the linear ODE flow to O(1/nsteps).
        let model = CanonicalAffineModel::cir(0.2, -0.1, 0.0);
        let x0 = DVector::from_element(1, 1.0);
        let ens = simulate_canonical(&model, &x0, 1.0, 4000, 3, 7, SnapshotMode::TerminalOnly)
            .unwrap();
        let exact = (-0.1f64).exp() * 1.0 + 0.2 * ((-0.1f64).exp() - 1.0) / -0.1;
        for term in &ens.terminal {
            assert_relative_eq!(term[0], exact, epsilon = 1e-3);
        }
    }

    #[test]
    fn seeds_reproduce_bitwise() {
        let model = CanonicalAffineModel::cir(0.2, -0.1, 0.5);
        let x0 = DVector::from_element(1, 1.0);
        let a = simulate_canonical(&model, &x0, 1.0, 50, 64, 42, SnapshotMode::Full).unwrap();
        let b = simulate_canonical(&model, &x0, 1.0, 50, 64, 42, SnapshotMode::Full).unwrap();
        assert_eq!(a.snapshots, b.snapshots);
        assert_eq!(a.terminal, b.terminal);
        let c = simulate_canonical(&model, &x0, 1.0, 50, 64, 43, SnapshotMode::Full).unwrap();
        assert_ne!(a.terminal, c.terminal);
    }

    #[test]
    fn cir_euler_mean_within_three_se() {
        let (b, beta, sigma) = (0.2, -0.1, 0.5);
        let model = CanonicalAffineModel::cir(b, beta, sigma);
        let x0 = DVector::from_element(1, 1.0);
        let ens = simulate_canonical(&model, &x0, 1.0, 400, 20_000, 11, SnapshotMode::TerminalOnly)
            .unwrap();
        let exact = (beta * 1.0f64).exp() + b * ((beta * 1.0f64).exp() - 1.0) / beta;
        let n = ens.terminal.len() as f64;
        let mean: f64 = ens.terminal.iter().map(|x| x[0]).sum::<f64>() / n;
        let var: f64 = ens.terminal.iter().map(|x| (x[0] - mean).powi(2)).sum::<f64>() / n;
        let se = (var / n).sqrt();
        assert!(
            (mean - exact).abs() < 3.0 * se + 2e-3,
            "mean {mean} vs exact {exact} (se {se})"
        );
    }

    #[test]
    fn unit_rate_jump_count() {
        // Pure jump model: λ₀ = 1, unit point masses; mean terminal value
        // equals the expected jump count.
        let mut model = CanonicalAffineModel::cir(0.0, 0.0, 0.0);
        model.jump0 = Some(JumpSpec {
            rate: 1.0,
            law: VectorJump::PointMass {
                displacement: DVector::from_element(1, 1.0),
            },
        });
        let x0 = DVector::zeros(1);
        let ens = simulate_canonical(&model, &x0, 1.0, 100, 40_000, 5, SnapshotMode::TerminalOnly)
            .unwrap();
        let n = ens.terminal.len() as f64;
        let mean: f64 = ens.terminal.iter().map(|x| x[0]).sum::<f64>() / n;
        let se = (mean / n).sqrt(); // Poisson variance ≈ mean
        assert!((mean - 1.0).abs() < 3.0 * se + 1e-3, "mean {mean}");
    }

    #[test]
    fn exact_cir_absorbed_at_zero() {
        let samples = simulate_cir_exact(0.0, -0.3, 0.7, 0.0, 1.0, 500, 9).unwrap();
        assert!(samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn exact_cir_mean_variance() {
        let (b, beta, sigma, x0, t) = (0.2, -0.1, 0.5, 1.0, 1.0);
        let n = 200_000;
        let samples = simulate_cir_exact(b, beta, sigma, x0, t, n, 1234).unwrap();
        let exact_mean = (beta * t).exp() * x0 + b * ((beta * t).exp() - 1.0) / beta;
        let ebt = (beta * t).exp();
        let exact_var = x0 * sigma * sigma / beta * ebt * (ebt - 1.0)
            + b * sigma * sigma / (2.0 * beta * beta) * (ebt - 1.0).powi(2);
        let mean: f64 = samples.iter().sum::<f64>() / n as f64;
        let var: f64 = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64;
        let se_mean = (var / n as f64).sqrt();
        assert!((mean - exact_mean).abs() < 4.0 * se_mean, "{mean} vs {exact_mean}");
        assert_relative_eq!(var, exact_var, max_relative = 0.05);
    }

    #[test]
    fn wishart_deterministic_flow() {
        // Q = 0, no jumps: Ẋ = b + βX + Xβᵀ.
        let model = WishartModel::diffusion(
            2,
            DMatrix::identity(2, 2) * 0.4,
            DMatrix::identity(2, 2) * -0.5,
            DMatrix::zeros(2, 2),
        );
        let x0 = DMatrix::identity(2, 2);
        let ens =
            simulate_wishart(&model, &x0, 1.0, 4000, 2, 3, SnapshotMode::TerminalOnly).unwrap();
        // Diagonal ODE: ẋ = 0.4 − x, x(0) = 1 ⇒ x(1) = 0.4 + 0.6e^{−1}.
        let exact = 0.4 + 0.6 * (-1.0f64).exp();
        for term in &ens.terminal {
            assert_relative_eq!(term[(0, 0)], exact, epsilon = 1e-3);
            assert!(term[(0, 1)].abs() < 1e-9);
        }
    }

    #[test]
    fn wishart_paths_stay_psd() {
        let model = WishartModel::diffusion(
            2,
            DMatrix::identity(2, 2) * 2.0,
            DMatrix::identity(2, 2) * -0.5,
            DMatrix::identity(2, 2),
        );
        let x0 = DMatrix::identity(2, 2);
        let ens = simulate_wishart(&model, &x0, 1.0, 200, 50, 77, SnapshotMode::TerminalOnly)
            .unwrap();
        for term in &ens.terminal {
            assert!(linalg::is_symmetric(term, 1e-10));
            assert!(linalg::min_eigenvalue(term) >= -1e-10);
        }
    }

    #[test]
    fn wishart_rejects_inadmissible_model() {
        let model = WishartModel::diffusion(
            2,
            DMatrix::identity(2, 2) * 0.1,
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
        );
        assert!(matches!(
            simulate_wishart(
                &model,
                &DMatrix::identity(2, 2),
                1.0,
                10,
                5,
                1,
                SnapshotMode::TerminalOnly
            ),
            Err(AffineError::Structure(_))
        ));
    }

    #[test]
    fn boundary_report_singular_start() {
        let model = WishartModel::diffusion(
            2,
            DMatrix::identity(2, 2) * 2.0,
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
        );
        let x0 = DMatrix::from_partial_diagonal(2, 2, &[1.0]);
        let ens =
            simulate_wishart(&model, &x0, 0.5, 50, 100, 13, SnapshotMode::TerminalOnly).unwrap();
        let rep = boundary_report(&ens);
        assert!((rep.hitting_fraction - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empirical_mgf_basics() {
        let model = CanonicalAffineModel::cir(0.2, -0.1, 0.5);
        let x0 = DVector::from_element(1, 1.0);
        let ens = simulate_canonical(&model, &x0, 1.0, 100, 5000, 21, SnapshotMode::TerminalOnly)
            .unwrap();
        let at_zero = empirical_mgf_vector(&ens, &DVector::zeros(1));
        assert_eq!(at_zero.estimate, 1.0);
        assert_eq!(at_zero.std_error, 0.0);
        assert_eq!(at_zero.saturated, 0);
        // Saturation counter.
        let big = empirical_mgf_vector(&ens, &DVector::from_element(1, 1e4));
        assert!(big.saturated > 0);
    }
}
