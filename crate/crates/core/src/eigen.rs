//! Smallest eigenpair of a graph Laplacian on the complement of the
//! constant vector.
//!
//! The iterative solver is a thick-restart Lanczos scheme written as
//! explicit Rayleigh–Ritz: every new Krylov direction is orthogonalized
//! (classical Gram–Schmidt, two passes) against the constant vector and the
//! current basis, the projected matrix `H = Vᵀ A V` is assembled entry by
//! entry, and when the basis is full it is compressed onto the `keep`
//! lowest Ritz vectors plus the next Krylov direction. Small problems that
//! fail to converge fall back to a dense symmetric eigendecomposition.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::CsrMatrix;

#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Largest basis before a restart.
    pub max_basis: usize,
    /// Ritz vectors retained across a restart.
    pub keep: usize,
    /// Stop once `‖Ax − θx‖ ≤ tol · ‖A‖∞`.
    pub tol: f64,
    /// Residual bound (relative to `‖A‖∞`) below which an unconverged
    /// result is still accepted when the budget runs out.
    pub accept: f64,
    pub max_matvecs: usize,
    /// Dense fallback is attempted only up to this size.
    pub dense_fallback_max_n: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            max_basis: 200,
            keep: 40,
            tol: 1e-12,
            accept: 1e-7,
            max_matvecs: 50_000,
            dense_fallback_max_n: 500,
            seed: 0x5eed_f1ed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Krylov,
    Dense,
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    /// Unit norm, orthogonal to the constant vector.
    pub vector: Vec<f64>,
    /// `‖A v − λ v‖₂`, recomputed with a fresh matrix-vector product.
    pub residual: f64,
    pub matvecs: usize,
    pub solver: Solver,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Removes the mean, i.e. the component along the constant vector.
fn deflate_constant(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    for xi in x.iter_mut() {
        *xi -= mean;
    }
}

fn orthogonalize(x: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        deflate_constant(x);
        for b in basis {
            let c = dot(x, b);
            axpy(-c, b, x);
        }
    }
}

/// Rayleigh quotient and true residual of a (not necessarily unit) vector.
fn finalize(a: &CsrMatrix, mut x: Vec<f64>, matvecs: usize, solver: Solver) -> EigenPair {
    deflate_constant(&mut x);
    let nx = norm(&x);
    for xi in x.iter_mut() {
        *xi /= nx;
    }
    let mut ax = vec![0.0; x.len()];
    a.mul_vec(&x, &mut ax);
    let value = dot(&x, &ax);
    let residual = ax
        .iter()
        .zip(&x)
        .map(|(axi, xi)| (axi - value * xi).powi(2))
        .sum::<f64>()
        .sqrt();
    EigenPair {
        value,
        vector: x,
        residual,
        matvecs: matvecs + 1,
        solver,
    }
}

/// Smallest eigenpair of the symmetric positive semi-definite `a` restricted
/// to vectors orthogonal to the constant vector. For a connected graph
/// Laplacian this is the Fiedler pair.
pub fn smallest_nonconstant_eigenpair(a: &CsrMatrix, opts: &EigenOptions) -> Result<EigenPair> {
    let n = a.n();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("eigenproblem needs n >= 2, got {n}")));
    }
    let anorm = a.inf_norm().max(f64::MIN_POSITIVE);
    match krylov(a, opts, anorm) {
        Ok(pair) => Ok(pair),
        Err(Error::EigenNonConvergence { residual, matvecs }) => {
            if n <= opts.dense_fallback_max_n {
                log::debug!("krylov solver stalled at residual {residual:e}; using dense fallback");
                dense_smallest_nonconstant(a)
            } else {
                Err(Error::EigenNonConvergence { residual, matvecs })
            }
        }
        Err(e) => Err(e),
    }
}

fn krylov(a: &CsrMatrix, opts: &EigenOptions, anorm: f64) -> Result<EigenPair> {
    let n = a.n();
    let max_basis = opts.max_basis.clamp(2, usize::MAX).min(n - 1);
    let keep = opts.keep.clamp(1, max_basis.saturating_sub(1).max(1));
    let target = opts.tol * anorm;
    let check_every = 10;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut random_vector = move || -> Vec<f64> { (0..n).map(|_| rng.random::<f64>() - 0.5).collect() };

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_basis);
    let mut images: Vec<Vec<f64>> = Vec::with_capacity(max_basis);
    // Projected matrix, row-major max_basis × max_basis; only the leading
    // block is meaningful.
    let mut h = vec![0.0; max_basis * max_basis];
    let mut candidate = random_vector();
    let mut matvecs = 0usize;
    let mut best_residual = f64::INFINITY;
    let mut steps_since_check = 0usize;

    loop {
        let before = norm(&candidate);
        orthogonalize(&mut candidate, &basis);
        let after = norm(&candidate);
        let exhausted = basis.len() == n - 1;
        let breakdown = !exhausted && after <= 1e-10 * before.max(f64::MIN_POSITIVE);

        if breakdown {
            // Invariant subspace. Ritz pairs are exact here unless the
            // start vector missed the wanted eigenvector entirely.
            let (pair, res) = ritz(a, &basis, &images, &h, max_basis);
            if res <= target {
                return Ok(finalize(a, pair, matvecs, Solver::Krylov));
            }
            candidate = random_vector();
            continue;
        }

        if !exhausted {
            for c in candidate.iter_mut() {
                *c /= after;
            }
            let mut image = vec![0.0; n];
            a.mul_vec(&candidate, &mut image);
            matvecs += 1;
            let m = basis.len();
            for (i, b) in basis.iter().enumerate() {
                let hij = dot(b, &image);
                h[i * max_basis + m] = hij;
                h[m * max_basis + i] = hij;
            }
            h[m * max_basis + m] = dot(&candidate, &image);
            basis.push(std::mem::take(&mut candidate));
            candidate = image.clone();
            images.push(image);
            steps_since_check += 1;
        }

        let full = basis.len() == max_basis;
        if !(exhausted || full || steps_since_check >= check_every) {
            continue;
        }
        steps_since_check = 0;

        let m = basis.len();
        let eig = projected_eigen(&h, max_basis, m);
        let order = ascending(&eig.eigenvalues);
        let s0 = eig.eigenvectors.column(order[0]);
        let theta = eig.eigenvalues[order[0]];
        let mut x = vec![0.0; n];
        let mut ax = vec![0.0; n];
        for (k, (b, img)) in basis.iter().zip(&images).enumerate() {
            axpy(s0[k], b, &mut x);
            axpy(s0[k], img, &mut ax);
        }
        let res = ax
            .iter()
            .zip(&x)
            .map(|(p, q)| (p - theta * q).powi(2))
            .sum::<f64>()
            .sqrt();
        best_residual = best_residual.min(res);

        if res <= target || exhausted {
            let pair = finalize(a, x, matvecs, Solver::Krylov);
            if pair.residual <= opts.accept * anorm {
                return Ok(pair);
            }
            return Err(Error::EigenNonConvergence {
                residual: pair.residual,
                matvecs: pair.matvecs,
            });
        }

        if matvecs >= opts.max_matvecs {
            if best_residual <= opts.accept * anorm {
                return Ok(finalize(a, x, matvecs, Solver::Krylov));
            }
            return Err(Error::EigenNonConvergence {
                residual: best_residual,
                matvecs,
            });
        }

        if full {
            // Next Krylov direction, made orthogonal to the whole old basis
            // before the basis is compressed.
            orthogonalize(&mut candidate, &basis);
            let kept: Vec<usize> = order.iter().copied().take(keep).collect();
            let mut new_basis = Vec::with_capacity(max_basis);
            let mut new_images = Vec::with_capacity(max_basis);
            for &col in &kept {
                let s = eig.eigenvectors.column(col);
                let mut v = vec![0.0; n];
                let mut av = vec![0.0; n];
                for (k, (b, img)) in basis.iter().zip(&images).enumerate() {
                    axpy(s[k], b, &mut v);
                    axpy(s[k], img, &mut av);
                }
                new_basis.push(v);
                new_images.push(av);
            }
            h.fill(0.0);
            for (i, &col) in kept.iter().enumerate() {
                h[i * max_basis + i] = eig.eigenvalues[col];
            }
            basis = new_basis;
            images = new_images;
        }
    }
}

fn projected_eigen(h: &[f64], stride: usize, m: usize) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let hm = DMatrix::from_fn(m, m, |i, j| h[i * stride + j]);
    SymmetricEigen::new(hm)
}

fn ascending(values: &nalgebra::DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    order
}

/// Lowest Ritz vector of the current basis and its residual.
fn ritz(_a: &CsrMatrix, basis: &[Vec<f64>], images: &[Vec<f64>], h: &[f64], stride: usize) -> (Vec<f64>, f64) {
    let n = basis.first().map_or(0, Vec::len);
    let m = basis.len();
    if m == 0 {
        return (vec![0.0; n], f64::INFINITY);
    }
    let eig = projected_eigen(h, stride, m);
    let order = ascending(&eig.eigenvalues);
    let s = eig.eigenvectors.column(order[0]);
    let theta = eig.eigenvalues[order[0]];
    let mut x = vec![0.0; n];
    let mut ax = vec![0.0; n];
    for (k, (b, img)) in basis.iter().zip(images).enumerate() {
        axpy(s[k], b, &mut x);
        axpy(s[k], img, &mut ax);
    }
    let res = ax
        .iter()
        .zip(&x)
        .map(|(p, q)| (p - theta * q).powi(2))
        .sum::<f64>()
        .sqrt();
    (x, res)
}

/// Dense route: full symmetric eigendecomposition, second-smallest
/// eigenpair. Used as the fallback for small matrices.
pub fn dense_smallest_nonconstant(a: &CsrMatrix) -> Result<EigenPair> {
    let n = a.n();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("eigenproblem needs n >= 2, got {n}")));
    }
    let eig = SymmetricEigen::new(a.to_dense());
    let order = ascending(&eig.eigenvalues);
    let x: Vec<f64> = eig.eigenvectors.column(order[1]).iter().copied().collect();
    let pair = finalize(a, x, 0, Solver::Dense);
    if pair.residual.is_finite() {
        Ok(pair)
    } else {
        Err(Error::NonFinite("dense eigendecomposition"))
    }
}
