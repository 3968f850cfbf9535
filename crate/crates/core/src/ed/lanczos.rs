//! Restarted Lanczos with full reorthogonalization for a few extremal
//! (lowest) eigenpairs of a real symmetric operator.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CjtError, Result};
use crate::scalar::Real;

/// `y = A x` for a real symmetric `A`.
pub trait SymmetricOperator<T> {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[T], y: &mut [T]);
}

impl<T: Real> SymmetricOperator<T> for DMatrix<T> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        for (r, out) in y.iter_mut().enumerate() {
            *out = self
                .row(r)
                .iter()
                .zip(x)
                .fold(T::zero(), |a, (&m, &v)| a + m * v);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LanczosOptions {
    /// Required `||A v - lambda v||` for every returned pair.
    pub tol: f64,
    /// Krylov dimension before a restart.
    pub max_krylov: usize,
    pub max_restarts: usize,
    /// Operators up to this size are diagonalized densely.
    pub dense_limit: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            tol: 1e-10,
            max_krylov: 200,
            max_restarts: 60,
            dense_limit: 400,
            seed: 11,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPairs<T> {
    /// Ascending.
    pub values: Vec<T>,
    pub vectors: Vec<Vec<T>>,
    pub residuals: Vec<T>,
    /// Operator applications.
    pub iterations: usize,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn normalize<T: Real>(v: &mut [T]) -> T {
    let n = dot(v, v).sqrt();
    if n > T::zero() {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}

fn residual<T: Real, A: SymmetricOperator<T> + ?Sized>(a: &A, v: &[T], lambda: T) -> T {
    let mut w = vec![T::zero(); v.len()];
    a.apply(v, &mut w);
    axpy(-lambda, v, &mut w);
    dot(&w, &w).sqrt()
}

/// The `k` lowest eigenpairs of `a`.
///
/// Thick restart: when the Krylov space is full, the lowest Ritz vectors
/// (at least `k`, up to a third of the space) are kept together with the
/// current residual direction, so no spectral information about the wanted
/// end is discarded between cycles.
pub fn lowest_eigenpairs<T: Real, A: SymmetricOperator<T> + ?Sized>(
    a: &A,
    k: usize,
    opts: &LanczosOptions,
) -> Result<EigenPairs<T>> {
    let n = a.dim();
    let k = k.min(n).max(1);
    if n <= opts.dense_limit {
        return dense_lowest(a, k);
    }
    let m_max = opts.max_krylov.min(n).max(k + 8);
    let keep = (m_max / 3).max(k + 2).min(m_max - 4);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v0: Vec<T> = (0..n).map(|_| T::lit(rng.random::<f64>() - 0.5)).collect();
    normalize(&mut v0);

    // orthonormal basis, projected matrix and the pending residual direction
    let mut basis: Vec<Vec<T>> = vec![v0];
    let mut proj: DMatrix<T> = DMatrix::zeros(0, 0);
    let mut applications = 0;
    let mut last_res = f64::INFINITY;
    let mut scale = T::one();
    let mut w = vec![T::zero(); n];

    for _ in 0..=opts.max_restarts {
        while basis.len() <= m_max {
            let m = basis.len() - 1;
            a.apply(&basis[m], &mut w);
            applications += 1;
            let mut coeff = vec![T::zero(); m + 1];
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(v, &w);
                    coeff[i] += c;
                    axpy(-c, v, &mut w);
                }
            }
            let beta = normalize(&mut w);
            let mut next = proj.clone().resize(m + 1, m + 1, T::zero());
            for (i, &c) in coeff.iter().enumerate() {
                next[(i, m)] = c;
                next[(m, i)] = c;
            }
            proj = next;
            scale = scale.max(coeff[m].abs()).max(beta);
            let size = m + 1;
            let exhausted = beta <= T::eps() * scale * T::lit(16.0);
            let tol = T::lit(opts.tol).max(T::lit(64.0) * T::eps() * scale);

            let full = size == m_max;
            if exhausted || full || (size >= k && size % 10 == 0) {
                let (theta, y) = sorted_eigen(proj.clone());
                let wanted = k.min(size);
                let estimates_ok = (0..wanted)
                    .all(|i| exhausted || (beta * y[(size - 1, i)]).abs() < tol * T::lit(0.1));
                if estimates_ok && wanted == k {
                    let ritz = ritz_vectors(&basis, &y, wanted, n);
                    let res: Vec<T> = ritz
                        .iter()
                        .zip(&theta)
                        .map(|(v, &t)| residual(a, v, t))
                        .collect();
                    applications += ritz.len();
                    let worst = res.iter().fold(T::zero(), |m, &r| m.max(r));
                    last_res = worst.as_f64();
                    if worst <= tol {
                        return Ok(EigenPairs {
                            values: theta[..k].to_vec(),
                            vectors: ritz,
                            residuals: res,
                            iterations: applications,
                        });
                    }
                }
                if exhausted {
                    // invariant subspace: continue with a fresh random direction
                    let mut fresh: Vec<T> =
                        (0..n).map(|_| T::lit(rng.random::<f64>() - 0.5)).collect();
                    for _ in 0..2 {
                        for v in &basis {
                            let c = dot(v, &fresh);
                            axpy(-c, v, &mut fresh);
                        }
                    }
                    normalize(&mut fresh);
                    w = fresh;
                }
                if full {
                    last_res = last_res.min((beta * y[(size - 1, 0)]).abs().as_f64());
                    let kept = ritz_vectors(&basis, &y, keep, n);
                    let mut next = DMatrix::zeros(keep, keep);
                    for i in 0..keep {
                        next[(i, i)] = theta[i];
                    }
                    basis = kept;
                    proj = next;
                    basis.push(w.clone());
                    break;
                }
            }
            basis.push(w.clone());
        }
    }
    Err(CjtError::NotConverged {
        solver: "lanczos",
        iterations: applications,
        residual: last_res,
    })
}

fn ritz_vectors<T: Real>(basis: &[Vec<T>], y: &DMatrix<T>, count: usize, n: usize) -> Vec<Vec<T>> {
    (0..count)
        .map(|i| {
            let mut v = vec![T::zero(); n];
            for (j, b) in basis.iter().take(y.nrows()).enumerate() {
                axpy(y[(j, i)], b, &mut v);
            }
            normalize(&mut v);
            v
        })
        .collect()
}

fn sorted_eigen<T: Real>(m: DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let n = m.nrows();
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (values, vecs)
}

fn dense_lowest<T: Real, A: SymmetricOperator<T> + ?Sized>(
    a: &A,
    k: usize,
) -> Result<EigenPairs<T>> {
    let n = a.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![T::zero(); n];
    let mut col = vec![T::zero(); n];
    for j in 0..n {
        e[j] = T::one();
        a.apply(&e, &mut col);
        e[j] = T::zero();
        for i in 0..n {
            m[(i, j)] = col[i];
        }
    }
    let (values, vecs) = sorted_eigen(m);
    let vectors: Vec<Vec<T>> = (0..k)
        .map(|i| vecs.column(i).iter().copied().collect())
        .collect();
    let residuals = vectors
        .iter()
        .zip(&values)
        .map(|(v, &t)| residual(a, v, t))
        .collect();
    Ok(EigenPairs {
        values: values[..k].to_vec(),
        vectors,
        residuals,
        iterations: n,
    })
}
