//! Collective boson modes of the one-body Hamiltonian `diag(Delta_j) + t`.

use nalgebra::{DMatrix, DVector};

use crate::coupling::CouplingMatrix;
use crate::error::{CjtError, Result};
use crate::scalar::Real;

/// Mode energies `Delta_n` (ascending) and real orthogonal wavefunctions
/// `b_{n,j}` stored with modes as rows, so `a_n = sum_j b_{n,j} a_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhononSpectrum<T: Real> {
    pub energies: DVector<T>,
    pub wavefunctions: DMatrix<T>,
}

impl<T: Real> PhononSpectrum<T> {
    pub fn n_modes(&self) -> usize {
        self.energies.len()
    }

    /// Lowest collective mode energy.
    pub fn lowest(&self) -> T {
        self.energies[0]
    }

    /// `sum_n b_{n,j} Delta_n b_{n,l}`
    pub fn reconstruct(&self) -> DMatrix<T> {
        let b = &self.wavefunctions;
        b.transpose() * DMatrix::from_diagonal(&self.energies) * b
    }
}

/// Exact symmetric eigendecomposition of the bath.
///
/// Eigenvectors are made reproducible: inside each degenerate cluster the
/// basis is rebuilt by pivoted Gram-Schmidt on the projected site vectors, and
/// every mode is signed so that its largest component (lowest site index on
/// ties) is positive.
pub fn diagonalize_bath<T: Real>(c: &CouplingMatrix<T>) -> Result<PhononSpectrum<T>> {
    let n = c.n_sites();
    let h = c.one_body();
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let energies = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vecs = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(k));
    }

    let scale = h.amax().max(T::one());
    let deg_tol = T::lit(1e-9) * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && energies[end] - energies[end - 1] < deg_tol {
            end += 1;
        }
        if end - start > 1 {
            canonical_subspace(&mut vecs, start, end);
        }
        start = end;
    }
    for col in 0..n {
        fix_sign(&mut vecs, col);
    }

    if let Some(k) = energies.iter().position(|&e| !(e > T::zero())) {
        return Err(CjtError::UnstableBath {
            what: "mode",
            index: k,
            energy: energies[k].as_f64(),
        });
    }
    Ok(PhononSpectrum {
        energies,
        wavefunctions: vecs.transpose(),
    })
}

fn canonical_subspace<T: Real>(vecs: &mut DMatrix<T>, start: usize, end: usize) {
    let n = vecs.nrows();
    let q = vecs.columns(start, end - start).into_owned();
    let proj = &q * q.transpose();
    let mut chosen: Vec<DVector<T>> = Vec::with_capacity(end - start);
    for _ in start..end {
        let mut best: Option<(T, DVector<T>)> = None;
        for j in 0..n {
            let mut v: DVector<T> = proj.column(j).into_owned();
            for c in &chosen {
                let d = c.dot(&v);
                v -= c * d;
            }
            let norm = v.norm();
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, v));
            }
        }
        let (norm, v) = best.expect("non-empty chain");
        chosen.push(v / norm);
    }
    for (i, v) in chosen.into_iter().enumerate() {
        vecs.set_column(start + i, &v);
    }
}

fn fix_sign<T: Real>(vecs: &mut DMatrix<T>, col: usize) {
    let c = vecs.column(col);
    let max = c.amax();
    let tie = max * T::lit(1e-10);
    let pivot = c.iter().position(|x| x.abs() >= max - tie).unwrap_or(0);
    if c[pivot] < T::zero() {
        vecs.column_mut(col).neg_mut();
    }
}
