//! Independent Cartesian (`x`, `y` boson) construction of the same model,
//! used only as a cross-check of the chiral assembly.
//!
//! `H = (w_z/2) sum sigma_z + sum Delta_j (n_x + n_y) + sum t_jl (a+ a + h.c.)
//!    + (g/sqrt 2) sum_j [sigma_x (a_x + a+_x) + sigma_y (a_y + a+_y)]`

use nalgebra::DMatrix;
use num_complex::Complex;

use super::basis::{ProductBasis, Truncation};
use crate::coupling::CouplingMatrix;
use crate::error::Result;
use crate::scalar::Real;

/// Dense Hermitian matrix in the Cartesian product basis with total-number
/// truncation `n_x + n_y <= cutoff` (the `n_r`/`n_l` fields of the basis
/// states hold `n_x`/`n_y`).
pub fn cartesian_dense<T: Real>(
    omega_z: T,
    g: T,
    coupling: &CouplingMatrix<T>,
    cutoff: usize,
    cap: usize,
) -> Result<DMatrix<Complex<T>>> {
    let n_sites = coupling.n_sites();
    let basis = ProductBasis::new(n_sites, cutoff, Truncation::Total, cap)?;
    let dim = basis.dim();
    let mut h = DMatrix::from_element(dim, dim, Complex::new(T::zero(), T::zero()));
    let re = |x: T| Complex::new(x, T::zero());
    let gs = g / T::lit(2f64.sqrt());
    let bonds = coupling.bonds();
    let mut locals = vec![0usize; n_sites];

    for i in 0..dim {
        basis.decode(i, &mut locals);
        let mut diag = T::zero();
        for (j, &k) in locals.iter().enumerate() {
            let s = basis.local(k);
            diag += if s.up { omega_z } else { -omega_z } * T::lit(0.5);
            diag += coupling.delta_local[j] * T::count((s.n_r + s.n_l) as usize);
        }
        h[(i, i)] += re(diag);

        let moved =
            |j: usize, from: usize, to: usize| i - from * basis.stride(j) + to * basis.stride(j);

        for (j, &k) in locals.iter().enumerate() {
            let s = basis.local(k);
            let (nx, ny) = (s.n_x(), s.n_y());
            // <flipped| sigma_x |s> = 1; <flipped| sigma_y |s> = +i (up -> down), -i (down -> up)
            let sy = if s.up {
                Complex::new(T::zero(), T::one())
            } else {
                Complex::new(T::zero(), -T::one())
            };
            let flip = !s.up;
            for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                let tx = nx as i64 + dx;
                let ty = ny as i64 + dy;
                if tx < 0 || ty < 0 {
                    continue;
                }
                let Some(to) = basis.local_index(flip, tx as usize, ty as usize) else {
                    continue;
                };
                let boson = if dx != 0 {
                    T::count(nx.max(tx as usize)).sqrt()
                } else {
                    T::count(ny.max(ty as usize)).sqrt()
                };
                let amp = if dx != 0 {
                    re(gs * boson)
                } else {
                    sy * gs * boson
                };
                h[(moved(j, k, to), i)] += amp;
            }
        }

        for &(j, l, t) in &bonds {
            for (src, dst) in [(j, l), (l, j)] {
                let (ks, kd) = (locals[src], locals[dst]);
                let (s, d) = (basis.local(ks), basis.local(kd));
                for species in 0..2 {
                    let (ns, nd) = if species == 0 {
                        (s.n_x(), d.n_x())
                    } else {
                        (s.n_y(), d.n_y())
                    };
                    if ns == 0 {
                        continue;
                    }
                    let (sx, sy) = if species == 0 {
                        (ns - 1, s.n_y())
                    } else {
                        (s.n_x(), ns - 1)
                    };
                    let (dx, dy) = if species == 0 {
                        (nd + 1, d.n_y())
                    } else {
                        (d.n_x(), nd + 1)
                    };
                    if let (Some(ts), Some(td)) = (
                        basis.local_index(s.up, sx, sy),
                        basis.local_index(d.up, dx, dy),
                    ) {
                        let target = i - ks * basis.stride(src) + ts * basis.stride(src)
                            - kd * basis.stride(dst)
                            + td * basis.stride(dst);
                        let amp = t * T::count(ns).sqrt() * T::count(nd + 1).sqrt();
                        h[(target, i)] += re(amp);
                    }
                }
            }
        }
    }
    Ok(h)
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_spectrum<T: Real>(h: DMatrix<Complex<T>>) -> Vec<T> {
    let mut v: Vec<T> = h.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v
}
