//! Matrix-free chiral Hamiltonian and its charge-sector sparse blocks.
//!
//! `H = (w_z/2) sum sigma_z + sum_j Delta_j (n_rj + n_lj)
//!    + sum_{j<l} t_jl (a+_j a_l + h.c.)  (both species)
//!    + g sum_j [sigma+_j (a_rj + a+_lj) + h.c.]`

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::basis::{ProductBasis, Sectors, Truncation};
use super::lanczos::SymmetricOperator;
use crate::coupling::CouplingMatrix;
use crate::error::{CjtError, Result};
use crate::model::ModelParams;
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct EdHamiltonian<T: Real> {
    pub basis: ProductBasis,
    pub omega_z: T,
    pub g: T,
    pub delta: Vec<T>,
    /// `(j, l, t_jl)` with `j < l`
    pub bonds: Vec<(usize, usize, T)>,
}

/// Assembles the operator in the chiral product basis.
pub fn build_hamiltonian<T: Real>(
    params: &ModelParams,
    coupling: &CouplingMatrix<T>,
    cutoff: usize,
    truncation: Truncation,
    cap: usize,
) -> Result<EdHamiltonian<T>> {
    params.validate()?;
    if coupling.n_sites() != params.n_sites {
        return Err(CjtError::invalid(
            "coupling",
            format!(
                "has {} sites but the model has {}",
                coupling.n_sites(),
                params.n_sites
            ),
        ));
    }
    let basis = ProductBasis::new(params.n_sites, cutoff, truncation, cap)?;
    Ok(EdHamiltonian {
        basis,
        omega_z: T::lit(params.omega_z),
        g: T::lit(params.g),
        delta: coupling.delta_local.iter().copied().collect(),
        bonds: coupling.bonds(),
    })
}

fn sqrt_n<T: Real>(n: usize) -> T {
    T::count(n).sqrt()
}

impl<T: Real> EdHamiltonian<T> {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn n_sites(&self) -> usize {
        self.basis.n_sites()
    }

    /// Pushes every nonzero `(k, H_{k,i})` of column `i` into `out`
    /// (cleared first). The diagonal comes first.
    pub fn column(&self, i: usize, locals: &mut [usize], out: &mut Vec<(usize, T)>) {
        out.clear();
        let b = &self.basis;
        b.decode(i, locals);
        let half = T::lit(0.5) * self.omega_z;
        let mut diag = T::zero();
        for (j, &k) in locals.iter().enumerate() {
            let s = b.local(k);
            diag += if s.up { half } else { -half };
            diag += self.delta[j] * T::count((s.n_r + s.n_l) as usize);
        }
        out.push((i, diag));

        let shift = |j: usize, from: usize, to: usize| -> usize {
            let stride = b.stride(j);
            i - from * stride + to * stride
        };

        if self.g != T::zero() {
            for (j, &k) in locals.iter().enumerate() {
                let s = b.local(k);
                let (r, l) = (s.n_r as usize, s.n_l as usize);
                if !s.up {
                    // sigma+ a_r
                    if r > 0 {
                        if let Some(to) = b.local_index(true, r - 1, l) {
                            out.push((shift(j, k, to), self.g * sqrt_n::<T>(r)));
                        }
                    }
                    // sigma+ a+_l
                    if let Some(to) = b.local_index(true, r, l + 1) {
                        out.push((shift(j, k, to), self.g * sqrt_n::<T>(l + 1)));
                    }
                } else {
                    // sigma- a+_r
                    if let Some(to) = b.local_index(false, r + 1, l) {
                        out.push((shift(j, k, to), self.g * sqrt_n::<T>(r + 1)));
                    }
                    // sigma- a_l
                    if l > 0 {
                        if let Some(to) = b.local_index(false, r, l - 1) {
                            out.push((shift(j, k, to), self.g * sqrt_n::<T>(l)));
                        }
                    }
                }
            }
        }

        for &(j, l, t) in &self.bonds {
            for (src, dst) in [(j, l), (l, j)] {
                // a+_dst a_src for each species
                let ks = locals[src];
                let kd = locals[dst];
                let s = b.local(ks);
                let d = b.local(kd);
                for species in 0..2 {
                    let (ns, nd) = if species == 0 {
                        (s.n_r as usize, d.n_r as usize)
                    } else {
                        (s.n_l as usize, d.n_l as usize)
                    };
                    if ns == 0 {
                        continue;
                    }
                    let new_s = if species == 0 {
                        b.local_index(s.up, ns - 1, s.n_l as usize)
                    } else {
                        b.local_index(s.up, s.n_r as usize, ns - 1)
                    };
                    let new_d = if species == 0 {
                        b.local_index(d.up, nd + 1, d.n_l as usize)
                    } else {
                        b.local_index(d.up, d.n_r as usize, nd + 1)
                    };
                    if let (Some(ts), Some(td)) = (new_s, new_d) {
                        let target = i - ks * b.stride(src) + ts * b.stride(src)
                            - kd * b.stride(dst)
                            + td * b.stride(dst);
                        let amp = t * sqrt_n::<T>(ns) * sqrt_n::<T>(nd + 1);
                        out.push((target, amp));
                    }
                }
            }
        }
    }

    /// Dense matrix for small bases.
    pub fn to_dense(&self) -> DMatrix<T> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut locals = vec![0; self.n_sites()];
        let mut col = Vec::new();
        for i in 0..n {
            self.column(i, &mut locals, &mut col);
            for &(k, a) in &col {
                m[(k, i)] += a;
            }
        }
        m
    }

    /// Frobenius norm of `[H, C]`, streamed over the full basis.
    pub fn commutator_norm(&self) -> T {
        let n_sites = self.n_sites();
        let total: f64 = (0..self.dim())
            .into_par_iter()
            .fold(
                || (vec![0usize; n_sites], Vec::new(), 0.0f64),
                |(mut locals, mut col, mut acc), i| {
                    self.column(i, &mut locals, &mut col);
                    let qi = self.basis.twice_charge(i);
                    for &(k, a) in &col {
                        let dq = (self.basis.twice_charge(k) - qi) as f64 * 0.5;
                        acc += (a.as_f64() * dq).powi(2);
                    }
                    (locals, col, acc)
                },
            )
            .map(|(_, _, acc)| acc)
            .sum();
        T::lit(total.sqrt())
    }

    /// Sparse block of one charge sector.
    pub fn sector_matrix(&self, sectors: &Sectors, sector: usize) -> SectorMatrix<T> {
        let members = &sectors.sectors[sector].1;
        let n_sites = self.n_sites();
        let rows: Vec<Vec<(u32, T)>> = members
            .par_iter()
            .map_init(
                || (vec![0usize; n_sites], Vec::new()),
                |(locals, col), &i| {
                    self.column(i, locals, col);
                    let mut row: Vec<(u32, T)> = Vec::with_capacity(col.len());
                    for &(k, a) in col.iter() {
                        debug_assert_eq!(sectors.sector_of[k] as usize, sector);
                        row.push((sectors.position[k], a));
                    }
                    row.sort_by_key(|e| e.0);
                    // merge duplicates so the Gershgorin bound is sharp
                    let mut merged: Vec<(u32, T)> = Vec::with_capacity(row.len());
                    for (c, a) in row {
                        match merged.last_mut() {
                            Some(last) if last.0 == c => last.1 += a,
                            _ => merged.push((c, a)),
                        }
                    }
                    merged
                },
            )
            .collect();
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for row in rows {
            for (c, a) in row {
                cols.push(c);
                vals.push(a);
            }
            offsets.push(cols.len());
        }
        SectorMatrix {
            offsets,
            cols,
            vals,
        }
    }
}

/// Symmetric CSR block; since `H` is real symmetric, columns and rows coincide.
#[derive(Debug, Clone)]
pub struct SectorMatrix<T> {
    offsets: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<T>,
}

const PAR_ROWS: usize = 4096;

impl<T: Real> SectorMatrix<T> {
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Lower bound on the spectrum from Gershgorin discs.
    pub fn gershgorin_lower(&self) -> T {
        let mut lo = T::max_value().unwrap_or_else(|| T::lit(f64::MAX));
        for r in 0..self.offsets.len() - 1 {
            let mut d = T::zero();
            let mut off = T::zero();
            for e in self.offsets[r]..self.offsets[r + 1] {
                if self.cols[e] as usize == r {
                    d += self.vals[e];
                } else {
                    off += self.vals[e].abs();
                }
            }
            lo = lo.min(d - off);
        }
        lo
    }
}

impl<T: Real> SymmetricOperator<T> for SectorMatrix<T> {
    fn dim(&self) -> usize {
        self.offsets.len() - 1
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        let row = |r: usize| {
            let mut acc = T::zero();
            for e in self.offsets[r]..self.offsets[r + 1] {
                acc += self.vals[e] * x[self.cols[e] as usize];
            }
            acc
        };
        if y.len() >= PAR_ROWS {
            y.par_iter_mut()
                .enumerate()
                .for_each(|(r, out)| *out = row(r));
        } else {
            for (r, out) in y.iter_mut().enumerate() {
                *out = row(r);
            }
        }
    }
}
