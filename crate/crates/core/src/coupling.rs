//! One-body boson couplings `(Delta_j, t_{j,l})` for the supported chain types.

use nalgebra::{DMatrix, DVector};

use crate::error::{CjtError, Result};
use crate::geometry::{self, ChainGeometry};
use crate::model::{Boundary, CoulombScale, CouplingScheme, HopRange, ModelParams};
use crate::scalar::Real;

/// On-site boson energies and the symmetric, zero-diagonal hopping matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix<T: Real> {
    pub delta_local: DVector<T>,
    pub hop: DMatrix<T>,
}

impl<T: Real> CouplingMatrix<T> {
    pub fn new(delta_local: DVector<T>, hop: DMatrix<T>) -> Result<Self> {
        let n = delta_local.len();
        if hop.nrows() != n || hop.ncols() != n {
            return Err(CjtError::invalid("hop", "must be N x N"));
        }
        for j in 0..n {
            if hop[(j, j)] != T::zero() {
                return Err(CjtError::invalid("hop", "diagonal must be zero"));
            }
            for l in 0..j {
                if hop[(j, l)] != hop[(l, j)] {
                    return Err(CjtError::invalid("hop", "must be symmetric"));
                }
            }
        }
        Ok(CouplingMatrix { delta_local, hop })
    }

    pub fn n_sites(&self) -> usize {
        self.delta_local.len()
    }

    /// `diag(Delta_j) + t`, the single-particle boson Hamiltonian.
    pub fn one_body(&self) -> DMatrix<T> {
        let mut h = self.hop.clone();
        for (j, &d) in self.delta_local.iter().enumerate() {
            h[(j, j)] = d;
        }
        h
    }

    /// `t_{j,l} -> (-1)^(j-l) t_{j,l}`.
    pub fn staggered(&self) -> Self {
        let mut hop = self.hop.clone();
        for j in 0..self.n_sites() {
            for l in 0..self.n_sites() {
                if (j + l) % 2 == 1 {
                    hop[(j, l)] = -hop[(j, l)];
                }
            }
        }
        CouplingMatrix {
            delta_local: self.delta_local.clone(),
            hop,
        }
    }

    /// Errors if any on-site energy is non-positive.
    pub fn check_stable(&self) -> Result<()> {
        match self.delta_local.iter().position(|&d| !(d > T::zero())) {
            Some(j) => Err(CjtError::UnstableBath {
                what: "site",
                index: j,
                energy: self.delta_local[j].as_f64(),
            }),
            None => Ok(()),
        }
    }

    /// Nonzero bonds `(j, l, t_{j,l})` with `j < l`.
    pub fn bonds(&self) -> Vec<(usize, usize, T)> {
        let n = self.n_sites();
        let mut out = Vec::new();
        for j in 0..n {
            for l in j + 1..n {
                let t = self.hop[(j, l)];
                if t != T::zero() {
                    out.push((j, l, t));
                }
            }
        }
        out
    }
}

/// Assembles the coupling matrix for any scheme, computing the ion geometry
/// when needed.
pub fn build_couplings<T: Real>(params: &ModelParams) -> Result<CouplingMatrix<T>> {
    params.validate()?;
    match params.coupling_scheme {
        CouplingScheme::Coulomb { .. } => {
            let geom = geometry::equilibrium_positions::<T>(params.n_sites)?;
            coulomb_couplings(&geom, params)
        }
        _ => homogeneous_couplings(params),
    }
}

/// `t_{j,l} ∝ 1/|u_j - u_l|^3`, scaled per the configured [`CoulombScale`],
/// with `Delta_j = Delta - sum_{l != j} t_{j,l}` when the local shift is on.
pub fn coulomb_couplings<T: Real>(
    geom: &ChainGeometry<T>,
    params: &ModelParams,
) -> Result<CouplingMatrix<T>> {
    let n = geom.n_sites();
    if n != params.n_sites {
        return Err(CjtError::invalid(
            "n_sites",
            format!("geometry has {n} ions, model has {}", params.n_sites),
        ));
    }
    let scale = match params.coupling_scheme {
        CouplingScheme::Coulomb { scale } => scale,
        _ => {
            return Err(CjtError::invalid(
                "coupling_scheme",
                "coulomb_couplings needs a Coulomb scheme",
            ))
        }
    };
    let u = &geom.positions;
    let mut raw = DMatrix::zeros(n, n);
    for j in 0..n {
        for l in 0..n {
            if j != l {
                let d = (u[j] - u[l]).abs();
                raw[(j, l)] = T::one() / (d * d * d);
            }
        }
    }
    let unit = match scale {
        CoulombScale::UnitHop(t) => T::lit(t),
        CoulombScale::CenterHop(t) => {
            let (a, b) = geometry::center_bond(u).ok_or_else(|| {
                CjtError::invalid(
                    "coupling_scheme.scale",
                    "a centre hop needs at least two ions",
                )
            })?;
            T::lit(t) / raw[(a, b)]
        }
    };
    let hop = raw * unit;
    finish(params, hop)
}

/// Equally spaced chains: dipolar `t/|j-l|^3`, nearest-neighbour `t`, or the
/// short-range `-t` model. Periodic chains use the wrapped distance.
pub fn homogeneous_couplings<T: Real>(params: &ModelParams) -> Result<CouplingMatrix<T>> {
    let n = params.n_sites;
    let periodic = params.boundary == Boundary::Periodic;
    let dist = |j: usize, l: usize| {
        let d = j.abs_diff(l);
        if periodic {
            d.min(n - d)
        } else {
            d
        }
    };
    let mut hop = DMatrix::zeros(n, n);
    for j in 0..n {
        for l in 0..n {
            if j == l {
                continue;
            }
            let d = dist(j, l);
            hop[(j, l)] = match params.coupling_scheme {
                CouplingScheme::Homogeneous {
                    t,
                    range: HopRange::Dipolar,
                } => T::lit(t) / T::count(d * d * d),
                CouplingScheme::Homogeneous {
                    t,
                    range: HopRange::Nearest,
                } => {
                    if d == 1 {
                        T::lit(t)
                    } else {
                        T::zero()
                    }
                }
                CouplingScheme::ShortRange { t } => {
                    if d == 1 {
                        -T::lit(t)
                    } else {
                        T::zero()
                    }
                }
                CouplingScheme::Coulomb { .. } => {
                    return Err(CjtError::invalid(
                        "coupling_scheme",
                        "homogeneous_couplings needs a homogeneous or short-range scheme",
                    ))
                }
            };
        }
    }
    finish(params, hop)
}

fn finish<T: Real>(params: &ModelParams, hop: DMatrix<T>) -> Result<CouplingMatrix<T>> {
    let n = params.n_sites;
    let delta = T::lit(params.delta_bare);
    let delta_local = DVector::from_iterator(
        n,
        (0..n).map(|j| {
            if params.include_local_shift {
                delta - hop.row(j).sum()
            } else {
                delta
            }
        }),
    );
    let c = CouplingMatrix { delta_local, hop };
    let c = if params.staggered { c.staggered() } else { c };
    c.check_stable()?;
    Ok(c)
}
