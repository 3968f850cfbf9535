//! Dimensionless model definition, basis transforms and the U(1) charge.
//!
//! Energies are measured in units of the spin splitting `omega_z` (which is
//! normally 1). The spin basis convention is fixed here for the whole crate:
//! local state `|0>` is the `sigma_z = -1` eigenstate, so the `g = 0` ground
//! state is all spins down with energy `-N omega_z / 2`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::coupling::CouplingMatrix;
use crate::ed::basis::{ProductBasis, Truncation};
use crate::error::{CjtError, Result};
use crate::scalar::Real;

/// Range of the hopping in a homogeneous chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HopRange {
    /// `t_{j,l} = t / |j - l|^3`
    Dipolar,
    /// `t_{j,l} = t` for nearest neighbours only.
    Nearest,
}

/// How the overall scale of the Coulomb couplings is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoulombScale {
    /// Hop on the central bond, in units of `omega_z`.
    CenterHop(f64),
    /// Hop between two ions one dimensionless length unit apart.
    UnitHop(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingScheme {
    /// Inhomogeneous ion chain in a harmonic axial trap.
    Coulomb { scale: CoulombScale },
    /// Equally spaced ions.
    Homogeneous { t: f64, range: HopRange },
    /// `t_{j,l} = -t` on nearest-neighbour bonds.
    ShortRange { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

/// Dimensionless cooperative Jahn-Teller model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub n_sites: usize,
    #[serde(default = "one")]
    pub omega_z: f64,
    pub delta_bare: f64,
    pub g: f64,
    pub coupling_scheme: CouplingScheme,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub staggered: bool,
    #[serde(default)]
    pub include_local_shift: bool,
}

fn one() -> f64 {
    1.0
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return Err(CjtError::invalid("n_sites", "must be at least 1"));
        }
        positive("omega_z", self.omega_z)?;
        positive("delta_bare", self.delta_bare)?;
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(CjtError::invalid("g", "must be finite and non-negative"));
        }
        match self.coupling_scheme {
            CouplingScheme::Coulomb { scale } => {
                let v = match scale {
                    CoulombScale::CenterHop(v) | CoulombScale::UnitHop(v) => v,
                };
                if !(v.is_finite() && v >= 0.0) {
                    return Err(CjtError::invalid(
                        "coupling_scheme.scale",
                        "must be finite and non-negative",
                    ));
                }
                if self.boundary == Boundary::Periodic {
                    return Err(CjtError::invalid(
                        "boundary",
                        "a Coulomb chain in a harmonic trap has open ends",
                    ));
                }
            }
            CouplingScheme::Homogeneous { t, .. } | CouplingScheme::ShortRange { t } => {
                if !t.is_finite() {
                    return Err(CjtError::invalid("coupling_scheme.t", "must be finite"));
                }
            }
        }
        if self.boundary == Boundary::Periodic {
            if self.n_sites < 3 {
                return Err(CjtError::invalid(
                    "boundary",
                    "periodic chains need at least 3 sites",
                ));
            }
            if self.staggered && self.n_sites % 2 == 1 {
                return Err(CjtError::invalid(
                    "staggered",
                    "the staggered transform is frustrated on odd periodic rings",
                ));
            }
        }
        Ok(())
    }

    /// Copy of the model with a different spin-boson coupling.
    pub fn with_g(&self, g: f64) -> Self {
        ModelParams { g, ..self.clone() }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CjtError::invalid(field, "must be finite and positive"))
    }
}

/// Right and left chiral amplitudes, `a_r = (a_x - i a_y)/sqrt(2)` and
/// `a_l = (a_x + i a_y)/sqrt(2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiralAmplitudePair<T> {
    pub right: Complex<T>,
    pub left: Complex<T>,
}

impl<T: Real> ChiralAmplitudePair<T> {
    pub fn real(right: T, left: T) -> Self {
        ChiralAmplitudePair {
            right: Complex::new(right, T::zero()),
            left: Complex::new(left, T::zero()),
        }
    }

    /// `|right|^2 + |left|^2`
    pub fn occupation(&self) -> T {
        self.right.norm_sqr() + self.left.norm_sqr()
    }
}

/// Staggered spin-boson basis: `t_{j,l} -> (-1)^(j-l) t_{j,l}`.
///
/// On-site energies are untouched and the map is an involution.
pub fn apply_staggered_transform<T: Real>(c: &CouplingMatrix<T>) -> CouplingMatrix<T> {
    c.staggered()
}

/// The conserved charge `C = sum_j (n_r - n_l + sigma_z / 2)` as a diagonal
/// operator on the truncated chiral product basis.
#[derive(Debug, Clone)]
pub struct ChargeOperator<T> {
    pub basis: ProductBasis,
    pub diagonal: Vec<T>,
}

impl<T: Real> ChargeOperator<T> {
    pub fn to_dense(&self) -> nalgebra::DMatrix<T> {
        nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.diagonal))
    }
}

/// Builds `C` with per-species cutoff `n_b` and the default dimension cap.
pub fn u1_charge_operator<T: Real>(n_sites: usize, n_b: usize) -> Result<ChargeOperator<T>> {
    u1_charge_operator_capped(n_sites, n_b, crate::ed::DEFAULT_DIM_CAP)
}

pub fn u1_charge_operator_capped<T: Real>(
    n_sites: usize,
    n_b: usize,
    cap: usize,
) -> Result<ChargeOperator<T>> {
    if n_b < 1 {
        return Err(CjtError::invalid("n_b", "cutoff must be at least 1"));
    }
    let basis = ProductBasis::new(n_sites, n_b, Truncation::PerSpecies, cap)?;
    let diagonal = (0..basis.dim())
        .map(|i| T::lit(basis.twice_charge(i) as f64 * 0.5))
        .collect();
    Ok(ChargeOperator { basis, diagonal })
}
