//! Cooperative Jahn-Teller spin-boson chains.
//!
//! Spins coupled to two chiral boson species on a trapped-ion chain: lab
//! parameter reduction, Coulomb crystal geometry, collective modes, the
//! variational mean-field ground state, Gaussian fluctuations, and an
//! exact-diagonalization oracle for a few sites.
//!
//! Numerical code is generic over [`Real`]; the `*64` aliases fix `f64`.

pub mod config;
pub mod coupling;
pub mod ed;
pub mod error;
pub mod gaussian;
pub mod geometry;
pub mod lab;
pub mod meanfield;
pub mod model;
pub mod modes;
pub mod runner;
pub mod scalar;

pub use coupling::{build_couplings, coulomb_couplings, homogeneous_couplings, CouplingMatrix};
pub use ed::basis::{ProductBasis, Truncation};
pub use ed::{convergence_scan, exact_ground_state, EdConfig, EdResult, GroundState};
pub use error::{CjtError, Result};
pub use gaussian::{
    adiabatic_gap, bogoliubov_diagonalize, build_gaussian_hamiltonian, fluctuation_variances,
    gaussian_spectrum, BogoliubovOptions, FluctuationVariances, GaussianSpectrum, QuadraticForm,
};
pub use geometry::{equilibrium_positions, ChainGeometry};
pub use lab::{from_lab_params, LabConversion, LabParams};
pub use meanfield::{
    critical_coupling_estimate, exchange_matrix, mean_field_sweep, mf_observables,
    solve_mean_field, MeanFieldOptions, MeanFieldSolution, SiteObservables,
};
pub use model::{
    apply_staggered_transform, u1_charge_operator, Boundary, ChiralAmplitudePair, CoulombScale,
    CouplingScheme, HopRange, ModelParams,
};
pub use modes::{diagonalize_bath, PhononSpectrum};
pub use scalar::Real;

pub type CouplingMatrix64 = CouplingMatrix<f64>;
pub type ChainGeometry64 = ChainGeometry<f64>;
pub type PhononSpectrum64 = PhononSpectrum<f64>;
pub type MeanFieldSolution64 = MeanFieldSolution<f64>;
pub type SiteObservables64 = SiteObservables<f64>;
pub type GaussianSpectrum64 = GaussianSpectrum<f64>;
pub type EdResult64 = EdResult<f64>;
