//! Quadratic (Bogoliubov) fluctuations around a mean-field solution.
//!
//! After rotating each spin onto its mean-field direction and linearising
//! with Holstein-Primakoff bosons `delta a_s`, the second-order Hamiltonian is
//!
//! ```text
//! H_G = sum_{n,e} Delta_n da+_{e,n} da_{e,n} + sum_j omega_j da+_{s,j} da_{s,j}
//!     + g/2 sum_{j,n} b_{n,j} cos(theta_j) (da_s + da+_s)(da_l + da+_l + da_r + da+_r)
//!     + g/2 sum_{j,n} b_{n,j} (da_s - da+_s)((da_l - da+_l) - (da_r - da+_r))
//! ```
//!
//! with `omega_j = omega_z / cos(theta_j)`. In quadratures
//! `x = (a + a+)/sqrt 2`, `p = (a - a+)/(i sqrt 2)` this is
//! `1/2 x^T K x + 1/2 p^T G p - 1/2 tr A` with no `x p` cross terms, where
//! `A = (K + G)/2` and `B = (K - G)/2` are the usual number-conserving and
//! pairing blocks. The symplectic eigenproblem therefore reduces to the real
//! symmetric problem for `K^(1/2) G K^(1/2)` (or the `G` analogue), whose
//! eigenvalues are `omega_m^2`.
//!
//! Operators are ordered `[s_1..s_N, l_1..l_N, r_1..r_N]`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::coupling::CouplingMatrix;
use crate::error::{CjtError, Result};
use crate::meanfield::MeanFieldSolution;
use crate::model::ModelParams;
use crate::modes::PhononSpectrum;
use crate::scalar::Real;

/// Basis used for the phonon fluctuation operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhononBasis {
    /// Collective modes `delta a_{e,n}`.
    Modes,
    /// Site operators `delta a_{e,j}`.
    Sites,
}

/// `H_G = 1/2 x^T K x + 1/2 p^T G p + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm<T: Real> {
    pub n_sites: usize,
    pub basis: PhononBasis,
    pub position: DMatrix<T>,
    pub momentum: DMatrix<T>,
    /// Spin-wave frequencies `omega_z / cos(theta_j)`.
    pub spin_frequencies: DVector<T>,
    /// Mean-field energy, the zeroth-order term of the expansion.
    pub constant: T,
}

impl<T: Real> QuadraticForm<T> {
    pub fn dim(&self) -> usize {
        3 * self.n_sites
    }

    /// Number-conserving block `A = (K + G)/2` of `a+ A a`.
    pub fn hermitian_block(&self) -> DMatrix<T> {
        (&self.position + &self.momentum) * T::lit(0.5)
    }

    /// Pairing block `B = (K - G)/2` of `1/2 (a B a + h.c.)`.
    pub fn pairing_block(&self) -> DMatrix<T> {
        (&self.position - &self.momentum) * T::lit(0.5)
    }
}

/// Expands the Hamiltonian to second order around `mf`, with phonons in the
/// collective-mode basis.
pub fn build_gaussian_hamiltonian<T: Real>(
    params: &ModelParams,
    spec: &PhononSpectrum<T>,
    mf: &MeanFieldSolution<T>,
) -> Result<QuadraticForm<T>> {
    assemble(params, spec, None, mf, PhononBasis::Modes)
}

/// Same expansion with site-local phonon operators; the bath then enters
/// through `diag(Delta_j) + t` instead of `diag(Delta_n)`.
pub fn build_gaussian_hamiltonian_sites<T: Real>(
    params: &ModelParams,
    coupling: &CouplingMatrix<T>,
    mf: &MeanFieldSolution<T>,
) -> Result<QuadraticForm<T>> {
    assemble(
        params,
        &empty_spec(coupling.n_sites()),
        Some(coupling),
        mf,
        PhononBasis::Sites,
    )
}

fn empty_spec<T: Real>(n: usize) -> PhononSpectrum<T> {
    PhononSpectrum {
        energies: DVector::zeros(n),
        wavefunctions: DMatrix::identity(n, n),
    }
}

fn assemble<T: Real>(
    params: &ModelParams,
    spec: &PhononSpectrum<T>,
    coupling: Option<&CouplingMatrix<T>>,
    mf: &MeanFieldSolution<T>,
    basis: PhononBasis,
) -> Result<QuadraticForm<T>> {
    let n = mf.n_sites();
    if n != params.n_sites || spec.n_modes() != n {
        return Err(CjtError::invalid(
            "n_sites",
            "mean-field solution and bath disagree",
        ));
    }
    let g = T::lit(params.g);
    let omega_z = T::lit(params.omega_z);
    let cos: Vec<T> = mf.theta.iter().map(|t| t.cos()).collect();
    let tiny = T::lit(1e-12);
    if let Some(j) = cos.iter().position(|c| c.abs() < tiny) {
        return Err(CjtError::SingularSpinFrequency {
            site: j,
            cos_theta: cos[j].as_f64(),
        });
    }
    let spin_frequencies = DVector::from_iterator(n, cos.iter().map(|&c| omega_z / c));

    let dim = 3 * n;
    let mut k = DMatrix::zeros(dim, dim);
    let mut gm = DMatrix::zeros(dim, dim);
    for j in 0..n {
        k[(j, j)] = spin_frequencies[j];
        gm[(j, j)] = spin_frequencies[j];
    }
    let bath = match coupling {
        Some(c) => c.one_body(),
        None => DMatrix::from_diagonal(&spec.energies),
    };
    for block in [n, 2 * n] {
        for a in 0..n {
            for b in 0..n {
                k[(block + a, block + b)] = bath[(a, b)];
                gm[(block + a, block + b)] = bath[(a, b)];
            }
        }
    }
    // spin j couples to phonon index n with weight b_{n,j}; identity for sites
    let weight = &spec.wavefunctions;
    for j in 0..n {
        for m in 0..n {
            let w = weight[(m, j)];
            if w == T::zero() {
                continue;
            }
            let kx = g * cos[j] * w;
            let pl = -g * w;
            let pr = g * w;
            for (col, kv, gv) in [(n + m, kx, pl), (2 * n + m, kx, pr)] {
                k[(j, col)] = kv;
                k[(col, j)] = kv;
                gm[(j, col)] = gv;
                gm[(col, j)] = gv;
            }
        }
    }
    Ok(QuadraticForm {
        n_sites: n,
        basis,
        position: k,
        momentum: gm,
        spin_frequencies,
        constant: mf.energy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BogoliubovOptions {
    /// Modes below this energy are treated as zero modes.
    pub zero_mode_tol: f64,
    /// Relative tolerance for negative curvature before the expansion point
    /// is declared unstable.
    pub stability_tol: f64,
}

impl Default for BogoliubovOptions {
    fn default() -> Self {
        BogoliubovOptions {
            zero_mode_tol: 1e-6,
            stability_tol: 1e-9,
        }
    }
}

/// Bogoliubov spectrum and transformation
/// `delta a_{gamma,n} = sum_m U_{(gamma,n),m} c_m + V_{(gamma,n),m} c+_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSpectrum<T: Real> {
    pub n_sites: usize,
    /// `3N` energies, ascending.
    pub energies: DVector<T>,
    /// `3N x 3N`; zero columns for zero modes.
    pub u: DMatrix<T>,
    pub v: DMatrix<T>,
    /// Which columns are zero modes.
    pub zero_modes: Vec<bool>,
    pub zero_mode_tol: T,
    /// Zero-point shift: `H_G = sum_m omega_m c+_m c_m + ground_shift`
    /// relative to the mean-field energy.
    pub ground_shift: T,
}

impl<T: Real> GaussianSpectrum<T> {
    pub fn zero_mode_count(&self) -> usize {
        self.zero_modes.iter().filter(|&&z| z).count()
    }

    /// Smallest energy above the zero-mode tolerance.
    pub fn gap(&self) -> Option<T> {
        adiabatic_gap(self)
    }

    /// Position-like and momentum-like transformation columns
    /// `T_x = U + V`, `T_p = U - V`.
    pub fn quadrature_transform(&self) -> (DMatrix<T>, DMatrix<T>) {
        (&self.u + &self.v, &self.u - &self.v)
    }

    /// `|U_m|^2 - |V_m|^2 - 1` per non-zero mode.
    pub fn normalization_errors(&self) -> Vec<T> {
        (0..self.energies.len())
            .filter(|&m| !self.zero_modes[m])
            .map(|m| self.u.column(m).norm_squared() - self.v.column(m).norm_squared() - T::one())
            .collect()
    }
}

fn sym_sqrt_and_inverse<T: Real>(m: &DMatrix<T>, floor: T) -> (DMatrix<T>, DMatrix<T>) {
    let eig = m.clone().symmetric_eigen();
    let q = &eig.eigenvectors;
    let root = eig
        .eigenvalues
        .map(|l| if l > T::zero() { l.sqrt() } else { T::zero() });
    let inv_root = eig.eigenvalues.map(|l| {
        if l > floor {
            T::one() / l.sqrt()
        } else {
            T::zero()
        }
    });
    (
        q * DMatrix::from_diagonal(&root) * q.transpose(),
        q * DMatrix::from_diagonal(&inv_root) * q.transpose(),
    )
}

/// Diagonalises `H_G`. Fails if `K` or `G` has a negative direction, i.e.
/// the mean-field point is a saddle.
pub fn bogoliubov_diagonalize<T: Real>(
    form: &QuadraticForm<T>,
    opts: &BogoliubovOptions,
) -> Result<GaussianSpectrum<T>> {
    let dim = form.dim();
    let scale = form.position.amax().max(form.momentum.amax()).max(T::one());
    let neg_tol = T::lit(opts.stability_tol) * scale;
    let min_k = form.position.symmetric_eigenvalues().min();
    let min_g = form.momentum.symmetric_eigenvalues().min();
    if min_k < -neg_tol || min_g < -neg_tol {
        return Err(CjtError::UnstableExpansion(format!(
            "quadratic form is not positive semidefinite (min eigenvalues: position {:.3e}, momentum {:.3e})",
            min_k.as_f64(),
            min_g.as_f64()
        )));
    }

    // work in the better conditioned of the two blocks
    let use_position = min_k >= min_g;
    let (outer, inner) = if use_position {
        (&form.position, &form.momentum)
    } else {
        (&form.momentum, &form.position)
    };
    let floor = T::eps() * T::lit(1e3) * scale;
    let (root, inv_root) = sym_sqrt_and_inverse(outer, floor);
    let s = &root * inner * &root;
    let s = (&s + s.transpose()) * T::lit(0.5);
    let eig = s.symmetric_eigen();
    if eig.eigenvalues.min() < -neg_tol * scale {
        return Err(CjtError::UnstableExpansion(format!(
            "negative squared frequency {:.3e}",
            eig.eigenvalues.min().as_f64()
        )));
    }
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let zero_tol = T::lit(opts.zero_mode_tol);
    let mut energies = DVector::zeros(dim);
    let mut u = DMatrix::zeros(dim, dim);
    let mut v = DMatrix::zeros(dim, dim);
    let mut zero_modes = vec![false; dim];
    for (col, &k) in order.iter().enumerate() {
        let w2 = eig.eigenvalues[k].max(T::zero());
        let w = w2.sqrt();
        energies[col] = w;
        if w < zero_tol {
            zero_modes[col] = true;
            continue;
        }
        let o = eig.eigenvectors.column(k);
        let sw = w.sqrt();
        // outer block quadrature gets K^{-1/2} O sqrt(w), the other K^{1/2} O / sqrt(w)
        let t_outer = &inv_root * o * sw;
        let t_inner = &root * o / sw;
        let (tx, tp) = if use_position {
            (t_outer, t_inner)
        } else {
            (t_inner, t_outer)
        };
        u.set_column(col, &((&tx + &tp) * T::lit(0.5)));
        v.set_column(col, &((&tx - &tp) * T::lit(0.5)));
    }
    let ground_shift = (energies.sum() - form.hermitian_block().trace()) * T::lit(0.5);
    Ok(GaussianSpectrum {
        n_sites: form.n_sites,
        energies,
        u,
        v,
        zero_modes,
        zero_mode_tol: zero_tol,
        ground_shift,
    })
}

/// Variances per atom `F_gamma = (1/N) sum_n <Omega| da+_{gamma,n} da_{gamma,n} |Omega>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuationVariances<T> {
    pub spin: T,
    pub left: T,
    pub right: T,
    /// Zero modes left out of the sums.
    pub excluded_zero_modes: usize,
}

/// `F_gamma = (1/N) sum_{n,m} |V_{(gamma,n),m}|^2` over non-zero modes.
pub fn fluctuation_variances<T: Real>(gs: &GaussianSpectrum<T>) -> FluctuationVariances<T> {
    let n = gs.n_sites;
    let nn = T::count(n);
    let block = |offset: usize| {
        let mut acc = T::zero();
        for m in 0..gs.energies.len() {
            if gs.zero_modes[m] {
                continue;
            }
            for r in offset..offset + n {
                acc += gs.v[(r, m)] * gs.v[(r, m)];
            }
        }
        acc / nn
    };
    FluctuationVariances {
        spin: block(0),
        left: block(n),
        right: block(2 * n),
        excluded_zero_modes: gs.zero_mode_count(),
    }
}

/// Smallest Bogoliubov energy above the zero-mode tolerance.
pub fn adiabatic_gap<T: Real>(gs: &GaussianSpectrum<T>) -> Option<T> {
    gs.energies
        .iter()
        .zip(&gs.zero_modes)
        .find(|(_, &z)| !z)
        .map(|(&w, _)| w)
}

/// Convenience: mean-field solution to spectrum in one call.
pub fn gaussian_spectrum<T: Real>(
    params: &ModelParams,
    spec: &PhononSpectrum<T>,
    mf: &MeanFieldSolution<T>,
    opts: &BogoliubovOptions,
) -> Result<GaussianSpectrum<T>> {
    bogoliubov_diagonalize(&build_gaussian_hamiltonian(params, spec, mf)?, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::build_couplings;
    use crate::meanfield::{solve_mean_field, MeanFieldOptions};
    use crate::model::{Boundary, CouplingScheme, HopRange};
    use crate::modes::diagonalize_bath;
    use approx::assert_abs_diff_eq;

    fn chain(g: f64) -> (ModelParams, CouplingMatrix<f64>, PhononSpectrum<f64>) {
        let p = ModelParams {
            n_sites: 6,
            omega_z: 1.0,
            delta_bare: 2.2,
            g,
            coupling_scheme: CouplingScheme::Homogeneous {
                t: 0.5,
                range: HopRange::Dipolar,
            },
            boundary: Boundary::Open,
            staggered: true,
            include_local_shift: true,
        };
        let c = build_couplings(&p).unwrap();
        let s = diagonalize_bath(&c).unwrap();
        (p, c, s)
    }

    fn solve(p: &ModelParams, s: &PhononSpectrum<f64>) -> MeanFieldSolution<f64> {
        solve_mean_field(p, s, &MeanFieldOptions::default(), None).unwrap()
    }

    #[test]
    fn decoupled_limit_is_block_diagonal() {
        let (p, _, s) = chain(0.0);
        let mf = solve(&p, &s);
        let form = build_gaussian_hamiltonian(&p, &s, &mf).unwrap();
        let mut want = DMatrix::zeros(18, 18);
        for j in 0..6 {
            want[(j, j)] = 1.0;
            want[(6 + j, 6 + j)] = s.energies[j];
            want[(12 + j, 12 + j)] = s.energies[j];
        }
        assert_eq!(form.position, want);
        assert_eq!(form.momentum, want);
        let gs = bogoliubov_diagonalize(&form, &Default::default()).unwrap();
        assert!(gs.v.amax() == 0.0);
        let f = fluctuation_variances(&gs);
        assert_eq!((f.spin, f.left, f.right), (0.0, 0.0, 0.0));
        assert_abs_diff_eq!(
            adiabatic_gap(&gs).unwrap(),
            1.0f64.min(s.lowest()),
            epsilon = 1e-12
        );
    }

    #[test]
    fn single_site_normal_phase_blocks() {
        // hand expansion at N = 1, theta = 0: A couples s to r, B couples s to l
        let c = CouplingMatrix::new(DVector::from_element(1, 2.0), DMatrix::zeros(1, 1)).unwrap();
        let s = diagonalize_bath(&c).unwrap();
        let p = ModelParams {
            n_sites: 1,
            omega_z: 1.0,
            delta_bare: 2.0,
            g: 0.3,
            coupling_scheme: CouplingScheme::ShortRange { t: 0.0 },
            boundary: Boundary::Open,
            staggered: false,
            include_local_shift: false,
        };
        let mf = solve(&p, &s);
        assert!(mf.is_normal());
        let form = build_gaussian_hamiltonian(&p, &s, &mf).unwrap();
        let a = form.hermitian_block();
        let b = form.pairing_block();
        let a_want = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.3, 0.0, 2.0, 0.0, 0.3, 0.0, 2.0]);
        let b_want = DMatrix::from_row_slice(3, 3, &[0.0, 0.3, 0.0, 0.3, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((a - a_want).amax() < 1e-15);
        assert!((b - b_want).amax() < 1e-15);
        // Heisenberg equations on (b, a_r, a_l+) give the dynamical matrix
        // [[1, g, -g], [g, 2, 0], [g, 0, -2]] with characteristic polynomial
        // (1 - x)(x^2 - 4) + 4 g^2; energies are the two positive roots and
        // minus the negative one.
        let gs = bogoliubov_diagonalize(&form, &Default::default()).unwrap();
        let g: f64 = 0.3;
        let poly = |x: f64| (1.0 - x) * (x * x - 4.0) + 4.0 * g * g;
        let bisect = |mut lo: f64, mut hi: f64| {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if (poly(lo) > 0.0) == (poly(mid) > 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let mut want = [-bisect(-3.0, -1.5), bisect(0.0, 1.5), bisect(1.5, 3.0)];
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (w, e) in want.iter().zip(gs.energies.iter()) {
            assert_abs_diff_eq!(*w, *e, epsilon = 1e-12);
        }
    }

    #[test]
    fn transform_is_canonical_and_diagonalizing() {
        for g in [0.2, 0.35, 0.6] {
            let (p, _, s) = chain(g);
            let mf = solve(&p, &s);
            let form = build_gaussian_hamiltonian(&p, &s, &mf).unwrap();
            let gs = bogoliubov_diagonalize(&form, &Default::default()).unwrap();
            for e in gs.normalization_errors() {
                assert!(e.abs() < 1e-8, "g = {g}: {e}");
            }
            let (tx, tp) = gs.quadrature_transform();
            let kx = tx.transpose() * &form.position * &tx;
            let gp = tp.transpose() * &form.momentum * &tp;
            for m in 0..18 {
                if gs.zero_modes[m] {
                    continue;
                }
                assert_abs_diff_eq!(kx[(m, m)], gs.energies[m], epsilon = 1e-9);
                assert_abs_diff_eq!(gp[(m, m)], gs.energies[m], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn broken_phase_has_one_goldstone_mode() {
        let (p, _, s) = chain(0.6);
        let mf = solve(&p, &s);
        assert!(!mf.is_normal());
        let gs = gaussian_spectrum(&p, &s, &mf, &Default::default()).unwrap();
        assert_eq!(gs.zero_mode_count(), 1);
        assert!(gs.energies[0] < 1e-6);
        assert!(gs.energies[1] > 1e-3);
    }

    #[test]
    fn site_and_mode_constructions_agree() {
        for g in [0.25, 0.5] {
            let (p, c, s) = chain(g);
            let mf = solve(&p, &s);
            let a = gaussian_spectrum(&p, &s, &mf, &Default::default()).unwrap();
            let b = bogoliubov_diagonalize(
                &build_gaussian_hamiltonian_sites(&p, &c, &mf).unwrap(),
                &Default::default(),
            )
            .unwrap();
            let fa = fluctuation_variances(&a);
            let fb = fluctuation_variances(&b);
            assert_abs_diff_eq!(fa.spin, fb.spin, epsilon = 1e-8);
            assert_abs_diff_eq!(fa.left, fb.left, epsilon = 1e-8);
            assert_abs_diff_eq!(fa.right, fb.right, epsilon = 1e-8);
            for m in 0..a.energies.len() {
                if a.zero_modes[m] {
                    // sqrt of a roundoff-level eigenvalue: only its smallness is meaningful
                    assert!(b.zero_modes[m]);
                } else {
                    assert_abs_diff_eq!(a.energies[m], b.energies[m], epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn saddle_point_is_rejected() {
        // the normal state above threshold is a saddle of the energy
        let (p, _, s) = chain(0.6);
        let normal = MeanFieldSolution {
            theta: DVector::zeros(6),
            phi: 0.0,
            alpha: crate::meanfield::condensate(&s, 0.6, &DVector::zeros(6)),
            energy: -3.0,
            converged: true,
            iterations: 0,
            residual: 0.0,
        };
        let form = build_gaussian_hamiltonian(&p, &s, &normal).unwrap();
        let err = bogoliubov_diagonalize(&form, &Default::default()).unwrap_err();
        assert!(matches!(err, CjtError::UnstableExpansion(_)));
    }

    #[test]
    fn right_angle_is_singular() {
        let (p, _, s) = chain(0.6);
        let mut mf = solve(&p, &s);
        mf.theta[2] = std::f64::consts::FRAC_PI_2;
        let err = build_gaussian_hamiltonian(&p, &s, &mf).unwrap_err();
        assert!(matches!(
            err,
            CjtError::SingularSpinFrequency { site: 2, .. }
        ));
    }
}
