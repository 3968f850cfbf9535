//! Variational mean-field theory: coherent spin states times displaced
//! collective modes.
//!
//! With the spin convention of [`crate::model`] (`|0>` is spin down) and the
//! symmetry-breaking angle fixed to `phi = 0`, the variational energy is
//!
//! ```text
//! E(theta) = -(omega_z/2) sum_j cos(theta_j) - (1/4) sum_{j,l} J_{j,l} sin(theta_j) sin(theta_l)
//! ```
//!
//! after the boson amplitudes have been eliminated with
//! `alpha_{e,n} = -(g / 2 Delta_n) sum_j b_{n,j} sin(theta_j)`. Its stationary
//! points satisfy `omega_z tan(theta_j) = +sum_l J_{j,l} sin(theta_l)`, and the
//! minimising branch has `cos(theta_j) > 0`, so angles live in `(-pi/2, pi/2)`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CjtError, Result};
use crate::model::{ChiralAmplitudePair, ModelParams};
use crate::modes::PhononSpectrum;
use crate::scalar::Real;

/// `J_{j,l} = 2 sum_n (g^2 / Delta_n) b_{n,j} b_{n,l}`.
pub fn exchange_matrix<T: Real>(spec: &PhononSpectrum<T>, g: T) -> Result<DMatrix<T>> {
    Ok(exchange_kernel(spec)? * (g * g))
}

/// The `g`-independent part `J / g^2`.
pub fn exchange_kernel<T: Real>(spec: &PhononSpectrum<T>) -> Result<DMatrix<T>> {
    if let Some(k) = spec.energies.iter().position(|&e| !(e > T::zero())) {
        return Err(CjtError::UnstableBath {
            what: "mode",
            index: k,
            energy: spec.energies[k].as_f64(),
        });
    }
    let b = &spec.wavefunctions;
    let inv = DMatrix::from_diagonal(&spec.energies.map(|e| T::lit(2.0) / e));
    let k = b.transpose() * inv * b;
    // exact symmetry
    Ok((&k + k.transpose()) * T::lit(0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeanFieldOptions {
    /// Convergence threshold on the largest angle update.
    pub tol: f64,
    /// Fraction of the old angle kept in each update.
    pub damping: f64,
    pub max_iter: usize,
    /// Number of random seeds tried in addition to the deterministic ones.
    pub random_seeds: usize,
    pub seed: u64,
    /// Angle of the uniform small-angle seed.
    pub small_angle: f64,
    /// Finish converged broken-symmetry solutions with Newton steps.
    pub newton_polish: bool,
}

impl Default for MeanFieldOptions {
    fn default() -> Self {
        MeanFieldOptions {
            tol: 1e-10,
            damping: 0.5,
            max_iter: 500_000,
            random_seeds: 2,
            seed: 7,
            small_angle: 0.1,
            newton_polish: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldSolution<T: Real> {
    /// Spin angles, `<sigma_x> = sin(theta)`, `<sigma_z> = -cos(theta)`.
    pub theta: DVector<T>,
    /// Global in-plane angle; always zero.
    pub phi: T,
    /// Condensate amplitudes per collective mode.
    pub alpha: Vec<ChiralAmplitudePair<T>>,
    pub energy: T,
    pub converged: bool,
    pub iterations: usize,
    /// Largest update of one undamped self-consistency step.
    pub residual: T,
}

impl<T: Real> MeanFieldSolution<T> {
    pub fn is_normal(&self) -> bool {
        self.theta.iter().all(|&t| t == T::zero())
    }

    pub fn n_sites(&self) -> usize {
        self.theta.len()
    }
}

/// Energy of the ansatz at the optimal boson displacement.
pub fn variational_energy<T: Real>(omega_z: T, j: &DMatrix<T>, theta: &DVector<T>) -> T {
    let s = theta.map(|t| t.sin());
    let half = T::lit(0.5);
    -half * omega_z * theta.iter().map(|t| t.cos()).fold(T::zero(), |a, b| a + b)
        - T::lit(0.25) * s.dot(&(j * &s))
}

/// Condensate amplitudes `alpha_{e,n}` for given spin angles.
pub fn condensate<T: Real>(
    spec: &PhononSpectrum<T>,
    g: T,
    theta: &DVector<T>,
) -> Vec<ChiralAmplitudePair<T>> {
    let s = theta.map(|t| t.sin());
    let proj = &spec.wavefunctions * s;
    proj.iter()
        .zip(spec.energies.iter())
        .map(|(&p, &e)| {
            let a = -g / (T::lit(2.0) * e) * p;
            ChiralAmplitudePair::real(a, a)
        })
        .collect()
}

/// Self-consistency map `theta_j -> atan2(sum_l J_{j,l} sin(theta_l), omega_z)`.
fn target_angles<T: Real>(omega_z: T, j: &DMatrix<T>, theta: &DVector<T>) -> DVector<T> {
    let h = j * theta.map(|t| t.sin());
    h.map(|x| x.atan2(omega_z))
}

fn max_abs_diff<T: Real>(a: &DVector<T>, b: &DVector<T>) -> T {
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()))
}

struct Candidate<T: Real> {
    theta: DVector<T>,
    iterations: usize,
    residual: T,
}

fn iterate<T: Real>(
    omega_z: T,
    j: &DMatrix<T>,
    seed: DVector<T>,
    opts: &MeanFieldOptions,
) -> std::result::Result<Candidate<T>, (usize, T)> {
    let tol = T::lit(opts.tol);
    let mut step = T::one() - T::lit(opts.damping.clamp(0.0, 0.99));
    let min_step = T::lit(1.0 / 64.0);
    let mut theta = seed;
    let mut last = T::max_value().unwrap_or(T::lit(1e300));
    let mut rising = 0usize;
    let mut residual = last;
    for it in 1..=opts.max_iter {
        let target = target_angles(omega_z, j, &theta);
        residual = max_abs_diff(&target, &theta);
        if !residual.is_finite() {
            return Err((it, residual));
        }
        if residual < tol {
            return Ok(Candidate {
                theta: target,
                iterations: it,
                residual,
            });
        }
        if residual > last {
            rising += 1;
            if rising >= 8 {
                if step <= min_step {
                    return Err((it, residual));
                }
                step *= T::lit(0.5);
                rising = 0;
            }
        } else {
            rising = 0;
        }
        last = residual;
        theta = &theta + (target - &theta) * step;
    }
    Err((opts.max_iter, residual))
}

/// Newton refinement of `F_j = omega_z sin(theta_j) - cos(theta_j) h_j`,
/// accepted only while the residual keeps falling.
fn polish<T: Real>(omega_z: T, j: &DMatrix<T>, theta: &mut DVector<T>) {
    let n = theta.len();
    let res = |th: &DVector<T>| -> DVector<T> {
        let h = j * th.map(|t| t.sin());
        DVector::from_iterator(
            n,
            (0..n).map(|k| omega_z * th[k].sin() - th[k].cos() * h[k]),
        )
    };
    let mut f = res(theta);
    let mut fnorm = f.amax();
    for _ in 0..20 {
        if fnorm == T::zero() {
            break;
        }
        let c = theta.map(|t| t.cos());
        let s = theta.map(|t| t.sin());
        let h = j * &s;
        let mut jac = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                jac[(a, b)] = -c[a] * j[(a, b)] * c[b];
            }
            jac[(a, a)] += omega_z * c[a] + s[a] * h[a];
        }
        let Some(dx) = jac.lu().solve(&(-&f)) else {
            break;
        };
        let trial = &*theta + dx;
        let tf = res(&trial);
        let tnorm = tf.amax();
        if tnorm < fnorm {
            *theta = trial;
            f = tf;
            fnorm = tnorm;
        } else {
            break;
        }
    }
}

/// Solves the self-consistency equations from several seeds and returns the
/// lowest-energy fixed point. `warm` is an optional previous solution
/// (for sweeps).
pub fn solve_mean_field<T: Real>(
    params: &ModelParams,
    spec: &PhononSpectrum<T>,
    opts: &MeanFieldOptions,
    warm: Option<&DVector<T>>,
) -> Result<MeanFieldSolution<T>> {
    let n = spec.n_modes();
    if n != params.n_sites {
        return Err(CjtError::invalid(
            "n_sites",
            format!("spectrum has {n} modes, model has {} sites", params.n_sites),
        ));
    }
    let g = T::lit(params.g);
    let omega_z = T::lit(params.omega_z);
    let j = exchange_matrix(spec, g)?;

    let zero = DVector::zeros(n);
    let mut best = Candidate {
        theta: zero.clone(),
        iterations: 0,
        residual: T::zero(),
    };
    let mut best_energy = variational_energy(omega_z, &j, &zero);
    let mut any_converged = true;
    let mut fail: Option<(usize, T)> = None;

    if params.g > 0.0 {
        let mut seeds = Vec::new();
        if let Some(w) = warm {
            if w.len() == n && w.iter().any(|&t| t != T::zero()) {
                seeds.push(w.clone());
            }
        }
        seeds.push(DVector::from_element(n, T::lit(opts.small_angle)));
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for _ in 0..opts.random_seeds {
            seeds.push(DVector::from_iterator(
                n,
                (0..n).map(|_| T::lit(rng.random_range(0.05..1.4))),
            ));
        }
        let tie = T::lit(1e-13) * T::count(n).max(T::one());
        let mut converged_seeds = 0;
        for seed in seeds {
            match iterate(omega_z, &j, seed, opts) {
                Ok(mut cand) => {
                    converged_seeds += 1;
                    if opts.newton_polish && cand.theta.iter().any(|&t| t != T::zero()) {
                        polish(omega_z, &j, &mut cand.theta);
                        cand.residual =
                            max_abs_diff(&target_angles(omega_z, &j, &cand.theta), &cand.theta);
                    }
                    let e = variational_energy(omega_z, &j, &cand.theta);
                    if e < best_energy - tie {
                        best_energy = e;
                        best = cand;
                    }
                }
                Err(info) => fail = Some(info),
            }
        }
        if converged_seeds == 0 {
            any_converged = false;
        }
    }
    if !any_converged {
        let (iterations, residual) = fail.unwrap_or((opts.max_iter, T::zero()));
        return Err(CjtError::NotConverged {
            solver: "mean-field fixed point",
            iterations,
            residual: residual.as_f64(),
        });
    }

    let mut theta = best.theta;
    if theta.iter().map(|t| t.sin()).fold(T::zero(), |a, b| a + b) < T::zero() {
        theta.neg_mut();
    }
    let alpha = condensate(spec, g, &theta);
    let energy = variational_energy(omega_z, &j, &theta);
    Ok(MeanFieldSolution {
        theta,
        phi: T::zero(),
        alpha,
        energy,
        converged: true,
        iterations: best.iterations,
        residual: best.residual,
    })
}

/// Per-site occupations, spin components and the order parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteObservables<T: Real> {
    /// Site amplitudes `<a_{e,j}> = sum_n b_{n,j} alpha_{e,n}`.
    pub amplitudes: Vec<ChiralAmplitudePair<T>>,
    pub phonons_per_site: DVector<T>,
    pub spin_x: DVector<T>,
    pub spin_z: DVector<T>,
    pub total_phonons: T,
    /// `sum_{j,k,e} <a+_{e,j}><a_{e,k}> / N^2`
    pub order_parameter: T,
}

pub fn mf_observables<T: Real>(
    sol: &MeanFieldSolution<T>,
    spec: &PhononSpectrum<T>,
) -> SiteObservables<T> {
    let n = sol.n_sites();
    let b = &spec.wavefunctions;
    let right = DVector::from_iterator(n, sol.alpha.iter().map(|a| a.right.re));
    let left = DVector::from_iterator(n, sol.alpha.iter().map(|a| a.left.re));
    let site_r = b.transpose() * right;
    let site_l = b.transpose() * left;
    let amplitudes: Vec<_> = (0..n)
        .map(|j| ChiralAmplitudePair::real(site_r[j], site_l[j]))
        .collect();
    let phonons_per_site = DVector::from_iterator(n, amplitudes.iter().map(|a| a.occupation()));
    let total_phonons = phonons_per_site.sum();
    let nn = T::count(n * n);
    let order_parameter = (site_r.sum().powi(2) + site_l.sum().powi(2)) / nn;
    SiteObservables {
        amplitudes,
        phonons_per_site,
        spin_x: sol.theta.map(|t| t.sin()),
        spin_z: sol.theta.map(|t| -t.cos()),
        total_phonons,
        order_parameter,
    }
}

/// Two independent estimates of the mean-field critical coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalCoupling<T> {
    /// `sqrt(Delta_0 omega_z / 2)` from the lowest collective mode.
    pub from_lowest_mode: T,
    /// Instability of the linearised self-consistency map:
    /// `omega_z = lambda_max(J / g^2) g_c^2`.
    pub linearized: T,
}

pub fn critical_coupling_estimate<T: Real>(
    spec: &PhononSpectrum<T>,
    omega_z: T,
) -> Result<CriticalCoupling<T>> {
    let kernel = exchange_kernel(spec)?;
    let lam = kernel
        .symmetric_eigenvalues()
        .iter()
        .fold(T::min_value().unwrap_or(-T::one()), |m, &x| m.max(x));
    Ok(CriticalCoupling {
        from_lowest_mode: (spec.lowest() * omega_z * T::lit(0.5)).sqrt(),
        linearized: (omega_z / lam).sqrt(),
    })
}

/// One point of a coupling sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint<T: Real> {
    pub g: T,
    pub solution: MeanFieldSolution<T>,
    pub observables: SiteObservables<T>,
}

impl<T: Real> SweepPoint<T> {
    /// Angle at the central site (`N/2` rounded down, zero based).
    pub fn theta_center(&self) -> T {
        self.solution.theta[self.solution.n_sites() / 2]
    }
}

/// Ascending sweep in `g`, warm-starting each point from the previous one.
pub fn mean_field_sweep<T: Real>(
    params: &ModelParams,
    spec: &PhononSpectrum<T>,
    grid: &[f64],
    opts: &MeanFieldOptions,
) -> Result<Vec<SweepPoint<T>>> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CjtError::invalid(
            "sweep",
            "g grid must be strictly increasing",
        ));
    }
    let mut out = Vec::with_capacity(grid.len());
    let mut warm: Option<DVector<T>> = None;
    for &g in grid {
        let p = params.with_g(g);
        let sol = solve_mean_field(&p, spec, opts, warm.as_ref())?;
        warm = Some(sol.theta.clone());
        let observables = mf_observables(&sol, spec);
        out.push(SweepPoint {
            g: T::lit(g),
            solution: sol,
            observables,
        });
    }
    Ok(out)
}

/// Default phonon-number threshold of the transition detector.
pub const TRANSITION_THRESHOLD: f64 = 1e-6;

/// Midpoint of the first sweep interval on which the total phonon number
/// rises above `threshold`.
pub fn detect_transition<T: Real>(points: &[SweepPoint<T>], threshold: f64) -> Option<T> {
    let thr = T::lit(threshold);
    points.windows(2).find_map(|w| {
        (w[0].observables.total_phonons <= thr && w[1].observables.total_phonons > thr)
            .then(|| (w[0].g + w[1].g) * T::lit(0.5))
    })
}

/// Evenly spaced grid including both end points.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..points)
            .map(|k| start + (stop - start) * k as f64 / (points - 1) as f64)
            .collect(),
    }
}
