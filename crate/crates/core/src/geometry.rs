//! Equilibrium positions of ions in a harmonic axial trap.
//!
//! Positions are dimensionless: `u_j = z_j / l` with
//! `l^3 = e^2 / (4 pi eps0 m omega_ax^2)`, so that the force balance reads
//! `u_j = sum_{k<j} 1/(u_j - u_k)^2 - sum_{k>j} 1/(u_j - u_k)^2`.

use nalgebra::{DMatrix, DVector};

use crate::error::{CjtError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct ChainGeometry<T> {
    /// Sorted dimensionless positions.
    pub positions: Vec<T>,
    /// Meters per dimensionless unit, when known.
    pub length_unit: Option<f64>,
}

impl<T: Real> ChainGeometry<T> {
    pub fn n_sites(&self) -> usize {
        self.positions.len()
    }

    /// `d_j = u_j - u_{j-1}`; the first entry is zero.
    pub fn spacings(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.positions.len());
        for (j, &u) in self.positions.iter().enumerate() {
            out.push(if j == 0 {
                T::zero()
            } else {
                u - self.positions[j - 1]
            });
        }
        out
    }

    /// Equally spaced chain centred at the origin (for homogeneous checks).
    pub fn uniform(n: usize, spacing: T) -> Self {
        let mid = T::count(n.saturating_sub(1)) * T::lit(0.5);
        ChainGeometry {
            positions: (0..n).map(|j| (T::count(j) - mid) * spacing).collect(),
            length_unit: None,
        }
    }

    /// Largest per-ion violation of the force balance.
    pub fn residual(&self) -> T {
        force_residual(&self.positions)
            .iter()
            .fold(T::zero(), |m, r| m.max(r.abs()))
    }

    /// Index pair of the central bond: `(N/2 - 1, N/2)` for even `N`, the
    /// larger of the two central bonds for odd `N`.
    pub fn center_bond(&self) -> Option<(usize, usize)> {
        center_bond(&self.positions)
    }
}

pub(crate) fn center_bond<T: Real>(positions: &[T]) -> Option<(usize, usize)> {
    let n = positions.len();
    if n < 2 {
        return None;
    }
    let m = n / 2;
    if n % 2 == 0 {
        return Some((m - 1, m));
    }
    let left = positions[m] - positions[m - 1];
    let right = positions[m + 1] - positions[m];
    if right > left {
        Some((m, m + 1))
    } else {
        Some((m - 1, m))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions<T> {
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for NewtonOptions<T> {
    fn default() -> Self {
        NewtonOptions {
            tol: T::lit(1e-12).max(T::eps() * T::lit(64.0)),
            max_iter: 200,
        }
    }
}

/// Solves the force balance with the default options.
pub fn equilibrium_positions<T: Real>(n_sites: usize) -> Result<ChainGeometry<T>> {
    equilibrium_positions_with(n_sites, NewtonOptions::default())
}

/// Damped Newton iteration on the force balance from a uniformly spaced,
/// mirror-symmetric seed whose extent grows like `N^0.56`.
pub fn equilibrium_positions_with<T: Real>(
    n_sites: usize,
    opts: NewtonOptions<T>,
) -> Result<ChainGeometry<T>> {
    if n_sites == 0 {
        return Err(CjtError::invalid("n_sites", "must be at least 1"));
    }
    if n_sites == 1 {
        return Ok(ChainGeometry {
            positions: vec![T::zero()],
            length_unit: None,
        });
    }
    let n = n_sites;
    let half_extent = T::lit(0.45 * (n as f64).powf(0.56));
    let mid = T::lit((n as f64 - 1.0) / 2.0);
    let mut u: Vec<T> = (0..n)
        .map(|j| (T::count(j) - mid) / mid * half_extent)
        .collect();

    let mut res = force_residual(&u);
    let mut norm = max_abs(&res);
    for _ in 0..opts.max_iter {
        if norm < opts.tol {
            return Ok(ChainGeometry {
                positions: u,
                length_unit: None,
            });
        }
        let jac = force_jacobian(&u);
        let rhs = DVector::from_iterator(n, res.iter().map(|&r| -r));
        let step = match jac.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => jac.lu().solve(&rhs).ok_or(CjtError::NotConverged {
                solver: "equilibrium positions (singular Jacobian)",
                iterations: 0,
                residual: norm.as_f64(),
            })?,
        };
        let mut scale = T::one();
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<T> = u
                .iter()
                .zip(step.iter())
                .map(|(&a, &s)| a + s * scale)
                .collect();
            if trial.windows(2).all(|w| w[1] > w[0]) {
                let tres = force_residual(&trial);
                let tnorm = max_abs(&tres);
                if tnorm < norm || tnorm < opts.tol {
                    u = trial;
                    res = tres;
                    norm = tnorm;
                    accepted = true;
                    break;
                }
            }
            scale *= T::lit(0.5);
        }
        if !accepted {
            // no descent possible: we are at the rounding floor
            break;
        }
    }
    if norm < opts.tol {
        Ok(ChainGeometry {
            positions: u,
            length_unit: None,
        })
    } else {
        Err(CjtError::NotConverged {
            solver: "equilibrium positions",
            iterations: opts.max_iter,
            residual: norm.as_f64(),
        })
    }
}

fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// `F_j = u_j - sum_{k != j} sign(u_j - u_k) / (u_j - u_k)^2`
fn force_residual<T: Real>(u: &[T]) -> Vec<T> {
    let n = u.len();
    (0..n)
        .map(|j| {
            let mut push = T::zero();
            for k in 0..n {
                if k == j {
                    continue;
                }
                let d = u[j] - u[k];
                let f = T::one() / (d * d);
                if d > T::zero() {
                    push += f;
                } else {
                    push -= f;
                }
            }
            u[j] - push
        })
        .collect()
}

fn force_jacobian<T: Real>(u: &[T]) -> DMatrix<T> {
    let n = u.len();
    let two = T::lit(2.0);
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = T::one();
        for k in 0..n {
            if k == j {
                continue;
            }
            let d = (u[j] - u[k]).abs();
            let c = two / (d * d * d);
            diag += c;
            jac[(j, k)] = -c;
        }
        jac[(j, j)] = diag;
    }
    jac
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_ion_sits_at_centre() {
        let g = equilibrium_positions::<f64>(1).unwrap();
        assert_eq!(g.positions, vec![0.0]);
        assert!(g.center_bond().is_none());
    }

    #[test]
    fn two_ions_match_closed_form() {
        // u = +-(1/4)^(1/3), i.e. d^3 = 2
        let g = equilibrium_positions::<f64>(2).unwrap();
        let u = 0.25f64.cbrt();
        assert_abs_diff_eq!(g.positions[0], -u, epsilon = 1e-13);
        assert_abs_diff_eq!(g.positions[1], u, epsilon = 1e-13);
    }

    #[test]
    fn three_ions_match_closed_form() {
        let g = equilibrium_positions::<f64>(3).unwrap();
        let u = 1.25f64.cbrt();
        assert_abs_diff_eq!(g.positions[0], -u, epsilon = 1e-13);
        assert_abs_diff_eq!(g.positions[1], 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(g.positions[2], u, epsilon = 1e-13);
    }

    #[test]
    fn spacings_grow_towards_the_ends() {
        let g = equilibrium_positions::<f64>(20).unwrap();
        let d = g.spacings();
        // bonds 1..=9 shrink towards the centre, 10..=19 grow outwards
        for j in 2..10 {
            assert!(d[j] < d[j - 1], "bond {j}");
        }
        for j in 11..20 {
            assert!(d[j] > d[j - 1], "bond {j}");
        }
        assert_eq!(g.center_bond(), Some((9, 10)));
    }

    #[test]
    fn odd_chain_centre_bond_is_next_to_middle_ion() {
        let g = equilibrium_positions::<f64>(5).unwrap();
        let (a, b) = g.center_bond().unwrap();
        assert_eq!(b - a, 1);
        assert!(a == 1 || a == 2);
    }

    #[test]
    fn f32_chain_converges_to_looser_tolerance() {
        let g = equilibrium_positions::<f32>(3).unwrap();
        assert!((g.positions[2] - 1.25f32.cbrt()).abs() < 1e-5);
    }

    #[test]
    fn zero_sites_is_an_error() {
        assert!(equilibrium_positions::<f64>(0).is_err());
    }
}
