//! Exact diagonalization of small truncated chains.
//!
//! The Hamiltonian conserves `C`, so each charge sector is diagonalized
//! separately; sectors whose Gershgorin bound lies above the best energies
//! found so far are skipped.

pub mod basis;
pub mod cartesian;
pub mod hamiltonian;
pub mod lanczos;

use std::io::{self, Read, Write};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::coupling::CouplingMatrix;
use crate::error::{CjtError, Result};
use crate::model::ModelParams;
use crate::scalar::Real;
use basis::{ProductBasis, Sectors, Truncation};
use hamiltonian::{build_hamiltonian, EdHamiltonian};
use lanczos::{lowest_eigenpairs, LanczosOptions};

/// Largest Hilbert space the oracle will build.
pub const DEFAULT_DIM_CAP: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdConfig {
    pub max_sites: usize,
    /// Boson cutoff `n_b`.
    pub cutoff: usize,
    pub truncation: Truncation,
    /// Number of lowest states to report (ground state included).
    pub n_states: usize,
    pub dim_cap: usize,
    /// Largest acceptable probability of a saturated site.
    pub truncation_threshold: f64,
    pub check_commutator: bool,
    pub lanczos: LanczosOptions,
}

impl Default for EdConfig {
    fn default() -> Self {
        EdConfig {
            max_sites: 3,
            cutoff: 6,
            truncation: Truncation::PerSpecies,
            n_states: 1,
            dim_cap: DEFAULT_DIM_CAP,
            truncation_threshold: 1e-6,
            check_commutator: true,
            lanczos: LanczosOptions::default(),
        }
    }
}

impl EdConfig {
    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        EdConfig { cutoff, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdResult<T> {
    pub ground_energy: T,
    /// Next `n_states - 1` levels across all sectors.
    pub excited_energies: Vec<T>,
    /// `sum_{eps,j,k} <a+_{eps,j} a_{eps,k}> / N^2`
    pub order_parameter: T,
    pub total_phonons: T,
    pub sigma_z: Vec<T>,
    pub charge: T,
    /// Frobenius norm of `[H, C]`; `None` when the check is disabled.
    pub commutator_norm: Option<T>,
    /// Probability that some site sits on the cutoff shell.
    pub truncation_weight: T,
    /// `truncation_weight` exceeded the configured threshold.
    pub cutoff_limited: bool,
    /// A second level lies within `1e-8` of the ground energy.
    pub degenerate: bool,
    pub residual: T,
    pub dim: usize,
    pub sector_dim: usize,
    pub matvecs: usize,
}

/// Ground-state data plus the eigenvector in the full product basis.
#[derive(Debug, Clone)]
pub struct GroundState<T: Real> {
    pub result: EdResult<T>,
    pub vector: Vec<T>,
    pub basis: ProductBasis,
}

/// Builds and solves in one step.
pub fn exact_ground_state<T: Real>(
    params: &ModelParams,
    coupling: &CouplingMatrix<T>,
    cfg: &EdConfig,
) -> Result<GroundState<T>> {
    if params.n_sites > cfg.max_sites {
        return Err(CjtError::invalid(
            "n_sites",
            format!("exact diagonalization is capped at {} sites", cfg.max_sites),
        ));
    }
    let h = build_hamiltonian(params, coupling, cfg.cutoff, cfg.truncation, cfg.dim_cap)?;
    ground_state(&h, cfg)
}

struct Level<T> {
    energy: T,
    sector: usize,
    vector: Vec<T>,
    residual: T,
}

pub fn ground_state<T: Real>(h: &EdHamiltonian<T>, cfg: &EdConfig) -> Result<GroundState<T>> {
    let n = h.n_sites();
    let sectors = Sectors::new(&h.basis);
    let vacuum = -(n as i64);
    let mut order: Vec<usize> = (0..sectors.sectors.len()).collect();
    order.sort_by_key(|&s| {
        let q = sectors.sectors[s].0;
        ((q - vacuum).abs(), q)
    });

    let want = cfg.n_states.max(2);
    let mut levels: Vec<Level<T>> = Vec::new();
    let mut matvecs = 0;
    let margin = T::lit(1e-9);
    for s in order {
        let m = h.sector_matrix(&sectors, s);
        if levels.len() >= want && m.gershgorin_lower() > levels[want - 1].energy + margin {
            continue;
        }
        let dim_s = sectors.sectors[s].1.len();
        let pairs = lowest_eigenpairs(&m, want.min(dim_s), &cfg.lanczos)?;
        matvecs += pairs.iterations;
        for ((e, v), r) in pairs
            .values
            .into_iter()
            .zip(pairs.vectors)
            .zip(pairs.residuals)
        {
            levels.push(Level {
                energy: e,
                sector: s,
                vector: v,
                residual: r,
            });
        }
        levels.sort_by(|a, b| {
            a.energy
                .partial_cmp(&b.energy)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.sector.cmp(&b.sector))
        });
        levels.truncate(want);
    }

    let ground = &levels[0];
    let members = &sectors.sectors[ground.sector].1;
    let mut psi = vec![T::zero(); h.dim()];
    for (p, &i) in members.iter().enumerate() {
        psi[i] = ground.vector[p];
    }
    let mut obs = observables(&h.basis, &psi);
    obs.ground_energy = ground.energy;
    obs.residual = ground.residual;
    obs.excited_energies = levels
        .iter()
        .skip(1)
        .take(cfg.n_states.saturating_sub(1))
        .map(|l| l.energy)
        .collect();
    obs.degenerate = levels.len() > 1
        && levels[1].energy - ground.energy < T::lit(1e-8) * ground.energy.abs().max(T::one());
    obs.cutoff_limited = obs.truncation_weight.as_f64() > cfg.truncation_threshold;
    obs.commutator_norm = cfg.check_commutator.then(|| h.commutator_norm());
    obs.dim = h.dim();
    obs.sector_dim = members.len();
    obs.matvecs = matvecs;
    Ok(GroundState {
        result: obs,
        vector: psi,
        basis: h.basis.clone(),
    })
}

/// Expectation values in a normalized real state on the full basis.
pub fn observables<T: Real>(basis: &ProductBasis, psi: &[T]) -> EdResult<T> {
    let n = basis.n_sites();
    let cutoff = basis.cutoff();
    let mut locals = vec![0usize; n];
    let mut sigma_z = vec![T::zero(); n];
    let mut phonons = T::zero();
    let mut charge = T::zero();
    let mut edge = T::zero();
    // (sum_k a_{eps,k}) psi for both species
    let mut lowered = [vec![T::zero(); psi.len()], vec![T::zero(); psi.len()]];

    for (i, &amp) in psi.iter().enumerate() {
        if amp == T::zero() {
            continue;
        }
        let w = amp * amp;
        basis.decode(i, &mut locals);
        let mut saturated = false;
        for (j, &k) in locals.iter().enumerate() {
            let s = basis.local(k);
            sigma_z[j] += if s.up { w } else { -w };
            phonons += w * T::count((s.n_r + s.n_l) as usize);
            saturated |= match basis.truncation() {
                Truncation::PerSpecies => s.n_r as usize == cutoff || s.n_l as usize == cutoff,
                Truncation::Total => (s.n_r + s.n_l) as usize == cutoff,
            };
            let (r, l) = (s.n_r as usize, s.n_l as usize);
            if r > 0 {
                let to = basis
                    .local_index(s.up, r - 1, l)
                    .expect("lowering stays inside");
                let t = i - k * basis.stride(j) + to * basis.stride(j);
                lowered[0][t] += amp * T::count(r).sqrt();
            }
            if l > 0 {
                let to = basis
                    .local_index(s.up, r, l - 1)
                    .expect("lowering stays inside");
                let t = i - k * basis.stride(j) + to * basis.stride(j);
                lowered[1][t] += amp * T::count(l).sqrt();
            }
        }
        charge += w * T::lit(basis.twice_charge(i) as f64 * 0.5);
        if saturated {
            edge += w;
        }
    }
    let op = lowered
        .iter()
        .map(|v| v.iter().fold(T::zero(), |s, &x| s + x * x))
        .fold(T::zero(), |a, b| a + b)
        / T::count(n * n);

    EdResult {
        ground_energy: T::zero(),
        excited_energies: Vec::new(),
        order_parameter: op,
        total_phonons: phonons,
        sigma_z,
        charge,
        commutator_norm: None,
        truncation_weight: edge,
        cutoff_limited: false,
        degenerate: false,
        residual: T::zero(),
        dim: basis.dim(),
        sector_dim: 0,
        matvecs: 0,
    }
}

/// JSON form of an [`EdResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdRecord {
    pub cutoff: usize,
    pub ground_energy: f64,
    pub excited_energies: Vec<f64>,
    pub order_parameter: f64,
    pub total_phonons: f64,
    pub sigma_z: Vec<f64>,
    pub charge: f64,
    pub commutator_norm: Option<f64>,
    pub truncation_weight: f64,
    pub cutoff_limited: bool,
    pub degenerate: bool,
    pub residual: f64,
    pub dim: usize,
    pub sector_dim: usize,
}

impl<T: Real> EdResult<T> {
    pub fn record(&self, cutoff: usize) -> EdRecord {
        let f = |v: &[T]| v.iter().map(|x| x.as_f64()).collect();
        EdRecord {
            cutoff,
            ground_energy: self.ground_energy.as_f64(),
            excited_energies: f(&self.excited_energies),
            order_parameter: self.order_parameter.as_f64(),
            total_phonons: self.total_phonons.as_f64(),
            sigma_z: f(&self.sigma_z),
            charge: self.charge.as_f64(),
            commutator_norm: self.commutator_norm.map(|c| c.as_f64()),
            truncation_weight: self.truncation_weight.as_f64(),
            cutoff_limited: self.cutoff_limited,
            degenerate: self.degenerate,
            residual: self.residual.as_f64(),
            dim: self.dim,
            sector_dim: self.sector_dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub points: Vec<EdRecord>,
    /// Smallest cutoff whose energy and O.P. agree with the next one.
    pub converged_at: Option<usize>,
    pub tolerance: f64,
    /// First cutoff that could not be built under the dimension cap.
    pub capped_at: Option<usize>,
}

pub const SCAN_TOLERANCE: f64 = 1e-6;

/// Ground energy and O.P. against ascending cutoffs.
pub fn convergence_scan<T: Real>(
    params: &ModelParams,
    coupling: &CouplingMatrix<T>,
    cfg: &EdConfig,
    cutoffs: &[usize],
) -> Result<ConvergenceReport> {
    if cutoffs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CjtError::invalid("cutoffs", "must be strictly ascending"));
    }
    let mut points = Vec::new();
    let mut capped_at = None;
    let mut converged_at = None;
    for &c in cutoffs {
        let gs = match exact_ground_state(params, coupling, &cfg.with_cutoff(c)) {
            Ok(gs) => gs,
            Err(CjtError::DimensionOverflow { .. }) => {
                capped_at = Some(c);
                break;
            }
            Err(e) => return Err(e),
        };
        points.push(gs.result.record(c));
        if let [.., a, b] = points.as_slice() {
            if (a.ground_energy - b.ground_energy).abs() < SCAN_TOLERANCE
                && (a.order_parameter - b.order_parameter).abs() < SCAN_TOLERANCE
            {
                converged_at = Some(a.cutoff);
                break;
            }
        }
    }
    Ok(ConvergenceReport {
        points,
        converged_at,
        tolerance: SCAN_TOLERANCE,
        capped_at,
    })
}

const MAGIC: &[u8; 4] = b"CJTV";
const VERSION: u32 = 1;

/// Header of a dumped eigenvector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VectorHeader {
    pub n_sites: u32,
    pub cutoff: u32,
    pub truncation: Truncation,
    pub local_dim: u32,
    pub dim: u64,
}

/// Writes `psi` as: `b"CJTV"`, then little-endian `u32` version, `n_sites`,
/// `cutoff`, truncation (0 per species, 1 total), `local_dim`, `u64` dim,
/// followed by `dim` pairs of `f64` (re, im) in basis order.
pub fn write_eigenvector<T: Real, W: Write>(
    mut w: W,
    basis: &ProductBasis,
    psi: &[T],
) -> io::Result<()> {
    assert_eq!(psi.len(), basis.dim());
    w.write_all(MAGIC)?;
    for x in [
        VERSION,
        basis.n_sites() as u32,
        basis.cutoff() as u32,
        match basis.truncation() {
            Truncation::PerSpecies => 0,
            Truncation::Total => 1,
        },
        basis.local_dim() as u32,
    ] {
        w.write_all(&x.to_le_bytes())?;
    }
    w.write_all(&(basis.dim() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * psi.len());
    for &x in psi {
        buf.extend_from_slice(&x.as_f64().to_le_bytes());
        buf.extend_from_slice(&0f64.to_le_bytes());
    }
    w.write_all(&buf)
}

pub fn read_eigenvector<R: Read>(mut r: R) -> io::Result<(VectorHeader, Vec<Complex<f64>>)> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("not an eigenvector dump"));
    }
    let mut word = [0u8; 4];
    let mut next = |r: &mut R| -> io::Result<u32> {
        r.read_exact(&mut word)?;
        Ok(u32::from_le_bytes(word))
    };
    if next(&mut r)? != VERSION {
        return Err(bad("unsupported version"));
    }
    let n_sites = next(&mut r)?;
    let cutoff = next(&mut r)?;
    let truncation = match next(&mut r)? {
        0 => Truncation::PerSpecies,
        1 => Truncation::Total,
        _ => return Err(bad("unknown truncation")),
    };
    let local_dim = next(&mut r)?;
    let mut long = [0u8; 8];
    r.read_exact(&mut long)?;
    let dim = u64::from_le_bytes(long);
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() as u64 != 16 * dim {
        return Err(bad("payload length does not match header"));
    }
    let values = payload
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex::new(re, im)
        })
        .collect();
    Ok((
        VectorHeader {
            n_sites,
            cutoff,
            truncation,
            local_dim,
            dim,
        },
        values,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::build_couplings;
    use crate::model::{Boundary, CouplingScheme};

    fn params(n: usize, g: f64) -> ModelParams {
        ModelParams {
            n_sites: n,
            omega_z: 1.0,
            delta_bare: 2.0,
            g,
            coupling_scheme: CouplingScheme::ShortRange { t: 0.2 },
            boundary: Boundary::Open,
            staggered: false,
            include_local_shift: false,
        }
    }

    fn solve(n: usize, g: f64, cutoff: usize) -> GroundState<f64> {
        let p = params(n, g);
        let c = build_couplings(&p).unwrap();
        exact_ground_state(&p, &c, &EdConfig::default().with_cutoff(cutoff)).unwrap()
    }

    #[test]
    fn decoupled_vacuum() {
        let gs = solve(2, 0.0, 2);
        let r = &gs.result;
        assert!((r.ground_energy + 1.0).abs() < 1e-12);
        assert_eq!(r.order_parameter, 0.0);
        assert!((r.charge + 1.0).abs() < 1e-12);
        assert_eq!(r.truncation_weight, 0.0);
    }

    #[test]
    fn single_site_matches_sector_algebra() {
        // at n_b = 1 the vacuum sector C = -1/2 is {|d,0,0>, |d,1,1>, |u,0,1>}
        let g = 0.3;
        let block =
            nalgebra::DMatrix::from_row_slice(3, 3, &[-0.5, 0.0, g, 0.0, 3.5, g, g, g, 2.5]);
        let want = block.symmetric_eigenvalues().min();
        let gs = solve(1, g, 1);
        assert!((gs.result.ground_energy - want).abs() < 1e-12);
        assert!(gs.result.commutator_norm.unwrap() < 1e-12);
        assert!((gs.result.charge + 0.5).abs() < 1e-12);
    }

    #[test]
    fn dump_round_trip() {
        let gs = solve(2, 0.4, 2);
        let mut bytes = Vec::new();
        write_eigenvector(&mut bytes, &gs.basis, &gs.vector).unwrap();
        let (hdr, v) = read_eigenvector(bytes.as_slice()).unwrap();
        assert_eq!(hdr.dim as usize, gs.basis.dim());
        assert_eq!(hdr.local_dim, 18);
        for (a, b) in v.iter().zip(&gs.vector) {
            assert_eq!(a.re, *b);
            assert_eq!(a.im, 0.0);
        }
    }

    #[test]
    fn scan_converges_immediately_at_zero_coupling() {
        let p = params(2, 0.0);
        let c = build_couplings(&p).unwrap();
        let rep = convergence_scan::<f64>(&p, &c, &EdConfig::default(), &[0, 1, 2]).unwrap();
        assert_eq!(rep.converged_at, Some(0));
    }

    #[test]
    fn too_many_sites_rejected() {
        let p = params(4, 0.1);
        let c = build_couplings(&p).unwrap();
        assert!(exact_ground_state::<f64>(&p, &c, &EdConfig::default()).is_err());
    }
}
