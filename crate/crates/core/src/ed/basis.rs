//! Truncated product basis.
//!
//! Ordering is site-major (site 0 is the most significant digit); within a
//! site the local state is `spin ⊗ Fock_r ⊗ Fock_l`, spin down first. With the
//! per-species cutoff the local index is `spin (n_b+1)^2 + n_r (n_b+1) + n_l`.

use serde::{Deserialize, Serialize};

use crate::error::{CjtError, Result};

/// Boson truncation on each site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// `n_r <= n_b` and `n_l <= n_b`: local dimension `2 (n_b + 1)^2`.
    #[default]
    PerSpecies,
    /// `n_r + n_l <= n_b`. Invariant under rotations between the two species,
    /// so chiral and Cartesian truncated Hamiltonians are unitarily equivalent.
    Total,
}

/// One site: spin and the occupations of the two boson species (`r`, `l` for
/// the chiral construction, `x`, `y` for the Cartesian one).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LocalState {
    pub up: bool,
    pub n_r: u16,
    pub n_l: u16,
}

impl LocalState {
    /// `2 (n_r - n_l) + sigma_z`
    pub fn twice_charge(&self) -> i64 {
        2 * (self.n_r as i64 - self.n_l as i64) + if self.up { 1 } else { -1 }
    }

    /// First species read as a Cartesian `x` boson.
    pub fn n_x(&self) -> usize {
        self.n_r as usize
    }

    pub fn n_y(&self) -> usize {
        self.n_l as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductBasis {
    n_sites: usize,
    cutoff: usize,
    truncation: Truncation,
    states: Vec<LocalState>,
    lookup: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
}

impl ProductBasis {
    pub fn new(n_sites: usize, cutoff: usize, truncation: Truncation, cap: usize) -> Result<Self> {
        if n_sites == 0 {
            return Err(CjtError::invalid("n_sites", "must be at least 1"));
        }
        let mut states = Vec::new();
        for up in [false, true] {
            for n_r in 0..=cutoff {
                for n_l in 0..=cutoff {
                    if truncation == Truncation::Total && n_r + n_l > cutoff {
                        continue;
                    }
                    states.push(LocalState {
                        up,
                        n_r: n_r as u16,
                        n_l: n_l as u16,
                    });
                }
            }
        }
        let d = states.len();
        let dim128 = (d as u128).checked_pow(n_sites as u32).unwrap_or(u128::MAX);
        if dim128 > cap as u128 {
            return Err(CjtError::DimensionOverflow { dim: dim128, cap });
        }
        let side = cutoff + 1;
        let mut lookup = vec![usize::MAX; 2 * side * side];
        for (k, s) in states.iter().enumerate() {
            lookup[Self::slot(side, s.up, s.n_r as usize, s.n_l as usize)] = k;
        }
        let mut strides = vec![1usize; n_sites];
        for j in (0..n_sites.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * d;
        }
        Ok(ProductBasis {
            n_sites,
            cutoff,
            truncation,
            states,
            lookup,
            strides,
            dim: dim128 as usize,
        })
    }

    fn slot(side: usize, up: bool, n_r: usize, n_l: usize) -> usize {
        (usize::from(up) * side + n_r) * side + n_l
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn local_dim(&self) -> usize {
        self.states.len()
    }

    pub fn local_states(&self) -> &[LocalState] {
        &self.states
    }

    pub fn stride(&self, site: usize) -> usize {
        self.strides[site]
    }

    /// Local index of `(up, n_r, n_l)` if it survives the truncation.
    pub fn local_index(&self, up: bool, n_r: usize, n_l: usize) -> Option<usize> {
        if n_r > self.cutoff || n_l > self.cutoff {
            return None;
        }
        let k = self.lookup[Self::slot(self.cutoff + 1, up, n_r, n_l)];
        (k != usize::MAX).then_some(k)
    }

    /// Writes the local indices of `index` into `out`.
    pub fn decode(&self, mut index: usize, out: &mut [usize]) {
        let d = self.local_dim();
        for j in (0..self.n_sites).rev() {
            out[j] = index % d;
            index /= d;
        }
    }

    pub fn encode(&self, locals: &[usize]) -> usize {
        locals.iter().zip(&self.strides).map(|(&l, &s)| l * s).sum()
    }

    pub fn index_of(&self, sites: &[LocalState]) -> usize {
        let locals: Vec<usize> = sites
            .iter()
            .map(|s| {
                self.local_index(s.up, s.n_r as usize, s.n_l as usize)
                    .expect("state outside the truncated basis")
            })
            .collect();
        self.encode(&locals)
    }

    pub fn local(&self, k: usize) -> LocalState {
        self.states[k]
    }

    /// `2 C` for a product state.
    pub fn twice_charge(&self, index: usize) -> i64 {
        let d = self.local_dim();
        let mut rest = index;
        let mut q = 0;
        for _ in 0..self.n_sites {
            q += self.states[rest % d].twice_charge();
            rest /= d;
        }
        q
    }
}

/// States grouped by conserved charge.
#[derive(Debug, Clone)]
pub struct Sectors {
    /// `(2C, member indices)` for every occupied charge, ascending in `C`.
    pub sectors: Vec<(i64, Vec<usize>)>,
    /// Position of each basis state inside its sector.
    pub position: Vec<u32>,
    /// Sector number of each basis state.
    pub sector_of: Vec<u32>,
}

impl Sectors {
    pub fn new(basis: &ProductBasis) -> Self {
        let charges: Vec<i64> = (0..basis.dim()).map(|i| basis.twice_charge(i)).collect();
        let mut values: Vec<i64> = charges.clone();
        values.sort_unstable();
        values.dedup();
        let mut sectors: Vec<(i64, Vec<usize>)> = values.iter().map(|&q| (q, Vec::new())).collect();
        let mut position = vec![0u32; basis.dim()];
        let mut sector_of = vec![0u32; basis.dim()];
        for (i, q) in charges.iter().enumerate() {
            let s = values.binary_search(q).expect("charge present");
            position[i] = sectors[s].1.len() as u32;
            sector_of[i] = s as u32;
            sectors[s].1.push(i);
        }
        Sectors {
            sectors,
            position,
            sector_of,
        }
    }
}
