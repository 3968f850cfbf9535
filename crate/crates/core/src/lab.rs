//! Trapped-ion lab parameters and their reduction to the dimensionless model.
//!
//! A magnetic quadrupole oscillating near the qubit splitting couples the
//! internal state to the two radial modes of each ion. Two drive tones at
//! `nu_b` and `nu_r` fix the frame:
//!
//! ```text
//! nu_{b,r} = omega_0 - omega_z +/- (omega_t - Delta)
//! ```
//!
//! so `omega_z = omega_0 - (nu_b + nu_r)/2` and `Delta = omega_t - (nu_b - nu_r)/2`.
//! The spin-phonon coupling is `g = mu b rbar / (sqrt 2 hbar)` with
//! `rbar = sqrt(hbar / (2 m omega_t))`, and radial phonons hop between ions a
//! distance `d` apart with `t = e^2 / (4 pi eps_0) / (2 m omega_t d^3)`.
//! All frequencies are angular (rad/s).

use serde::{Deserialize, Serialize};

use crate::error::{CjtError, Result};
use crate::model::{Boundary, CoulombScale, CouplingScheme, ModelParams};

/// CODATA 2018 values.
pub mod constants {
    pub const HBAR: f64 = 1.054_571_817e-34;
    pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
    pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
    pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
    pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
    /// Mass of a 40Ca atom in atomic mass units.
    pub const CA40_MASS_U: f64 = 39.962_590_863;
    /// Electron-like Lande factor of the 40Ca+ S_1/2 ground state.
    pub const CA40_G_FACTOR: f64 = 2.002_256_64;
    pub const TWO_PI: f64 = std::f64::consts::TAU;
}

use constants::*;

/// How the axial Coulomb length scale is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxialScale {
    /// Distance between the two central ions, in metres.
    CenterSpacing(f64),
    /// Axial trap frequency in rad/s.
    AxialFrequency(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabParams {
    pub n_ions: usize,
    /// kg
    pub ion_mass: f64,
    /// C
    pub charge: f64,
    /// Radial trap frequency `omega_t`.
    pub trap_radial_freq: f64,
    /// Qubit splitting `omega_0`.
    pub internal_splitting: f64,
    /// Magnetic field gradient `b`, T/m.
    pub gradient: f64,
    /// Magnetic moment `mu`, J/T.
    pub magnetic_moment: f64,
    pub drive_blue: f64,
    pub drive_red: f64,
    pub axial: AxialScale,
    #[serde(default = "yes")]
    pub staggered: bool,
    #[serde(default = "yes")]
    pub include_local_shift: bool,
    /// Largest `g/omega_t` or `t/omega_t` accepted without a warning.
    #[serde(default = "default_rwa_threshold")]
    pub rwa_threshold: f64,
}

fn yes() -> bool {
    true
}

fn default_rwa_threshold() -> f64 {
    0.1
}

impl LabParams {
    /// 40Ca+ chain of the reference proposal: `omega_t = 2 pi 1 MHz`,
    /// `omega_0 = 2 pi 20 MHz`, drives set for `omega_z = 2 pi 20 kHz` and
    /// `Delta = 2.2 omega_z`, centre spacing 16 um, gradient 35 T/m.
    pub fn ca40(n_ions: usize) -> Self {
        let omega_t = TWO_PI * 1e6;
        let omega_0 = TWO_PI * 20e6;
        let omega_z = TWO_PI * 20e3;
        let delta = 2.2 * omega_z;
        let (drive_blue, drive_red) = drive_frequencies(omega_0, omega_t, omega_z, delta);
        LabParams {
            n_ions,
            ion_mass: CA40_MASS_U * ATOMIC_MASS_UNIT,
            charge: ELEMENTARY_CHARGE,
            trap_radial_freq: omega_t,
            internal_splitting: omega_0,
            gradient: 35.0,
            magnetic_moment: BOHR_MAGNETON * CA40_G_FACTOR / 2.0,
            drive_blue,
            drive_red,
            axial: AxialScale::CenterSpacing(16e-6),
            staggered: true,
            include_local_shift: true,
            rwa_threshold: default_rwa_threshold(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_ions == 0 {
            return Err(CjtError::invalid("lab.n_ions", "must be at least 1"));
        }
        let positive = [
            ("lab.ion_mass", self.ion_mass),
            ("lab.charge", self.charge),
            ("lab.trap_radial_freq", self.trap_radial_freq),
            ("lab.internal_splitting", self.internal_splitting),
            ("lab.magnetic_moment", self.magnetic_moment),
            ("lab.drive_blue", self.drive_blue),
            ("lab.drive_red", self.drive_red),
            ("lab.rwa_threshold", self.rwa_threshold),
            (
                "lab.axial",
                match self.axial {
                    AxialScale::CenterSpacing(x) | AxialScale::AxialFrequency(x) => x,
                },
            ),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(CjtError::invalid(field, "must be finite and positive"));
            }
        }
        if !(self.gradient.is_finite() && self.gradient >= 0.0) {
            return Err(CjtError::invalid(
                "lab.gradient",
                "must be finite and non-negative",
            ));
        }
        Ok(())
    }
}

/// Blue and red drive frequencies realising `omega_z` and `Delta`.
pub fn drive_frequencies(omega_0: f64, omega_t: f64, omega_z: f64, delta: f64) -> (f64, f64) {
    let carrier = omega_0 - omega_z;
    let side = omega_t - delta;
    (carrier + side, carrier - side)
}

/// Dimensionless model plus the physical scales it was derived from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabConversion {
    pub model: ModelParams,
    /// rad/s
    pub omega_z: f64,
    pub delta: f64,
    pub g: f64,
    /// Hop at one length unit (axial frequency) or on the centre bond (spacing).
    pub hop: f64,
    /// Zero-point radial extent `rbar`, m.
    pub r_bar: f64,
    pub rwa_ratio_g: f64,
    pub rwa_ratio_t: f64,
    pub warnings: Vec<String>,
}

/// Coulomb hop `e^2/(4 pi eps_0) / (2 m omega_t d^3)` in rad/s.
pub fn coulomb_hop(charge: f64, mass: f64, omega_t: f64, distance: f64) -> f64 {
    let k = charge * charge / (4.0 * std::f64::consts::PI * EPSILON_0);
    k / (2.0 * mass * omega_t * distance.powi(3))
}

/// Axial length unit `(e^2 / (4 pi eps_0 m omega_ax^2))^(1/3)`.
pub fn axial_length_unit(charge: f64, mass: f64, omega_ax: f64) -> f64 {
    let k = charge * charge / (4.0 * std::f64::consts::PI * EPSILON_0);
    (k / (mass * omega_ax * omega_ax)).cbrt()
}

pub fn from_lab_params(lab: &LabParams) -> Result<LabConversion> {
    lab.validate()?;
    let omega_z = lab.internal_splitting - 0.5 * (lab.drive_blue + lab.drive_red);
    let delta = lab.trap_radial_freq - 0.5 * (lab.drive_blue - lab.drive_red);
    if !(omega_z > 0.0) {
        return Err(CjtError::InconsistentDrive(format!(
            "drives imply omega_z = {omega_z:.6e} rad/s; need nu_b + nu_r < 2 omega_0"
        )));
    }
    if !(delta > 0.0) {
        return Err(CjtError::InconsistentDrive(format!(
            "drives imply Delta = {delta:.6e} rad/s; need nu_b - nu_r < 2 omega_t"
        )));
    }
    let r_bar = (HBAR / (2.0 * lab.ion_mass * lab.trap_radial_freq)).sqrt();
    let g = lab.magnetic_moment * lab.gradient * r_bar / (HBAR * 2f64.sqrt());
    let (hop, scale) = match lab.axial {
        AxialScale::CenterSpacing(d) => {
            let t = coulomb_hop(lab.charge, lab.ion_mass, lab.trap_radial_freq, d);
            (t, CoulombScale::CenterHop(t / omega_z))
        }
        AxialScale::AxialFrequency(w) => {
            let l = axial_length_unit(lab.charge, lab.ion_mass, w);
            let t = coulomb_hop(lab.charge, lab.ion_mass, lab.trap_radial_freq, l);
            (t, CoulombScale::UnitHop(t / omega_z))
        }
    };
    let scale = if lab.n_ions == 1 {
        // no bonds: the scale is irrelevant and a centre hop is undefined
        CoulombScale::UnitHop(0.0)
    } else {
        scale
    };
    let rwa_ratio_g = g / lab.trap_radial_freq;
    let rwa_ratio_t = hop / lab.trap_radial_freq;
    let mut warnings = Vec::new();
    for (name, r) in [("g/omega_t", rwa_ratio_g), ("t/omega_t", rwa_ratio_t)] {
        if r > lab.rwa_threshold {
            warnings.push(format!(
                "{name} = {r:.3e} exceeds {:.3e}; rotating-wave approximation is questionable",
                lab.rwa_threshold
            ));
        }
    }
    if g / lab.internal_splitting > lab.rwa_threshold {
        warnings.push(format!(
            "g/omega_0 = {:.3e} exceeds {:.3e}",
            g / lab.internal_splitting,
            lab.rwa_threshold
        ));
    }
    let model = ModelParams {
        n_sites: lab.n_ions,
        omega_z: 1.0,
        delta_bare: delta / omega_z,
        g: g / omega_z,
        coupling_scheme: CouplingScheme::Coulomb { scale },
        boundary: Boundary::Open,
        staggered: lab.staggered,
        include_local_shift: lab.include_local_shift,
    };
    model.validate()?;
    Ok(LabConversion {
        model,
        omega_z,
        delta,
        g,
        hop,
        r_bar,
        rwa_ratio_g,
        rwa_ratio_t,
        warnings,
    })
}
