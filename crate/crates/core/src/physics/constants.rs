//! Physical constants for a ⁸⁷Rb atom scattering on the D2 cycling transition.
//!
//! Fundamental constants are CODATA 2018 (exact by the 2019 SI where noted).
//! The atomic values come from the standard ⁸⁷Rb D-line reference tables.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Reduced Planck constant ħ in J·s (exact).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant k_B in J/K (exact).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Atomic mass of ⁸⁷Rb in kg.
pub const MASS_RB87: f64 = 1.443_160_60e-25;
/// Vacuum wavelength of the ⁸⁷Rb D2 line in m.
pub const LAMBDA_D2: f64 = 780.241e-9;
/// Natural linewidth Γ of the D2 line in rad/s (2π × 6.07 MHz).
pub const GAMMA_D2: f64 = TAU * 6.07e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub kb: f64,
    pub mass: f64,
    pub lambda_photon: f64,
    pub gamma: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: HBAR,
            kb: BOLTZMANN,
            mass: MASS_RB87,
            lambda_photon: LAMBDA_D2,
            gamma: GAMMA_D2,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("hbar", self.hbar),
            ("kb", self.kb),
            ("mass", self.mass),
            ("lambda_photon", self.lambda_photon),
            ("gamma", self.gamma),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return domain(format!("constant {name} must be finite and > 0, got {v}"));
            }
        }
        Ok(())
    }

    /// Photon wavenumber k = 2π/λ in 1/m.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.lambda_photon
    }

    /// Single-photon recoil momentum ħk in kg·m/s.
    pub fn recoil_momentum(&self) -> f64 {
        self.hbar * self.wavenumber()
    }

    /// Recoil energy (ħk)²/2m in J.
    pub fn recoil_energy(&self) -> f64 {
        let hk = self.recoil_momentum();
        hk * hk / (2.0 * self.mass)
    }

    /// Excited-state lifetime 1/Γ in s.
    pub fn excited_lifetime(&self) -> f64 {
        1.0 / self.gamma
    }

    /// Converts a temperature-equivalent energy in mK to joules.
    pub fn mk_to_joule(&self, mk: f64) -> f64 {
        mk * 1e-3 * self.kb
    }
}
