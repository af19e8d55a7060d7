//! Benchmark fixtures shared by the criterion targets.

use std::f64::consts::TAU;

use recoilslit::dynamics::{EmissionPattern, ScatteringParams};
use recoilslit::physics::{PhysicalConstants, TrapModel};

/// Default anchor trap at 10.49 mK.
pub fn anchor_trap() -> TrapModel {
    TrapModel::default_anchor(&PhysicalConstants::default()).expect("default anchor is valid")
}

/// Scattering at 6.7 MHz with the default anti-trap and dipole emission.
pub fn default_scattering() -> ScatteringParams {
    let c = PhysicalConstants::default();
    ScatteringParams {
        rate: 6.7e6,
        saturation: 0.1,
        excited_lifetime: c.excited_lifetime(),
        antitrap_factor: -1.0,
        emission_pattern: EmissionPattern::Dipole,
        recoil_momentum: c.recoil_momentum(),
        axial_projection: 1.0,
    }
}

pub const SIDEBAND_OMEGA: f64 = TAU * 38.7e3;
