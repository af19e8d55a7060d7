use serde::{Deserialize, Serialize};

use super::constants::PhysicalConstants;
use crate::error::{domain, Result};

/// Gaussian (thermal) state of a 1D harmonic oscillator.
///
/// The Wigner function is a centered Gaussian with variances scaled by
/// (2n̄+1) relative to the ground state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionalState {
    pub omega: f64,
    pub nbar: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl MotionalState {
    pub fn new(omega: f64, nbar: f64, consts: &PhysicalConstants) -> Result<Self> {
        consts.validate()?;
        let state = Self { omega, nbar, mass: consts.mass, hbar: consts.hbar };
        state.validate()?;
        Ok(state)
    }

    pub fn ground(omega: f64, consts: &PhysicalConstants) -> Result<Self> {
        Self::new(omega, 0.0, consts)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return domain(format!("trap frequency must be > 0, got {}", self.omega));
        }
        if !(self.nbar.is_finite() && self.nbar >= 0.0) {
            return domain(format!("mean phonon number must be >= 0, got {}", self.nbar));
        }
        if !(self.mass > 0.0 && self.hbar > 0.0) {
            return domain("mass and hbar must be > 0");
        }
        Ok(())
    }

    pub fn with_nbar(&self, nbar: f64) -> Result<Self> {
        let s = Self { nbar, ..*self };
        s.validate()?;
        Ok(s)
    }

    /// Position spread of the ground state, √(ħ/2mω).
    pub fn delta_x0(&self) -> f64 {
        (self.hbar / (2.0 * self.mass * self.omega)).sqrt()
    }

    /// Momentum spread of the ground state, √(ħmω/2).
    pub fn delta_p0(&self) -> f64 {
        (self.hbar * self.mass * self.omega / 2.0).sqrt()
    }

    pub fn variance_scale(&self) -> f64 {
        2.0 * self.nbar + 1.0
    }

    pub fn delta_x(&self) -> f64 {
        self.delta_x0() * self.variance_scale().sqrt()
    }

    pub fn delta_p(&self) -> f64 {
        self.delta_p0() * self.variance_scale().sqrt()
    }

    /// Mean energy ħω(n̄ + ½).
    pub fn energy(&self) -> f64 {
        self.hbar * self.omega * (self.nbar + 0.5)
    }
}

/// Position and momentum spreads (Δx, Δp) of a thermal oscillator state.
pub fn ground_state_sigmas(omega: f64, mass: f64, nbar: f64, hbar: f64) -> Result<(f64, f64)> {
    if !(mass.is_finite() && mass > 0.0 && hbar.is_finite() && hbar > 0.0) {
        return domain("mass and hbar must be finite and > 0");
    }
    let s = MotionalState { omega, nbar, mass, hbar };
    s.validate()?;
    Ok((s.delta_x(), s.delta_p()))
}
