//! Harmonic model of the tweezer: trap frequencies scale as √U with depth U.
//!
//! The model is pinned to one calibration point (the anchor). Because the
//! ground-state momentum spread goes as √ω, it scales as U^{1/4}.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::constants::PhysicalConstants;
use crate::error::{domain, Result};

/// Default anchor depth in mK.
pub const DEFAULT_ANCHOR_DEPTH_MK: f64 = 10.49;
/// Default ground-state axial momentum spread at the anchor depth, in units of ħk.
pub const DEFAULT_ANCHOR_DP_HBARK: f64 = 1.60;
/// Default radial trap frequency at the anchor depth, in Hz.
pub const DEFAULT_ANCHOR_RADIAL_HZ: f64 = 300e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapModel {
    /// Current depth in mK.
    pub depth: f64,
    pub anchor_depth: f64,
    /// Axial angular frequency at the anchor depth, rad/s.
    pub anchor_axial_freq: f64,
    /// Radial angular frequency at the anchor depth, rad/s.
    pub anchor_radial_freq: f64,
}

impl TrapModel {
    pub fn new(
        depth: f64,
        anchor_depth: f64,
        anchor_axial_freq: f64,
        anchor_radial_freq: f64,
    ) -> Result<Self> {
        let model = Self { depth, anchor_depth, anchor_axial_freq, anchor_radial_freq };
        model.validate()?;
        Ok(model)
    }

    /// Builds the model from a momentum-spread anchor: the ground state at
    /// `anchor_depth` has Δp = `anchor_dp_hbark`·ħk, so ω = 2Δp²/(ħm).
    pub fn from_momentum_anchor(
        consts: &PhysicalConstants,
        anchor_depth: f64,
        anchor_dp_hbark: f64,
        anchor_radial_freq: f64,
    ) -> Result<Self> {
        consts.validate()?;
        if !(anchor_dp_hbark.is_finite() && anchor_dp_hbark > 0.0) {
            return domain(format!("anchor momentum spread must be > 0, got {anchor_dp_hbark}"));
        }
        let dp = anchor_dp_hbark * consts.recoil_momentum();
        let omega = 2.0 * dp * dp / (consts.hbar * consts.mass);
        Self::new(anchor_depth, anchor_depth, omega, anchor_radial_freq)
    }

    /// Default calibration: Δp(10.49 mK) = 1.60 ħk, radial 300 kHz.
    pub fn default_anchor(consts: &PhysicalConstants) -> Result<Self> {
        Self::from_momentum_anchor(
            consts,
            DEFAULT_ANCHOR_DEPTH_MK,
            DEFAULT_ANCHOR_DP_HBARK,
            TAU * DEFAULT_ANCHOR_RADIAL_HZ,
        )
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("depth", self.depth),
            ("anchor_depth", self.anchor_depth),
            ("anchor_axial_freq", self.anchor_axial_freq),
            ("anchor_radial_freq", self.anchor_radial_freq),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return domain(format!("trap {name} must be finite and > 0, got {v}"));
            }
        }
        Ok(())
    }

    /// Same calibration, different depth.
    pub fn with_depth(&self, depth: f64) -> Result<Self> {
        let model = Self { depth, ..*self };
        model.validate()?;
        Ok(model)
    }

    pub fn axial_frequency(&self) -> f64 {
        self.anchor_axial_freq * (self.depth / self.anchor_depth).sqrt()
    }

    pub fn radial_frequency(&self) -> f64 {
        self.anchor_radial_freq * (self.depth / self.anchor_depth).sqrt()
    }
}

/// Axial and radial angular frequencies (rad/s) of `model`'s calibration at `depth` mK.
pub fn trap_frequencies(model: &TrapModel, depth: f64) -> Result<(f64, f64)> {
    if !(depth.is_finite() && depth > 0.0) {
        return domain(format!("trap depth must be > 0 mK, got {depth}"));
    }
    let m = model.with_depth(depth)?;
    Ok((m.axial_frequency(), m.radial_frequency()))
}
