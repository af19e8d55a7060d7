//! Two-path recoil state and closed-form interference visibility.
//!
//! A photon scattered into path ±ħk leaves the atom in |ψ(p ∓ ħk)⟩. The fringe
//! visibility is the overlap of the two displaced momentum wavefunctions,
//! V = exp(−2η²) with η = ħk/2Δp. Thermal occupation broadens the position
//! spread by (2n̄+1), which enters through η_eff = η√(2n̄+1).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::constants::PhysicalConstants;
use super::state::MotionalState;
use crate::error::{domain, ensure_finite, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoilState {
    /// ħk, kg·m/s.
    pub photon_momentum: f64,
    /// Fraction of ħk transferred along the interferometer axis per path.
    pub axial_projection: f64,
    pub eta: f64,
    pub eta_eff: f64,
    /// Relative phase between the two deflected paths, rad.
    pub phi: f64,
}

impl RecoilState {
    pub fn new(
        consts: &PhysicalConstants,
        state: &MotionalState,
        axial_projection: f64,
        phi: f64,
    ) -> Result<Self> {
        state.validate()?;
        ensure_finite(&[("phi", phi)])?;
        let photon_momentum = consts.recoil_momentum();
        let eta = eta(state.delta_p0(), axial_projection, photon_momentum)?;
        let eta_eff = eta_eff(eta, state.nbar)?;
        Ok(Self { photon_momentum, axial_projection, eta, eta_eff, phi })
    }

    /// Momentum separation of the two paths, 2·projection·ħk.
    pub fn path_separation(&self) -> f64 {
        2.0 * self.axial_projection * self.photon_momentum
    }

    pub fn visibility(&self) -> f64 {
        visibility(self.eta_eff)
    }

    /// Expected single-photon detection probabilities at the two output
    /// ports for an extra interferometer phase `theta`.
    pub fn port_probabilities(&self, theta: f64) -> (f64, f64) {
        let c = self.visibility() * (theta + self.phi).cos();
        ((1.0 + c) / 2.0, (1.0 - c) / 2.0)
    }
}

/// η = projection·ħk / (2Δp).
pub fn eta(delta_p: f64, axial_projection: f64, photon_momentum: f64) -> Result<f64> {
    if !(delta_p.is_finite() && delta_p > 0.0) {
        return domain(format!("momentum spread must be > 0, got {delta_p}"));
    }
    if !(axial_projection > 0.0 && axial_projection <= 1.0) {
        return domain(format!("axial projection must be in (0, 1], got {axial_projection}"));
    }
    if !(photon_momentum.is_finite() && photon_momentum > 0.0) {
        return domain(format!("photon momentum must be > 0, got {photon_momentum}"));
    }
    Ok(axial_projection * photon_momentum / (2.0 * delta_p))
}

/// η_eff = η√(2n̄+1).
pub fn eta_eff(eta: f64, nbar: f64) -> Result<f64> {
    if !(eta.is_finite() && eta >= 0.0) {
        return domain(format!("eta must be >= 0, got {eta}"));
    }
    if !(nbar.is_finite() && nbar >= 0.0) {
        return domain(format!("mean phonon number must be >= 0, got {nbar}"));
    }
    Ok(eta * (2.0 * nbar + 1.0).sqrt())
}

/// V = exp(−2η_eff²).
pub fn visibility(eta_eff: f64) -> f64 {
    (-2.0 * eta_eff * eta_eff).exp()
}

/// Overlap ⟨ψ(p − δ/2)|ψ(p + δ/2)⟩ of the state with itself displaced by δ in
/// momentum, i.e. the characteristic function Tr[ρ e^{iδx/ħ}].
///
/// For the centered Gaussian states handled here the amplitude is real:
/// exp(−δ²Δx₀²(2n̄+1)/(2ħ²)). At δ = 2ħk and n̄ = 0 this is exp(−2η²).
pub fn momentum_overlap(state: &MotionalState, delta: f64) -> Result<Complex64> {
    state.validate()?;
    ensure_finite(&[("delta", delta)])?;
    let dx0 = state.delta_x0();
    let arg = delta * dx0 / state.hbar;
    let magnitude = (-0.5 * arg * arg * state.variance_scale()).exp();
    Ok(Complex64::new(magnitude, 0.0))
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    #[test]
    fn eta_examples() {
        let hk = 1.0;
        assert_relative_eq!(eta(0.5, 1.0, hk).unwrap(), 1.0);
        assert_relative_eq!(eta(1.60, 1.0, hk).unwrap(), 0.3125, max_relative = 1e-15);
        assert_relative_eq!(eta(0.78, 1.0, hk).unwrap(), 0.641, max_relative = 1e-3);
        assert!(eta(0.0, 1.0, hk).is_err());
        assert!(eta(1.0, 0.0, hk).is_err());
        assert!(eta(1.0, 1.5, hk).is_err());
    }

    #[test]
    fn eta_eff_examples() {
        assert_eq!(eta_eff(0.3125, 0.0).unwrap(), 0.3125);
        assert_relative_eq!(eta_eff(0.3125, 0.37).unwrap(), 0.4122, max_relative = 1e-4);
        assert_relative_eq!(eta_eff(0.3, 1.5).unwrap(), 0.6, max_relative = 1e-15);
        assert!(eta_eff(0.3, -0.1).is_err());
    }

    #[test]
    fn visibility_examples() {
        assert_eq!(visibility(0.0), 1.0);
        assert_relative_eq!(visibility(0.3125), 0.8226, max_relative = 1e-4);
        assert_relative_eq!(visibility(0.641), 0.4397, max_relative = 1e-3);
    }

    #[test]
    fn overlap_at_zero_is_one() {
        let c = PhysicalConstants::default();
        let s = MotionalState::ground(2.4e5, &c).unwrap();
        assert_eq!(momentum_overlap(&s, 0.0).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn overlap_matches_eta_form() {
        let c = PhysicalConstants::default();
        for nbar in [0.0, 0.08, 0.37, 2.0] {
            let s = MotionalState::new(2.4e5, nbar, &c).unwrap();
            let r = RecoilState::new(&c, &s, 1.0, 0.0).unwrap();
            let amp = momentum_overlap(&s, r.path_separation()).unwrap();
            assert_relative_eq!(amp.re, r.visibility(), max_relative = 1e-13);
        }
    }

    #[test]
    fn port_probabilities_sum_to_one() {
        let c = PhysicalConstants::default();
        let s = MotionalState::ground(2.4e5, &c).unwrap();
        let r = RecoilState::new(&c, &s, 1.0, 0.3).unwrap();
        let (a, b) = r.port_probabilities(-0.3);
        assert_relative_eq!(a + b, 1.0);
        assert_relative_eq!(a - b, r.visibility(), max_relative = 1e-14);
    }
}
