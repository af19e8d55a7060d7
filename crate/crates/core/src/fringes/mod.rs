//! Interference fringes: synthetic scans, sinusoid fits, phase-lock noise and
//! the combined visibility budget.

mod fringe;
mod lock;

pub use fringe::{
    bootstrap_visibility, dephasing_factor, fit_fringe, fit_unbalance, synthesize_fringe,
    FringeDataset, FringeFit, FringeMeta, FringeSpec, UnbalanceData,
};
pub use lock::{lock_residual_simulation, LockSimulation, PhaseLockModel};

use crate::error::{domain, Result};

/// Expected fringe visibility with thermal occupation and phase noise:
/// V_quantum^(2n̄+1)·exp(−σ²/2), where V_quantum = exp(−2η²) is the
/// ground-state value.
pub fn visibility_budget(v_quantum: f64, nbar: f64, phase_noise_rms: f64) -> Result<f64> {
    if !(v_quantum > 0.0 && v_quantum <= 1.0) {
        return domain(format!("quantum visibility must be in (0, 1], got {v_quantum}"));
    }
    if !(nbar.is_finite() && nbar >= 0.0) {
        return domain(format!("nbar must be >= 0, got {nbar}"));
    }
    if !(phase_noise_rms.is_finite() && phase_noise_rms >= 0.0) {
        return domain(format!("phase noise must be >= 0, got {phase_noise_rms}"));
    }
    Ok(v_quantum.powf(2.0 * nbar + 1.0) * dephasing_factor(phase_noise_rms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::visibility;

    #[test]
    fn budget_identity() {
        assert_eq!(visibility_budget(0.8, 0.0, 0.0).unwrap(), 0.8);
    }

    #[test]
    fn budget_examples() {
        let vq = visibility(0.3125);
        // exp(−0.1953125·1.16)·exp(−0.0165²/2)
        let v = visibility_budget(vq, 0.08, 0.0165).unwrap();
        assert!((v - 0.797_161).abs() < 1e-6, "{v}");
        let v = visibility_budget(vq, 0.37, 0.0).unwrap();
        assert!((v - 0.711_882).abs() < 1e-6, "{v}");
    }

    #[test]
    fn budget_domain() {
        assert!(visibility_budget(0.0, 0.0, 0.0).is_err());
        assert!(visibility_budget(0.5, -1.0, 0.0).is_err());
        assert!(visibility_budget(0.5, 0.0, -0.1).is_err());
    }
}
