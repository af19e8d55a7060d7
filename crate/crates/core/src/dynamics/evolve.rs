//! Event-driven propagation under photon scattering.
//!
//! Between scattering events each trajectory rotates rigidly in the scaled
//! phase plane (x, p/mω). An event is an absorption kick along the axis, an
//! exponentially distributed stay in the excited state (where the potential
//! curvature is multiplied by `antitrap_factor`), and an emission kick whose
//! axial projection follows the emission pattern. All propagation steps are
//! closed-form.

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ensemble::{Ensemble, Sample};
use crate::error::{domain, ensure_finite, Result};
use crate::physics::TrapModel;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmissionPattern {
    /// Uniform over the sphere.
    Isotropic,
    /// σ± dipole pattern, intensity ∝ 1 + cos²θ about the axis.
    Dipole,
    /// Emission only along ±axis.
    AxialOnly,
}

impl EmissionPattern {
    /// Samples cos θ of the emission direction relative to the axis.
    fn sample_cos(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Self::Isotropic => 2.0 * rng.random::<f64>() - 1.0,
            Self::Dipole => loop {
                let u = 2.0 * rng.random::<f64>() - 1.0;
                if 2.0 * rng.random::<f64>() < 1.0 + u * u {
                    break u;
                }
            },
            Self::AxialOnly => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    /// ⟨cos²θ⟩ of the pattern.
    pub fn mean_cos_squared(self) -> f64 {
        match self {
            Self::Isotropic => 1.0 / 3.0,
            Self::Dipole => 0.4,
            Self::AxialOnly => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringParams {
    /// Scattering (absorption) rate while in the ground state, 1/s.
    pub rate: f64,
    /// Saturation parameter. Carried for bookkeeping; never used to derive `rate`.
    pub saturation: f64,
    /// Excited-state lifetime, s.
    pub excited_lifetime: f64,
    /// Curvature multiplier of the trap while excited (−1: inverted potential).
    pub antitrap_factor: f64,
    pub emission_pattern: EmissionPattern,
    /// ħk, kg·m/s.
    pub recoil_momentum: f64,
    /// Fraction of ħk delivered along the axis by absorption.
    pub axial_projection: f64,
}

pub const DEFAULT_ANTITRAP_FACTOR: f64 = -1.0;

impl ScatteringParams {
    pub fn validate(&self) -> Result<()> {
        ensure_finite(&[
            ("rate", self.rate),
            ("saturation", self.saturation),
            ("excited_lifetime", self.excited_lifetime),
            ("antitrap_factor", self.antitrap_factor),
            ("recoil_momentum", self.recoil_momentum),
            ("axial_projection", self.axial_projection),
        ])?;
        if self.rate < 0.0 {
            return domain(format!("scattering rate must be >= 0, got {}", self.rate));
        }
        if self.saturation < 0.0 {
            return domain(format!("saturation must be >= 0, got {}", self.saturation));
        }
        if self.excited_lifetime <= 0.0 {
            return domain(format!("excited lifetime must be > 0, got {}", self.excited_lifetime));
        }
        if self.recoil_momentum <= 0.0 {
            return domain("recoil momentum must be > 0");
        }
        if !(self.axial_projection > 0.0 && self.axial_projection <= 1.0) {
            return domain(format!("axial projection must be in (0, 1], got {}", self.axial_projection));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Kinematics {
    omega: f64,
    mass: f64,
    params: ScatteringParams,
}

/// Rigid rotation by angle ωt in the (x, p/mω) plane.
fn rotate(s: &mut Sample, omega: f64, mass: f64, dt: f64) {
    let (sin, cos) = (omega * dt).sin_cos();
    let mw = mass * omega;
    let x = s.x * cos + s.p / mw * sin;
    let p = -mw * s.x * sin + s.p * cos;
    s.x = x;
    s.p = p;
}

/// Exact propagation for x'' = −κω²x over `dt`.
fn propagate_curvature(s: &mut Sample, omega: f64, mass: f64, kappa: f64, dt: f64) {
    if kappa > 0.0 {
        rotate(s, omega * kappa.sqrt(), mass, dt);
    } else if kappa == 0.0 {
        s.x += s.p / mass * dt;
    } else {
        let w = omega * (-kappa).sqrt();
        let (sh, ch) = ((w * dt).sinh(), (w * dt).cosh());
        let mw = mass * w;
        let x = s.x * ch + s.p / mw * sh;
        let p = mw * s.x * sh + s.p * ch;
        s.x = x;
        s.p = p;
    }
}

fn propagate(mut s: Sample, duration: f64, k: &Kinematics, rng: &mut ChaCha8Rng) -> Sample {
    let sp = &k.params;
    let mut remaining = duration;
    loop {
        if s.excited {
            let draw: f64 = Exp1.sample(rng);
            let tau = sp.excited_lifetime * draw;
            if tau >= remaining {
                // still excited at the end; the lifetime is memoryless
                propagate_curvature(&mut s, k.omega, k.mass, sp.antitrap_factor, remaining);
                return s;
            }
            propagate_curvature(&mut s, k.omega, k.mass, sp.antitrap_factor, tau);
            remaining -= tau;
            s.p += sp.recoil_momentum * sp.emission_pattern.sample_cos(rng);
            s.excited = false;
        }
        if sp.rate == 0.0 {
            rotate(&mut s, k.omega, k.mass, remaining);
            return s;
        }
        let wait: f64 = Exp1.sample(rng);
        let wait = wait / sp.rate;
        if wait >= remaining {
            rotate(&mut s, k.omega, k.mass, remaining);
            return s;
        }
        rotate(&mut s, k.omega, k.mass, wait);
        remaining -= wait;
        s.p += sp.recoil_momentum * sp.axial_projection;
        s.excited = true;
    }
}

/// Advances every trajectory by `duration` seconds in the trap `trap` (axial
/// frequency at its current depth). Trajectory `i` draws from stream `(seed, i)`.
pub fn evolve(
    ensemble: &Ensemble,
    duration: f64,
    trap: &TrapModel,
    scat: &ScatteringParams,
    seed: u64,
) -> Result<Ensemble> {
    ensure_finite(&[("duration", duration)])?;
    if duration < 0.0 {
        return domain(format!("duration must be >= 0, got {duration}"));
    }
    trap.validate()?;
    scat.validate()?;
    if ensemble.is_empty() {
        return domain("ensemble is empty");
    }
    let k = Kinematics { omega: trap.axial_frequency(), mass: ensemble.mass, params: *scat };
    let samples = ensemble
        .samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut r = rng::stream(seed, i as u64);
            propagate(*s, duration, &k, &mut r)
        })
        .collect();
    Ok(Ensemble {
        samples,
        time: ensemble.time + duration,
        seed: ensemble.seed,
        omega: k.omega,
        mass: ensemble.mass,
        hbar: ensemble.hbar,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{PI, TAU};

    use super::*;
    use crate::dynamics::sample_wigner;
    use crate::physics::{MotionalState, PhysicalConstants};

    fn setup(rate: f64) -> (PhysicalConstants, TrapModel, ScatteringParams) {
        let c = PhysicalConstants::default();
        let trap = TrapModel::default_anchor(&c).unwrap();
        let scat = ScatteringParams {
            rate,
            saturation: 0.1,
            excited_lifetime: c.excited_lifetime(),
            antitrap_factor: DEFAULT_ANTITRAP_FACTOR,
            emission_pattern: EmissionPattern::Dipole,
            recoil_momentum: c.recoil_momentum(),
            axial_projection: 1.0,
        };
        (c, trap, scat)
    }

    #[test]
    fn full_period_is_identity() {
        let (c, trap, scat) = setup(0.0);
        let w = trap.axial_frequency();
        let e0 = sample_wigner(&MotionalState::new(w, 0.3, &c).unwrap(), 500, 1).unwrap();
        let e1 = evolve(&e0, TAU / w, &trap, &scat, 9).unwrap();
        for (a, b) in e0.samples.iter().zip(&e1.samples) {
            assert!((a.x - b.x).abs() <= 1e-10 * e0.samples[0].x.abs().max(1e-7));
            assert!(((a.p - b.p) / a.p).abs() < 1e-10 || (a.p - b.p).abs() < 1e-38);
        }
        assert_eq!(e1.time, TAU / w);
    }

    #[test]
    fn quarter_period_exchanges_quadratures() {
        let (c, trap, scat) = setup(0.0);
        let w = trap.axial_frequency();
        let mut e0 = sample_wigner(&MotionalState::ground(w, &c).unwrap(), 1, 1).unwrap();
        let p0 = 3.0 * c.recoil_momentum();
        e0.samples[0] = Sample { x: 0.0, p: p0, excited: false };
        let e1 = evolve(&e0, PI / (2.0 * w), &trap, &scat, 0).unwrap();
        let s = e1.samples[0];
        assert!((s.x - p0 / (c.mass * w)).abs() < 1e-12 * (p0 / (c.mass * w)));
        assert!(s.p.abs() < 1e-12 * p0);
    }

    #[test]
    fn free_rotation_conserves_energy() {
        let (c, trap, scat) = setup(0.0);
        let w = trap.axial_frequency();
        let e0 = sample_wigner(&MotionalState::new(w, 2.0, &c).unwrap(), 200, 3).unwrap();
        let e1 = evolve(&e0, 3.7e-6, &trap, &scat, 0).unwrap();
        for (a, b) in e0.samples.iter().zip(&e1.samples) {
            let ea = e0.sample_quanta(a);
            let eb = e1.sample_quanta(b);
            assert!((ea - eb).abs() <= 1e-12 * ea.max(1e-3), "{ea} {eb}");
        }
    }

    #[test]
    fn scattering_heats() {
        let (c, trap, scat) = setup(6.7e6);
        let w = trap.axial_frequency();
        let e0 = sample_wigner(&MotionalState::ground(w, &c).unwrap(), 20_000, 2).unwrap();
        let e1 = evolve(&e0, 5e-6, &trap, &scat, 8).unwrap();
        let e2 = evolve(&e1, 5e-6, &trap, &scat, 9).unwrap();
        let (n0, n1, n2) = (e0.nbar(), e1.nbar(), e2.nbar());
        assert!(n1.value > n0.value + 3.0 * n1.stderr.hypot(n0.stderr));
        assert!(n2.value > n1.value + 3.0 * n2.stderr.hypot(n1.stderr));
        // energy bookkeeping: each event deposits on average at least the
        // recoil energy of the absorbed photon; ~33 events in 5 μs
        let er_quanta = c.recoil_energy() / (c.hbar * w);
        assert!(n1.value > 0.5 * 33.0 * er_quanta, "{} vs {}", n1.value, 33.0 * er_quanta);
    }

    #[test]
    fn excited_state_persists_across_segments() {
        let (c, trap, scat) = setup(6.7e6);
        let w = trap.axial_frequency();
        let e0 = sample_wigner(&MotionalState::ground(w, &c).unwrap(), 20_000, 2).unwrap();
        let e1 = evolve(&e0, 2e-6, &trap, &scat, 1).unwrap();
        // steady-state excited fraction ≈ Rτ/(1+Rτ)
        let rt = scat.rate * scat.excited_lifetime;
        let expected = rt / (1.0 + rt);
        assert!((e1.excited_fraction() - expected).abs() < 0.02, "{}", e1.excited_fraction());
    }

    #[test]
    fn zero_duration_is_identity() {
        let (c, trap, scat) = setup(6.7e6);
        let w = trap.axial_frequency();
        let e0 = sample_wigner(&MotionalState::ground(w, &c).unwrap(), 100, 2).unwrap();
        let e1 = evolve(&e0, 0.0, &trap, &scat, 1).unwrap();
        assert_eq!(e0.samples, e1.samples);
    }

    #[test]
    fn rejects_bad_params() {
        let (c, trap, scat) = setup(6.7e6);
        let e0 = sample_wigner(&MotionalState::ground(1e5, &c).unwrap(), 10, 2).unwrap();
        assert!(evolve(&e0, -1.0, &trap, &scat, 0).is_err());
        assert!(evolve(&e0, f64::NAN, &trap, &scat, 0).is_err());
        let bad = ScatteringParams { rate: f64::INFINITY, ..scat };
        assert!(evolve(&e0, 1e-6, &trap, &bad, 0).is_err());
        let bad = ScatteringParams { excited_lifetime: 0.0, ..scat };
        assert!(evolve(&e0, 1e-6, &trap, &bad, 0).is_err());
    }

    #[test]
    fn dipole_pattern_second_moment() {
        let mut r = rng::stream(3, 0);
        let n = 200_000;
        for pat in [EmissionPattern::Isotropic, EmissionPattern::Dipole, EmissionPattern::AxialOnly] {
            let m2 = (0..n).map(|_| pat.sample_cos(&mut r).powi(2)).sum::<f64>() / n as f64;
            assert!((m2 - pat.mean_cos_squared()).abs() < 0.005, "{pat:?} {m2}");
        }
    }
}
