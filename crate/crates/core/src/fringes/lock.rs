//! Interferometer phase lock: environmental phase drift corrected by a
//! proportional-integral servo acting through a range-limited actuator.
//!
//! The disturbance is a random walk plus a slow sinusoid (thermal breathing).
//! The actuator integrates the servo output (as a piezo fiber stretcher
//! does), so the loop is first order at `servo_bandwidth` with a second
//! integrator a decade below it.

use std::f64::consts::TAU;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_finite, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseLockModel {
    /// Target closed-loop residual, rad. Used as the phase-noise input of the
    /// visibility budget; the simulation measures its own value.
    pub residual_rms: f64,
    /// Heterodyne beat frequency, Hz. Recorded only; the loop acts on phase.
    pub beat_frequency: f64,
    /// Full actuator range, rad; the correction saturates at ±range/2.
    pub actuator_range: f64,
    /// Random-walk diffusion of the free-running phase, rad/√s.
    pub drift_rate: f64,
    /// Unity-gain bandwidth, Hz. Zero disables the servo.
    pub servo_bandwidth: f64,
    /// Amplitude of the slow sinusoidal drift, rad.
    pub thermal_amplitude: f64,
    pub thermal_frequency: f64,
    /// Loop update rate, Hz.
    pub sample_rate: f64,
}

impl Default for PhaseLockModel {
    fn default() -> Self {
        Self {
            residual_rms: 16.5e-3,
            beat_frequency: 200e3,
            actuator_range: 240.0,
            drift_rate: 1.8,
            servo_bandwidth: 1e3,
            thermal_amplitude: 20.0,
            thermal_frequency: 0.1,
            sample_rate: 100e3,
        }
    }
}

impl PhaseLockModel {
    pub fn validate(&self) -> Result<()> {
        ensure_finite(&[
            ("residual_rms", self.residual_rms),
            ("beat_frequency", self.beat_frequency),
            ("actuator_range", self.actuator_range),
            ("drift_rate", self.drift_rate),
            ("servo_bandwidth", self.servo_bandwidth),
            ("thermal_amplitude", self.thermal_amplitude),
            ("thermal_frequency", self.thermal_frequency),
            ("sample_rate", self.sample_rate),
        ])?;
        if self.residual_rms < 0.0 {
            return domain("residual rms must be >= 0");
        }
        if self.actuator_range <= 0.0 {
            return domain("actuator range must be > 0");
        }
        if self.drift_rate < 0.0 || self.thermal_amplitude < 0.0 || self.thermal_frequency < 0.0 {
            return domain("noise amplitudes and frequencies must be >= 0");
        }
        if self.sample_rate <= 0.0 || self.servo_bandwidth < 0.0 {
            return domain("sample rate must be > 0 and bandwidth >= 0");
        }
        if TAU * self.servo_bandwidth / self.sample_rate > 0.5 {
            return domain(format!(
                "servo bandwidth {} Hz too high for a {} Hz loop rate",
                self.servo_bandwidth, self.sample_rate
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LockSimulation {
    /// Standard deviation of the closed-loop phase error, rad.
    pub residual_rms: f64,
    /// Standard deviation of the free-running phase over the same record, rad.
    pub open_loop_rms: f64,
    /// False when the servo is off or the actuator hit its range.
    pub locked: bool,
    pub saturated: bool,
    pub times: Vec<f64>,
    /// Closed-loop phase error, rad.
    pub phase: Vec<f64>,
}

fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt()
}

/// Simulates `duration` seconds of the lock. The disturbance is drawn from
/// stream `(seed, 0)`, so runs that differ only in servo settings see the
/// same environment.
pub fn lock_residual_simulation(model: &PhaseLockModel, duration: f64, seed: u64) -> Result<LockSimulation> {
    model.validate()?;
    ensure_finite(&[("duration", duration)])?;
    if duration <= 0.0 {
        return domain(format!("duration must be > 0, got {duration}"));
    }
    let dt = 1.0 / model.sample_rate;
    let steps = (duration * model.sample_rate).round().max(1.0) as usize;
    let mut r = rng::stream(seed, 0);
    let g = TAU * model.servo_bandwidth * dt;
    let gi = TAU * model.servo_bandwidth / 10.0 * dt;
    let limit = model.actuator_range / 2.0;
    let walk_step = model.drift_rate * dt.sqrt();

    let mut walk = 0.0;
    let mut correction = 0.0;
    let mut integral = 0.0;
    let mut saturated = false;
    let mut times = Vec::with_capacity(steps);
    let mut phase = Vec::with_capacity(steps);
    let mut free = Vec::with_capacity(steps);
    for n in 0..steps {
        let t = n as f64 * dt;
        if n > 0 {
            let z: f64 = StandardNormal.sample(&mut r);
            walk += walk_step * z;
        }
        let disturbance = walk + model.thermal_amplitude * (TAU * model.thermal_frequency * t).sin();
        let err = disturbance - correction;
        times.push(t);
        phase.push(err);
        free.push(disturbance);
        if g > 0.0 {
            let next = correction + g * (err + gi * (integral + err));
            if next.abs() > limit {
                saturated = true;
                correction = next.clamp(-limit, limit);
            } else {
                integral += err;
                correction = next;
            }
        }
    }
    Ok(LockSimulation {
        residual_rms: std_dev(&phase),
        open_loop_rms: std_dev(&free),
        locked: g > 0.0 && !saturated,
        saturated,
        times,
        phase,
    })
}
