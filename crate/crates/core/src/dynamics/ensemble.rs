use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::physics::MotionalState;
use crate::rng;

/// One phase-space trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Axial position, m.
    pub x: f64,
    /// Axial momentum, kg·m/s.
    pub p: f64,
    /// Whether the atom is currently in the electronically excited state.
    pub excited: bool,
}

/// Monte Carlo discretization of the atom's axial Wigner distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub samples: Vec<Sample>,
    /// Elapsed evolution time, s.
    pub time: f64,
    pub seed: u64,
    pub omega: f64,
    pub mass: f64,
    pub hbar: f64,
}

/// Draws `n` phase-space points from the Gaussian Wigner function of `state`.
///
/// Trajectory `i` uses stream `(seed, i)`, so the ensemble is identical for
/// any thread count.
pub fn sample_wigner(state: &MotionalState, n: usize, seed: u64) -> Result<Ensemble> {
    state.validate()?;
    if n == 0 {
        return domain("ensemble size must be >= 1");
    }
    let (sx, sp) = (state.delta_x(), state.delta_p());
    let samples = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i);
            let zx: f64 = StandardNormal.sample(&mut r);
            let zp: f64 = StandardNormal.sample(&mut r);
            Sample { x: sx * zx, p: sp * zp, excited: false }
        })
        .collect();
    Ok(Ensemble {
        samples,
        time: 0.0,
        seed,
        omega: state.omega,
        mass: state.mass,
        hbar: state.hbar,
    })
}

/// Mean and standard error of a per-sample statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean_x(&self) -> f64 {
        self.samples.iter().map(|s| s.x).sum::<f64>() / self.len() as f64
    }

    pub fn mean_p(&self) -> f64 {
        self.samples.iter().map(|s| s.p).sum::<f64>() / self.len() as f64
    }

    /// Population variances (var x, var p).
    pub fn variances(&self) -> (f64, f64) {
        let (mx, mp) = (self.mean_x(), self.mean_p());
        let n = self.len() as f64;
        let vx = self.samples.iter().map(|s| (s.x - mx).powi(2)).sum::<f64>() / n;
        let vp = self.samples.iter().map(|s| (s.p - mp).powi(2)).sum::<f64>() / n;
        (vx, vp)
    }

    /// Oscillator energy of one sample relative to the trap center, in units of ħω.
    pub fn sample_quanta(&self, s: &Sample) -> f64 {
        let mw = self.mass * self.omega;
        (s.p * s.p / mw + mw * s.x * s.x) / (2.0 * self.hbar)
    }

    /// Mean trap energy, J, relative to the trap center (includes any
    /// coherent displacement).
    pub fn mean_energy(&self) -> Estimate {
        let hw = self.hbar * self.omega;
        let e: Vec<f64> = self.samples.iter().map(|s| self.sample_quanta(s) * hw).collect();
        mean_with_stderr(&e)
    }

    /// Thermal occupation n̄ = (Var p/(mω) + mω Var x)/(2ħ) − ½.
    ///
    /// Moments are taken about the ensemble mean: a coherent displacement of
    /// the whole distribution carries no phonon entropy and does not change
    /// the recoil overlap, so it is excluded here.
    pub fn nbar(&self) -> Estimate {
        let (mx, mp) = (self.mean_x(), self.mean_p());
        let q: Vec<f64> = self
            .samples
            .iter()
            .map(|s| self.sample_quanta(&Sample { x: s.x - mx, p: s.p - mp, excited: false }))
            .collect();
        let est = mean_with_stderr(&q);
        Estimate { value: est.value - 0.5, stderr: est.stderr }
    }

    /// n̄ computed from raw second moments about the trap center.
    pub fn nbar_total(&self) -> Estimate {
        let q: Vec<f64> = self.samples.iter().map(|s| self.sample_quanta(s)).collect();
        let est = mean_with_stderr(&q);
        Estimate { value: est.value - 0.5, stderr: est.stderr }
    }

    pub fn excited_fraction(&self) -> f64 {
        self.samples.iter().filter(|s| s.excited).count() as f64 / self.len() as f64
    }
}

pub(crate) fn mean_with_stderr(values: &[f64]) -> Estimate {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return Estimate { value: mean, stderr: f64::NAN };
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Estimate { value: mean, stderr: (var / n).sqrt() }
}
