use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::io::Read;

use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_finite, Error, Result};
use crate::fit::weighted_linear_lstsq;
use crate::rng;

/// Photon counts at the two interferometer outputs over a phase scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeDataset {
    pub phases: Vec<f64>,
    pub counts_1: Vec<u64>,
    pub counts_2: Vec<u64>,
    #[serde(default)]
    pub meta: FringeMeta,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FringeMeta {
    pub depth_mk: Option<f64>,
    pub scattering_rate_mhz: Option<f64>,
}

/// Count unbalance (C₁ − C₂)/(C₁ + C₂) at each phase with its binomial error.
#[derive(Debug, Clone, PartialEq)]
pub struct UnbalanceData {
    pub phases: Vec<f64>,
    pub unbalance: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl FringeDataset {
    pub fn validate(&self) -> Result<()> {
        let n = self.phases.len();
        if self.counts_1.len() != n || self.counts_2.len() != n {
            return domain("fringe columns have different lengths");
        }
        ensure_finite(&self.phases.iter().map(|&p| ("phase", p)).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Unbalance per point with var(u) = (1 − u²)/(C₁ + C₂). Points without
    /// counts are dropped; their indices are returned.
    pub fn unbalance(&self) -> (UnbalanceData, Vec<usize>) {
        let mut out = UnbalanceData { phases: vec![], unbalance: vec![], sigma: vec![] };
        let mut dropped = vec![];
        for i in 0..self.len() {
            let (c1, c2) = (self.counts_1[i] as f64, self.counts_2[i] as f64);
            let total = c1 + c2;
            if total == 0.0 {
                dropped.push(i);
                continue;
            }
            let u = (c1 - c2) / total;
            // a point with all counts in one arm still carries ~1 count of uncertainty
            let var = (1.0 - u * u).max(1.0 / total) / total;
            out.phases.push(self.phases[i]);
            out.unbalance.push(u);
            out.sigma.push(var.sqrt());
        }
        (out, dropped)
    }

    /// CSV with columns `phase_rad,c1,c2`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phase_rad,c1,c2\n");
        for i in 0..self.len() {
            let _ = writeln!(out, "{},{},{}", self.phases[i], self.counts_1[i], self.counts_2[i]);
        }
        out
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            phase_rad: f64,
            c1: u64,
            c2: u64,
        }
        let mut rdr = csv::Reader::from_reader(reader);
        let mut ds = FringeDataset { phases: vec![], counts_1: vec![], counts_2: vec![], meta: FringeMeta::default() };
        for (line, row) in rdr.deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| Error::Parse(format!("fringe row {}: {e}", line + 1)))?;
            ds.phases.push(row.phase_rad);
            ds.counts_1.push(row.c1);
            ds.counts_2.push(row.c2);
        }
        ds.validate()?;
        Ok(ds)
    }
}

/// Settings for a synthetic phase scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeSpec {
    pub visibility: f64,
    pub phase_offset: f64,
    pub n_points: usize,
    /// Mean total counts per point.
    pub mean_counts: f64,
    /// RMS of the per-point Gaussian phase jitter, rad.
    pub phase_noise_rms: f64,
}

impl FringeSpec {
    fn validate(&self) -> Result<()> {
        ensure_finite(&[
            ("visibility", self.visibility),
            ("phase_offset", self.phase_offset),
            ("mean_counts", self.mean_counts),
            ("phase_noise_rms", self.phase_noise_rms),
        ])?;
        if !(0.0..=1.0).contains(&self.visibility) {
            return domain(format!("visibility must be in [0, 1], got {}", self.visibility));
        }
        if self.n_points < 4 {
            return domain("a fringe scan needs at least 4 points");
        }
        if self.mean_counts < 1.0 {
            return domain("mean counts per point must be >= 1");
        }
        if self.phase_noise_rms < 0.0 {
            return domain("phase noise rms must be >= 0");
        }
        Ok(())
    }

    /// Scan phases, evenly spaced over one period.
    pub fn phases(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| TAU * i as f64 / self.n_points as f64).collect()
    }

    /// Visibility after averaging over Gaussian phase jitter.
    pub fn effective_visibility(&self) -> f64 {
        self.visibility * dephasing_factor(self.phase_noise_rms)
    }

    /// Noise-free expected unbalance V_eff·cos(φ + φ₀) at each scan phase.
    pub fn expected_unbalance(&self) -> Result<UnbalanceData> {
        self.validate()?;
        let phases = self.phases();
        let v = self.effective_visibility();
        let unbalance: Vec<f64> = phases.iter().map(|p| v * (p + self.phase_offset).cos()).collect();
        let sigma = unbalance
            .iter()
            .map(|u| ((1.0 - u * u).max(1.0 / self.mean_counts) / self.mean_counts).sqrt())
            .collect();
        Ok(UnbalanceData { phases, unbalance, sigma })
    }
}

/// Gaussian dephasing factor ⟨cos ε⟩ = exp(−σ²/2).
pub fn dephasing_factor(rms: f64) -> f64 {
    (-rms * rms / 2.0).exp()
}

/// Poisson-sampled phase scan. Point `i` draws its phase jitter and counts
/// from stream `(seed, i)`.
pub fn synthesize_fringe(spec: &FringeSpec, seed: u64) -> Result<FringeDataset> {
    spec.validate()?;
    let phases = spec.phases();
    let mut counts_1 = Vec::with_capacity(phases.len());
    let mut counts_2 = Vec::with_capacity(phases.len());
    let jitter = Normal::new(0.0, spec.phase_noise_rms).map_err(|e| Error::Domain(e.to_string()))?;
    for (i, &phi) in phases.iter().enumerate() {
        let mut r = rng::stream(seed, i as u64);
        let eps = jitter.sample(&mut r);
        let c = spec.visibility * (phi + spec.phase_offset + eps).cos();
        let mut draw = |mean: f64| -> Result<u64> {
            if mean <= 0.0 {
                return Ok(0);
            }
            let d = Poisson::new(mean).map_err(|e| Error::Domain(e.to_string()))?;
            Ok(d.sample(&mut r) as u64)
        };
        counts_1.push(draw(spec.mean_counts * (1.0 + c) / 2.0)?);
        counts_2.push(draw(spec.mean_counts * (1.0 - c) / 2.0)?);
    }
    Ok(FringeDataset { phases, counts_1, counts_2, meta: FringeMeta::default() })
}

/// Sinusoid fit u(φ) = A·cos(φ + φ₀) + b. Serializes to the JSON fit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub visibility: f64,
    pub visibility_err: f64,
    pub phase_offset: f64,
    pub phase_offset_err: f64,
    pub baseline: f64,
    pub baseline_err: f64,
    pub chi2: f64,
    pub ndof: usize,
    /// Bootstrap standard deviation of the visibility, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap_err: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub dropped_points: Vec<usize>,
}

/// Weighted linear fit of a cos + b sin + c, converted to amplitude and phase.
pub fn fit_unbalance(data: &UnbalanceData) -> Result<FringeFit> {
    let n = data.phases.len();
    if data.unbalance.len() != n || data.sigma.len() != n {
        return domain("unbalance columns have different lengths");
    }
    if n < 4 {
        return domain(format!("fringe fit needs >= 4 points, got {n}"));
    }
    let mut sorted: Vec<f64> = data.phases.iter().map(|p| p.rem_euclid(TAU)).collect();
    sorted.sort_by(f64::total_cmp);
    let max_gap = sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(sorted[0] + TAU - sorted[n - 1], f64::max);
    if TAU - max_gap <= TAU / 2.0 {
        return domain("scan phases must span more than half a period");
    }
    let design = DMatrix::from_fn(n, 3, |i, k| match k {
        0 => data.phases[i].cos(),
        1 => data.phases[i].sin(),
        _ => 1.0,
    });
    let f = weighted_linear_lstsq(&design, &data.unbalance, &data.sigma)?;
    let (a, b) = (f.params[0], f.params[1]);
    // A cos(φ + φ₀) = A cos φ₀ cos φ − A sin φ₀ sin φ
    let amp = a.hypot(b);
    let phase = (-b).atan2(a);
    let cov = &f.covariance;
    let (va, vb, cab) = (cov[(0, 0)], cov[(1, 1)], cov[(0, 1)]);
    let (amp_err, phase_err) = if amp > 0.0 {
        let ga = [a / amp, b / amp];
        let gp = [b / (amp * amp), -a / (amp * amp)];
        let quad = |g: [f64; 2]| (g[0] * g[0] * va + g[1] * g[1] * vb + 2.0 * g[0] * g[1] * cab).max(0.0).sqrt();
        (quad(ga), quad(gp))
    } else {
        (va.max(vb).sqrt(), f64::INFINITY)
    };
    if amp > 1.0 + 3.0 * amp_err {
        return Err(Error::FitInvalid(format!(
            "fitted amplitude {amp:.4} exceeds 1 by more than 3σ ({amp_err:.4})"
        )));
    }
    Ok(FringeFit {
        visibility: amp,
        visibility_err: amp_err,
        phase_offset: phase,
        phase_offset_err: phase_err,
        baseline: f.params[2],
        baseline_err: cov[(2, 2)].sqrt(),
        chi2: f.chi2,
        ndof: f.ndof,
        bootstrap_err: None,
        dropped_points: vec![],
    })
}

/// Fits the count unbalance of a dataset; zero-count points are dropped and
/// listed in the result.
pub fn fit_fringe(dataset: &FringeDataset) -> Result<FringeFit> {
    dataset.validate()?;
    let (mut data, dropped) = dataset.unbalance();
    let totals: Vec<f64> = (0..dataset.len())
        .filter(|i| !dropped.contains(i))
        .map(|i| (dataset.counts_1[i] + dataset.counts_2[i]) as f64)
        .collect();
    let mut fit = fit_unbalance(&data)?;
    // Weights from the measured unbalance pull the amplitude outward; iterate
    // with the binomial variance of the fitted curve instead.
    for _ in 0..10 {
        let prev = fit.visibility;
        for (i, n) in totals.iter().enumerate() {
            let u = (fit.visibility * (data.phases[i] + fit.phase_offset).cos() + fit.baseline).clamp(-1.0, 1.0);
            data.sigma[i] = ((1.0 - u * u).max(1.0 / n) / n).sqrt();
        }
        fit = fit_unbalance(&data)?;
        if (fit.visibility - prev).abs() <= 1e-12 {
            break;
        }
    }
    fit.dropped_points = dropped;
    Ok(fit)
}

/// Parametric bootstrap: each replicate redraws every count from a Poisson
/// with the observed count as mean and refits. Replicate `j` uses stream
/// `(seed, j)`. Returns the standard deviation of the replicate visibilities.
pub fn bootstrap_visibility(dataset: &FringeDataset, replicates: usize, seed: u64) -> Result<f64> {
    dataset.validate()?;
    if replicates < 2 {
        return domain("bootstrap needs at least 2 replicates");
    }
    let vs: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|j| {
            let mut r = rng::stream(seed, j);
            let mut redraw = |c: u64| -> u64 {
                if c == 0 {
                    0
                } else {
                    Poisson::new(c as f64).map(|d| d.sample(&mut r) as u64).unwrap_or(c)
                }
            };
            let mut ds = dataset.clone();
            for i in 0..ds.len() {
                ds.counts_1[i] = redraw(dataset.counts_1[i]);
                ds.counts_2[i] = redraw(dataset.counts_2[i]);
            }
            fit_fringe(&ds).map(|f| f.visibility)
        })
        .collect::<Result<_>>()?;
    let n = vs.len() as f64;
    let mean = vs.iter().sum::<f64>() / n;
    Ok((vs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(v: f64) -> FringeSpec {
        FringeSpec { visibility: v, phase_offset: 0.4, n_points: 20, mean_counts: 1000.0, phase_noise_rms: 0.0 }
    }

    #[test]
    fn zero_visibility_expected_flat() {
        let d = spec(0.0).expected_unbalance().unwrap();
        assert!(d.unbalance.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn full_visibility_at_minus_offset() {
        let s = FringeSpec { phase_offset: 0.0, ..spec(1.0) };
        let d = s.expected_unbalance().unwrap();
        assert_eq!(d.unbalance[0], 1.0);
    }

    #[test]
    fn dephasing_at_lock_residual() {
        assert!((dephasing_factor(0.0165) - 0.999_864).abs() < 1e-6);
    }

    #[test]
    fn noiseless_fit_is_exact() {
        let phases: Vec<f64> = (0..8).map(|i| TAU * i as f64 / 8.0).collect();
        let unbalance = phases.iter().map(|p| 0.5 * p.cos()).collect();
        let data = UnbalanceData { phases, unbalance, sigma: vec![0.01; 8] };
        let f = fit_unbalance(&data).unwrap();
        assert!((f.visibility - 0.5).abs() < 1e-12);
        assert!(f.phase_offset.abs() < 1e-12);
        assert!(f.baseline.abs() < 1e-12);
    }

    #[test]
    fn round_trip_within_three_sigma() {
        for (v, seed) in [(0.823, 1), (0.44, 2)] {
            let ds = synthesize_fringe(&spec(v), seed).unwrap();
            let f = fit_fringe(&ds).unwrap();
            assert!((f.visibility - v).abs() < 3.0 * f.visibility_err, "{f:?}");
            assert!((f.phase_offset - 0.4).abs() < 3.0 * f.phase_offset_err);
        }
    }

    #[test]
    fn unbalance_is_bounded() {
        let ds = synthesize_fringe(&FringeSpec { mean_counts: 3.0, ..spec(1.0) }, 5).unwrap();
        let (u, _) = ds.unbalance();
        assert!(u.unbalance.iter().all(|x| x.abs() <= 1.0));
    }

    #[test]
    fn zero_count_points_dropped() {
        let mut ds = synthesize_fringe(&spec(0.5), 3).unwrap();
        ds.counts_1[2] = 0;
        ds.counts_2[2] = 0;
        let f = fit_fringe(&ds).unwrap();
        assert_eq!(f.dropped_points, vec![2]);
        assert_eq!(f.ndof, 19 - 3);
    }

    #[test]
    fn narrow_scan_rejected() {
        let phases: Vec<f64> = (0..6).map(|i| 0.1 * i as f64).collect();
        let unbalance = phases.iter().map(|p| p.cos()).collect();
        let data = UnbalanceData { phases, unbalance, sigma: vec![0.1; 6] };
        assert!(fit_unbalance(&data).is_err());
    }

    #[test]
    fn bad_visibility_rejected() {
        assert!(synthesize_fringe(&spec(1.2), 0).is_err());
        assert!(synthesize_fringe(&spec(-0.1), 0).is_err());
    }

    #[test]
    fn overlarge_amplitude_rejected() {
        let phases: Vec<f64> = (0..8).map(|i| TAU * i as f64 / 8.0).collect();
        let unbalance = phases.iter().map(|p| 1.5 * p.cos()).collect();
        let data = UnbalanceData { phases, unbalance, sigma: vec![0.01; 8] };
        assert!(matches!(fit_unbalance(&data), Err(Error::FitInvalid(_))));
    }

    #[test]
    fn bootstrap_agrees_with_covariance() {
        let ds = synthesize_fringe(&spec(0.5), 9).unwrap();
        let f = fit_fringe(&ds).unwrap();
        let b = bootstrap_visibility(&ds, 400, 1).unwrap();
        assert!((b / f.visibility_err - 1.0).abs() < 0.2, "{b} vs {}", f.visibility_err);
    }

    #[test]
    fn csv_round_trip() {
        let ds = synthesize_fringe(&spec(0.5), 9).unwrap();
        let back = FringeDataset::from_csv(ds.to_csv().as_bytes()).unwrap();
        assert_eq!(back.counts_1, ds.counts_1);
        assert_eq!(back.counts_2, ds.counts_2);
        assert_eq!(back.phases, ds.phases);
    }
}
