use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ensemble::{Ensemble, Estimate};
use super::evolve::{evolve, ScatteringParams};
use super::sample_wigner;
use crate::error::{domain, ensure_finite, Result};
use crate::physics::{MotionalState, TrapModel};
use crate::rng::derive_seed;

/// Fringe visibility |⟨e^{i·2k·x}⟩| of the ensemble with its jackknife
/// standard error.
///
/// The two scattering paths differ by 2ħk along the axis, so the overlap of
/// the displaced momentum wavefunctions is the characteristic function of
/// the position distribution at 2k.
pub fn visibility_estimator(ensemble: &Ensemble, k_axial: f64) -> Result<Estimate> {
    ensure_finite(&[("k_axial", k_axial)])?;
    if ensemble.is_empty() {
        return domain("ensemble is empty");
    }
    let n = ensemble.len();
    let phases: Vec<(f64, f64)> = ensemble
        .samples
        .iter()
        .map(|s| {
            let (sin, cos) = (2.0 * k_axial * s.x).sin_cos();
            (cos, sin)
        })
        .collect();
    let (sc, ss) = phases.iter().fold((0.0, 0.0), |(a, b), &(c, s)| (a + c, b + s));
    let nf = n as f64;
    let v = (sc / nf).hypot(ss / nf);
    if n < 2 {
        return Ok(Estimate { value: v, stderr: f64::NAN });
    }
    // leave-one-out magnitudes
    let m = nf - 1.0;
    let loo: Vec<f64> = phases.iter().map(|&(c, s)| ((sc - c) / m).hypot((ss - s) / m)).collect();
    let mean = loo.iter().sum::<f64>() / nf;
    let var = loo.iter().map(|t| (t - mean).powi(2)).sum::<f64>() * (nf - 1.0) / nf;
    Ok(Estimate { value: v, stderr: var.sqrt() })
}

/// Time-binned visibility and phonon number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilitySeries {
    /// `bins + 1` contiguous edges, s.
    pub bin_edges: Vec<f64>,
    pub visibility: Vec<f64>,
    pub stderr: Vec<f64>,
    pub nbar: Vec<f64>,
    pub nbar_stderr: Vec<f64>,
}

impl VisibilitySeries {
    pub fn len(&self) -> usize {
        self.visibility.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visibility.is_empty()
    }

    /// CSV with columns `t_start_us,t_end_us,visibility,stderr,nbar`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_start_us,t_end_us,visibility,stderr,nbar\n");
        for i in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                to_us(self.bin_edges[i]),
                to_us(self.bin_edges[i + 1]),
                self.visibility[i],
                self.stderr[i],
                self.nbar[i]
            );
        }
        out
    }
}

/// Seconds to µs, rounded to the picosecond so edges print cleanly.
fn to_us(t: f64) -> f64 {
    (t * 1e12).round() / 1e6
}

/// Simulates scattering from `state` for `total_time` and estimates the
/// visibility and n̄ at the center of each `bin_width` bin.
///
/// Returns the series together with the ensemble snapshot at every bin center.
#[allow(clippy::too_many_arguments)]
pub fn time_binned_visibility_with_snapshots(
    state: &MotionalState,
    trap: &TrapModel,
    scat: &ScatteringParams,
    total_time: f64,
    bin_width: f64,
    n: usize,
    seed: u64,
) -> Result<(VisibilitySeries, Vec<Ensemble>)> {
    ensure_finite(&[("total_time", total_time), ("bin_width", bin_width)])?;
    if !(total_time > 0.0 && bin_width > 0.0) {
        return domain("total time and bin width must be > 0");
    }
    let bins = (total_time / bin_width).round();
    if bins < 1.0 || (bins * bin_width - total_time).abs() > 1e-9 * total_time {
        return domain(format!(
            "bin width {bin_width} s does not divide total time {total_time} s"
        ));
    }
    if n < 1000 {
        return domain(format!("at least 1000 trajectories required, got {n}"));
    }
    scat.validate()?;
    let bins = bins as usize;
    let k_axial = scat.axial_projection * scat.recoil_momentum / state.hbar;

    let mut ensemble = sample_wigner(state, n, seed)?;
    let mut series = VisibilitySeries {
        bin_edges: (0..=bins).map(|i| i as f64 * bin_width).collect(),
        visibility: Vec::with_capacity(bins),
        stderr: Vec::with_capacity(bins),
        nbar: Vec::with_capacity(bins),
        nbar_stderr: Vec::with_capacity(bins),
    };
    let mut snapshots = Vec::with_capacity(bins);
    let half = bin_width / 2.0;
    for b in 0..bins as u64 {
        ensemble = evolve(&ensemble, half, trap, scat, derive_seed(seed, 2 * b + 1))?;
        let v = visibility_estimator(&ensemble, k_axial)?;
        let nb = ensemble.nbar();
        series.visibility.push(v.value);
        series.stderr.push(v.stderr);
        series.nbar.push(nb.value);
        series.nbar_stderr.push(nb.stderr);
        snapshots.push(ensemble.clone());
        ensemble = evolve(&ensemble, half, trap, scat, derive_seed(seed, 2 * b + 2))?;
    }
    Ok((series, snapshots))
}

pub fn time_binned_visibility(
    state: &MotionalState,
    trap: &TrapModel,
    scat: &ScatteringParams,
    total_time: f64,
    bin_width: f64,
    n: usize,
    seed: u64,
) -> Result<VisibilitySeries> {
    time_binned_visibility_with_snapshots(state, trap, scat, total_time, bin_width, n, seed)
        .map(|(s, _)| s)
}

/// Normalized 2D phase-space histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    /// Bin edges in x, m.
    pub x_edges: Vec<f64>,
    /// Bin edges in p, kg·m/s.
    pub p_edges: Vec<f64>,
    /// Row-major `[ix * p_bins + ip]`, sums to 1.
    pub density: Vec<f64>,
}

impl WignerGrid {
    pub fn x_bins(&self) -> usize {
        self.x_edges.len() - 1
    }

    pub fn p_bins(&self) -> usize {
        self.p_edges.len() - 1
    }

    pub fn at(&self, ix: usize, ip: usize) -> f64 {
        self.density[ix * self.p_bins() + ip]
    }

    pub fn x_centers(&self) -> Vec<f64> {
        self.x_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn p_centers(&self) -> Vec<f64> {
        self.p_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Marginal distribution over x.
    pub fn x_marginal(&self) -> Vec<f64> {
        (0..self.x_bins()).map(|ix| (0..self.p_bins()).map(|ip| self.at(ix, ip)).sum()).collect()
    }

    /// Long-format CSV `x_um,p_hbark,density` at bin centers; momentum in
    /// units of `recoil_momentum`.
    pub fn to_csv(&self, recoil_momentum: f64) -> String {
        let mut out = String::from("x_um,p_hbark,density\n");
        let pc = self.p_centers();
        for (ix, x) in self.x_centers().iter().enumerate() {
            for (ip, p) in pc.iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", x * 1e6, p / recoil_momentum, self.at(ix, ip));
            }
        }
        out
    }
}

/// Histograms the ensemble over `[x_range.0, x_range.1) × [p_range.0, p_range.1)`.
/// Samples outside the window are ignored; the grid is normalized over the
/// samples inside it.
pub fn wigner_histogram(
    ensemble: &Ensemble,
    x_range: (f64, f64),
    p_range: (f64, f64),
    bins: (usize, usize),
) -> Result<WignerGrid> {
    ensure_finite(&[
        ("x_min", x_range.0),
        ("x_max", x_range.1),
        ("p_min", p_range.0),
        ("p_max", p_range.1),
    ])?;
    if x_range.1 <= x_range.0 || p_range.1 <= p_range.0 {
        return domain("histogram range is degenerate");
    }
    if bins.0 < 2 || bins.1 < 2 {
        return domain("histogram needs at least 2 bins per axis");
    }
    let edges = |(lo, hi): (f64, f64), nb: usize| -> Vec<f64> {
        (0..=nb).map(|i| lo + (hi - lo) * i as f64 / nb as f64).collect()
    };
    let (nx, np) = bins;
    let mut counts = vec![0u64; nx * np];
    let mut inside = 0u64;
    for s in &ensemble.samples {
        let fx = (s.x - x_range.0) / (x_range.1 - x_range.0);
        let fp = (s.p - p_range.0) / (p_range.1 - p_range.0);
        if !(0.0..1.0).contains(&fx) || !(0.0..1.0).contains(&fp) {
            continue;
        }
        let ix = ((fx * nx as f64) as usize).min(nx - 1);
        let ip = ((fp * np as f64) as usize).min(np - 1);
        counts[ix * np + ip] += 1;
        inside += 1;
    }
    if inside == 0 {
        return domain("no samples fall inside the histogram range");
    }
    Ok(WignerGrid {
        x_edges: edges(x_range, nx),
        p_edges: edges(p_range, np),
        density: counts.iter().map(|&c| c as f64 / inside as f64).collect(),
    })
}
