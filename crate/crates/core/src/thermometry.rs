//! Raman sideband thermometry.
//!
//! A thermal state with mean occupation n̄ gives red and blue sideband
//! strengths in the ratio r = A_red/A_blue = n̄/(n̄+1), so n̄ = r/(1−r) and the
//! ground-state population is p₀ = 1/(1+n̄). Spectra are modeled as a carrier
//! and two sidebands with Lorentzian line shapes sharing one width.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::io::Read;

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fit::{levenberg_marquardt, FitResult, LmOptions, Model};
use crate::rng;

/// Measured or synthetic sideband spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidebandSpectrum {
    /// Raman detuning from the carrier, rad/s, strictly increasing.
    pub detunings: Vec<f64>,
    /// Transfer probability per point.
    pub transfer: Vec<f64>,
    /// 1σ uncertainty of each transfer value.
    pub uncertainty: Vec<f64>,
    /// Shots per point when the transfer values are binomial frequencies.
    /// When set, the fit weights come from the model's binomial variance
    /// instead of `uncertainty`.
    #[serde(default)]
    pub shots: Option<u64>,
}

impl SidebandSpectrum {
    pub fn new(detunings: Vec<f64>, transfer: Vec<f64>, uncertainty: Vec<f64>) -> Result<Self> {
        let s = Self { detunings, transfer, uncertainty, shots: None };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.detunings.len();
        if self.transfer.len() != n || self.uncertainty.len() != n {
            return domain("spectrum columns have different lengths");
        }
        if self.detunings.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            return domain("detuning grid must be strictly increasing");
        }
        if self.transfer.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return domain("transfer values must lie in [0, 1]");
        }
        if self.uncertainty.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return domain("uncertainties must be finite and > 0");
        }
        if self.shots == Some(0) {
            return domain("shots must be >= 1");
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }

    /// CSV with columns `detuning_khz,transfer,sigma` (detuning as linear frequency).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("detuning_khz,transfer,sigma\n");
        for i in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{},{}",
                self.detunings[i] / TAU / 1e3,
                self.transfer[i],
                self.uncertainty[i]
            );
        }
        out
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            detuning_khz: f64,
            transfer: f64,
            sigma: f64,
        }
        let mut rdr = csv::Reader::from_reader(reader);
        let (mut d, mut t, mut s) = (Vec::new(), Vec::new(), Vec::new());
        for (line, row) in rdr.deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| Error::Parse(format!("spectrum row {}: {e}", line + 1)))?;
            d.push(row.detuning_khz * 1e3 * TAU);
            t.push(row.transfer);
            s.push(row.sigma);
        }
        Self::new(d, t, s)
    }
}

/// Forward-model settings for a synthetic spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    pub nbar: f64,
    /// Trap (sideband) angular frequency, rad/s.
    pub omega: f64,
    /// Lorentzian FWHM, rad/s.
    pub peak_width: f64,
    pub carrier_amp: f64,
    /// Blue-sideband peak height for a ground-state atom.
    pub sideband_amp: f64,
    /// Half-span of the detuning grid in units of `omega`.
    pub span: f64,
    pub points: usize,
    /// Shots per point; also sets the quoted uncertainty of noiseless spectra.
    pub shots: u64,
}

impl SpectrumSpec {
    pub fn new(nbar: f64, omega: f64) -> Self {
        Self {
            nbar,
            omega,
            peak_width: 0.15 * omega,
            carrier_amp: 0.3,
            sideband_amp: 0.5,
            span: 1.6,
            points: 161,
            shots: 200,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.nbar.is_finite() && self.nbar >= 0.0) {
            return domain(format!("nbar must be >= 0, got {}", self.nbar));
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return domain("sideband frequency must be > 0");
        }
        if !(self.peak_width.is_finite() && self.peak_width > 0.0) {
            return domain(format!("peak width must be > 0, got {}", self.peak_width));
        }
        if !(0.0..=1.0).contains(&self.carrier_amp) || !(0.0..=1.0).contains(&self.sideband_amp) {
            return domain("peak amplitudes must lie in [0, 1]");
        }
        if self.span.is_nan() || self.span <= 1.0 || self.points < 3 {
            return domain("grid must extend beyond the sidebands with >= 3 points");
        }
        if self.shots == 0 {
            return domain("shots must be >= 1");
        }
        Ok(())
    }

    /// Blue and red sideband heights: (n̄+1) and n̄ weights normalized by (2n̄+1).
    pub fn sideband_amplitudes(&self) -> (f64, f64) {
        let norm = 2.0 * self.nbar + 1.0;
        (
            self.sideband_amp * (self.nbar + 1.0) / norm,
            self.sideband_amp * self.nbar / norm,
        )
    }
}

fn lorentz(x: f64, center: f64, fwhm: f64) -> f64 {
    let z = 2.0 * (x - center) / fwhm;
    1.0 / (1.0 + z * z)
}

/// Expected transfer at detuning `delta`.
pub fn spectrum_model(spec: &SpectrumSpec, delta: f64) -> f64 {
    let (blue, red) = spec.sideband_amplitudes();
    let w = spec.peak_width;
    (spec.carrier_amp * lorentz(delta, 0.0, w)
        + blue * lorentz(delta, spec.omega, w)
        + red * lorentz(delta, -spec.omega, w))
    .clamp(0.0, 1.0)
}

/// Binomial standard deviation of a transfer frequency with the
/// probability regularized away from 0 and 1.
fn binomial_sigma(successes: f64, shots: f64) -> f64 {
    let p = (successes + 1.0) / (shots + 2.0);
    (p * (1.0 - p) / shots).sqrt()
}

/// Synthesizes a spectrum; with `noise_seed` each point is binomially sampled
/// with `spec.shots` shots, point `i` drawing from stream `(seed, i)`.
pub fn synthesize_spectrum(spec: &SpectrumSpec, noise_seed: Option<u64>) -> Result<SidebandSpectrum> {
    spec.validate()?;
    let half = spec.span * spec.omega;
    let n = spec.points;
    let detunings: Vec<f64> = (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect();
    let shots = spec.shots as f64;
    let mut transfer = Vec::with_capacity(n);
    let mut uncertainty = Vec::with_capacity(n);
    for (i, &d) in detunings.iter().enumerate() {
        let p = spectrum_model(spec, d);
        let k = match noise_seed {
            Some(seed) => {
                let dist = Binomial::new(spec.shots, p)
                    .map_err(|e| Error::Domain(format!("binomial sampling: {e}")))?;
                dist.sample(&mut rng::stream(seed, i as u64)) as f64
            }
            None => p * shots,
        };
        transfer.push(k / shots);
        uncertainty.push(binomial_sigma(k, shots));
    }
    let mut out = SidebandSpectrum::new(detunings, transfer, uncertainty)?;
    out.shots = Some(spec.shots);
    Ok(out)
}

pub fn nbar_to_population(nbar: f64) -> Result<f64> {
    if !(nbar.is_finite() && nbar >= 0.0) {
        return domain(format!("nbar must be >= 0, got {nbar}"));
    }
    Ok(1.0 / (1.0 + nbar))
}

pub fn population_to_nbar(p0: f64) -> Result<f64> {
    if !(p0 > 0.0 && p0 <= 1.0) {
        return domain(format!("ground-state population must be in (0, 1], got {p0}"));
    }
    Ok(1.0 / p0 - 1.0)
}

fn ratio_to_nbar(r: f64) -> f64 {
    r / (1.0 - r)
}

/// Carrier + red/blue sideband Lorentzians; parameters
/// `[carrier_amp, blue_amp, ratio, fwhm, sideband_freq]` in scaled units.
struct SidebandModel;

const P_CARRIER: usize = 0;
const P_BLUE: usize = 1;
const P_RATIO: usize = 2;
const P_WIDTH: usize = 3;
const P_FREQ: usize = 4;

impl Model for SidebandModel {
    fn n_params(&self) -> usize {
        5
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        let w = p[P_WIDTH];
        p[P_CARRIER] * lorentz(x, 0.0, w)
            + p[P_BLUE] * (lorentz(x, p[P_FREQ], w) + p[P_RATIO] * lorentz(x, -p[P_FREQ], w))
    }

    fn gradient(&self, x: f64, p: &[f64], g: &mut [f64]) {
        let w = p[P_WIDTH];
        // L, ∂L/∂center, ∂L/∂w
        let parts = |c: f64| {
            let z = 2.0 * (x - c) / w;
            let d = 1.0 + z * z;
            (1.0 / d, 4.0 * z / (w * d * d), 2.0 * z * z / (w * d * d))
        };
        let (l0, _, l0w) = parts(0.0);
        let (lb, lbc, lbw) = parts(p[P_FREQ]);
        let (lr, lrc, lrw) = parts(-p[P_FREQ]);
        let (ab, r) = (p[P_BLUE], p[P_RATIO]);
        g[P_CARRIER] = l0;
        g[P_BLUE] = lb + r * lr;
        g[P_RATIO] = ab * lr;
        g[P_WIDTH] = p[P_CARRIER] * l0w + ab * (lbw + r * lrw);
        g[P_FREQ] = ab * (lbc - r * lrc);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Amplitudes {
    pub carrier: f64,
    pub red: f64,
    pub blue: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Widths {
    /// Shared Lorentzian FWHM, kHz.
    pub fwhm_khz: f64,
    pub fwhm_khz_err: f64,
}

/// Result of a sideband-ratio fit. Serializes to the JSON fit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermometryFit {
    pub nbar: f64,
    /// Distance from `nbar` to the lower end of the 1σ profile interval.
    pub nbar_err_lo: f64,
    /// Distance from `nbar` to the upper end of the 1σ profile interval.
    pub nbar_err_hi: f64,
    /// First-order (covariance) 1σ on `nbar`.
    pub nbar_err_linear: f64,
    pub p0: f64,
    pub p0_err_lo: f64,
    pub p0_err_hi: f64,
    pub ratio: f64,
    pub ratio_err: f64,
    pub amplitudes: Amplitudes,
    pub widths: Widths,
    pub sideband_khz: f64,
    pub chi2: f64,
    pub ndof: usize,
    pub assumptions: Vec<String>,
}

impl ThermometryFit {
    /// Whether `nbar_true` lies within `k` profile-interval sigmas of the fit.
    pub fn within(&self, nbar_true: f64, k: f64) -> bool {
        if nbar_true >= self.nbar {
            nbar_true - self.nbar <= k * self.nbar_err_hi
        } else {
            self.nbar - nbar_true <= k * self.nbar_err_lo
        }
    }
}

struct Data {
    xs: Vec<f64>,
    ys: Vec<f64>,
    sig: Vec<f64>,
}

fn initial_guess(d: &Data) -> [f64; 5] {
    let n = d.xs.len();
    // 5-point running mean so single noisy points cannot pass for peaks
    let sm: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(2), (i + 3).min(n));
            d.ys[a..b].iter().sum::<f64>() / (b - a) as f64
        })
        .collect();
    let center = (0..n)
        .min_by(|&a, &b| d.xs[a].abs().total_cmp(&d.xs[b].abs()))
        .unwrap_or(0);
    let carrier = d.ys[center].max(1e-3);
    // walk out of the carrier lobe, then take the highest point beyond it
    let mut i = center;
    while i + 1 < n && sm[i] > 0.5 * sm[center] {
        i += 1;
    }
    while i + 1 < n && sm[i + 1] <= sm[i] {
        i += 1;
    }
    let blue_idx = (i..n).max_by(|&a, &b| sm[a].total_cmp(&sm[b])).unwrap_or(n - 1);
    let freq = d.xs[blue_idx].max(1e-3);
    let blue = sm[blue_idx].max(1e-3);
    let red_idx = (0..n)
        .min_by(|&a, &b| (d.xs[a] + freq).abs().total_cmp(&(d.xs[b] + freq).abs()))
        .unwrap_or(0);
    let ratio = (sm[red_idx] / blue).clamp(0.0, 0.9);
    // half-maximum width around the blue peak
    let half = blue / 2.0;
    let mut lo = blue_idx;
    while lo > 0 && sm[lo] > half {
        lo -= 1;
    }
    let mut hi = blue_idx;
    while hi + 1 < n && sm[hi] > half {
        hi += 1;
    }
    let spacing = (d.xs[n - 1] - d.xs[0]) / (n - 1) as f64;
    let width = (d.xs[hi] - d.xs[lo]).max(3.0 * spacing).min(freq);
    [carrier, blue, ratio, width, freq]
}

fn fit_with(d: &Data, init: &[f64], free: &[bool]) -> Result<FitResult> {
    levenberg_marquardt(&SidebandModel, &d.xs, &d.ys, &d.sig, init, free, LmOptions::default())
}

/// Full fit with the ratio held at the physical boundary r = 0 if it goes negative.
fn fit_constrained(d: &Data, init: &[f64]) -> Result<FitResult> {
    let mut start = init.to_vec();
    start[P_RATIO] = start[P_RATIO].max(0.0);
    let best = fit_with(d, &start, &[true; 5])?;
    if best.params[P_RATIO] >= 0.0 {
        return Ok(best);
    }
    let mut pinned = best.params.clone();
    pinned[P_RATIO] = 0.0;
    fit_with(d, &pinned, &[true, true, false, true, true])
}

fn profile_chi2(d: &Data, best: &FitResult, r: f64) -> Result<f64> {
    let mut init = best.params.clone();
    init[P_RATIO] = r;
    let free = [true, true, false, true, true];
    Ok(fit_with(d, &init, &free)?.chi2)
}

/// Finds where the χ² profile in r crosses `target`, searching from `inside`
/// (below target) toward `outside` (above target) by bisection.
fn bisect_profile(d: &Data, best: &FitResult, target: f64, mut inside: f64, mut outside: f64) -> Result<f64> {
    for _ in 0..60 {
        let mid = 0.5 * (inside + outside);
        if profile_chi2(d, best, mid)? < target {
            inside = mid;
        } else {
            outside = mid;
        }
        if (outside - inside).abs() < 1e-9 {
            break;
        }
    }
    Ok(0.5 * (inside + outside))
}

/// Fits carrier plus both sidebands and converts the sideband ratio into n̄.
pub fn fit_sidebands(spectrum: &SidebandSpectrum) -> Result<ThermometryFit> {
    spectrum.validate()?;
    if spectrum.len() < 10 {
        return domain("spectrum has too few points to resolve both sidebands");
    }
    let scale = spectrum.detunings.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let d = Data {
        xs: spectrum.detunings.iter().map(|x| x / scale).collect(),
        ys: spectrum.transfer.clone(),
        sig: spectrum.uncertainty.clone(),
    };
    let mut d = d;
    let init = initial_guess(&d);
    let mut best = fit_constrained(&d, &init)?;
    if let Some(shots) = spectrum.shots {
        // weights from the measured frequencies favor points that fluctuated
        // low; iterate with the binomial variance of the fitted model instead
        let n = shots as f64;
        for _ in 0..5 {
            let prev = best.params.clone();
            d.sig = d
                .xs
                .iter()
                .map(|&x| binomial_sigma(SidebandModel.eval(x, &best.params).clamp(0.0, 1.0) * n, n))
                .collect();
            best = fit_constrained(&d, &prev)?;
            let moved = best
                .params
                .iter()
                .zip(&prev)
                .any(|(a, b)| (a - b).abs() > 1e-10 * (b.abs() + 1e-6));
            if !moved {
                break;
            }
        }
    }
    let p = best.params.clone();
    let (width, freq) = (p[P_WIDTH].abs(), p[P_FREQ]);
    if freq.is_nan() || freq <= 0.0 || p[P_BLUE] <= 0.0 {
        return Err(Error::Numerical {
            message: "fit did not locate a blue sideband".into(),
            diagnostics: format!("params {p:?}"),
        });
    }
    for c in [freq, -freq] {
        let count = d.xs.iter().filter(|&&x| (x - c).abs() <= width).count();
        if count < 5 {
            return domain(format!(
                "sideband at {:.3} kHz covered by {count} points; need >= 5",
                c * scale / TAU / 1e3
            ));
        }
    }
    let r = p[P_RATIO];
    if r >= 1.0 {
        return Err(Error::FitInvalid(format!(
            "sideband ratio {r:.4} >= 1: beyond the ratio method's domain"
        )));
    }
    let r_err = best.stderr(P_RATIO).max(1e-12);
    let target = best.chi2 + 1.0;

    // upper edge of the 1σ profile interval
    let mut outside = r + r_err;
    while outside < 0.999 && profile_chi2(&d, &best, outside)? < target {
        outside = (r + 2.0 * (outside - r)).min(0.999);
    }
    let r_hi = if profile_chi2(&d, &best, outside)? < target {
        outside
    } else {
        bisect_profile(&d, &best, target, r, outside)?
    };
    // lower edge, floored at r = 0
    let r_lo = if r <= 0.0 || profile_chi2(&d, &best, 0.0)? < target {
        0.0
    } else {
        let mut outside = (r - r_err).max(0.0);
        while outside > 0.0 && profile_chi2(&d, &best, outside)? < target {
            outside = (r - 2.0 * (r - outside)).max(0.0);
        }
        bisect_profile(&d, &best, target, r, outside)?
    };

    let nbar = ratio_to_nbar(r);
    let (n_lo, n_hi) = (ratio_to_nbar(r_lo), ratio_to_nbar(r_hi));
    let p0 = 1.0 / (1.0 + nbar);
    let to_khz = scale / TAU / 1e3;
    Ok(ThermometryFit {
        nbar,
        nbar_err_lo: nbar - n_lo,
        nbar_err_hi: n_hi - nbar,
        nbar_err_linear: r_err / (1.0 - r).powi(2),
        p0,
        p0_err_lo: p0 - 1.0 / (1.0 + n_hi),
        p0_err_hi: 1.0 / (1.0 + n_lo) - p0,
        ratio: r,
        ratio_err: r_err,
        amplitudes: Amplitudes { carrier: p[P_CARRIER], red: r * p[P_BLUE], blue: p[P_BLUE] },
        widths: Widths { fwhm_khz: width * to_khz, fwhm_khz_err: best.stderr(P_WIDTH) * to_khz },
        sideband_khz: freq * to_khz,
        chi2: best.chi2,
        ndof: best.ndof,
        assumptions: vec![
            "thermal motional state".into(),
            "resolved sidebands".into(),
            "Lorentzian line shape with shared width".into(),
        ],
    })
}
