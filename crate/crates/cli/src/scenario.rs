//! Scenario document: one JSON file, unit-suffixed keys, every field
//! defaulted to the published settings.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use recoilslit::dynamics::{EmissionPattern, ScatteringParams};
use recoilslit::fringes::PhaseLockModel;
use recoilslit::physics::constants::{BOLTZMANN, GAMMA_D2, HBAR, LAMBDA_D2, MASS_RB87};
use recoilslit::physics::{PhysicalConstants, TrapModel};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Issue};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub constants: Constants,
    pub trap: Trap,
    pub scan: Scan,
    pub dynamics: Dynamics,
    pub thermometry: Thermometry,
    pub fringe: Fringe,
    pub lock: Lock,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            seed: 1,
            constants: Constants::default(),
            trap: Trap::default(),
            scan: Scan::default(),
            dynamics: Dynamics::default(),
            thermometry: Thermometry::default(),
            fringe: Fringe::default(),
            lock: Lock::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constants {
    pub hbar_js: f64,
    pub boltzmann_jpk: f64,
    pub mass_kg: f64,
    pub wavelength_nm: f64,
    /// Natural linewidth Γ/2π.
    pub linewidth_mhz: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            hbar_js: HBAR,
            boltzmann_jpk: BOLTZMANN,
            mass_kg: MASS_RB87,
            wavelength_nm: LAMBDA_D2 * 1e9,
            linewidth_mhz: GAMMA_D2 / TAU / 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Trap {
    pub anchor_depth_mk: f64,
    pub anchor_dp_hbark: f64,
    pub anchor_radial_khz: f64,
}

impl Default for Trap {
    fn default() -> Self {
        Self { anchor_depth_mk: 10.49, anchor_dp_hbark: 1.60, anchor_radial_khz: 300.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scan {
    pub depths_mk: Vec<f64>,
    /// One value per depth, or a single value applied to all depths.
    pub nbar: Vec<f64>,
    pub axial_projection: f64,
}

impl Default for Scan {
    fn default() -> Self {
        Self {
            depths_mk: vec![0.60, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.49],
            // linear in depth from 0.37 at the shallowest to 0.08 at the deepest trap
            nbar: vec![0.37, 0.358, 0.344, 0.329, 0.300, 0.270, 0.241, 0.212, 0.182, 0.153, 0.124, 0.08],
            axial_projection: 1.0,
        }
    }
}

impl Scan {
    pub fn nbar_at(&self, i: usize) -> f64 {
        if self.nbar.len() == 1 {
            self.nbar[0]
        } else {
            self.nbar[i]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Dynamics {
    pub depth_mk: f64,
    pub nbar: f64,
    pub rate_mhz: f64,
    pub saturation: f64,
    pub antitrap_factor: f64,
    pub emission_pattern: EmissionPattern,
    pub axial_projection: f64,
    pub total_time_us: f64,
    pub bin_width_us: f64,
    pub n_samples: usize,
    pub wigner: Wigner,
}

impl Default for Dynamics {
    fn default() -> Self {
        Self {
            depth_mk: 10.49,
            nbar: 0.0,
            rate_mhz: 6.7,
            saturation: 0.1,
            antitrap_factor: recoilslit::dynamics::DEFAULT_ANTITRAP_FACTOR,
            emission_pattern: EmissionPattern::Dipole,
            axial_projection: 1.0,
            total_time_us: 15.0,
            bin_width_us: 1.0,
            n_samples: 100_000,
            wigner: Wigner::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Wigner {
    pub enabled: bool,
    pub x_bins: usize,
    pub p_bins: usize,
    /// Half-width of the position window; null sizes it to the widest snapshot.
    pub x_half_range_um: Option<f64>,
    pub p_half_range_hbark: Option<f64>,
}

impl Default for Wigner {
    fn default() -> Self {
        Self { enabled: true, x_bins: 41, p_bins: 41, x_half_range_um: None, p_half_range_hbark: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thermometry {
    /// Fit this CSV (detuning_khz,transfer,sigma) instead of a synthetic spectrum.
    pub spectrum_path: Option<PathBuf>,
    /// Shots per point of the file data, if known; enables model-based weights.
    pub spectrum_shots: Option<u64>,
    pub nbar: f64,
    /// Sideband frequency; null uses the axial frequency at `depth_mk`.
    pub sideband_khz: Option<f64>,
    pub depth_mk: f64,
    /// Null uses 15 % of the sideband frequency.
    pub fwhm_khz: Option<f64>,
    pub carrier_amp: f64,
    pub sideband_amp: f64,
    /// Grid half-span in units of the sideband frequency.
    pub span: f64,
    pub points: usize,
    pub shots: u64,
    pub noiseless: bool,
}

impl Default for Thermometry {
    fn default() -> Self {
        Self {
            spectrum_path: None,
            spectrum_shots: None,
            nbar: 0.099,
            sideband_khz: None,
            depth_mk: 10.49,
            fwhm_khz: None,
            carrier_amp: 0.3,
            sideband_amp: 0.5,
            span: 1.6,
            points: 161,
            shots: 200,
            noiseless: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fringe {
    /// Fit this CSV (phase_rad,c1,c2) instead of a synthetic scan.
    pub data_path: Option<PathBuf>,
    /// Null derives the thermal visibility at `depth_mk` and `nbar`.
    pub visibility: Option<f64>,
    pub depth_mk: f64,
    pub nbar: f64,
    pub phase_offset_rad: f64,
    pub points: usize,
    pub mean_counts: f64,
    pub phase_noise_mrad: f64,
    pub noiseless: bool,
    /// Zero disables the bootstrap cross-check.
    pub bootstrap_replicates: usize,
}

impl Default for Fringe {
    fn default() -> Self {
        Self {
            data_path: None,
            visibility: None,
            depth_mk: 10.49,
            nbar: 0.0,
            phase_offset_rad: 0.0,
            points: 20,
            mean_counts: 1000.0,
            phase_noise_mrad: 16.5,
            noiseless: false,
            bootstrap_replicates: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Lock {
    pub residual_rms_mrad: f64,
    pub beat_khz: f64,
    pub actuator_range_rad: f64,
    pub drift_rad_per_sqrt_s: f64,
    pub servo_bandwidth_hz: f64,
    pub thermal_amplitude_rad: f64,
    pub thermal_frequency_hz: f64,
    pub sample_rate_khz: f64,
    pub duration_s: f64,
    /// Keep every n-th sample of the trace.
    pub trace_decimation: usize,
}

impl Default for Lock {
    fn default() -> Self {
        let m = PhaseLockModel::default();
        Self {
            residual_rms_mrad: m.residual_rms * 1e3,
            beat_khz: m.beat_frequency / 1e3,
            actuator_range_rad: m.actuator_range,
            drift_rad_per_sqrt_s: m.drift_rate,
            servo_bandwidth_hz: m.servo_bandwidth,
            thermal_amplitude_rad: m.thermal_amplitude,
            thermal_frequency_hz: m.thermal_frequency,
            sample_rate_khz: m.sample_rate / 1e3,
            duration_s: 2.0,
            trace_decimation: 10,
        }
    }
}

impl Scenario {
    /// Parses a scenario document; unknown keys and type errors are reported
    /// with their path.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Validation(vec![Issue::new(if path == "." { "" } else { &path }, e.inner().to_string())])
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(vec![Issue::new("--scenario", format!("cannot read {}: {e}", path.display()))])
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn physical_constants(&self) -> PhysicalConstants {
        let c = &self.constants;
        PhysicalConstants {
            hbar: c.hbar_js,
            kb: c.boltzmann_jpk,
            mass: c.mass_kg,
            lambda_photon: c.wavelength_nm * 1e-9,
            gamma: TAU * c.linewidth_mhz * 1e6,
        }
    }

    /// Trap calibration at the anchor depth.
    pub fn trap_model(&self) -> recoilslit::Result<TrapModel> {
        TrapModel::from_momentum_anchor(
            &self.physical_constants(),
            self.trap.anchor_depth_mk,
            self.trap.anchor_dp_hbark,
            TAU * self.trap.anchor_radial_khz * 1e3,
        )
    }

    pub fn scattering(&self) -> ScatteringParams {
        let c = self.physical_constants();
        let d = &self.dynamics;
        ScatteringParams {
            rate: d.rate_mhz * 1e6,
            saturation: d.saturation,
            excited_lifetime: c.excited_lifetime(),
            antitrap_factor: d.antitrap_factor,
            emission_pattern: d.emission_pattern,
            recoil_momentum: c.recoil_momentum(),
            axial_projection: d.axial_projection,
        }
    }

    pub fn lock_model(&self) -> PhaseLockModel {
        let l = &self.lock;
        PhaseLockModel {
            residual_rms: l.residual_rms_mrad * 1e-3,
            beat_frequency: l.beat_khz * 1e3,
            actuator_range: l.actuator_range_rad,
            drift_rate: l.drift_rad_per_sqrt_s,
            servo_bandwidth: l.servo_bandwidth_hz,
            thermal_amplitude: l.thermal_amplitude_rad,
            thermal_frequency: l.thermal_frequency_hz,
            sample_rate: l.sample_rate_khz * 1e3,
        }
    }

    /// Checks every field against its module's domain. All problems are
    /// collected before returning.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut v = Checker::default();
        let c = &self.constants;
        v.positive("constants.hbar_js", c.hbar_js);
        v.positive("constants.boltzmann_jpk", c.boltzmann_jpk);
        v.positive("constants.mass_kg", c.mass_kg);
        v.positive("constants.wavelength_nm", c.wavelength_nm);
        v.positive("constants.linewidth_mhz", c.linewidth_mhz);

        let t = &self.trap;
        v.positive("trap.anchor_depth_mk", t.anchor_depth_mk);
        v.positive("trap.anchor_dp_hbark", t.anchor_dp_hbark);
        v.positive("trap.anchor_radial_khz", t.anchor_radial_khz);

        let s = &self.scan;
        if s.depths_mk.is_empty() {
            v.push("scan.depths_mk", "needs at least one depth");
        }
        for (i, d) in s.depths_mk.iter().enumerate() {
            v.positive(&format!("scan.depths_mk[{i}]"), *d);
        }
        if s.nbar.len() != 1 && s.nbar.len() != s.depths_mk.len() {
            v.push(
                "scan.nbar",
                format!("has {} entries; expected 1 or one per depth ({})", s.nbar.len(), s.depths_mk.len()),
            );
        }
        for (i, n) in s.nbar.iter().enumerate() {
            v.non_negative(&format!("scan.nbar[{i}]"), *n);
        }
        v.fraction("scan.axial_projection", s.axial_projection, false);

        let d = &self.dynamics;
        v.positive("dynamics.depth_mk", d.depth_mk);
        v.non_negative("dynamics.nbar", d.nbar);
        v.non_negative("dynamics.rate_mhz", d.rate_mhz);
        v.non_negative("dynamics.saturation", d.saturation);
        v.finite("dynamics.antitrap_factor", d.antitrap_factor);
        v.fraction("dynamics.axial_projection", d.axial_projection, true);
        v.positive("dynamics.total_time_us", d.total_time_us);
        v.positive("dynamics.bin_width_us", d.bin_width_us);
        if d.total_time_us > 0.0 && d.bin_width_us > 0.0 {
            let bins = (d.total_time_us / d.bin_width_us).round();
            if bins < 1.0 || (bins * d.bin_width_us - d.total_time_us).abs() > 1e-9 * d.total_time_us {
                v.push(
                    "dynamics.bin_width_us",
                    format!("{} does not divide total_time_us {}", d.bin_width_us, d.total_time_us),
                );
            }
        }
        if d.n_samples < 1000 {
            v.push("dynamics.n_samples", format!("must be >= 1000, got {}", d.n_samples));
        }
        let w = &d.wigner;
        if w.x_bins < 2 {
            v.push("dynamics.wigner.x_bins", "must be >= 2");
        }
        if w.p_bins < 2 {
            v.push("dynamics.wigner.p_bins", "must be >= 2");
        }
        if let Some(x) = w.x_half_range_um {
            v.positive("dynamics.wigner.x_half_range_um", x);
        }
        if let Some(p) = w.p_half_range_hbark {
            v.positive("dynamics.wigner.p_half_range_hbark", p);
        }

        let th = &self.thermometry;
        if let Some(p) = &th.spectrum_path {
            if !p.is_file() {
                v.push("thermometry.spectrum_path", format!("{} is not a readable file", p.display()));
            }
        }
        if th.spectrum_shots == Some(0) {
            v.push("thermometry.spectrum_shots", "must be >= 1");
        }
        v.non_negative("thermometry.nbar", th.nbar);
        if let Some(f) = th.sideband_khz {
            v.positive("thermometry.sideband_khz", f);
        }
        v.positive("thermometry.depth_mk", th.depth_mk);
        if let Some(w) = th.fwhm_khz {
            v.positive("thermometry.fwhm_khz", w);
        }
        v.fraction("thermometry.carrier_amp", th.carrier_amp, true);
        v.fraction("thermometry.sideband_amp", th.sideband_amp, true);
        if !(th.span.is_finite() && th.span > 1.0) {
            v.push("thermometry.span", format!("must exceed 1 so the grid covers both sidebands, got {}", th.span));
        }
        if th.points < 10 {
            v.push("thermometry.points", format!("must be >= 10, got {}", th.points));
        }
        if th.shots == 0 {
            v.push("thermometry.shots", "must be >= 1");
        }

        let f = &self.fringe;
        if let Some(p) = &f.data_path {
            if !p.is_file() {
                v.push("fringe.data_path", format!("{} is not a readable file", p.display()));
            }
        }
        if let Some(vis) = f.visibility {
            v.fraction("fringe.visibility", vis, true);
        }
        v.positive("fringe.depth_mk", f.depth_mk);
        v.non_negative("fringe.nbar", f.nbar);
        v.finite("fringe.phase_offset_rad", f.phase_offset_rad);
        if f.points < 4 {
            v.push("fringe.points", format!("must be >= 4, got {}", f.points));
        }
        if !(f.mean_counts.is_finite() && f.mean_counts >= 1.0) {
            v.push("fringe.mean_counts", format!("must be >= 1, got {}", f.mean_counts));
        }
        v.non_negative("fringe.phase_noise_mrad", f.phase_noise_mrad);
        if f.bootstrap_replicates == 1 {
            v.push("fringe.bootstrap_replicates", "must be 0 (off) or >= 2");
        }

        let l = &self.lock;
        v.non_negative("lock.residual_rms_mrad", l.residual_rms_mrad);
        v.positive("lock.beat_khz", l.beat_khz);
        v.positive("lock.actuator_range_rad", l.actuator_range_rad);
        v.non_negative("lock.drift_rad_per_sqrt_s", l.drift_rad_per_sqrt_s);
        v.non_negative("lock.servo_bandwidth_hz", l.servo_bandwidth_hz);
        v.non_negative("lock.thermal_amplitude_rad", l.thermal_amplitude_rad);
        v.non_negative("lock.thermal_frequency_hz", l.thermal_frequency_hz);
        v.positive("lock.sample_rate_khz", l.sample_rate_khz);
        if l.sample_rate_khz > 0.0 && l.servo_bandwidth_hz >= 0.0 {
            let step = TAU * l.servo_bandwidth_hz / (l.sample_rate_khz * 1e3);
            if step > 0.5 {
                v.push(
                    "lock.servo_bandwidth_hz",
                    format!("loop gain per sample {step:.3} exceeds 0.5; raise lock.sample_rate_khz"),
                );
            }
        }
        v.positive("lock.duration_s", l.duration_s);
        if l.trace_decimation == 0 {
            v.push("lock.trace_decimation", "must be >= 1");
        }
        if l.duration_s > 0.0 && l.sample_rate_khz > 0.0 && l.duration_s * l.sample_rate_khz * 1e3 > 1e8 {
            v.push("lock.duration_s", "more than 1e8 loop samples requested");
        }

        if v.issues.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(v.issues))
        }
    }
}

#[derive(Default)]
struct Checker {
    issues: Vec<Issue>,
}

impl Checker {
    fn push(&mut self, path: &str, msg: impl Into<String>) {
        self.issues.push(Issue::new(path, msg));
    }

    fn finite(&mut self, path: &str, x: f64) -> bool {
        if !x.is_finite() {
            self.push(path, format!("must be finite, got {x}"));
            return false;
        }
        true
    }

    fn positive(&mut self, path: &str, x: f64) {
        if self.finite(path, x) && x <= 0.0 {
            self.push(path, format!("must be > 0, got {x}"));
        }
    }

    fn non_negative(&mut self, path: &str, x: f64) {
        if self.finite(path, x) && x < 0.0 {
            self.push(path, format!("must be >= 0, got {x}"));
        }
    }

    fn fraction(&mut self, path: &str, x: f64, allow_zero: bool) {
        if !self.finite(path, x) {
            return;
        }
        let ok = if allow_zero { (0.0..=1.0).contains(&x) } else { x > 0.0 && x <= 1.0 };
        if !ok {
            let lo = if allow_zero { "[0" } else { "(0" };
            self.push(path, format!("must lie in {lo}, 1], got {x}"));
        }
    }
}
