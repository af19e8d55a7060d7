//! The five subcommands. Each returns its output files in memory so nothing
//! is written unless the whole computation succeeds.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::fs::File;

use recoilslit::dynamics::{time_binned_visibility_with_snapshots, wigner_histogram};
use recoilslit::fringes::{
    bootstrap_visibility, dephasing_factor, fit_fringe, fit_unbalance, lock_residual_simulation, synthesize_fringe,
    FringeDataset, FringeMeta, FringeSpec,
};
use recoilslit::physics::{eta, eta_eff, visibility, MotionalState};
use recoilslit::thermometry::{fit_sidebands, synthesize_spectrum, SidebandSpectrum, SpectrumSpec};
use serde::Serialize;
use serde_json::json;

use crate::error::CliError;
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    VisibilityScan,
    Dynamics,
    Thermometry,
    Fringe,
    LockSim,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VisibilityScan => "visibility-scan",
            Command::Dynamics => "dynamics",
            Command::Thermometry => "thermometry",
            Command::Fringe => "fringe",
            Command::LockSim => "lock-sim",
        }
    }
}

/// A file to be written, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub path: String,
    pub bytes: Vec<u8>,
}

impl Output {
    fn text(path: impl Into<String>, text: String) -> Self {
        Self { path: path.into(), bytes: text.into_bytes() }
    }

    fn json<T: Serialize>(path: impl Into<String>, value: &T) -> Self {
        let mut s = serde_json::to_string_pretty(value).expect("report serializes");
        s.push('\n');
        Self::text(path, s)
    }
}

/// Files produced by a command plus a one-paragraph summary for the terminal.
#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub files: Vec<Output>,
    pub summary: String,
}

fn core<T>(context: &str, r: recoilslit::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::from_core(context, e))
}

pub fn execute(cmd: Command, sc: &Scenario) -> Result<CommandOutput, CliError> {
    match cmd {
        Command::VisibilityScan => visibility_scan(sc),
        Command::Dynamics => dynamics(sc),
        Command::Thermometry => thermometry(sc),
        Command::Fringe => fringe(sc),
        Command::LockSim => lock_sim(sc),
    }
}

/// Closed-form η and visibilities at one depth.
struct ScanRow {
    omega: f64,
    dp_hbark: f64,
    eta: f64,
    v_ideal: f64,
    v_thermal: f64,
}

fn scan_row(sc: &Scenario, depth_mk: f64, nbar: f64, projection: f64) -> recoilslit::Result<ScanRow> {
    let c = sc.physical_constants();
    let trap = sc.trap_model()?.with_depth(depth_mk)?;
    let omega = trap.axial_frequency();
    let state = MotionalState::ground(omega, &c)?;
    let hk = c.recoil_momentum();
    let e = eta(state.delta_p0(), projection, hk)?;
    Ok(ScanRow {
        omega,
        dp_hbark: state.delta_p0() / hk,
        eta: e,
        v_ideal: visibility(e),
        v_thermal: visibility(eta_eff(e, nbar)?),
    })
}

fn visibility_scan(sc: &Scenario) -> Result<CommandOutput, CliError> {
    let s = &sc.scan;
    let mut csv = String::from("depth_mk,omega_ax_khz,dp_hbark,eta,nbar,v_ideal,v_thermal\n");
    let mut summary = String::new();
    for (i, &d) in s.depths_mk.iter().enumerate() {
        let nbar = s.nbar_at(i);
        let r = core(&format!("scan.depths_mk[{i}]"), scan_row(sc, d, nbar, s.axial_projection))?;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            d,
            r.omega / TAU / 1e3,
            r.dp_hbark,
            r.eta,
            nbar,
            r.v_ideal,
            r.v_thermal
        );
        let _ = writeln!(
            summary,
            "{d:>7.3} mK  Δp = {:.4} ħk  η = {:.4}  V = {:.4} (n̄ = {nbar}: {:.4})",
            r.dp_hbark, r.eta, r.v_ideal, r.v_thermal
        );
    }
    Ok(CommandOutput { files: vec![Output::text("visibility_scan.csv", csv)], summary })
}

fn dynamics(sc: &Scenario) -> Result<CommandOutput, CliError> {
    let d = &sc.dynamics;
    let c = sc.physical_constants();
    let ctx = "dynamics";
    let trap = core(ctx, sc.trap_model().and_then(|t| t.with_depth(d.depth_mk)))?;
    let state = core(ctx, MotionalState::new(trap.axial_frequency(), d.nbar, &c))?;
    let scat = sc.scattering();
    let static_row = core(ctx, scan_row(sc, d.depth_mk, d.nbar, d.axial_projection))?;
    let (series, snapshots) = core(
        ctx,
        time_binned_visibility_with_snapshots(
            &state,
            &trap,
            &scat,
            d.total_time_us * 1e-6,
            d.bin_width_us * 1e-6,
            d.n_samples,
            sc.seed,
        ),
    )?;
    let mut files = vec![Output::text("dynamics_series.csv", series.to_csv())];

    let hk = c.recoil_momentum();
    let mut grids = vec![];
    if d.wigner.enabled {
        let widest = |f: &dyn Fn(&recoilslit::dynamics::Ensemble) -> f64| {
            snapshots.iter().map(f).fold(0.0f64, f64::max)
        };
        let x_half = match d.wigner.x_half_range_um {
            Some(x) => x * 1e-6,
            None => 5.0 * widest(&|e| e.variances().0.sqrt()),
        };
        let p_half = match d.wigner.p_half_range_hbark {
            Some(p) => p * hk,
            None => 5.0 * widest(&|e| e.variances().1.sqrt()),
        };
        for (b, e) in snapshots.iter().enumerate() {
            let g = core(
                "dynamics.wigner",
                wigner_histogram(e, (-x_half, x_half), (-p_half, p_half), (d.wigner.x_bins, d.wigner.p_bins)),
            )?;
            let path = format!("wigner/bin_{b:02}.csv");
            files.push(Output::text(path.clone(), g.to_csv(hk)));
            grids.push(path);
        }
    }
    let report = json!({
        "omega_ax_khz": static_row.omega / TAU / 1e3,
        "eta": static_row.eta,
        "v_static": static_row.v_thermal,
        "bins": series.len(),
        "n_samples": d.n_samples,
        "antitrap_factor": d.antitrap_factor,
        "emission_pattern": d.emission_pattern,
        "visibility": series.visibility,
        "visibility_stderr": series.stderr,
        "nbar": series.nbar,
        "nbar_stderr": series.nbar_stderr,
        "wigner_grids": grids,
    });
    files.push(Output::json("dynamics_summary.json", &report));
    let summary = format!(
        "{} bins, static V = {:.4}; first bin V = {:.4} ± {:.4}, last bin V = {:.4} ± {:.4}; n̄ {:.3} → {:.3}\n",
        series.len(),
        static_row.v_thermal,
        series.visibility[0],
        series.stderr[0],
        series.visibility[series.len() - 1],
        series.stderr[series.len() - 1],
        series.nbar[0],
        series.nbar[series.len() - 1],
    );
    Ok(CommandOutput { files, summary })
}

fn thermometry(sc: &Scenario) -> Result<CommandOutput, CliError> {
    let th = &sc.thermometry;
    let spectrum = match &th.spectrum_path {
        Some(path) => {
            let file = File::open(path)
                .map_err(|e| CliError::from_core("thermometry.spectrum_path", recoilslit::Error::Io(e)))?;
            let mut s = core("thermometry.spectrum_path", SidebandSpectrum::from_csv(file))?;
            s.shots = th.spectrum_shots;
            s
        }
        None => {
            let omega = match th.sideband_khz {
                Some(f) => TAU * f * 1e3,
                None => core("thermometry.depth_mk", sc.trap_model().and_then(|t| t.with_depth(th.depth_mk)))?
                    .axial_frequency(),
            };
            let spec = SpectrumSpec {
                nbar: th.nbar,
                omega,
                peak_width: th.fwhm_khz.map_or(0.15 * omega, |w| TAU * w * 1e3),
                carrier_amp: th.carrier_amp,
                sideband_amp: th.sideband_amp,
                span: th.span,
                points: th.points,
                shots: th.shots,
            };
            let seed = (!th.noiseless).then_some(sc.seed);
            core("thermometry", synthesize_spectrum(&spec, seed))?
        }
    };
    let fit = core("thermometry", fit_sidebands(&spectrum))?;
    let summary = format!(
        "n̄ = {:.4} (−{:.4} +{:.4}), p0 = {:.4} (−{:.4} +{:.4}), sideband ratio {:.4} ± {:.4}, χ²/ndof = {:.1}/{}\n",
        fit.nbar,
        fit.nbar_err_lo,
        fit.nbar_err_hi,
        fit.p0,
        fit.p0_err_lo,
        fit.p0_err_hi,
        fit.ratio,
        fit.ratio_err,
        fit.chi2,
        fit.ndof
    );
    Ok(CommandOutput {
        files: vec![
            Output::text("thermometry_spectrum.csv", spectrum.to_csv()),
            Output::json("thermometry_fit.json", &fit),
        ],
        summary,
    })
}

fn fringe(sc: &Scenario) -> Result<CommandOutput, CliError> {
    let f = &sc.fringe;
    let mut files = vec![];
    let (fit, v_in) = match &f.data_path {
        Some(path) => {
            let file =
                File::open(path).map_err(|e| CliError::from_core("fringe.data_path", recoilslit::Error::Io(e)))?;
            let ds = core("fringe.data_path", FringeDataset::from_csv(file))?;
            let mut fit = core("fringe", fit_fringe(&ds))?;
            if f.bootstrap_replicates >= 2 {
                fit.bootstrap_err = Some(core("fringe", bootstrap_visibility(&ds, f.bootstrap_replicates, sc.seed))?);
            }
            files.push(Output::text("fringe_data.csv", ds.to_csv()));
            (fit, None)
        }
        None => {
            let v = match f.visibility {
                Some(v) => v,
                None => core("fringe.depth_mk", scan_row(sc, f.depth_mk, f.nbar, 1.0))?.v_thermal,
            };
            let spec = FringeSpec {
                visibility: v,
                phase_offset: f.phase_offset_rad,
                n_points: f.points,
                mean_counts: f.mean_counts,
                phase_noise_rms: f.phase_noise_mrad * 1e-3,
            };
            let fit = if f.noiseless {
                let data = core("fringe", spec.expected_unbalance())?;
                let mut csv = String::from("phase_rad,unbalance,sigma\n");
                for i in 0..data.phases.len() {
                    let _ = writeln!(csv, "{},{},{}", data.phases[i], data.unbalance[i], data.sigma[i]);
                }
                files.push(Output::text("fringe_expected.csv", csv));
                core("fringe", fit_unbalance(&data))?
            } else {
                let mut ds = core("fringe", synthesize_fringe(&spec, sc.seed))?;
                ds.meta = FringeMeta { depth_mk: Some(f.depth_mk), scattering_rate_mhz: None };
                let mut fit = core("fringe", fit_fringe(&ds))?;
                if f.bootstrap_replicates >= 2 {
                    fit.bootstrap_err =
                        Some(core("fringe", bootstrap_visibility(&ds, f.bootstrap_replicates, sc.seed))?);
                }
                files.push(Output::text("fringe_data.csv", ds.to_csv()));
                fit
            };
            (fit, Some((v, spec.effective_visibility())))
        }
    };
    let mut summary = format!(
        "V = {:.4} ± {:.4}, φ₀ = {:.4} ± {:.4} rad, baseline {:.4}, χ²/ndof = {:.1}/{}\n",
        fit.visibility, fit.visibility_err, fit.phase_offset, fit.phase_offset_err, fit.baseline, fit.chi2, fit.ndof
    );
    if let Some((v, v_eff)) = v_in {
        let _ = writeln!(summary, "input V = {v:.4}, after phase noise {v_eff:.6}");
    }
    if let Some(b) = fit.bootstrap_err {
        let _ = writeln!(summary, "bootstrap σ(V) = {b:.4}");
    }
    files.push(Output::json("fringe_fit.json", &fit));
    Ok(CommandOutput { files, summary })
}

#[derive(Serialize)]
struct LockReport {
    residual_rms_mrad: f64,
    open_loop_rms_rad: f64,
    suppression: f64,
    locked: bool,
    saturated: bool,
    dephasing_factor: f64,
    target_rms_mrad: f64,
    beat_khz: f64,
    servo_bandwidth_hz: f64,
    duration_s: f64,
    samples: usize,
}

fn lock_sim(sc: &Scenario) -> Result<CommandOutput, CliError> {
    let l = &sc.lock;
    let sim = core("lock", lock_residual_simulation(&sc.lock_model(), l.duration_s, sc.seed))?;
    let mut csv = String::from("t_s,phase_rad\n");
    for i in (0..sim.times.len()).step_by(l.trace_decimation) {
        let _ = writeln!(csv, "{},{}", sim.times[i], sim.phase[i]);
    }
    let report = LockReport {
        residual_rms_mrad: sim.residual_rms * 1e3,
        open_loop_rms_rad: sim.open_loop_rms,
        suppression: sim.open_loop_rms / sim.residual_rms,
        locked: sim.locked,
        saturated: sim.saturated,
        dephasing_factor: dephasing_factor(sim.residual_rms),
        target_rms_mrad: l.residual_rms_mrad,
        beat_khz: l.beat_khz,
        servo_bandwidth_hz: l.servo_bandwidth_hz,
        duration_s: l.duration_s,
        samples: sim.times.len(),
    };
    let summary = format!(
        "closed-loop rms {:.2} mrad (open loop {:.3} rad), {}, dephasing factor {:.6}\n",
        report.residual_rms_mrad,
        report.open_loop_rms_rad,
        match (sim.locked, sim.saturated) {
            (true, _) => "locked",
            (false, true) => "actuator saturated",
            (false, false) => "servo off",
        },
        report.dephasing_factor
    );
    Ok(CommandOutput {
        files: vec![Output::text("lock_trace.csv", csv), Output::json("lock_report.json", &report)],
        summary,
    })
}
