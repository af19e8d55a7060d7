use std::f64::consts::TAU;

use rand::RngExt;
use rand_distr::{Distribution, StandardNormal};
use recoilslit::fringes::{
    dephasing_factor, fit_fringe, fit_unbalance, lock_residual_simulation, synthesize_fringe, visibility_budget,
    FringeSpec, PhaseLockModel, UnbalanceData,
};
use recoilslit::rng;
use recoilslit::thermometry::{
    fit_sidebands, nbar_to_population, population_to_nbar, synthesize_spectrum, SpectrumSpec,
};
use recoilslit::Error;

const OMEGA: f64 = TAU * 38.7e3;

#[test]
fn noiseless_round_trip_inside_one_sigma() {
    for nbar in [0.0, 0.0101, 0.099, 0.37, 1.0, 3.0] {
        let spec = SpectrumSpec::new(nbar, OMEGA);
        let fit = fit_sidebands(&synthesize_spectrum(&spec, None).unwrap()).unwrap();
        assert!((fit.nbar - nbar).abs() < 1e-6, "{nbar}: {}", fit.nbar);
        assert!(fit.within(nbar, 1.0));
    }
}

#[test]
fn sampled_round_trip_inside_three_sigma() {
    for (i, nbar) in [0.0101, 0.099, 0.37, 1.0].into_iter().enumerate() {
        for rep in 0..10u64 {
            let spec = SpectrumSpec::new(nbar, OMEGA);
            let s = synthesize_spectrum(&spec, Some(1000 * i as u64 + rep)).unwrap();
            let fit = fit_sidebands(&s).unwrap();
            assert!(fit.within(nbar, 3.0), "n̄={nbar} rep {rep}: {fit:?}");
        }
    }
}

#[test]
fn fitted_nbar_is_monotone_in_ratio() {
    let mut last = -1.0;
    for i in 0..12 {
        let r: f64 = i as f64 / 13.0;
        let nbar = r / (1.0 - r);
        let fit = fit_sidebands(&synthesize_spectrum(&SpectrumSpec::new(nbar, OMEGA), None).unwrap()).unwrap();
        assert!(fit.nbar > last);
        last = fit.nbar;
    }
}

#[test]
fn population_conversion() {
    assert!((population_to_nbar(0.91).unwrap() - 0.098_901_098_9).abs() < 1e-9);
    let mut last = 1.0 + 1e-12;
    for i in 0..50 {
        let p0 = nbar_to_population(0.2 * i as f64).unwrap();
        assert!(p0 > 0.0 && p0 < last);
        last = p0;
    }
}

#[test]
fn inverted_sidebands_are_rejected() {
    let mut s = synthesize_spectrum(&SpectrumSpec::new(0.5, OMEGA), None).unwrap();
    // Mirror the grid so the red peak dominates.
    s.transfer.reverse();
    assert!(matches!(fit_sidebands(&s), Err(Error::FitInvalid(_))));
}

#[test]
fn fringe_pull_distribution() {
    let spec = FringeSpec { visibility: 0.5, phase_offset: 0.3, n_points: 20, mean_counts: 1e3, phase_noise_rms: 0.0 };
    let pulls: Vec<f64> = (0..200)
        .map(|i| {
            let f = fit_fringe(&synthesize_fringe(&spec, 10_000 + i).unwrap()).unwrap();
            (f.visibility - 0.5) / f.visibility_err
        })
        .collect();
    let n = pulls.len() as f64;
    let mean = pulls.iter().sum::<f64>() / n;
    let sd = (pulls.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() < 2.0 * sd / n.sqrt() + 0.05, "mean pull {mean}");
    assert!((0.8..=1.2).contains(&sd), "pull sd {sd}");
}

#[test]
fn noiseless_sinusoid_is_exact() {
    let phases: Vec<f64> = (0..8).map(|i| TAU * i as f64 / 8.0).collect();
    let data = UnbalanceData {
        unbalance: phases.iter().map(|p| 0.5 * p.cos()).collect(),
        sigma: vec![0.01; 8],
        phases,
    };
    let f = fit_unbalance(&data).unwrap();
    assert!((f.visibility - 0.5).abs() < 1e-12);
    assert!(f.phase_offset.abs() < 1e-12);
    assert!(f.baseline.abs() < 1e-12);
}

#[test]
fn dephasing_matches_jitter_average() {
    let mut r = rng::stream(4, 0);
    for sigma in [0.0165, 0.1, 0.5] {
        let n = 400_000;
        let mc = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut r);
                (sigma * z).cos()
            })
            .sum::<f64>()
            / n as f64;
        assert!((mc - dephasing_factor(sigma)).abs() < 1e-3, "σ={sigma}: {mc}");
    }
    assert!((dephasing_factor(0.0165) - 0.999_864).abs() < 1e-6);
}

#[test]
fn budget_combines_thermal_and_phase_factors() {
    let v_q = (-2.0f64 * 0.3125 * 0.3125).exp();
    assert_eq!(visibility_budget(v_q, 0.0, 0.0).unwrap(), v_q);
    let v = visibility_budget(v_q, 0.37, 0.0).unwrap();
    assert!((v - (-2.0f64 * 0.3125 * 0.3125 * 1.74).exp()).abs() < 1e-14);
}

#[test]
fn unbalance_is_bounded() {
    let mut r = rng::stream(8, 0);
    for i in 0..50 {
        let spec = FringeSpec {
            visibility: r.random::<f64>(),
            phase_offset: TAU * r.random::<f64>(),
            n_points: 12,
            mean_counts: 1.0 + 50.0 * r.random::<f64>(),
            phase_noise_rms: 0.2,
        };
        let (u, _) = synthesize_fringe(&spec, i).unwrap().unbalance();
        assert!(u.unbalance.iter().all(|x| x.abs() <= 1.0));
    }
}

#[test]
fn lock_meets_target_and_beats_open_loop() {
    let m = PhaseLockModel::default();
    let on = lock_residual_simulation(&m, 2.0, 11).unwrap();
    assert!(on.locked && !on.saturated);
    assert!(on.residual_rms <= 20e-3, "{}", on.residual_rms);
    let off = lock_residual_simulation(&PhaseLockModel { servo_bandwidth: 0.0, ..m }, 2.0, 11).unwrap();
    assert!(!off.locked);
    assert!(off.residual_rms >= 10.0 * on.residual_rms);
}

#[test]
fn lock_residual_falls_with_gain() {
    let mut last = f64::INFINITY;
    for bw in [100.0, 300.0, 1000.0, 3000.0] {
        let m = PhaseLockModel { servo_bandwidth: bw, ..PhaseLockModel::default() };
        let rms = lock_residual_simulation(&m, 2.0, 5).unwrap().residual_rms;
        assert!(rms <= last, "bandwidth {bw}: {rms} > {last}");
        last = rms;
    }
}

#[test]
fn quiet_lock_is_exact() {
    let m = PhaseLockModel { drift_rate: 0.0, thermal_amplitude: 0.0, ..PhaseLockModel::default() };
    assert_eq!(lock_residual_simulation(&m, 0.1, 1).unwrap().residual_rms, 0.0);
}
