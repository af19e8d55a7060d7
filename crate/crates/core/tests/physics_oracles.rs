//! Closed-form physics checked against independent numerical routes.

use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use recoilslit::physics::{
    eta, eta_eff, ground_state_sigmas, momentum_overlap, trap_frequencies, visibility,
    MotionalState, PhysicalConstants, RecoilState, TrapModel,
};
use recoilslit::rng;
use rand::RngExt;

/// ∫ ψ*(p − δ/2) ψ(p + δ/2) dp for the ground-state momentum wavefunction
/// (|ψ|² Gaussian with std Δp), midpoint rule on a fine grid.
fn grid_overlap(delta_p: f64, delta: f64) -> f64 {
    let psi = |p: f64| {
        let norm = (2.0 * PI * delta_p * delta_p).powf(-0.25);
        norm * (-p * p / (4.0 * delta_p * delta_p)).exp()
    };
    let half = 12.0 * delta_p + delta.abs();
    let n = 200_000;
    let h = 2.0 * half / n as f64;
    (0..n)
        .map(|i| {
            let p = -half + (i as f64 + 0.5) * h;
            psi(p - delta / 2.0) * psi(p + delta / 2.0)
        })
        .sum::<f64>()
        * h
}

/// Thermal characteristic function by Fock-space summation:
/// Σ_n p_n e^{−|β|²/2} L_n(|β|²), with |β|² = δ²Δx₀²/ħ² and p_n thermal.
fn fock_overlap(nbar: f64, delta: f64, dx0: f64, hbar: f64) -> f64 {
    let b2 = (delta * dx0 / hbar).powi(2);
    let q = nbar / (1.0 + nbar);
    let mut total = 0.0;
    let mut weight = 1.0 / (1.0 + nbar);
    // Laguerre recurrence
    let (mut l_prev, mut l) = (0.0, 1.0);
    for n in 0..4000 {
        total += weight * l;
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0 - b2) * l - nf * l_prev) / (nf + 1.0);
        l_prev = l;
        l = next;
        weight *= q;
        if weight < 1e-18 {
            break;
        }
    }
    total * (-b2 / 2.0).exp()
}

#[test]
fn overlap_matches_grid_integral_at_anchor() {
    let c = PhysicalConstants::default();
    let s = MotionalState::ground(TAU * 38.7e3, &c).unwrap();
    let delta = 2.0 * c.recoil_momentum();
    let amp = momentum_overlap(&s, delta).unwrap().re;
    let oracle = grid_overlap(s.delta_p(), delta);
    assert!((amp - oracle).abs() < 1e-6, "{amp} vs {oracle}");
    assert!((amp - 0.823).abs() < 2e-3);
}

#[test]
fn thermal_overlap_matches_fock_sum() {
    let c = PhysicalConstants::default();
    let trap = TrapModel::default_anchor(&c).unwrap();
    let s = MotionalState::new(trap.axial_frequency(), 0.37, &c).unwrap();
    let delta = 2.0 * c.recoil_momentum();
    let amp = momentum_overlap(&s, delta).unwrap().re;
    let oracle = fock_overlap(0.37, delta, s.delta_x0(), c.hbar);
    assert!((amp - oracle).abs() < 1e-9, "{amp} vs {oracle}");
    assert!((amp - 0.712).abs() < 1e-3);
}

#[test]
fn overlap_oracles_for_random_states() {
    let c = PhysicalConstants::default();
    let mut r = rng::stream(2024, 0);
    for _ in 0..20 {
        let omega = TAU * (5e3 + 295e3 * r.random::<f64>());
        let nbar = 3.0 * r.random::<f64>();
        let s = MotionalState::new(omega, nbar, &c).unwrap();
        let delta = 4.0 * c.recoil_momentum() * r.random::<f64>();
        let amp = momentum_overlap(&s, delta).unwrap().re;
        let fock = fock_overlap(nbar, delta, s.delta_x0(), c.hbar);
        assert!((amp - fock).abs() < 1e-6, "ω={omega} n̄={nbar} δ={delta}: {amp} vs {fock}");
        // pure-state grid route at the thermally broadened spread
        let ground = MotionalState::ground(omega, &c).unwrap();
        let pure = grid_overlap(ground.delta_p(), delta);
        let amp0 = momentum_overlap(&ground, delta).unwrap().re;
        assert!((amp0 - pure).abs() < 1e-6);
    }
}

#[test]
fn published_endpoints() {
    let c = PhysicalConstants::default();
    let trap = TrapModel::default_anchor(&c).unwrap();
    let hk = c.recoil_momentum();
    let (w_lo, _) = trap_frequencies(&trap, 0.60).unwrap();
    let (_, dp_lo) = ground_state_sigmas(w_lo, c.mass, 0.0, c.hbar).unwrap();
    assert!((dp_lo / hk - 0.78).abs() < 0.01);
    let eta_lo = eta(dp_lo, 1.0, hk).unwrap();
    assert!((visibility(eta_lo) - 0.440).abs() < 0.005);
    let s = MotionalState::ground(trap.axial_frequency(), &c).unwrap();
    let rec = RecoilState::new(&c, &s, 1.0, 0.0).unwrap();
    assert!((rec.eta - 0.3125).abs() < 1e-12);
}

proptest! {
    #[test]
    fn uncertainty_product(omega in 1e3f64..1e7, nbar in 0.0f64..50.0) {
        let c = PhysicalConstants::default();
        let (dx, dp) = ground_state_sigmas(omega, c.mass, nbar, c.hbar).unwrap();
        let expected = c.hbar / 2.0 * (2.0 * nbar + 1.0);
        prop_assert!(((dx * dp) / expected - 1.0).abs() < 1e-12);
        prop_assert!(dx * dp >= c.hbar / 2.0 * (1.0 - 1e-14));
    }

    #[test]
    fn fourth_root_law(depth in 0.01f64..100.0) {
        let c = PhysicalConstants::default();
        let trap = TrapModel::default_anchor(&c).unwrap();
        let (w1, _) = trap_frequencies(&trap, depth).unwrap();
        let (w16, _) = trap_frequencies(&trap, 16.0 * depth).unwrap();
        let (_, dp1) = ground_state_sigmas(w1, c.mass, 0.0, c.hbar).unwrap();
        let (_, dp16) = ground_state_sigmas(w16, c.mass, 0.0, c.hbar).unwrap();
        prop_assert!((dp16 / dp1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn visibility_bounds_and_monotonicity(e in 0.0f64..3.0, de in 1e-6f64..1.0) {
        let v = visibility(e);
        prop_assert!(v > 0.0 && v <= 1.0);
        prop_assert!(visibility(e + de) < v);
    }

    #[test]
    fn thermal_visibility_decreases(eta0 in 0.05f64..1.5, n in 0.0f64..5.0, dn in 1e-4f64..2.0) {
        let v1 = visibility(eta_eff(eta0, n).unwrap());
        let v2 = visibility(eta_eff(eta0, n + dn).unwrap());
        prop_assert!(v2 < v1);
        prop_assert!(eta_eff(eta0, n).unwrap() >= eta0);
    }

    #[test]
    fn visibility_is_continuous_in_depth(depth in 0.6f64..10.49) {
        let c = PhysicalConstants::default();
        let trap = TrapModel::default_anchor(&c).unwrap();
        let v = |d: f64| {
            let (w, _) = trap_frequencies(&trap, d).unwrap();
            let s = MotionalState::new(w, 0.2, &c).unwrap();
            RecoilState::new(&c, &s, 1.0, 0.0).unwrap().visibility()
        };
        prop_assert!((v(depth) - v(depth * (1.0 + 1e-9))).abs() < 1e-8);
    }
}
