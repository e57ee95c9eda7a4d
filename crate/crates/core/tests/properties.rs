//! Cross-module invariants: algebraic properties of the kernel, symmetry
//! properties of the physical model and decorrelation of the traces.

use fluorcorr_core::correlations::{filtered_g2, g2_homodyned, spectrum, steady_state};
use fluorcorr_core::model::{
    build_full_liouvillian, build_system_liouvillian, lowering, HomodyneFraction, SensorParams,
    SystemParams,
};
use fluorcorr_core::oracle::{cascade_g2, CascadeParams};
use fluorcorr_core::qmatrix::{kron, CMatrix};
use fluorcorr_core::scalar::c;
use proptest::prelude::*;

fn cmatrix_strategy(n: usize) -> impl Strategy<Value = CMatrix<f64>> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n).prop_map(move |entries| {
        CMatrix::from_fn(n, n, |i, j| {
            let (re, im) = entries[i * n + j];
            c(re, im)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_is_associative(
        a in cmatrix_strategy(2),
        b in cmatrix_strategy(3),
        d in cmatrix_strategy(2),
    ) {
        let left = kron(&kron(&a, &b), &d);
        let right = kron(&a, &kron(&b, &d));
        prop_assert!((&left - &right).max_norm() < 1e-12);
    }

    #[test]
    fn cascade_correlation_invariants(
        p in 0.0..1.0f64,
        gamma1 in 0.1..10.0f64,
        gamma2 in 0.1..10.0f64,
        gamma2_bar in 0.1..10.0f64,
    ) {
        let cp = CascadeParams::new(p, gamma1, gamma2, gamma2_bar).unwrap();
        // Decorrelation at long delays.
        let horizon = 60.0 / gamma2.min(gamma2_bar);
        prop_assert!((cascade_g2(&cp, horizon).unwrap() - 1.0).abs() < 1e-9);
        prop_assert!((cascade_g2(&cp, -horizon).unwrap() - 1.0).abs() < 1e-9);
        // Bunched everywhere and monotone toward 1 on each branch.
        let mut prev = f64::INFINITY;
        for i in 1..=40 {
            let tau = 0.05 * i as f64;
            let g = cascade_g2(&cp, tau).unwrap();
            prop_assert!(g >= 1.0 - 1e-12);
            prop_assert!(g <= prev + 1e-12);
            prev = g;
        }
        let mut prev = f64::INFINITY;
        for i in 1..=40 {
            let tau = -0.05 * i as f64;
            let g = cascade_g2(&cp, tau).unwrap();
            prop_assert!(g >= 1.0 - 1e-12);
            prop_assert!(g <= prev + 1e-12);
            prev = g;
        }
    }

    #[test]
    fn homodyned_zero_delay_scales_as_inverse_quartic_drive(
        delta in 0.0..30.0f64,
        log_omega in -4.0..-1.0f64,
    ) {
        let omega = 10f64.powf(log_omega);
        let p1 = SystemParams::new(1.0, omega, delta, 0.0).unwrap();
        let p2 = SystemParams::new(1.0, omega / 2.0, delta, 0.0).unwrap();
        let v1 = fluorcorr_core::oracle::homodyned_g20(&p1).unwrap() * omega.powi(4);
        let v2 = fluorcorr_core::oracle::homodyned_g20(&p2).unwrap() * (omega / 2.0).powi(4);
        // The quartic-rescaled value drifts only through the 8 Omega^2 term.
        prop_assert!((v1 - v2).abs() / v1 < 1e-2);
    }
}

#[test]
fn steady_state_positive_across_parameter_grid() {
    for &omega in &[0.0, 0.1, 1.0, 20.0] {
        for &delta in &[-20.0, 0.0, 20.0] {
            for &gamma_phi in &[0.0, 0.1] {
                let p = SystemParams::new(1.0, omega, delta, gamma_phi).unwrap();
                let l = build_system_liouvillian(&p).unwrap();
                let rho = steady_state(&l).unwrap();
                for ev in rho.eigenvalues().unwrap() {
                    assert!(ev >= -1e-10, "negative population {ev} at ({omega},{delta})");
                }
            }
        }
    }
}

#[test]
fn full_state_positive_and_generator_well_behaved() {
    let p = SystemParams::new(1.0, 0.1, 20.0, 0.0).unwrap();
    let bare = build_system_liouvillian(&p).unwrap();
    let alpha = steady_state(&bare).unwrap().expectation(&lowering());
    for &f in &[0.0, 0.5, 1.0] {
        let s1 = SensorParams::with_default_epsilon(-20.0, 10.0, &p).unwrap();
        let s2 = SensorParams::with_default_epsilon(20.0, 10.0, &p).unwrap();
        let l = build_full_liouvillian(&p, &s1, &s2, HomodyneFraction::new(f).unwrap(), alpha)
            .unwrap();
        assert!(l.trace_preservation_defect() < 1e-12);
        let rho = steady_state(&l).unwrap();
        for ev in rho.eigenvalues().unwrap() {
            assert!(ev >= -1e-10, "negative eigenvalue {ev} at f = {f}");
        }
    }
}

#[test]
fn detuning_sign_symmetry_of_full_steady_state() {
    // Flipping the detuning and both sensor frequencies conjugates the
    // steady state up to the sign gauge (-1)^(total excitation) that maps
    // the drive back to positive amplitude.
    let p_plus = SystemParams::new(1.0, 0.1, 20.0, 0.0).unwrap();
    let p_minus = SystemParams::new(1.0, 0.1, -20.0, 0.0).unwrap();
    let alpha_plus = steady_state(&build_system_liouvillian(&p_plus).unwrap())
        .unwrap()
        .expectation(&lowering());
    let alpha_minus = steady_state(&build_system_liouvillian(&p_minus).unwrap())
        .unwrap()
        .expectation(&lowering());
    assert!((alpha_minus + alpha_plus.conj()).norm() < 1e-12);

    let f = HomodyneFraction::new(0.7).unwrap();
    let s1p = SensorParams::with_default_epsilon(-20.0, 10.0, &p_plus).unwrap();
    let s2p = SensorParams::with_default_epsilon(20.0, 10.0, &p_plus).unwrap();
    let s1m = SensorParams::with_default_epsilon(20.0, 10.0, &p_minus).unwrap();
    let s2m = SensorParams::with_default_epsilon(-20.0, 10.0, &p_minus).unwrap();

    let rho_plus = steady_state(
        &build_full_liouvillian(&p_plus, &s1p, &s2p, f, alpha_plus).unwrap(),
    )
    .unwrap();
    let rho_minus = steady_state(
        &build_full_liouvillian(&p_minus, &s1m, &s2m, f, alpha_minus).unwrap(),
    )
    .unwrap();

    let sign = |state: usize| -> f64 {
        let e = (state >> 2) & 1;
        let s1 = (state >> 1) & 1;
        let s2 = state & 1;
        if (e + s1 + s2) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    };
    let mp = rho_plus.matrix();
    let mm = rho_minus.matrix();
    let mut worst = 0.0f64;
    for i in 0..8 {
        for j in 0..8 {
            let mapped = mp[(i, j)].conj() * c(sign(i) * sign(j), 0.0);
            worst = worst.max((mm[(i, j)] - mapped).norm());
        }
    }
    assert!(worst < 1e-12, "symmetry violated by {worst}");
}

#[test]
fn sensor_back_action_scales_quadratically() {
    // <sigma^dag sigma> shifts by O(eps^2) when sensors attach; halving
    // epsilon quarters the shift.
    let p = SystemParams::new(1.0, 0.1, 20.0, 0.0).unwrap();
    let bare = build_system_liouvillian(&p).unwrap();
    let rho_bare = steady_state(&bare).unwrap();
    let alpha = rho_bare.expectation(&lowering());
    let sigma = lowering::<f64>();
    let n_op = &sigma.dagger() * &sigma;
    let n_bare = rho_bare.expectation(&n_op).re;

    let n_at = |eps: f64| -> f64 {
        let s1 = SensorParams::new(-20.0, 10.0, eps).unwrap();
        let s2 = SensorParams::new(20.0, 10.0, eps).unwrap();
        let l = build_full_liouvillian(&p, &s1, &s2, HomodyneFraction::none(), alpha).unwrap();
        let rho = steady_state(&l).unwrap();
        let reduced = rho.reduce_to_emitter();
        reduced[(1, 1)].re
    };
    let shift_full = (n_at(8e-3) - n_bare).abs();
    let shift_half = (n_at(4e-3) - n_bare).abs();
    let ratio = shift_full / shift_half;
    assert!(
        (2.5..6.0).contains(&ratio),
        "back-action ratio {ratio} (shifts {shift_full} / {shift_half})"
    );
}

#[test]
fn traces_decorrelate_at_long_delay() {
    let p = SystemParams::new(1.0, 0.1, 20.0, 0.0).unwrap();
    // Unfiltered homodyned trace.
    let taus = vec![35.0, 50.0];
    let t = g2_homodyned(&p, HomodyneFraction::full(), &taus).unwrap();
    for v in &t.values {
        assert!((v - 1.0).abs() < 0.02, "unfiltered baseline {v}");
    }
    // Filtered cross-correlation.
    let s1 = SensorParams::with_default_epsilon(-20.0, 10.0, &p).unwrap();
    let s2 = SensorParams::with_default_epsilon(20.0, 10.0, &p).unwrap();
    let t = filtered_g2(&p, &s1, &s2, HomodyneFraction::none(), &taus).unwrap();
    for v in &t.values {
        assert!((v - 1.0).abs() < 0.02, "filtered baseline {v}");
    }
}

#[test]
fn spectrum_mirror_and_sum_rule_under_dephasing() {
    let grid: Vec<f64> = (0..161).map(|i| -40.0 + 0.5 * i as f64).collect();
    let p = SystemParams::new(1.0, 0.3, 15.0, 0.05).unwrap();
    let s = spectrum(&p, &grid).unwrap();
    // Sum rule against an independent moment computation.
    let l = build_system_liouvillian(&p).unwrap();
    let rho = steady_state(&l).unwrap();
    let sigma = lowering::<f64>();
    let n = rho.expectation(&(&sigma.dagger() * &sigma)).re;
    assert!((s.coherent_weight + s.total_incoherent - n).abs() < 1e-10);
}
