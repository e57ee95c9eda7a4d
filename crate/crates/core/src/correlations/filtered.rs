//! Frequency-filtered cross- and auto-correlations through the two-sensor
//! Liouvillian, with the weak-coupling limit taken by Richardson
//! extrapolation in the squared sensor coupling.

use super::graded::solve_scaled;
use super::{steady_state, CorrelationTrace, ModalCorrelator, Regression, TraceMeta};
use crate::error::{Error, Result};
use crate::model::{
    build_full_liouvillian, build_system_liouvillian, embed, lowering, unvectorize, vectorize,
    Factor, HomodyneFraction, SensorParams, SystemParams,
};
use crate::scalar::{Scalar, C};
use rayon::prelude::*;

/// Relative discrepancy allowed between the finer evaluation and the
/// extrapolated limit.
const CONVERGENCE_GATE: f64 = 1e-3;

/// Frequency-filtered second-order correlation `g(omega1, omega2; tau)`
/// between the two sensors, in the weak-coupling limit.
///
/// Positive delays order the clicks sensor 1 first; negative delays are the
/// stationarity swap `g(omega1, omega2; -tau) = g(omega2, omega1; tau)`.
/// Both branches share the steady-state normalization `<n1><n2>`.
///
/// The limit is realized by evaluating at the sensors' coupling and at half
/// that value, extrapolating the quadratic bias away and recording the
/// residual discrepancy; if the gate fails the pair is halved once before
/// giving up.
pub fn filtered_g2<T: Scalar>(
    p: &SystemParams<T>,
    s1: &SensorParams<T>,
    s2: &SensorParams<T>,
    f: HomodyneFraction<T>,
    tau_grid: &[T],
) -> Result<CorrelationTrace<T>> {
    p.validate()?;
    s1.validate()?;
    s2.validate()?;
    if (s1.epsilon - s2.epsilon).abs() > T::epsilon() * s1.epsilon {
        return Err(Error::InvalidParams(
            "filtered_g2 requires both sensors to share the coupling epsilon".into(),
        ));
    }

    // Bare-system coherence feeding the homodyne drive.
    let bare = build_system_liouvillian(p)?;
    let rho_bare = steady_state(&bare)?;
    let alpha = rho_bare.expectation(&lowering());

    let half = T::lit(0.5);
    let mut eps_base = s1.epsilon;
    let mut retried = false;
    loop {
        let coarse = SensorPairEvaluation::new(p, s1, s2, f, alpha, eps_base)?;
        let fine = SensorPairEvaluation::new(p, s1, s2, f, alpha, eps_base * half)?;

        let g_coarse = coarse.sample(tau_grid);
        let g_fine = fine.sample(tau_grid);

        // Richardson in epsilon^2: bias(eps) = c eps^2 leaves
        // g* = (4 g_half - g_full) / 3.
        let third = T::one() / T::lit(3.0);
        let mut values = Vec::with_capacity(tau_grid.len());
        let mut discrepancy = T::zero();
        for (gc, gf) in g_coarse.iter().zip(g_fine.iter()) {
            let star = (T::lit(4.0) * *gf - *gc) * third;
            let rel = (*gf - star).abs() / star.abs().max(T::one());
            discrepancy = discrepancy.max(rel);
            values.push(star);
        }

        if discrepancy <= T::lit(CONVERGENCE_GATE) {
            return Ok(CorrelationTrace {
                tau: tau_grid.to_vec(),
                values,
                meta: TraceMeta {
                    system: *p,
                    sensors: Some((
                        SensorParams {
                            epsilon: eps_base,
                            ..*s1
                        },
                        SensorParams {
                            epsilon: eps_base,
                            ..*s2
                        },
                    )),
                    homodyne: f.value(),
                    epsilon_used: Some(eps_base),
                    extrapolation_discrepancy: Some(discrepancy),
                    retried,
                },
            });
        }
        if retried {
            return Err(Error::EpsilonNotConverged {
                discrepancy: discrepancy.to_f64().unwrap_or(f64::NAN),
                epsilon: eps_base.to_f64().unwrap_or(f64::NAN),
            });
        }
        retried = true;
        eps_base = eps_base * half;
    }
}

/// Single finite-coupling evaluation of the filtered correlation, without
/// the extrapolation step. This is the raw ingredient of [`filtered_g2`];
/// it is exposed for convergence studies of the quadratic sensor bias.
pub fn filtered_g2_single_coupling<T: Scalar>(
    p: &SystemParams<T>,
    s1: &SensorParams<T>,
    s2: &SensorParams<T>,
    f: HomodyneFraction<T>,
    tau_grid: &[T],
    epsilon: T,
) -> Result<Vec<T>> {
    let bare = build_system_liouvillian(p)?;
    let rho_bare = steady_state(&bare)?;
    let alpha = rho_bare.expectation(&lowering());
    let eval = SensorPairEvaluation::new(p, s1, s2, f, alpha, epsilon)?;
    Ok(eval.sample(tau_grid))
}

/// One finite-epsilon evaluation: scaled steady state, eigendecomposition
/// of the scaled generator and the two directional correlators.
struct SensorPairEvaluation<T> {
    forward: ModalCorrelator<T>,
    reverse: ModalCorrelator<T>,
    denom: T,
}

impl<T: Scalar> SensorPairEvaluation<T> {
    fn new(
        p: &SystemParams<T>,
        s1: &SensorParams<T>,
        s2: &SensorParams<T>,
        f: HomodyneFraction<T>,
        alpha: C<T>,
        eps: T,
    ) -> Result<Self> {
        let s1e = SensorParams { epsilon: eps, ..*s1 };
        let s2e = SensorParams { epsilon: eps, ..*s2 };
        let l = build_full_liouvillian(p, &s1e, &s2e, f, alpha)?;
        let grading = l.grading.as_ref().expect("equal couplings imply grading");
        let scaled = l.scaled_by_grading().expect("grading implies scaling");

        // Sector-wise steady state in the scaled picture: every moment below
        // is O(1) in epsilon, and epsilon powers cancel exactly in the ratio.
        let x = solve_scaled(&scaled, grading, eps, l.hilbert_dim)?;
        let rho_scaled = unvectorize(&x, l.hilbert_dim);

        let n1_op = number_operator::<T>(Factor::Sensor1);
        let n2_op = number_operator::<T>(Factor::Sensor2);
        let n1 = real_moment(&x, &n1_op);
        let n2 = real_moment(&x, &n2_op);
        let denom = n1 * n2;
        if !(denom > T::zero()) {
            return Err(Error::ZeroIntensity {
                intensity: denom.to_f64().unwrap_or(0.0),
            });
        }

        let reg = Regression::from_matrix(&scaled, l.hilbert_dim)?;
        let forward = direction(&reg, &rho_scaled, Factor::Sensor1, &n2_op, denom);
        let reverse = direction(&reg, &rho_scaled, Factor::Sensor2, &n1_op, denom);
        Ok(Self {
            forward,
            reverse,
            denom,
        })
    }

    /// g2 over a signed delay grid.
    fn sample(&self, tau_grid: &[T]) -> Vec<T> {
        tau_grid
            .par_iter()
            .map(|&tau| {
                let num = if tau < T::zero() {
                    self.reverse.at(-tau)
                } else {
                    self.forward.at(tau)
                };
                num / self.denom
            })
            .collect()
    }
}

/// `<n_click(0) n_measure(tau)>` as decaying modes over the exact product
/// baseline: the click collapses the state through the lowering operator of
/// `click`, the evolved state is read out through the number operator of
/// the other sensor.
fn direction<T: Scalar>(
    reg: &Regression<T>,
    rho_scaled: &crate::qmatrix::CMatrix<T>,
    click: Factor,
    measure_op: &crate::qmatrix::CMatrix<T>,
    baseline: T,
) -> ModalCorrelator<T> {
    let sj = embed::<T>(click, true);
    let collapsed = &(&sj * rho_scaled) * &sj.dagger();
    let seed = vectorize(&collapsed);
    let functional = vectorize(measure_op);
    reg.modal_correlator(&functional, &seed, baseline)
}

/// Number operator of one sensor on the composite space.
fn number_operator<T: Scalar>(factor: Factor) -> crate::qmatrix::CMatrix<T> {
    let s = embed::<T>(factor, true);
    &s.dagger() * &s
}

/// Real part of `Tr(op rho)` from the vectorized state.
fn real_moment<T: Scalar>(x: &[C<T>], op: &crate::qmatrix::CMatrix<T>) -> T {
    let functional = vectorize(op);
    let mut acc = C::new(T::zero(), T::zero());
    for (f, xi) in functional.iter().zip(x.iter()) {
        acc += f.conj() * xi;
    }
    acc.re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::g2_homodyned;

    fn params() -> SystemParams<f64> {
        SystemParams::new(1.0, 0.1, 20.0, 0.0).unwrap()
    }

    fn sensor(omega: f64, gamma: f64, p: &SystemParams<f64>) -> SensorParams<f64> {
        SensorParams::with_default_epsilon(omega, gamma, p).unwrap()
    }

    fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn swap_symmetry_between_sensor_orders() {
        // g(omega1, omega2; -tau) = g(omega2, omega1; tau)
        let p = params();
        let s1 = sensor(-20.0, 10.0, &p);
        let s2 = sensor(20.0, 10.0, &p);
        let taus = vec![-2.0, -0.5, 0.5, 2.0];
        let direct = filtered_g2(&p, &s1, &s2, HomodyneFraction::none(), &taus).unwrap();
        let flipped: Vec<f64> = taus.iter().rev().map(|t| -t).collect();
        let swapped = filtered_g2(&p, &s2, &s1, HomodyneFraction::none(), &flipped).unwrap();
        for (a, b) in direct.values.iter().zip(swapped.values.iter().rev()) {
            let rel = (a - b).abs() / a.abs().max(1.0);
            assert!(rel < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn autocorrelation_is_even() {
        let p = params();
        let s = sensor(20.0, 10.0, &p);
        let taus = vec![-3.0, -1.0, 1.0, 3.0];
        let t = filtered_g2(&p, &s, &s, HomodyneFraction::none(), &taus).unwrap();
        assert!((t.values[0] - t.values[3]).abs() / t.values[3].abs() < 1e-8);
        assert!((t.values[1] - t.values[2]).abs() / t.values[2].abs() < 1e-8);
    }

    #[test]
    fn cross_correlation_peaks_at_positive_delay() {
        // Sensor 1 on the two-photon satellite, sensor 2 on the emitter:
        // the satellite photon heralds the emitter photon, so the maximum
        // sits at positive delay.
        let p = params();
        let s1 = sensor(-20.0, 10.0, &p);
        let s2 = sensor(20.0, 10.0, &p);
        let taus = linspace(-6.0, 6.0, 121);
        let t = filtered_g2(&p, &s1, &s2, HomodyneFraction::none(), &taus).unwrap();
        let imax = t
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert!(taus[imax] > 0.0, "maximum at tau = {}", taus[imax]);
        // Bunched on the heralded side.
        assert!(t.values[imax] > 1.0);
    }

    #[test]
    fn broad_filter_recovers_unfiltered_autocorrelation() {
        // A detector much wider than every rate sees the full emission.
        let p = params();
        let s = sensor(0.0, 1000.0, &p);
        let taus = linspace(0.0, 4.0, 9);
        let filtered = filtered_g2(&p, &s, &s, HomodyneFraction::none(), &taus).unwrap();
        let unfiltered = g2_homodyned(&p, HomodyneFraction::none(), &taus).unwrap();
        for (tau, (a, b)) in taus
            .iter()
            .zip(filtered.values.iter().zip(unfiltered.values.iter()))
        {
            assert!(
                (a - b).abs() / b.abs().max(1.0) < 0.02,
                "tau = {tau}: filtered {a} vs unfiltered {b}"
            );
        }
    }

    #[test]
    fn meta_records_convergence_report() {
        let p = params();
        let s1 = sensor(-20.0, 10.0, &p);
        let s2 = sensor(20.0, 10.0, &p);
        let t = filtered_g2(&p, &s1, &s2, HomodyneFraction::none(), &[0.0, 1.0]).unwrap();
        assert_eq!(t.meta.epsilon_used, Some(s1.epsilon));
        assert!(t.meta.extrapolation_discrepancy.unwrap() <= 1e-3);
        assert!(!t.meta.retried);
    }

    #[test]
    fn mismatched_couplings_rejected() {
        let p = params();
        let s1 = SensorParams::new(-20.0, 10.0, 1e-3).unwrap();
        let s2 = SensorParams::new(20.0, 10.0, 2e-3).unwrap();
        assert!(matches!(
            filtered_g2(&p, &s1, &s2, HomodyneFraction::none(), &[0.0]),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn quadratic_bias_scaling_in_epsilon() {
        // |g(eps) - g(eps/2)| shrinks about fourfold per halving.
        let p = params();
        let tau = [1.0];
        let mut vals = Vec::new();
        for eps in [8e-3, 4e-3, 2e-3] {
            let s1 = SensorParams::new(-20.0, 10.0, eps).unwrap();
            let s2 = SensorParams::new(20.0, 10.0, eps).unwrap();
            let eval = SensorPairEvaluation::new(
                &p,
                &s1,
                &s2,
                HomodyneFraction::none(),
                bare_alpha(&p),
                eps,
            )
            .unwrap();
            vals.push(eval.sample(&tau)[0]);
        }
        let d1 = (vals[0] - vals[1]).abs();
        let d2 = (vals[1] - vals[2]).abs();
        let ratio = d1 / d2;
        assert!(
            (2.5..6.0).contains(&ratio),
            "bias ratio {ratio}, diffs {d1} {d2}"
        );
    }

    fn bare_alpha(p: &SystemParams<f64>) -> num_complex::Complex<f64> {
        let bare = build_system_liouvillian(p).unwrap();
        let rho = steady_state(&bare).unwrap();
        rho.expectation(&lowering())
    }
}
