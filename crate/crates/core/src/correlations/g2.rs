//! Unfiltered homodyned second-order correlation of the bare emitter.

use super::{steady_state, CorrelationTrace, Regression, TraceMeta};
use crate::error::{Error, Result};
use crate::model::{build_system_liouvillian, lowering, vectorize, HomodyneFraction, SystemParams};
use crate::qmatrix::CMatrix;
use crate::scalar::{cr, Scalar};
use rayon::prelude::*;

/// `g2` of the displaced field `s = sigma - f <sigma>`: detecting the full
/// emission (f = 0) interpolates to detection with the coherent component
/// removed (f = 1). The correlation is stationary and even in the delay, so
/// it is computed for `tau >= 0` and mirrored.
pub fn g2_homodyned<T: Scalar>(
    p: &SystemParams<T>,
    f: HomodyneFraction<T>,
    tau_grid: &[T],
) -> Result<CorrelationTrace<T>> {
    let l = build_system_liouvillian(p)?;
    let rho = steady_state(&l)?;
    let sigma = lowering::<T>();
    let alpha = rho.expectation(&sigma);

    // Displaced field and its intensity.
    let shift = CMatrix::identity(2).scale(alpha * cr(f.value()));
    let s = &sigma - &shift;
    let s_dag_s = &s.dagger() * &s;
    let intensity = rho.expectation(&s_dag_s).re;
    if intensity < T::lit(1e-30) {
        return Err(Error::ZeroIntensity {
            intensity: intensity.to_f64().unwrap_or(0.0),
        });
    }

    // Normally ordered numerator <s^dag(0) s^dag s(tau) s(0)> as decaying
    // modes on top of the exact long-delay baseline <s^dag s>^2.
    let reg = Regression::new(&l)?;
    let seed = vectorize(&(&(&s * rho.matrix()) * &s.dagger()));
    let functional = vectorize(&s_dag_s);
    let numerator = reg.modal_correlator(&functional, &seed, intensity * intensity);

    let denom = intensity * intensity;
    let values: Vec<T> = tau_grid
        .par_iter()
        .map(|&tau| numerator.at(tau.abs()) / denom)
        .collect();

    Ok(CorrelationTrace {
        tau: tau_grid.to_vec(),
        values,
        meta: TraceMeta {
            system: *p,
            sensors: None,
            homodyne: f.value(),
            epsilon_used: None,
            extrapolation_discrepancy: None,
            retried: false,
        },
    })
}
