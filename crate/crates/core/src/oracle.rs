//! Closed-form results for the detuned two-level emitter and the ideal
//! two-photon cascade, plus the cascade-parameter fit. These double as
//! user-facing analysis and as independent oracles for the numerical
//! correlation machinery.

use crate::correlations::CorrelationTrace;
use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::scalar::Scalar;

/// Ideal two-photon cascade: an uncorrelated trigger stream at rate
/// `gamma1`, each photon of which heralds a companion photon — after it
/// with probability `p` at decay rate `gamma2`, before it with probability
/// `1 - p` at rate `gamma2_bar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeParams<T> {
    pub p: T,
    pub gamma1: T,
    pub gamma2: T,
    pub gamma2_bar: T,
}

impl<T: Scalar> CascadeParams<T> {
    pub fn new(p: T, gamma1: T, gamma2: T, gamma2_bar: T) -> Result<Self> {
        if p < T::zero() || p > T::one() {
            return Err(Error::InvalidParams(format!(
                "ordering probability must lie in [0, 1], got {p}"
            )));
        }
        for (name, v) in [
            ("gamma1", gamma1),
            ("gamma2", gamma2),
            ("gamma2_bar", gamma2_bar),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(Self {
            p,
            gamma1,
            gamma2,
            gamma2_bar,
        })
    }
}

/// Cross-correlation of the ideal cascade:
///
/// ```text
/// g2(tau) = 1 + (1 - p) (gamma2_bar / gamma1) exp(gamma2_bar tau)   tau < 0
///           1 + p (gamma2 / gamma1) exp(-gamma2 tau)                tau > 0
/// ```
///
/// The discontinuity at `tau = 0` leaves the zero-delay value undefined.
pub fn cascade_g2<T: Scalar>(c: &CascadeParams<T>, tau: T) -> Result<T> {
    if tau == T::zero() {
        return Err(Error::UndefinedAtZero);
    }
    let v = if tau < T::zero() {
        (T::one() - c.p) * (c.gamma2_bar / c.gamma1) * (c.gamma2_bar * tau).exp()
    } else {
        c.p * (c.gamma2 / c.gamma1) * (-c.gamma2 * tau).exp()
    };
    Ok(T::one() + v)
}

/// Fully homodyned zero-delay coincidence of the bare emitter:
/// `(gamma^2 + 4 Delta^2)(gamma^2 + 4 [8 Omega^2 + Delta^2]) / (64 Omega^4)`.
pub fn homodyned_g20<T: Scalar>(p: &SystemParams<T>) -> Result<T> {
    if !(p.omega_drive > T::zero()) {
        return Err(Error::ZeroDriving);
    }
    let g2 = p.gamma_sigma * p.gamma_sigma;
    let d2 = p.delta * p.delta;
    let o2 = p.omega_drive * p.omega_drive;
    let four = T::lit(4.0);
    let num = (g2 + four * d2) * (g2 + four * (T::lit(8.0) * o2 + d2));
    Ok(num / (T::lit(64.0) * o2 * o2))
}

/// Side-peak to coherent-peak intensity ratio
/// `8 Omega^2 / (gamma^2 + 4 Delta^2)`.
pub fn sidepeak_ratio<T: Scalar>(p: &SystemParams<T>) -> T {
    let g2 = p.gamma_sigma * p.gamma_sigma;
    let d2 = p.delta * p.delta;
    T::lit(8.0) * p.omega_drive * p.omega_drive / (g2 + T::lit(4.0) * d2)
}

/// Slow decay rate of the cascade branches,
/// `gamma (1 - 8 Omega^2 / (gamma^2 + 4 Delta^2))`; the fast rise bridging
/// the gap is set by the filter width instead.
pub fn cascade_rate<T: Scalar>(p: &SystemParams<T>) -> T {
    p.gamma_sigma * (T::one() - sidepeak_ratio(p))
}

/// Driving amplitude at which the central incoherent peak matches the side
/// peaks in height: `Delta / sqrt(2)`.
pub fn equal_height_drive<T: Scalar>(delta: T) -> T {
    delta / T::lit(2.0).sqrt()
}

/// Result of fitting the ideal-cascade form to a correlation trace.
#[derive(Debug, Clone, Copy)]
pub struct CascadeFit<T> {
    pub params: CascadeParams<T>,
    /// `g(0+) - g(0-)` from the two branch extrapolations.
    pub absolute_gap: T,
    /// `g(0+) / g(0-)`.
    pub relative_gap: T,
    /// Root-mean-square misfit over the fitted window.
    pub residual: T,
    /// Fitted amplitude of the ordered branch (`tau > 0`).
    pub amp_pos: T,
    /// Fitted amplitude of the reversed branch (`tau < 0`).
    pub amp_neg: T,
}

impl<T: Scalar> CascadeFit<T> {
    /// Piecewise two-exponential model at a signed delay; the zero-delay
    /// point takes the mean of the two limits.
    pub fn model_at(&self, tau: T) -> T {
        let pos = T::one() + self.amp_pos * (-self.params.gamma2 * tau).exp();
        let neg = T::one() + self.amp_neg * (self.params.gamma2_bar * tau).exp();
        if tau > T::zero() {
            pos
        } else if tau < T::zero() {
            neg
        } else {
            (T::one() + self.amp_pos + T::one() + self.amp_neg) * T::lit(0.5)
        }
    }

    fn to_f64(self) -> CascadeFit<f64> {
        let f = |x: T| x.to_f64().unwrap_or(f64::NAN);
        CascadeFit {
            params: CascadeParams {
                p: f(self.params.p),
                gamma1: f(self.params.gamma1),
                gamma2: f(self.params.gamma2),
                gamma2_bar: f(self.params.gamma2_bar),
            },
            absolute_gap: f(self.absolute_gap),
            relative_gap: f(self.relative_gap),
            residual: f(self.residual),
            amp_pos: f(self.amp_pos),
            amp_neg: f(self.amp_neg),
        }
    }
}

/// Fit the ideal-cascade form on `|tau|` inside `window`, excluding the
/// filter-limited rise `|tau| < 3 / Gamma` when the trace carries sensor
/// metadata. Each branch is a two-parameter exponential: branches with
/// correlations well above one are fitted by linear regression in
/// `log(g - 1)` (decades weigh equally), the rest by damped Gauss-Newton
/// on the direct residual. Fails with `FitDivergence` when the RMS misfit
/// exceeds 10% of the trace's dynamic range.
pub fn fit_cascade<T: Scalar>(
    trace: &CorrelationTrace<T>,
    window: (T, T),
) -> Result<CascadeFit<T>> {
    let fit = fit_cascade_raw(trace, window)?;
    let max = trace
        .values
        .iter()
        .cloned()
        .fold(T::neg_infinity(), T::max);
    let min = trace.values.iter().cloned().fold(T::infinity(), T::min);
    let range = max - min;
    if fit.residual > T::lit(0.1) * range {
        return Err(Error::FitDivergence {
            residual: fit.residual.to_f64().unwrap_or(f64::NAN),
            range: range.to_f64().unwrap_or(f64::NAN),
            fit: Box::new(fit.to_f64()),
        });
    }
    Ok(fit)
}

/// Same as [`fit_cascade`] without the divergence gate; used where the
/// misfit itself is the quantity of interest (oscillation measures).
pub fn fit_cascade_raw<T: Scalar>(
    trace: &CorrelationTrace<T>,
    window: (T, T),
) -> Result<CascadeFit<T>> {
    let (mut lo, hi) = window;
    if !(hi > lo) || lo < T::zero() {
        return Err(Error::InsufficientWindow(format!(
            "window must satisfy 0 <= lo < hi, got [{lo}, {hi}]"
        )));
    }
    if let Some((s1, s2)) = &trace.meta.sensors {
        let gamma = s1.gamma_filter.min(s2.gamma_filter);
        lo = lo.max(T::lit(3.0) / gamma);
    }
    if !(hi > lo) {
        return Err(Error::InsufficientWindow(format!(
            "filter rise exclusion leaves an empty window [{lo}, {hi}]"
        )));
    }

    let mut pos: Vec<(T, T)> = Vec::new();
    let mut neg: Vec<(T, T)> = Vec::new();
    for (&tau, &g) in trace.tau.iter().zip(trace.values.iter()) {
        let a = tau.abs();
        if a < lo || a > hi {
            continue;
        }
        if tau > T::zero() {
            pos.push((a, g));
        } else if tau < T::zero() {
            neg.push((a, g));
        }
    }
    if pos.len() < 3 || neg.len() < 3 {
        return Err(Error::InsufficientWindow(format!(
            "need at least 3 points per branch beyond the gap region, got {} / {}",
            neg.len(),
            pos.len()
        )));
    }

    let (amp_pos, gamma2) = fit_branch(&pos);
    let (amp_neg, gamma2_bar) = fit_branch(&neg);

    // Map branch amplitudes back to the cascade parameters:
    // amp_pos = p gamma2 / gamma1, amp_neg = (1 - p) gamma2_bar / gamma1.
    let (p, gamma1) = if amp_pos > T::zero() && amp_neg > T::zero() {
        let denom = amp_neg * gamma2 + amp_pos * gamma2_bar;
        let p = amp_pos * gamma2_bar / denom;
        (p, p * gamma2 / amp_pos)
    } else if amp_pos > T::zero() {
        (T::one(), gamma2 / amp_pos)
    } else if amp_neg > T::zero() {
        (T::zero(), gamma2_bar / amp_neg)
    } else {
        // Flat trace: no cascade signal; rates remain from the fit.
        (T::lit(0.5), gamma2.max(gamma2_bar))
    };

    let fit = CascadeFit {
        params: CascadeParams {
            p,
            gamma1,
            gamma2,
            gamma2_bar,
        },
        absolute_gap: amp_pos - amp_neg,
        relative_gap: (T::one() + amp_pos) / (T::one() + amp_neg),
        residual: T::zero(),
        amp_pos,
        amp_neg,
    };

    // RMS misfit over both fitted branches.
    let mut sq = T::zero();
    let mut count = 0usize;
    for (a, g) in pos.iter() {
        let d = fit.model_at(*a) - *g;
        sq = sq + d * d;
        count += 1;
    }
    for (a, g) in neg.iter() {
        let d = fit.model_at(-*a) - *g;
        sq = sq + d * d;
        count += 1;
    }
    let residual = (sq / T::from_usize(count).unwrap()).sqrt();
    Ok(CascadeFit { residual, ..fit })
}

/// Fit `g = 1 + C exp(-gamma a)` over `(a, g)` samples (`a = |tau| > 0`).
fn fit_branch<T: Scalar>(data: &[(T, T)]) -> (T, T) {
    let h: Vec<(T, T)> = data.iter().map(|&(a, g)| (a, g - T::one())).collect();
    let min_h = h.iter().map(|&(_, v)| v).fold(T::infinity(), T::min);

    // Log-space linear regression when the whole branch sits well above
    // the uncorrelated baseline.
    if min_h > T::lit(0.1) {
        return log_space_fit(&h);
    }

    // Otherwise damped Gauss-Newton on the direct residual, seeded from the
    // positive samples when possible.
    let positive: Vec<(T, T)> = h.iter().cloned().filter(|&(_, v)| v > T::zero()).collect();
    let (mut c0, mut g0) = if positive.len() >= 2 {
        log_space_fit(&positive)
    } else {
        let span = h.last().unwrap().0 - h.first().unwrap().0;
        let peak = h
            .iter()
            .cloned()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .unwrap();
        (peak.1, T::one() / span.max(T::lit(1e-6)))
    };
    if !(g0 > T::zero()) || !g0.is_finite() {
        g0 = T::one();
    }
    if !c0.is_finite() {
        c0 = T::zero();
    }
    gauss_newton(&h, c0, g0)
}

/// Exact least squares of `ln h = ln C - gamma a`.
fn log_space_fit<T: Scalar>(h: &[(T, T)]) -> (T, T) {
    let n = T::from_usize(h.len()).unwrap();
    let mut sa = T::zero();
    let mut sl = T::zero();
    let mut saa = T::zero();
    let mut sal = T::zero();
    for &(a, v) in h {
        let l = v.ln();
        sa = sa + a;
        sl = sl + l;
        saa = saa + a * a;
        sal = sal + a * l;
    }
    let det = n * saa - sa * sa;
    let slope = (n * sal - sa * sl) / det;
    let intercept = (sl * saa - sa * sal) / det;
    (intercept.exp(), -slope)
}

/// Damped Gauss-Newton for `h = C exp(-gamma a)` over `(C, ln gamma)`.
fn gauss_newton<T: Scalar>(data: &[(T, T)], mut c: T, mut gamma: T) -> (T, T) {
    let cost = |cc: T, gg: T| {
        data.iter()
            .map(|&(a, v)| {
                let r = cc * (-gg * a).exp() - v;
                r * r
            })
            .fold(T::zero(), |x, y| x + y)
    };
    let mut lambda = T::lit(1e-3);
    let mut best = cost(c, gamma);
    for _ in 0..100 {
        // Jacobian in (C, u = ln gamma): dr/dC = e^{-g a}, dr/du = -C a g e^{-g a}.
        let mut jtj = [[T::zero(); 2]; 2];
        let mut jtr = [T::zero(); 2];
        for &(a, v) in data {
            let e = (-gamma * a).exp();
            let r = c * e - v;
            let j0 = e;
            let j1 = -c * a * gamma * e;
            jtj[0][0] = jtj[0][0] + j0 * j0;
            jtj[0][1] = jtj[0][1] + j0 * j1;
            jtj[1][1] = jtj[1][1] + j1 * j1;
            jtr[0] = jtr[0] + j0 * r;
            jtr[1] = jtr[1] + j1 * r;
        }
        jtj[1][0] = jtj[0][1];
        let a00 = jtj[0][0] * (T::one() + lambda);
        let a11 = jtj[1][1] * (T::one() + lambda);
        let det = a00 * a11 - jtj[0][1] * jtj[1][0];
        if det.abs() < T::lit(1e-300) {
            break;
        }
        let dc = (-jtr[0] * a11 + jtr[1] * jtj[0][1]) / det;
        let du = (-jtr[1] * a00 + jtr[0] * jtj[1][0]) / det;
        let c_new = c + dc;
        let gamma_new = (gamma.ln() + du).exp();
        let new_cost = cost(c_new, gamma_new);
        if new_cost.is_finite() && new_cost < best {
            let rel = (best - new_cost) / best.max(T::lit(1e-300));
            c = c_new;
            gamma = gamma_new;
            best = new_cost;
            lambda = (lambda * T::lit(0.3)).max(T::lit(1e-12));
            if rel < T::lit(1e-14) {
                break;
            }
        } else {
            lambda = lambda * T::lit(4.0);
            if lambda > T::lit(1e10) {
                break;
            }
        }
    }
    (c, gamma)
}
