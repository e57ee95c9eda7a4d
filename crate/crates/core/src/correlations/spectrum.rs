//! Coherent/incoherent spectral decomposition via resolvent solves.

use super::{steady_state, Regression, Spectrum};
use crate::error::Result;
use crate::model::{build_system_liouvillian, lowering, vectorize, SystemParams};
use crate::qmatrix::{solve_shifted, vec_dot, CMatrix};
use crate::scalar::{ci, Scalar, C};
use num_complex::Complex;
use rayon::prelude::*;

/// Bare-system machinery shared by the spectrum operations.
struct BareEngine<T> {
    l_matrix: CMatrix<T>,
    reg: Regression<T>,
    /// Kernel-free seed `vec(rho sigma^dag) - vec(rho) <sigma^dag>`.
    seed: Vec<C<T>>,
    /// Trace functional of `sigma`.
    functional: Vec<C<T>>,
    coherent_weight: T,
    total_incoherent: T,
    spectral_radius: T,
}

impl<T: Scalar> BareEngine<T> {
    fn new(p: &SystemParams<T>) -> Result<Self> {
        let l = build_system_liouvillian(p)?;
        let rho = steady_state(&l)?;
        let sigma = lowering::<T>();
        let alpha = rho.expectation(&sigma);
        let n_sigma = rho.expectation(&(&sigma.dagger() * &sigma)).re;

        // <sigma^dag(0) sigma(tau)> = Tr[sigma e^{L tau} (rho sigma^dag)];
        // the stationary component carries exactly |<sigma>|^2 and is
        // removed so the resolvent acts on decaying modes only.
        let seed_full = vectorize(&(rho.matrix() * &sigma.dagger()));
        let rho_vec = vectorize(rho.matrix());
        let seed: Vec<C<T>> = seed_full
            .iter()
            .zip(rho_vec.iter())
            .map(|(w, r)| w - r * alpha.conj())
            .collect();

        let reg = Regression::new(&l)?;
        let spectral_radius = reg.eigensystem().spectral_radius();
        Ok(Self {
            l_matrix: l.matrix,
            reg,
            seed,
            functional: vectorize(&sigma.dagger()),
            coherent_weight: alpha.norm_sqr(),
            total_incoherent: n_sigma - alpha.norm_sqr(),
            spectral_radius,
        })
    }

    /// Incoherent spectral density
    /// `S(omega) = (1/pi) Re int_0^inf e^{i omega tau} [<sigma^dag(0) sigma(tau)> - |<sigma>|^2] dtau`,
    /// evaluated as `-(1/pi) Re Tr[sigma (L + i omega)^{-1} seed]`.
    fn incoherent_density(&self, omega: T) -> T {
        let inv_pi = T::one() / T::PI();
        // The shift -i*omega collides with the stationary eigenvalue at
        // omega = 0; the seed has no kernel component, so the deflated
        // eigenbasis resolvent takes over there.
        let near_singular = omega.abs() < T::lit(1e-8) * self.spectral_radius.max(T::one());
        if near_singular {
            let es = self.reg.eigensystem();
            let n = self.seed.len();
            let mut acc = Complex::new(T::zero(), T::zero());
            for k in 0..n {
                if k == self.reg.kernel_index() {
                    continue;
                }
                let mut ck = Complex::new(T::zero(), T::zero());
                for j in 0..n {
                    ck += es.left_vectors[(k, j)] * self.seed[j];
                }
                let mut pk = Complex::new(T::zero(), T::zero());
                for i in 0..n {
                    pk += self.functional[i].conj() * es.right_vectors[(i, k)];
                }
                acc += pk * ck / (es.values[k] + ci(omega));
            }
            return -inv_pi * acc.re;
        }
        let x = solve_shifted(&self.l_matrix, ci(-omega), &self.seed)
            .expect("shift away from the spectrum");
        -inv_pi * vec_dot(&self.functional, &x).re
    }
}

/// Emission spectrum split into the coherent delta-line weight and the
/// incoherent density sampled on the given laser-relative frequency grid.
pub fn spectrum<T: Scalar>(p: &SystemParams<T>, omega_grid: &[T]) -> Result<Spectrum<T>> {
    let engine = BareEngine::new(p)?;
    let incoherent_density: Vec<T> = omega_grid
        .par_iter()
        .map(|&w| engine.incoherent_density(w))
        .collect();
    Ok(Spectrum {
        coherent_weight: engine.coherent_weight,
        omega_grid: omega_grid.to_vec(),
        incoherent_density,
        total_incoherent: engine.total_incoherent,
    })
}

/// Lineshape summary for one dephasing value.
#[derive(Debug, Clone, Copy)]
pub struct DephasingSummary<T> {
    pub gamma_phi: T,
    /// Integrated weight near the emitter peak (+Delta) over the weight
    /// near the two-photon satellite (-Delta).
    pub asymmetry_ratio: T,
    pub total_incoherent: T,
}

/// Spectra plus asymmetry summaries over a dephasing sweep.
#[derive(Debug, Clone)]
pub struct DephasingScan<T> {
    pub spectra: Vec<Spectrum<T>>,
    pub summary: Vec<DephasingSummary<T>>,
}

/// Number of quadrature points per asymmetry window.
const WINDOW_POINTS: usize = 2001;

/// Sweep the pure-dephasing rate and record how the symmetric detuned
/// doublet collapses: the asymmetry ratio integrates the incoherent density
/// over `[±Delta - 5 gamma_tot, ±Delta + 5 gamma_tot]` with
/// `gamma_tot = gamma_sigma + 2 gamma_phi`.
pub fn dephasing_lineshape_scan<T: Scalar>(
    p: &SystemParams<T>,
    gamma_phi_list: &[T],
    omega_grid: &[T],
) -> Result<DephasingScan<T>> {
    if p.delta == T::zero() {
        return Err(crate::error::Error::InvalidParams(
            "dephasing scan requires a detuned emitter (delta != 0)".into(),
        ));
    }
    let mut spectra = Vec::with_capacity(gamma_phi_list.len());
    let mut summary = Vec::with_capacity(gamma_phi_list.len());
    for &gp in gamma_phi_list {
        let pg = SystemParams {
            gamma_phi: gp,
            ..*p
        };
        pg.validate()?;
        let engine = BareEngine::new(&pg)?;
        let incoherent_density: Vec<T> = omega_grid
            .par_iter()
            .map(|&w| engine.incoherent_density(w))
            .collect();
        spectra.push(Spectrum {
            coherent_weight: engine.coherent_weight,
            omega_grid: omega_grid.to_vec(),
            incoherent_density,
            total_incoherent: engine.total_incoherent,
        });

        let gamma_tot = pg.gamma_sigma + T::lit(2.0) * gp;
        let half = T::lit(5.0) * gamma_tot;
        let upper = window_integral(&engine, pg.delta, half);
        let lower = window_integral(&engine, -pg.delta, half);
        summary.push(DephasingSummary {
            gamma_phi: gp,
            asymmetry_ratio: upper / lower,
            total_incoherent: engine.total_incoherent,
        });
    }
    Ok(DephasingScan { spectra, summary })
}

/// Trapezoid integral of the incoherent density over `center ± half`.
fn window_integral<T: Scalar>(engine: &BareEngine<T>, center: T, half: T) -> T {
    let n = WINDOW_POINTS;
    let lo = center - half;
    let step = (half + half) / T::from_usize(n - 1).unwrap();
    let vals: Vec<T> = (0..n)
        .into_par_iter()
        .map(|i| engine.incoherent_density(lo + step * T::from_usize(i).unwrap()))
        .collect();
    let mut acc = (vals[0] + vals[n - 1]) * T::lit(0.5);
    for v in &vals[1..n - 1] {
        acc = acc + *v;
    }
    acc * step
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(omega: f64, delta: f64, gamma_phi: f64) -> SystemParams<f64> {
        SystemParams::new(1.0, omega, delta, gamma_phi).unwrap()
    }

    fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn sum_rule_coherent_plus_incoherent() {
        // coherent_weight + total_incoherent = <sigma^dag sigma>
        let p = params(0.1, 20.0, 0.0);
        let s = spectrum(&p, &[0.0]).unwrap();
        let n_expect = 0.04 / 1601.08;
        assert!((s.coherent_weight + s.total_incoherent - n_expect).abs() < 1e-10);
    }

    #[test]
    fn heitler_doublet_positions_and_weights() {
        // Weak detuned driving: two incoherent peaks at +-Delta with equal
        // integrated weights.
        let p = params(0.05, 20.0, 0.0);
        let grid = linspace(-24.0, 24.0, 1601);
        let s = spectrum(&p, &grid).unwrap();
        // Peak positions.
        let imax_pos = grid
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 1.0)
            .max_by(|a, b| {
                s.incoherent_density[a.0]
                    .partial_cmp(&s.incoherent_density[b.0])
                    .unwrap()
            })
            .unwrap()
            .0;
        let imax_neg = grid
            .iter()
            .enumerate()
            .filter(|(_, w)| **w < -1.0)
            .max_by(|a, b| {
                s.incoherent_density[a.0]
                    .partial_cmp(&s.incoherent_density[b.0])
                    .unwrap()
            })
            .unwrap()
            .0;
        assert!((grid[imax_pos] - 20.0).abs() < 0.1);
        assert!((grid[imax_neg] + 20.0).abs() < 0.1);
        // Split the integral at omega = 0.
        let mid = grid.len() / 2;
        let w_neg: f64 = s.incoherent_density[..mid].iter().sum();
        let w_pos: f64 = s.incoherent_density[mid + 1..].iter().sum();
        assert!(
            (w_pos - w_neg).abs() / w_pos < 0.05,
            "weights {w_pos} vs {w_neg}"
        );
    }

    #[test]
    fn incoherent_density_nonnegative() {
        let p = params(0.1, 20.0, 0.0);
        let grid = linspace(-60.0, 60.0, 801);
        let s = spectrum(&p, &grid).unwrap();
        for (w, v) in grid.iter().zip(s.incoherent_density.iter()) {
            assert!(*v >= -1e-12, "negative density {v} at omega {w}");
        }
    }

    #[test]
    fn trapezoid_integral_recovers_total_incoherent() {
        let p = params(0.1, 20.0, 0.0);
        // Span +-50 max(gamma, Delta, Omega) with resolution below the
        // linewidth.
        let grid = linspace(-1000.0, 1000.0, 40001);
        let s = spectrum(&p, &grid).unwrap();
        let step = grid[1] - grid[0];
        let integral: f64 = s.incoherent_density.iter().sum::<f64>() * step;
        let rel = (integral - s.total_incoherent).abs() / s.total_incoherent;
        assert!(rel < 0.01, "integral off by {rel}");
    }

    #[test]
    fn intensity_ratio_matches_closed_form() {
        // total_incoherent / coherent_weight = 8 Omega^2 / (gamma^2 + 4 Delta^2)
        // exactly for the driven two-level system without dephasing.
        let p = params(0.02, 20.0, 0.0);
        let s = spectrum(&p, &[0.0]).unwrap();
        let expect = crate::oracle::sidepeak_ratio(&p);
        let got = s.total_incoherent / s.coherent_weight;
        assert!((got - expect).abs() / expect < 1e-8);
    }

    #[test]
    fn detuning_mirror_symmetry() {
        // Spectrum at -Delta equals the omega-reflected spectrum at +Delta.
        let grid = linspace(-30.0, 30.0, 241);
        let plus = spectrum(&params(0.1, 20.0, 0.0), &grid).unwrap();
        let reflected: Vec<f64> = grid.iter().map(|w| -w).collect();
        let minus = spectrum(&params(0.1, -20.0, 0.0), &reflected).unwrap();
        for (a, b) in plus
            .incoherent_density
            .iter()
            .zip(minus.incoherent_density.iter())
        {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((plus.coherent_weight - minus.coherent_weight).abs() < 1e-14);
    }

    #[test]
    fn dephasing_scan_baseline_is_symmetric() {
        let p = params(0.05, 20.0, 0.0);
        let grid = linspace(-25.0, 25.0, 101);
        let scan = dephasing_lineshape_scan(&p, &[0.0], &grid).unwrap();
        let ratio = scan.summary[0].asymmetry_ratio;
        assert!((ratio - 1.0).abs() < 0.02, "ratio {ratio}");
    }

    #[test]
    fn dephasing_collapse_direction() {
        // A small dephasing rate breaks the symmetry toward the emitter
        // peak and boosts the incoherent intensity.
        let p = params(0.05, 20.0, 0.0);
        let grid = linspace(-25.0, 25.0, 51);
        let scan = dephasing_lineshape_scan(&p, &[0.0, 0.1], &grid).unwrap();
        let base = &scan.summary[0];
        let deph = &scan.summary[1];
        assert!(deph.asymmetry_ratio > 5.0, "ratio {}", deph.asymmetry_ratio);
        assert!(deph.total_incoherent > 10.0 * base.total_incoherent);
    }

    #[test]
    fn dephasing_scan_requires_detuning() {
        let p = params(0.05, 0.0, 0.0);
        assert!(dephasing_lineshape_scan(&p, &[0.0], &[0.0]).is_err());
    }
}
