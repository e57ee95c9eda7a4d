//! Steady states, quantum-regression two-time correlators, spectral
//! decomposition and second-order correlation functions.

mod filtered;
mod g2;
mod graded;
mod spectrum;

pub use filtered::{filtered_g2, filtered_g2_single_coupling};
pub use g2::g2_homodyned;
pub use graded::graded_steady_vector;
pub use spectrum::{dephasing_lineshape_scan, spectrum, DephasingScan, DephasingSummary};

use crate::error::{Error, Result};
use crate::model::{unvectorize, vectorize, Factor, SensorParams, Superoperator, SystemParams};
use crate::qmatrix::{eig, null_vector, vec_dot, vec_norm, CMatrix, EigenSystem};
use crate::scalar::{cr, Scalar, C};

/// Hermitian, unit-trace, positive-semidefinite state of the composite
/// system.
#[derive(Debug, Clone)]
pub struct DensityMatrix<T> {
    matrix: CMatrix<T>,
    labels: Vec<Factor>,
}

impl<T: Scalar> DensityMatrix<T> {
    /// Wrap a raw operator: Hermitize, normalize the trace and verify the
    /// state invariants (Hermiticity, unit trace, positivity to -1e-10).
    pub fn new(raw: &CMatrix<T>, labels: Vec<Factor>) -> Result<Self> {
        let herm = (&(raw + &raw.dagger())).scale(cr(T::lit(0.5)));
        let tr = herm.trace();
        if tr.norm() < T::lit(1e-300) {
            return Err(Error::InvalidParams("state has zero trace".into()));
        }
        let matrix = herm.scale(cr(T::one()) / tr);
        let dm = Self { matrix, labels };
        dm.validate()?;
        Ok(dm)
    }

    fn validate(&self) -> Result<()> {
        if self.matrix.hermitian_deviation() > T::lit(1e-12) {
            return Err(Error::InvalidParams(
                "density matrix is not Hermitian".into(),
            ));
        }
        let tr = self.matrix.trace();
        if (tr - cr(T::one())).norm() > T::lit(1e-12) {
            return Err(Error::InvalidParams("density matrix trace is not 1".into()));
        }
        let floor = -T::lit(1e-10);
        for ev in self.eigenvalues()? {
            if ev < floor {
                return Err(Error::InvalidParams(format!(
                    "density matrix has a negative eigenvalue {ev}"
                )));
            }
        }
        Ok(())
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn labels(&self) -> &[Factor] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Real eigenvalues of the (Hermitian) state.
    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        let es = eig(&self.matrix)?;
        Ok(es.values.iter().map(|z| z.re).collect())
    }

    /// Expectation value `Tr(rho A)`.
    pub fn expectation(&self, op: &CMatrix<T>) -> C<T> {
        (&self.matrix * op).trace()
    }

    /// Reduced emitter state: partial trace over both sensors
    /// (layout emitter x sensor1 x sensor2).
    pub fn reduce_to_emitter(&self) -> CMatrix<T> {
        let d = self.dim();
        assert_eq!(d, 8, "emitter reduction expects the composite space");
        let mut out = CMatrix::zeros(2, 2);
        for e1 in 0..2 {
            for e2 in 0..2 {
                let mut acc = C::new(T::zero(), T::zero());
                for s in 0..4 {
                    acc += self.matrix[(e1 * 4 + s, e2 * 4 + s)];
                }
                out[(e1, e2)] = acc;
            }
        }
        out
    }
}

/// Steady state of a Liouvillian with a one-dimensional kernel.
///
/// Sensor-graded Liouvillians are solved sector by sector in the
/// epsilon-scaled picture, which keeps the weak-coupling moments accurate
/// component by component; plain Liouvillians go through the
/// eigendecomposition kernel extraction.
pub fn steady_state<T: Scalar>(l: &Superoperator<T>) -> Result<DensityMatrix<T>> {
    let d = l.hilbert_dim;
    let x = match graded_steady_vector(l)? {
        Some(scaled) => {
            // Undo the grading scaling to recover the physical state.
            let grading = l.grading.as_ref().expect("graded solve implies grading");
            let eps = l.epsilon.expect("graded solve implies epsilon");
            scaled
                .iter()
                .enumerate()
                .map(|(i, z)| z * cr(eps.powi(grading[i] as i32)))
                .collect::<Vec<_>>()
        }
        None => null_vector(&l.matrix)?,
    };

    // Residual gate: the relative residual is the final arbiter.
    let res = vec_norm(&l.matrix.mul_vec(&x))
        / (vec_norm(&x) * l.matrix.max_norm().max(T::min_positive_value()));
    if res > T::lit(1e-10) {
        return Err(Error::KernelDimensionError { found: 0 });
    }

    DensityMatrix::new(&unvectorize(&x, d), l.labels.clone())
}

/// Cached eigendecomposition of a Liouvillian for quantum-regression
/// evaluations; reusable across every delay and frequency on a grid.
pub struct Regression<T> {
    dim: usize,
    hilbert_dim: usize,
    es: EigenSystem<T>,
    kernel_idx: usize,
}

impl<T: Scalar> Regression<T> {
    pub fn new(l: &Superoperator<T>) -> Result<Self> {
        Self::from_matrix(&l.matrix, l.hilbert_dim)
    }

    /// Build from an explicit generator matrix (used for the scaled
    /// picture, which shares the spectrum of the physical generator).
    pub fn from_matrix(m: &CMatrix<T>, hilbert_dim: usize) -> Result<Self> {
        let es = eig(m)?;
        let kernel_idx = es.min_abs_index();
        Ok(Self {
            dim: m.rows(),
            hilbert_dim,
            es,
            kernel_idx,
        })
    }

    pub fn eigensystem(&self) -> &EigenSystem<T> {
        &self.es
    }

    pub fn kernel_index(&self) -> usize {
        self.kernel_idx
    }

    /// Two-time correlator `<X(0) Y(tau) Z(0)> = Tr[Y exp(L tau)(Z rho X)]`
    /// for `tau >= 0`. Negative delays belong to the caller, via the
    /// stationarity swap `g(omega1, omega2; -tau) = g(omega2, omega1; tau)`.
    pub fn two_time(
        &self,
        rho: &DensityMatrix<T>,
        x: &CMatrix<T>,
        y: &CMatrix<T>,
        z: &CMatrix<T>,
        tau: T,
    ) -> Result<C<T>> {
        let seed = &(z * rho.matrix()) * x;
        let v = vectorize(&seed);
        let w = self.es.propagate(&v, tau)?;
        Ok(vec_dot(&vectorize(&y.dagger()), &w))
    }

    /// Modal decomposition of `tau |-> Tr[Y exp(L tau) w]` with the
    /// stationary mode removed: the correlator is returned as an explicit
    /// sum of decaying exponentials plus the exact long-delay baseline
    /// supplied by the caller. This keeps baselines free of round-off from
    /// the kernel mode.
    pub fn modal_correlator(
        &self,
        functional: &[C<T>],
        seed: &[C<T>],
        baseline: T,
    ) -> ModalCorrelator<T> {
        let n = self.dim;
        let mut amps = Vec::with_capacity(n - 1);
        let mut rates = Vec::with_capacity(n - 1);
        for k in 0..n {
            if k == self.kernel_idx {
                continue;
            }
            let mut ck = C::new(T::zero(), T::zero());
            for j in 0..n {
                ck += self.es.left_vectors[(k, j)] * seed[j];
            }
            let mut pk = C::new(T::zero(), T::zero());
            for i in 0..n {
                pk += functional[i].conj() * self.es.right_vectors[(i, k)];
            }
            amps.push(pk * ck);
            rates.push(self.es.values[k]);
        }
        ModalCorrelator {
            amps,
            rates,
            baseline,
        }
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }
}

/// Correlator expressed as `baseline + Re sum_k a_k exp(lambda_k tau)`.
pub struct ModalCorrelator<T> {
    amps: Vec<C<T>>,
    rates: Vec<C<T>>,
    baseline: T,
}

impl<T: Scalar> ModalCorrelator<T> {
    /// Evaluate at a non-negative delay.
    pub fn at(&self, tau: T) -> T {
        let mut acc = C::new(T::zero(), T::zero());
        for (a, r) in self.amps.iter().zip(self.rates.iter()) {
            acc += a * (r * cr(tau)).exp();
        }
        self.baseline + acc.re
    }

    pub fn baseline(&self) -> T {
        self.baseline
    }
}

/// Free-function form of the quantum-regression correlator; builds the
/// eigendecomposition on each call. Grids should go through [`Regression`].
pub fn two_time<T: Scalar>(
    l: &Superoperator<T>,
    rho: &DensityMatrix<T>,
    x: &CMatrix<T>,
    y: &CMatrix<T>,
    z: &CMatrix<T>,
    tau: T,
) -> Result<C<T>> {
    Regression::new(l)?.two_time(rho, x, y, z, tau)
}

/// Sampled second-order correlation curve.
#[derive(Debug, Clone)]
pub struct CorrelationTrace<T> {
    /// Signed delays.
    pub tau: Vec<T>,
    /// g2 at each delay.
    pub values: Vec<T>,
    /// Parameter set and convergence report that produced the trace.
    pub meta: TraceMeta<T>,
}

/// Provenance of a correlation trace.
#[derive(Debug, Clone)]
pub struct TraceMeta<T> {
    pub system: SystemParams<T>,
    pub sensors: Option<(SensorParams<T>, SensorParams<T>)>,
    pub homodyne: T,
    /// Base sensor coupling of the final extrapolation pair (sensor-free
    /// paths leave this empty).
    pub epsilon_used: Option<T>,
    /// Largest pointwise relative discrepancy between the finer evaluation
    /// and the extrapolated limit.
    pub extrapolation_discrepancy: Option<T>,
    /// Whether the epsilon pair had to be halved once to meet the gate.
    pub retried: bool,
}

/// Coherent weight plus incoherent spectral density on a frequency grid.
#[derive(Debug, Clone)]
pub struct Spectrum<T> {
    /// `|<sigma>|^2`, the delta-line weight at the laser frequency.
    pub coherent_weight: T,
    /// Laser-relative frequencies.
    pub omega_grid: Vec<T>,
    /// Incoherent spectral density at each grid point.
    pub incoherent_density: Vec<T>,
    /// `<sigma^dag sigma> - |<sigma>|^2`.
    pub total_incoherent: T,
}
