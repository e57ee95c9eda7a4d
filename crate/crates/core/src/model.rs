//! Liouvillian construction for the driven detuned two-level emitter,
//! optional pure dephasing, two weakly coupled two-level sensors and the
//! homodyne drive on the sensors. Everything lives in the frame rotating at
//! the laser frequency, so the Liouvillian is time independent, the emitter
//! sits at its detuning and sensor frequencies are laser-relative.
//!
//! Vectorization is column-stacking: `vec(A X B) = (B^T kron A) vec(X)`,
//! so `d rho/dt = L vec(rho)` with
//! `L = -i (I kron H - H^T kron I) + sum_c (gamma_c/2) (2 conj(c) kron c
//!      - I kron c^dag c - (c^dag c)^T kron I)`.

use crate::error::{Error, Result};
use crate::qmatrix::{kron, CMatrix};
use crate::scalar::{c, ci, cr, Scalar, C};

/// Physical rates of the driven two-level system, in the laser rotating
/// frame. `gamma_sigma` sets the unit of every other rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams<T> {
    /// Radiative decay rate (> 0).
    pub gamma_sigma: T,
    /// Coherent driving amplitude (>= 0).
    pub omega_drive: T,
    /// Emitter-laser detuning, signed.
    pub delta: T,
    /// Pure dephasing rate (>= 0).
    pub gamma_phi: T,
}

impl<T: Scalar> SystemParams<T> {
    pub fn new(gamma_sigma: T, omega_drive: T, delta: T, gamma_phi: T) -> Result<Self> {
        let p = Self {
            gamma_sigma,
            omega_drive,
            delta,
            gamma_phi,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_sigma > T::zero()) || !self.gamma_sigma.is_finite() {
            return Err(Error::InvalidParams(format!(
                "gamma_sigma must be positive, got {}",
                self.gamma_sigma
            )));
        }
        if self.omega_drive < T::zero() || !self.omega_drive.is_finite() {
            return Err(Error::InvalidParams(format!(
                "omega_drive must be >= 0, got {}",
                self.omega_drive
            )));
        }
        if self.gamma_phi < T::zero() || !self.gamma_phi.is_finite() {
            return Err(Error::InvalidParams(format!(
                "gamma_phi must be >= 0, got {}",
                self.gamma_phi
            )));
        }
        if !self.delta.is_finite() {
            return Err(Error::InvalidParams("delta must be finite".into()));
        }
        Ok(())
    }
}

/// One spectral sensor: a two-level detector of linewidth `gamma_filter`
/// centered at `omega` (laser-relative), coupled with strength `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorParams<T> {
    /// Filter center frequency relative to the laser, signed.
    pub omega: T,
    /// Filter linewidth (> 0).
    pub gamma_filter: T,
    /// Sensor coupling (> 0), far below every physical rate.
    pub epsilon: T,
}

impl<T: Scalar> SensorParams<T> {
    pub fn new(omega: T, gamma_filter: T, epsilon: T) -> Result<Self> {
        let s = Self {
            omega,
            gamma_filter,
            epsilon,
        };
        s.validate()?;
        Ok(s)
    }

    /// Sensor with the default coupling `1e-3 * min(gamma_sigma, Gamma)`,
    /// two orders below the weakest rate so the quadratic sensor bias stays
    /// under the convergence target.
    pub fn with_default_epsilon(omega: T, gamma_filter: T, p: &SystemParams<T>) -> Result<Self> {
        let eps = T::lit(1e-3) * p.gamma_sigma.min(gamma_filter);
        Self::new(omega, gamma_filter, eps)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_filter > T::zero()) || !self.gamma_filter.is_finite() {
            return Err(Error::InvalidParams(format!(
                "gamma_filter must be positive, got {}",
                self.gamma_filter
            )));
        }
        if !(self.epsilon > T::zero()) || !self.epsilon.is_finite() {
            return Err(Error::InvalidParams(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !self.omega.is_finite() {
            return Err(Error::InvalidParams("sensor omega must be finite".into()));
        }
        Ok(())
    }

    /// Weak-coupling bound `1e-2 * min(gamma_sigma, gamma_filter)` for
    /// production use.
    pub fn weak_coupling_bound(&self, p: &SystemParams<T>) -> T {
        T::lit(1e-2) * p.gamma_sigma.min(self.gamma_filter)
    }
}

/// Homodyne suppression fraction in [0, 1]: 0 leaves the coherent
/// (Rayleigh) component untouched, 1 cancels it completely. The field seen
/// by each sensor is `sigma - f <sigma>`, so the coherent intensity scales
/// as `(1 - f)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomodyneFraction<T>(T);

impl<T: Scalar> HomodyneFraction<T> {
    pub fn new(f: T) -> Result<Self> {
        if f < T::zero() || f > T::one() || !f.is_finite() {
            return Err(Error::InvalidParams(format!(
                "homodyne fraction must lie in [0, 1], got {f}"
            )));
        }
        Ok(Self(f))
    }

    pub fn none() -> Self {
        Self(T::zero())
    }

    pub fn full() -> Self {
        Self(T::one())
    }

    pub fn value(&self) -> T {
        self.0
    }
}

/// Tensor factor of the composite Hilbert space, in layout order
/// emitter (slowest) then sensor 1 then sensor 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    Emitter,
    Sensor1,
    Sensor2,
}

/// Liouvillian acting on vectorized density matrices.
#[derive(Debug, Clone)]
pub struct Superoperator<T> {
    /// Dense generator, dimension `d^2 x d^2`.
    pub matrix: CMatrix<T>,
    /// Hilbert dimension `d`.
    pub hilbert_dim: usize,
    /// Ordered tensor factors.
    pub labels: Vec<Factor>,
    /// Sensor-excitation grading of each vectorized basis element: the
    /// element `|a><b|` scales as `epsilon^grading` in the weak-coupling
    /// limit. Present only when sensors are attached.
    pub grading: Option<Vec<u8>>,
    /// Sensor coupling used to build the generator, when sensors are
    /// attached.
    pub epsilon: Option<T>,
}

/// Two-level lowering operator `|g><e|` in the basis {ground, excited}.
pub fn lowering<T: Scalar>() -> CMatrix<T> {
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 1)] = cr(T::one());
    m
}

/// Operator acting as the lowering (or raising) operator on one factor of
/// the emitter x sensor1 x sensor2 space, identity elsewhere.
pub fn embed<T: Scalar>(factor: Factor, lower: bool) -> CMatrix<T> {
    let s = lowering::<T>();
    let op = if lower { s.clone() } else { s.dagger() };
    let i2 = CMatrix::identity(2);
    match factor {
        Factor::Emitter => kron(&kron(&op, &i2), &i2),
        Factor::Sensor1 => kron(&kron(&i2, &op), &i2),
        Factor::Sensor2 => kron(&kron(&i2, &i2), &op),
    }
}

/// `-i (I kron H - H^T kron I)` for a Hamiltonian on a `d`-dim space.
fn hamiltonian_part<T: Scalar>(h: &CMatrix<T>) -> CMatrix<T> {
    let d = h.rows();
    let id = CMatrix::identity(d);
    let left = kron(&id, h);
    let right = kron(&h.transpose(), &id);
    (&left - &right).scale(ci(-T::one()))
}

/// `(rate/2) (2 conj(c) kron c - I kron c^dag c - (c^dag c)^T kron I)`.
fn dissipator_part<T: Scalar>(cop: &CMatrix<T>, rate: T) -> CMatrix<T> {
    let d = cop.rows();
    let id = CMatrix::identity(d);
    let cdc = &cop.dagger() * cop;
    let jump = kron(&cop.conj(), cop).scale(c(2.0, 0.0));
    let loss = &kron(&id, &cdc) + &kron(&cdc.transpose(), &id);
    (&jump - &loss).scale(cr(T::lit(0.5) * rate))
}

/// Liouvillian of the bare driven two-level system:
/// `H = Delta sigma^dag sigma + Omega (sigma + sigma^dag)` with radiative
/// decay at `gamma_sigma` and pure dephasing. The dephasing channel uses
/// the population projector as collapse operator with a prefactor chosen so
/// the coherence decays at `gamma_sigma/2 + gamma_phi` (linewidth broadened
/// by `2 gamma_phi`).
pub fn build_system_liouvillian<T: Scalar>(p: &SystemParams<T>) -> Result<Superoperator<T>> {
    p.validate()?;
    let s = lowering::<T>();
    let sd = s.dagger();
    let n = &sd * &s;
    let drive = (&s + &sd).scale(cr(p.omega_drive));
    let h = &n.scale(cr(p.delta)) + &drive;

    let mut l = hamiltonian_part(&h);
    l = &l + &dissipator_part(&s, p.gamma_sigma);
    if p.gamma_phi > T::zero() {
        l = &l + &dissipator_part(&n, T::lit(2.0) * p.gamma_phi);
    }
    Ok(Superoperator {
        matrix: l,
        hilbert_dim: 2,
        labels: vec![Factor::Emitter],
        grading: None,
        epsilon: None,
    })
}

/// Full Liouvillian: emitter plus two sensors, each a two-level system at
/// laser-relative frequency `omega_j`, linewidth `Gamma_j`, coupled through
/// `epsilon (sigma sensor^dag + h.c.)` and displaced by the homodyne drive
/// `-f epsilon (alpha sensor^dag + h.c.)` so the sensor input field is
/// `sigma - f alpha`. `alpha` must be the steady-state coherence
/// `<sigma>` of the bare system.
pub fn build_full_liouvillian<T: Scalar>(
    p: &SystemParams<T>,
    s1: &SensorParams<T>,
    s2: &SensorParams<T>,
    f: HomodyneFraction<T>,
    alpha: C<T>,
) -> Result<Superoperator<T>> {
    build_full_liouvillian_with_options(p, s1, s2, f, alpha, false)
}

/// Same as [`build_full_liouvillian`] but optionally overriding the
/// weak-coupling check (used by convergence studies that probe the
/// quadratic sensor bias above the production bound).
pub fn build_full_liouvillian_with_options<T: Scalar>(
    p: &SystemParams<T>,
    s1: &SensorParams<T>,
    s2: &SensorParams<T>,
    f: HomodyneFraction<T>,
    alpha: C<T>,
    allow_strong_coupling: bool,
) -> Result<Superoperator<T>> {
    p.validate()?;
    s1.validate()?;
    s2.validate()?;
    if !allow_strong_coupling {
        for s in [s1, s2] {
            let bound = s.weak_coupling_bound(p);
            if s.epsilon > bound {
                return Err(Error::CouplingTooStrong {
                    epsilon: s.epsilon.to_f64().unwrap_or(f64::NAN),
                    bound: bound.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
    }

    let sig = embed::<T>(Factor::Emitter, true);
    let sig_d = sig.dagger();
    let n_sig = &sig_d * &sig;

    let mut h = &n_sig.scale(cr(p.delta)) + &(&sig + &sig_d).scale(cr(p.omega_drive));
    let mut l = CMatrix::zeros(64, 64);

    for (factor, s) in [(Factor::Sensor1, s1), (Factor::Sensor2, s2)] {
        let sn = embed::<T>(factor, true);
        let sn_d = sn.dagger();
        let n_sn = &sn_d * &sn;
        // Filter frequency.
        h = &h + &n_sn.scale(cr(s.omega));
        // Emitter-sensor coupling.
        let coupling = &(&sig * &sn_d) + &(&sig_d * &sn);
        h = &h + &coupling.scale(cr(s.epsilon));
        // Homodyne drive cancelling the coherent component of the input.
        let fval = f.value();
        if fval > T::zero() {
            let amp = cr(fval * s.epsilon);
            let drive = &sn_d.scale(alpha * amp) + &sn.scale(alpha.conj() * amp);
            h = &h - &drive;
        }
        // Filter linewidth.
        l = &l + &dissipator_part(&sn, s.gamma_filter);
    }

    l = &l + &hamiltonian_part(&h);
    l = &l + &dissipator_part(&sig, p.gamma_sigma);
    if p.gamma_phi > T::zero() {
        l = &l + &dissipator_part(&n_sig, T::lit(2.0) * p.gamma_phi);
    }

    // The grading metadata assumes a single coupling scale; it is the basis
    // for the scaled solves in the correlations layer.
    let equal_eps = (s1.epsilon - s2.epsilon).abs() <= T::epsilon() * s1.epsilon;
    Ok(Superoperator {
        matrix: l,
        hilbert_dim: 8,
        labels: vec![Factor::Emitter, Factor::Sensor1, Factor::Sensor2],
        grading: equal_eps.then(sensor_grading),
        epsilon: equal_eps.then_some(s1.epsilon),
    })
}

/// Number of sensor excitations carried by each basis state of the
/// 8-dimensional composite space (layout emitter x sensor1 x sensor2).
fn sensor_excitations(state: usize) -> u8 {
    let s1 = (state >> 1) & 1;
    let s2 = state & 1;
    (s1 + s2) as u8
}

/// Grading of the vectorized basis: the element `|a><b|` at vec index
/// `col * 8 + row` (column stacking) scales as `epsilon^(n_s(a) + n_s(b))`.
pub fn sensor_grading() -> Vec<u8> {
    let mut g = Vec::with_capacity(64);
    for col in 0..8 {
        for row in 0..8 {
            g.push(sensor_excitations(row) + sensor_excitations(col));
        }
    }
    g
}

impl<T: Scalar> Superoperator<T> {
    /// Liouville-space dimension `d^2`.
    pub fn dim(&self) -> usize {
        self.hilbert_dim * self.hilbert_dim
    }

    /// Column-stacked vectorization of a `d x d` operator.
    pub fn vectorize(&self, op: &CMatrix<T>) -> Vec<C<T>> {
        vectorize(op)
    }

    /// Inverse of [`vectorize`](Self::vectorize).
    pub fn unvectorize(&self, v: &[C<T>]) -> CMatrix<T> {
        unvectorize(v, self.hilbert_dim)
    }

    /// Apply the generator to a density operator (matrix form).
    pub fn apply(&self, rho: &CMatrix<T>) -> CMatrix<T> {
        let v = vectorize(rho);
        let w = self.matrix.mul_vec(&v);
        unvectorize(&w, self.hilbert_dim)
    }

    /// Largest entry of `vec(I)^dag L`, normalized by the generator scale;
    /// trace preservation demands this be numerically zero.
    pub fn trace_preservation_defect(&self) -> T {
        let d = self.hilbert_dim;
        let dim = self.dim();
        let scale = self.matrix.max_norm().max(T::min_positive_value());
        let mut worst = T::zero();
        for j in 0..dim {
            let mut acc = c::<T>(0.0, 0.0);
            for k in 0..d {
                // vec index of the diagonal element (k, k).
                acc += self.matrix[(k * d + k, j)];
            }
            worst = worst.max(acc.norm());
        }
        worst / scale
    }

    /// Largest entry of `L(rho^dag) - (L rho)^dag` over the given Hermitian
    /// test state; Hermiticity preservation demands this be numerically
    /// zero.
    pub fn hermiticity_defect(&self, rho: &CMatrix<T>) -> T {
        let lrho = self.apply(rho);
        let lrho_dag = self.apply(&rho.dagger());
        (&lrho_dag - &lrho.dagger()).max_norm()
            / self.matrix.max_norm().max(T::min_positive_value())
    }

    /// Generator conjugated by the grading scaling `D = diag(eps^g)`:
    /// `L_scaled = D^-1 L D`. In the scaled picture every steady-state
    /// sector is O(1) in epsilon, which keeps the tiny doubly-excited
    /// moments far above the round-off floor.
    pub fn scaled_by_grading(&self) -> Option<CMatrix<T>> {
        let grading = self.grading.as_ref()?;
        let eps = self.epsilon?;
        let dim = self.dim();
        let mut out = self.matrix.clone();
        for i in 0..dim {
            for j in 0..dim {
                let dg = grading[j] as i32 - grading[i] as i32;
                if dg != 0 {
                    out[(i, j)] = out[(i, j)] * cr(eps.powi(dg));
                }
            }
        }
        Some(out)
    }
}

/// Column-stacked vectorization.
pub fn vectorize<T: Scalar>(op: &CMatrix<T>) -> Vec<C<T>> {
    let d = op.rows();
    let mut v = Vec::with_capacity(d * d);
    for j in 0..d {
        for i in 0..d {
            v.push(op[(i, j)]);
        }
    }
    v
}

/// Inverse of [`vectorize`].
pub fn unvectorize<T: Scalar>(v: &[C<T>], d: usize) -> CMatrix<T> {
    assert_eq!(v.len(), d * d);
    CMatrix::from_fn(d, d, |i, j| v[j * d + i])
}

/// Left-multiplication superoperator `vec(A X) = (I kron A) vec(X)`.
pub fn left_mult<T: Scalar>(a: &CMatrix<T>) -> CMatrix<T> {
    let d = a.rows();
    kron(&CMatrix::identity(d), a)
}

/// Right-multiplication superoperator `vec(X B) = (B^T kron I) vec(X)`.
pub fn right_mult<T: Scalar>(b: &CMatrix<T>) -> CMatrix<T> {
    let d = b.rows();
    kron(&b.transpose(), &CMatrix::identity(d))
}
