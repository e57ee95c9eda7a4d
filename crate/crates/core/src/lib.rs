//! Simulator for one-photon spectra and frequency-resolved / homodyned
//! two-photon correlations of a coherently driven, detuned two-level
//! emitter.
//!
//! The crate is organized in four layers:
//!
//! * [`qmatrix`] — dense complex linear algebra (tensor products,
//!   eigendecomposition, shifted solves, evolution-operator action);
//! * [`model`] — Liouvillian builders for the driven two-level system,
//!   optional pure dephasing, two weakly coupled spectral sensors and the
//!   homodyne drive that cancels the coherent component;
//! * [`correlations`] — steady states, quantum-regression two-time
//!   correlators, coherent/incoherent spectra, homodyned and filtered
//!   second-order correlations with epsilon -> 0 convergence control;
//! * [`oracle`] — closed-form results (ideal two-photon cascade, homodyned
//!   zero-delay coincidence, intensity ratios) and the cascade-parameter
//!   fit used both for analysis and as test oracles.
//!
//! All numerics are generic over the real scalar via [`scalar::Scalar`];
//! production use is the `f64` instantiation re-exported through the type
//! aliases below.

pub mod correlations;
pub mod error;
pub mod model;
pub mod oracle;
pub mod qmatrix;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Production real scalar.
pub type Real = f64;
/// Production complex scalar.
pub type Cplx = num_complex::Complex<f64>;
/// Dense complex matrix at production precision.
pub type CMatrix64 = qmatrix::CMatrix<f64>;
/// Eigendecomposition at production precision.
pub type EigenSystem64 = qmatrix::EigenSystem<f64>;
/// System parameters at production precision.
pub type SystemParams64 = model::SystemParams<f64>;
/// Sensor parameters at production precision.
pub type SensorParams64 = model::SensorParams<f64>;
/// Homodyne fraction at production precision.
pub type HomodyneFraction64 = model::HomodyneFraction<f64>;
/// Superoperator at production precision.
pub type Superoperator64 = model::Superoperator<f64>;
/// Density matrix at production precision.
pub type DensityMatrix64 = correlations::DensityMatrix<f64>;
/// Spectrum at production precision.
pub type Spectrum64 = correlations::Spectrum<f64>;
/// Correlation trace at production precision.
pub type CorrelationTrace64 = correlations::CorrelationTrace<f64>;
