//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by the linear-algebra kernel and the physics layers.
#[derive(Debug, Error)]
pub enum Error {
    /// QR iteration failed to reduce the matrix to triangular form.
    #[error("eig: QR iteration did not converge after {iterations} sweeps (dimension {dim})")]
    NonConvergence { dim: usize, iterations: usize },

    /// Eigenvector basis is too ill-conditioned to biorthonormalize.
    #[error("eig: eigenvector matrix is ill-conditioned (cond ~ {cond:.3e}); matrix is numerically defective")]
    DefectiveMatrix { cond: f64 },

    /// Kernel dimension is not one.
    #[error("null_vector: found {found} eigenvalues below the kernel tolerance, expected exactly 1")]
    KernelDimensionError { found: usize },

    /// Shifted matrix is numerically singular.
    #[error("solve_shifted: matrix minus shift is numerically singular")]
    SingularShift,

    /// Negative delays must be handled by the caller via operator-order swap.
    #[error("propagate: negative delay {tau} passed to the evolution kernel")]
    NegativeDelay { tau: f64 },

    /// Physical parameters violate their invariants.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Sensor coupling exceeds the weak-coupling bound.
    #[error("sensor coupling epsilon = {epsilon} exceeds the weak-coupling bound {bound} (1e-2 x min rate)")]
    CouplingTooStrong { epsilon: f64, bound: f64 },

    /// Detected intensity is numerically zero; the correlation is undefined.
    #[error("g2: detected intensity {intensity:.3e} is below 1e-30; correlation undefined")]
    ZeroIntensity { intensity: f64 },

    /// The epsilon -> 0 extrapolation did not meet the convergence gate.
    #[error("filtered_g2: epsilon extrapolation discrepancy {discrepancy:.3e} exceeds 1e-3 after retry (epsilon = {epsilon})")]
    EpsilonNotConverged { discrepancy: f64, epsilon: f64 },

    /// The ideal cascade correlation has a discontinuity at tau = 0.
    #[error("cascade_g2: correlation is undefined at tau = 0")]
    UndefinedAtZero,

    /// The homodyned zero-delay formula requires a nonzero drive.
    #[error("homodyned_g20: formula diverges at zero driving")]
    ZeroDriving,

    /// Cascade fit residual exceeds the acceptance threshold.
    #[error("fit_cascade: RMS residual {residual:.3e} exceeds 10% of the trace dynamic range {range:.3e}")]
    FitDivergence {
        residual: f64,
        range: f64,
        /// The diverged fit, retained for diagnostics.
        fit: Box<crate::oracle::CascadeFit<f64>>,
    },

    /// Not enough usable points on one of the delay branches.
    #[error("fit_cascade: {0}")]
    InsufficientWindow(String),
}

pub type Result<T> = std::result::Result<T, Error>;
