//! Dense complex linear algebra kernel: products, tensor products,
//! eigendecomposition, null-space extraction, shifted solves and
//! evolution-operator action.
//!
//! Everything is pure and double-precision-exact for the `f64` alias; all
//! values are freely shareable across threads.

mod eig;
mod lu;
mod matrix;

pub use eig::{eig, EigenSystem};
pub use lu::Lu;
pub use matrix::{vec_dot, vec_norm, CMatrix};

use crate::error::{Error, Result};
use crate::scalar::{cr, Scalar, C};
use num_complex::Complex;

/// Kronecker (tensor) product, left factor on the slow index.
pub fn kron<T: Scalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a.kron(b)
}

/// Relative tolerance (times the spectral radius) below which an eigenvalue
/// is counted as part of the kernel.
pub const KERNEL_TOL: f64 = 1e-10;

/// Kernel vector of a square matrix with a one-dimensional null space.
///
/// Eigenvalues below `tol_zero * spectral_radius` are counted as kernel
/// candidates; the final arbiter is the relative residual of the returned
/// vector, which is polished by inverse iteration. The vector is
/// normalized to unit Euclidean norm; any further normalization is the
/// caller's business.
pub fn null_vector<T: Scalar>(m: &CMatrix<T>) -> Result<Vec<C<T>>> {
    null_vector_with_tol(m, T::lit(KERNEL_TOL))
}

/// Same as [`null_vector`] with an explicit relative kernel tolerance.
pub fn null_vector_with_tol<T: Scalar>(m: &CMatrix<T>, tol_zero: T) -> Result<Vec<C<T>>> {
    assert!(m.is_square());
    let es = eig(m)?;
    let radius = es.spectral_radius().max(T::min_positive_value());
    let cutoff = tol_zero * radius;
    let kernel: Vec<usize> = es
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() < cutoff)
        .map(|(k, _)| k)
        .collect();
    if kernel.len() != 1 {
        return Err(Error::KernelDimensionError {
            found: kernel.len(),
        });
    }
    let mut v = es.right_vector(kernel[0]);

    // Inverse-iteration polish: solving with the (numerically singular) LU
    // amplifies the kernel component and sharpens the small entries.
    let lu = Lu::new(m);
    for _ in 0..2 {
        let w = lu.solve(&v);
        let n = vec_norm(&w);
        if !n.is_finite() || n == T::zero() {
            break;
        }
        v = w.into_iter().map(|z| z / cr(n)).collect();
    }
    // Fix the overall phase so repeated calls are reproducible: largest
    // entry made real positive.
    let mut imax = 0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > v[imax].norm() {
            imax = i;
        }
    }
    let phase = v[imax] / cr(v[imax].norm());
    let v: Vec<C<T>> = v.iter().map(|z| z / phase).collect();

    let residual = vec_norm(&m.mul_vec(&v)) / vec_norm(&v);
    if residual > T::lit(1e-10) * m.max_norm().max(T::one()) {
        return Err(Error::KernelDimensionError { found: 0 });
    }
    Ok(v)
}

/// Solve `(m - z I) x = b`.
pub fn solve_shifted<T: Scalar>(m: &CMatrix<T>, z: C<T>, b: &[C<T>]) -> Result<Vec<C<T>>> {
    assert!(m.is_square());
    let n = m.rows();
    let mut shifted = m.clone();
    for i in 0..n {
        shifted[(i, i)] = shifted[(i, i)] - z;
    }
    let lu = Lu::new(&shifted);
    if lu.is_singular(T::lit(1e-14)) {
        return Err(Error::SingularShift);
    }
    Ok(lu.solve(b))
}

/// Action of `exp(m tau)` on `v` through a precomputed eigendecomposition.
pub fn propagate<T: Scalar>(es: &EigenSystem<T>, v: &[C<T>], tau: T) -> Result<Vec<C<T>>> {
    es.propagate(v, tau)
}

/// Identity helper used throughout the model layer.
pub fn identity_like<T: Scalar>(n: usize) -> CMatrix<T> {
    CMatrix::identity(n)
}

/// Complex zero vector.
pub fn zero_vec<T: Scalar>(n: usize) -> Vec<C<T>> {
    vec![Complex::new(T::zero(), T::zero()); n]
}
