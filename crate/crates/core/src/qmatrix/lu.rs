//! Complex LU factorization with partial pivoting.

use super::matrix::CMatrix;
use crate::scalar::{Scalar, C};
use num_complex::Complex;

/// LU factorization `P A = L U` of a square complex matrix.
pub struct Lu<T> {
    /// Combined L (strict lower, unit diagonal implied) and U (upper).
    lu: CMatrix<T>,
    /// Row permutation: `perm[k]` is the original row in position `k`.
    perm: Vec<usize>,
    n: usize,
    /// Smallest pivot magnitude encountered.
    min_pivot: T,
    /// Largest pivot magnitude encountered.
    max_pivot: T,
}

impl<T: Scalar> Lu<T> {
    /// Factor the matrix. Never fails outright; singularity is reported
    /// through [`Lu::is_singular`] so callers can decide how to proceed
    /// (inverse iteration deliberately solves near-singular systems).
    pub fn new(a: &CMatrix<T>) -> Self {
        assert!(a.is_square(), "LU requires a square matrix");
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = T::infinity();
        let mut max_pivot = T::zero();

        for k in 0..n {
            // Partial pivot on column k.
            let mut p = k;
            let mut best = lu[(k, k)].norm();
            for i in (k + 1)..n {
                let v = lu[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            let pn = pivot.norm();
            min_pivot = min_pivot.min(pn);
            max_pivot = max_pivot.max(pn);
            if pn == T::zero() {
                continue;
            }
            for i in (k + 1)..n {
                let m = lu[(i, k)] / pivot;
                lu[(i, k)] = m;
                if m.norm_sqr() == T::zero() {
                    continue;
                }
                for j in (k + 1)..n {
                    let s = lu[(k, j)];
                    lu[(i, j)] = lu[(i, j)] - m * s;
                }
            }
        }

        Self {
            lu,
            perm,
            n,
            min_pivot,
            max_pivot,
        }
    }

    /// Ratio of smallest to largest pivot; a crude but effective singularity
    /// signal for the shifted solves used here.
    pub fn pivot_ratio(&self) -> T {
        if self.max_pivot == T::zero() {
            T::zero()
        } else {
            self.min_pivot / self.max_pivot
        }
    }

    /// Whether any pivot fell below `tol` times the largest pivot.
    pub fn is_singular(&self, rel_tol: T) -> bool {
        self.max_pivot == T::zero() || self.min_pivot <= rel_tol * self.max_pivot
    }

    /// Solve `A x = b`. Zero pivots are replaced by a tiny value so that
    /// inverse iteration on a singular matrix blows up along the kernel
    /// direction instead of dividing by zero.
    pub fn solve(&self, b: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x: Vec<C<T>> = (0..n).map(|k| b[self.perm[k]]).collect();
        // Forward substitution (unit lower).
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc = acc - self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        // Back substitution.
        let tiny = T::epsilon() * self.max_pivot.max(T::min_positive_value());
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc = acc - self.lu[(i, j)] * x[j];
            }
            let mut d = self.lu[(i, i)];
            if d.norm() < tiny {
                d = Complex::new(tiny, T::zero());
            }
            x[i] = acc / d;
        }
        x
    }

    /// Solve for each column of the identity, producing the inverse.
    pub fn inverse(&self) -> CMatrix<T> {
        let n = self.n;
        let mut inv = CMatrix::zeros(n, n);
        let mut e = vec![Complex::new(T::zero(), T::zero()); n];
        for j in 0..n {
            e[j] = Complex::new(T::one(), T::zero());
            let col = self.solve(&e);
            e[j] = Complex::new(T::zero(), T::zero());
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}
