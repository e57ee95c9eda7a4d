//! Eigendecomposition of general complex matrices.
//!
//! Pipeline: Parlett-Reinsch balancing, Householder reduction to upper
//! Hessenberg form, explicit single-shift QR iteration with Wilkinson
//! shifts, back-substitution for the eigenvectors of the triangular Schur
//! factor, and biorthonormal left vectors from the inverse of the right
//! eigenvector matrix.

use super::lu::Lu;
use super::matrix::{vec_norm, CMatrix};
use crate::error::{Error, Result};
use crate::scalar::{cr, Scalar, C};
use num_complex::Complex;

/// Condition-number threshold above which the eigenbasis is declared
/// numerically defective.
const DEFECTIVE_COND: f64 = 1e12;

/// Eigenvalues with biorthonormalized right/left eigenvectors:
/// `A = R diag(values) L` with `L R = I`.
#[derive(Debug, Clone)]
pub struct EigenSystem<T> {
    /// Eigenvalues.
    pub values: Vec<C<T>>,
    /// Right eigenvectors, one per column.
    pub right_vectors: CMatrix<T>,
    /// Left eigenvectors, one per row; `left_vectors * right_vectors = I`.
    pub left_vectors: CMatrix<T>,
}

impl<T: Scalar> EigenSystem<T> {
    /// Spectral radius `max |lambda|`.
    pub fn spectral_radius(&self) -> T {
        self.values
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Index of the eigenvalue of smallest magnitude.
    pub fn min_abs_index(&self) -> usize {
        let mut best = 0;
        for (k, v) in self.values.iter().enumerate() {
            if v.norm() < self.values[best].norm() {
                best = k;
            }
        }
        best
    }

    /// Reconstruct `sum_k lambda_k r_k l_k` (should reproduce the input).
    pub fn reconstruct(&self) -> CMatrix<T> {
        let lam = CMatrix::diag(&self.values);
        let rl = &self.right_vectors * &lam;
        &rl * &self.left_vectors
    }

    fn column(&self, k: usize) -> Vec<C<T>> {
        (0..self.values.len())
            .map(|i| self.right_vectors[(i, k)])
            .collect()
    }

    /// Right eigenvector `k` as an owned vector.
    pub fn right_vector(&self, k: usize) -> Vec<C<T>> {
        self.column(k)
    }

    /// Apply `exp(A tau)` to `v` through the eigenbasis:
    /// `sum_k exp(lambda_k tau) r_k (l_k . v)`.
    pub fn propagate(&self, v: &[C<T>], tau: T) -> Result<Vec<C<T>>> {
        if tau < T::zero() {
            return Err(Error::NegativeDelay {
                tau: tau.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(self.propagate_masked(v, tau, |_| true))
    }

    /// Same as [`propagate`](Self::propagate) but skipping eigenmodes for
    /// which `keep` returns false (used to deflate the stationary mode so
    /// correlation baselines can be added back exactly).
    pub fn propagate_masked(&self, v: &[C<T>], tau: T, keep: impl Fn(usize) -> bool) -> Vec<C<T>> {
        let n = self.values.len();
        assert_eq!(v.len(), n);
        // Coefficients c_k = l_k . v
        let mut out = vec![Complex::new(T::zero(), T::zero()); n];
        for k in 0..n {
            if !keep(k) {
                continue;
            }
            let mut ck = Complex::new(T::zero(), T::zero());
            for j in 0..n {
                ck += self.left_vectors[(k, j)] * v[j];
            }
            let w = (self.values[k] * cr(tau)).exp() * ck;
            if w.norm_sqr() == T::zero() {
                continue;
            }
            for i in 0..n {
                out[i] += self.right_vectors[(i, k)] * w;
            }
        }
        out
    }
}

/// Eigendecomposition of a general square complex matrix.
pub fn eig<T: Scalar>(a: &CMatrix<T>) -> Result<EigenSystem<T>> {
    assert!(a.is_square(), "eig requires a square matrix");
    let n = a.rows();
    if n == 0 {
        return Ok(EigenSystem {
            values: vec![],
            right_vectors: CMatrix::zeros(0, 0),
            left_vectors: CMatrix::zeros(0, 0),
        });
    }

    // Balancing: diagonal similarity with powers of two.
    let mut h = a.clone();
    let scale = balance(&mut h);

    // Reduce to upper Hessenberg, accumulating the transformation in q.
    let mut q = CMatrix::identity(n);
    hessenberg(&mut h, &mut q);

    // Shifted QR iteration to (upper triangular) Schur form.
    schur_qr(&mut h, &mut q, n)?;

    let values: Vec<C<T>> = (0..n).map(|k| h[(k, k)]).collect();

    // Eigenvectors of the triangular factor, rotated back and unbalanced.
    let y = triangular_eigenvectors(&h);
    let mut right = &q * &y;
    for i in 0..n {
        for k in 0..n {
            right[(i, k)] = right[(i, k)] * cr(scale[i]);
        }
    }

    // Re-orthonormalize within clusters of numerically equal eigenvalues so
    // symmetry-degenerate modes do not produce a near-singular basis.
    let spectral_radius = values
        .iter()
        .map(|z| z.norm())
        .fold(T::zero(), |x, y| x.max(y));
    orthonormalize_clusters(&values, &mut right, T::lit(1e-9) * spectral_radius.max(T::one()));

    // Normalize columns.
    for k in 0..n {
        let nrm = (0..n)
            .map(|i| right[(i, k)].norm_sqr())
            .fold(T::zero(), |x, y| x + y)
            .sqrt();
        if nrm > T::zero() {
            for i in 0..n {
                right[(i, k)] = right[(i, k)] / cr(nrm);
            }
        }
    }

    // Left eigenvectors: rows of R^{-1}; biorthonormal by construction.
    let lu = Lu::new(&right);
    let left = lu.inverse();
    let cond = right.one_norm() * left.one_norm();
    if cond > T::lit(DEFECTIVE_COND) {
        return Err(Error::DefectiveMatrix {
            cond: cond.to_f64().unwrap_or(f64::INFINITY),
        });
    }

    Ok(EigenSystem {
        values,
        right_vectors: right,
        left_vectors: left,
    })
}

/// Parlett-Reinsch balancing with radix-2 scaling. Returns the diagonal
/// similarity factors applied on the right.
fn balance<T: Scalar>(a: &mut CMatrix<T>) -> Vec<T> {
    let n = a.rows();
    let mut scale = vec![T::one(); n];
    let radix = T::lit(2.0);
    let radix_sq = radix * radix;
    loop {
        let mut converged = true;
        for i in 0..n {
            let mut c = T::zero();
            let mut r = T::zero();
            for j in 0..n {
                if j != i {
                    c = c + a[(j, i)].norm();
                    r = r + a[(i, j)].norm();
                }
            }
            if c == T::zero() || r == T::zero() {
                continue;
            }
            let mut f = T::one();
            let mut cc = c;
            let mut rr = r;
            let s = c + r;
            while cc < rr / radix {
                f = f * radix;
                cc = cc * radix_sq;
            }
            while cc >= rr * radix {
                f = f / radix;
                cc = cc / radix_sq;
            }
            // rr is unchanged by the loop; the termination test uses the
            // scaled column/row sums.
            let _ = rr;
            rr = r / f;
            cc = c * f;
            if cc + rr < T::lit(0.95) * s {
                converged = false;
                scale[i] = scale[i] * f;
                let inv_f = T::one() / f;
                for j in 0..n {
                    a[(i, j)] = a[(i, j)] * cr(inv_f);
                }
                for j in 0..n {
                    a[(j, i)] = a[(j, i)] * cr(f);
                }
            }
        }
        if converged {
            break;
        }
    }
    scale
}

/// Householder reduction to upper Hessenberg form; `q` accumulates the
/// unitary similarity (input assumed identity).
fn hessenberg<T: Scalar>(h: &mut CMatrix<T>, q: &mut CMatrix<T>) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        // Householder vector for column k below the subdiagonal.
        let mut x: Vec<C<T>> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = vec_norm(&x);
        if xnorm <= T::epsilon() * h.max_norm() {
            continue;
        }
        // alpha = -exp(i arg(x0)) * |x|
        let x0 = x[0];
        let phase = if x0.norm() > T::zero() {
            x0 / cr(x0.norm())
        } else {
            cr(T::one())
        };
        let alpha = -phase * cr(xnorm);
        x[0] = x0 - alpha;
        let vnorm = vec_norm(&x);
        if vnorm == T::zero() {
            continue;
        }
        for xi in x.iter_mut() {
            *xi = *xi / cr(vnorm);
        }
        // Apply P = I - 2 v v^H from the left: rows k+1..n
        for j in 0..n {
            let mut dot = Complex::new(T::zero(), T::zero());
            for (idx, i) in (k + 1..n).enumerate() {
                dot += x[idx].conj() * h[(i, j)];
            }
            let two_dot = dot * cr(T::lit(2.0));
            for (idx, i) in (k + 1..n).enumerate() {
                h[(i, j)] = h[(i, j)] - x[idx] * two_dot;
            }
        }
        // Apply from the right: columns k+1..n
        for i in 0..n {
            let mut dot = Complex::new(T::zero(), T::zero());
            for (idx, j) in (k + 1..n).enumerate() {
                dot += h[(i, j)] * x[idx];
            }
            let two_dot = dot * cr(T::lit(2.0));
            for (idx, j) in (k + 1..n).enumerate() {
                h[(i, j)] = h[(i, j)] - two_dot * x[idx].conj();
            }
        }
        // Accumulate into q (right multiplication).
        for i in 0..n {
            let mut dot = Complex::new(T::zero(), T::zero());
            for (idx, j) in (k + 1..n).enumerate() {
                dot += q[(i, j)] * x[idx];
            }
            let two_dot = dot * cr(T::lit(2.0));
            for (idx, j) in (k + 1..n).enumerate() {
                q[(i, j)] = q[(i, j)] - two_dot * x[idx].conj();
            }
        }
        // Clean the annihilated entries.
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = Complex::new(T::zero(), T::zero());
        }
    }
}

/// Explicit single-shift QR iteration on an upper Hessenberg matrix,
/// producing the triangular Schur factor in place and accumulating the
/// unitary transformation into `q`.
fn schur_qr<T: Scalar>(h: &mut CMatrix<T>, q: &mut CMatrix<T>, n: usize) -> Result<()> {
    if n <= 1 {
        return Ok(());
    }
    let max_total = 60 * n;
    let mut total = 0usize;
    let mut hi = n - 1;
    let mut last_hi = hi;
    let mut block_iters = 0usize;

    loop {
        // Deflate converged eigenvalues from the bottom.
        while hi > 0 && subdiag_negligible(h, hi) {
            h[(hi, hi - 1)] = Complex::new(T::zero(), T::zero());
            hi -= 1;
        }
        if hi == 0 {
            break;
        }
        if hi != last_hi {
            block_iters = 0;
            last_hi = hi;
        }
        // Top of the active block: first negligible subdiagonal above hi.
        let mut lo = hi;
        while lo > 0 && !subdiag_negligible(h, lo) {
            lo -= 1;
        }
        if lo > 0 {
            h[(lo, lo - 1)] = Complex::new(T::zero(), T::zero());
        }

        total += 1;
        block_iters += 1;
        if total > max_total {
            return Err(Error::NonConvergence {
                dim: n,
                iterations: total,
            });
        }
        let shift = if block_iters % 12 == 0 {
            // Exceptional shift to break limit cycles.
            let m = h[(hi, hi - 1)].norm()
                + if hi >= 2 {
                    h[(hi - 1, hi - 2)].norm()
                } else {
                    T::zero()
                };
            Complex::new(m, T::zero()) + h[(hi, hi)]
        } else {
            wilkinson_shift(h, hi)
        };
        qr_step(h, q, lo, hi, shift);
    }

    // Zero the strictly-lower part to make the triangular structure exact.
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = Complex::new(T::zero(), T::zero());
        }
    }
    Ok(())
}

fn subdiag_negligible<T: Scalar>(h: &CMatrix<T>, i: usize) -> bool {
    if i == 0 {
        return true;
    }
    let s = h[(i - 1, i - 1)].norm() + h[(i, i)].norm();
    let s = if s == T::zero() { h.max_norm() } else { s };
    h[(i, i - 1)].norm() <= T::epsilon() * s
}

/// Wilkinson shift: eigenvalue of the trailing 2x2 block closest to the
/// bottom-right entry.
fn wilkinson_shift<T: Scalar>(h: &CMatrix<T>, hi: usize) -> C<T> {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let tr_half = (a + d) * cr(T::lit(0.5));
    let det = a * d - b * c;
    let disc = (tr_half * tr_half - det).sqrt();
    let l1 = tr_half + disc;
    let l2 = tr_half - disc;
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// One explicit QR step with shift on the active Hessenberg block
/// `[lo, hi]`: H - sI = QR (via Givens rotations), H <- RQ + sI.
fn qr_step<T: Scalar>(h: &mut CMatrix<T>, q: &mut CMatrix<T>, lo: usize, hi: usize, shift: C<T>) {
    let n = h.rows();
    for i in lo..=hi {
        h[(i, i)] = h[(i, i)] - shift;
    }
    // Forward pass: rotations G_i acting on rows (i, i+1) annihilate the
    // subdiagonal of the shifted matrix.
    let mut rot: Vec<(C<T>, C<T>)> = Vec::with_capacity(hi - lo);
    for i in lo..hi {
        let a = h[(i, i)];
        let b = h[(i + 1, i)];
        let (c, s) = givens(a, b);
        rot.push((c, s));
        // Apply to rows i, i+1 over columns i..n (Hessenberg: zero left of i).
        for j in i..n {
            let t1 = h[(i, j)];
            let t2 = h[(i + 1, j)];
            h[(i, j)] = c.conj() * t1 + s.conj() * t2;
            h[(i + 1, j)] = -s * t1 + c * t2;
        }
    }
    // Backward pass: H <- H G_lo^H ... G_{hi-1}^H applied on columns, and the
    // same accumulation into q.
    for (offset, (c, s)) in rot.iter().enumerate() {
        let i = lo + offset;
        let top = 0;
        for r in top..=(i + 1).min(hi) {
            let t1 = h[(r, i)];
            let t2 = h[(r, i + 1)];
            h[(r, i)] = t1 * *c + t2 * *s;
            h[(r, i + 1)] = -t1 * s.conj() + t2 * c.conj();
        }
        for r in 0..n {
            let t1 = q[(r, i)];
            let t2 = q[(r, i + 1)];
            q[(r, i)] = t1 * *c + t2 * *s;
            q[(r, i + 1)] = -t1 * s.conj() + t2 * c.conj();
        }
    }
    for i in lo..=hi {
        h[(i, i)] = h[(i, i)] + shift;
    }
    // Restore exact zeros below the first subdiagonal inside the block.
    for i in (lo + 2)..=hi {
        for j in lo..(i - 1) {
            h[(i, j)] = Complex::new(T::zero(), T::zero());
        }
    }
}

/// Complex Givens rotation zeroing `b`: returns (c, s) with real `c`,
/// `|c|^2 + |s|^2 = 1` and `-s a + c b = 0`, so the rotation
/// `[[conj(c), conj(s)], [-s, c]]` maps `(a, b)` to `(r, 0)`.
fn givens<T: Scalar>(a: C<T>, b: C<T>) -> (C<T>, C<T>) {
    let an = a.norm();
    let bn = b.norm();
    if bn == T::zero() {
        return (cr(T::one()), Complex::new(T::zero(), T::zero()));
    }
    if an == T::zero() {
        return (Complex::new(T::zero(), T::zero()), cr(T::one()));
    }
    // Scale to avoid overflow in the hypotenuse.
    let m = an.max(bn);
    let ans = an / m;
    let bns = bn / m;
    let r = m * (ans * ans + bns * bns).sqrt();
    let c = cr(an / r);
    let s = a.conj() * b / cr(an * r);
    (c, s)
}

/// Eigenvectors of an upper triangular matrix by back-substitution with
/// small-denominator protection, columns normalized to unit norm.
fn triangular_eigenvectors<T: Scalar>(t: &CMatrix<T>) -> CMatrix<T> {
    let n = t.rows();
    let mut y = CMatrix::zeros(n, n);
    let tnorm = t.max_norm().max(T::min_positive_value());
    let small = T::epsilon() * tnorm;
    for k in 0..n {
        let lam = t[(k, k)];
        y[(k, k)] = cr(T::one());
        for i in (0..k).rev() {
            // y_i = -(sum_{j=i+1..k} t_ij y_j) / (t_ii - lam)
            let mut acc = Complex::new(T::zero(), T::zero());
            for j in (i + 1)..=k {
                acc += t[(i, j)] * y[(j, k)];
            }
            let mut den = t[(i, i)] - lam;
            if den.norm() < small {
                den = Complex::new(small, T::zero());
            }
            y[(i, k)] = -acc / den;
            // Rescale the whole column if it grows too large.
            let mag = y[(i, k)].norm();
            let big = T::one() / (T::epsilon() * T::epsilon());
            if mag > big {
                let inv = T::one() / mag;
                for r in i..=k {
                    y[(r, k)] = y[(r, k)] * cr(inv);
                }
            }
        }
    }
    y
}

/// Modified Gram-Schmidt within clusters of (numerically) equal eigenvalues.
/// Any basis of an exactly degenerate eigenspace is valid; orthonormalizing
/// it keeps the full eigenvector matrix well-conditioned.
fn orthonormalize_clusters<T: Scalar>(values: &[C<T>], right: &mut CMatrix<T>, ctol: T) {
    let n = values.len();
    let mut assigned = vec![false; n];
    for k in 0..n {
        if assigned[k] {
            continue;
        }
        let mut cluster = vec![k];
        for j in (k + 1)..n {
            if !assigned[j] && (values[j] - values[k]).norm() <= ctol {
                cluster.push(j);
            }
        }
        for &j in &cluster {
            assigned[j] = true;
        }
        if cluster.len() < 2 {
            continue;
        }
        for (pos, &col) in cluster.iter().enumerate() {
            // Remove projections onto earlier cluster members.
            for &prev in &cluster[..pos] {
                let mut dot = Complex::new(T::zero(), T::zero());
                for i in 0..n {
                    dot += right[(i, prev)].conj() * right[(i, col)];
                }
                for i in 0..n {
                    let sub = right[(i, prev)] * dot;
                    right[(i, col)] = right[(i, col)] - sub;
                }
            }
            let nrm = (0..n)
                .map(|i| right[(i, col)].norm_sqr())
                .fold(T::zero(), |a, b| a + b)
                .sqrt();
            if nrm > T::zero() {
                for i in 0..n {
                    right[(i, col)] = right[(i, col)] / cr(nrm);
                }
            }
        }
    }
}
