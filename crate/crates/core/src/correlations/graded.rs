//! Sector-wise steady-state solver for sensor-graded Liouvillians.
//!
//! In the scaled picture `L_s = D^-1 L D` with `D = diag(eps^g)`, the
//! generator is block lower triangular up to O(eps^2) feedback: sector g is
//! sourced by sector g-1 through O(1) couplings, while the back-action of
//! higher sectors enters at O(eps^2). Solving sector by sector therefore
//! converges geometrically and, crucially, keeps every sector accurate
//! relative to its own magnitude — a full-matrix solve would drown the
//! doubly-excited moments in round-off from the O(1) sector.

use crate::error::{Error, Result};
use crate::model::Superoperator;
use crate::qmatrix::{CMatrix, Lu};
use crate::scalar::{cr, Scalar, C};
use num_complex::Complex;

const MAX_SWEEPS: usize = 80;

/// Steady state of a graded Liouvillian in scaled coordinates, normalized
/// so the physical trace is one. Returns `Ok(None)` when the superoperator
/// carries no grading metadata (callers then fall back to the kernel
/// extraction).
pub fn graded_steady_vector<T: Scalar>(l: &Superoperator<T>) -> Result<Option<Vec<C<T>>>> {
    let (grading, eps) = match (&l.grading, l.epsilon) {
        (Some(g), Some(e)) => (g.clone(), e),
        _ => return Ok(None),
    };
    let scaled = l
        .scaled_by_grading()
        .expect("grading metadata implies a scaled generator");
    let x = solve_scaled(&scaled, &grading, eps, l.hilbert_dim)?;
    Ok(Some(x))
}

/// Solve `L_s x = 0` sector by sector with the physical trace pinned to 1.
pub(crate) fn solve_scaled<T: Scalar>(
    scaled: &CMatrix<T>,
    grading: &[u8],
    eps: T,
    d: usize,
) -> Result<Vec<C<T>>> {
    let dim = d * d;
    assert_eq!(scaled.rows(), dim);
    assert_eq!(grading.len(), dim);
    let max_sector = *grading.iter().max().unwrap_or(&0) as usize;

    // Index lists per sector.
    let sectors: Vec<Vec<usize>> = (0..=max_sector)
        .map(|g| {
            (0..dim)
                .filter(|&i| grading[i] as usize == g)
                .collect::<Vec<_>>()
        })
        .collect();

    // Diagonal vec indices (physical trace support) per sector.
    let diag_indices: Vec<usize> = (0..d).map(|k| k * d + k).collect();

    // Sector-0 trace row replaces the first sector-0 diagonal equation; the
    // sector-0 block is the bare-system generator, whose rows are linearly
    // dependent through trace preservation.
    let replace_idx = *sectors[0]
        .iter()
        .find(|i| diag_indices.contains(i))
        .ok_or_else(|| Error::InvalidParams("grading has no sector-0 diagonal".into()))?;

    // Factor each sector's diagonal block. Sector 0 gets the trace row.
    let mut lus: Vec<Lu<T>> = Vec::with_capacity(max_sector + 1);
    for (g, idx) in sectors.iter().enumerate() {
        let m = idx.len();
        let mut block = CMatrix::zeros(m, m);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                block[(a, b)] = scaled[(i, j)];
            }
        }
        if g == 0 {
            let r = idx.iter().position(|&i| i == replace_idx).unwrap();
            for (b, &j) in idx.iter().enumerate() {
                block[(r, b)] = if diag_indices.contains(&j) {
                    cr(T::one())
                } else {
                    Complex::new(T::zero(), T::zero())
                };
            }
        }
        let lu = Lu::new(&block);
        if g > 0 && lu.is_singular(T::lit(1e-13)) {
            return Err(Error::KernelDimensionError { found: 2 });
        }
        lus.push(lu);
    }

    let mut x = vec![Complex::new(T::zero(), T::zero()); dim];
    let mut prev = x.clone();

    for sweep in 0..MAX_SWEEPS {
        for (g, idx) in sectors.iter().enumerate() {
            let m = idx.len();
            let mut b = vec![Complex::new(T::zero(), T::zero()); m];
            for (a, &i) in idx.iter().enumerate() {
                let mut acc = Complex::new(T::zero(), T::zero());
                for j in 0..dim {
                    if grading[j] as usize != g {
                        acc += scaled[(i, j)] * x[j];
                    }
                }
                b[a] = -acc;
            }
            if g == 0 {
                // Trace of the physical state: sector-0 diagonal plus the
                // eps^2-weighted higher even sectors from the current
                // iterate.
                let r = idx.iter().position(|&i| i == replace_idx).unwrap();
                let mut higher = Complex::new(T::zero(), T::zero());
                for &di in &diag_indices {
                    let gd = grading[di] as i32;
                    if gd > 0 {
                        higher += x[di] * cr(eps.powi(gd));
                    }
                }
                b[r] = cr(T::one()) - higher;
            }
            let sol = lus[g].solve(&b);
            for (a, &i) in idx.iter().enumerate() {
                x[i] = sol[a];
            }
        }

        // Sector-relative change controls convergence: a global norm would
        // never see the smallest sector.
        let mut worst = T::zero();
        for idx in &sectors {
            let mut change = T::zero();
            let mut scale = T::zero();
            for &i in idx {
                change = change + (x[i] - prev[i]).norm_sqr();
                scale = scale + x[i].norm_sqr();
            }
            let rel = if scale > T::zero() {
                (change / scale).sqrt()
            } else if change > T::zero() {
                T::one()
            } else {
                T::zero()
            };
            worst = worst.max(rel);
        }
        prev.copy_from_slice(&x);
        if sweep > 0 && worst < T::lit(1e-14) {
            break;
        }
    }

    // Exact physical-trace normalization.
    let mut trace = Complex::new(T::zero(), T::zero());
    for &di in &diag_indices {
        trace += x[di] * cr(eps.powi(grading[di] as i32));
    }
    if trace.norm() < T::lit(1e-300) {
        return Err(Error::KernelDimensionError { found: 0 });
    }
    for xi in x.iter_mut() {
        *xi = *xi / trace;
    }
    Ok(x)
}
