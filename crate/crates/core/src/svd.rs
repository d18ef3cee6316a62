//! One-sided Jacobi SVD.
//!
//! Every rank decision in this crate flows through here. The
//! bidiagonalization-based SVD shipped by the linear-algebra backend
//! loses accuracy on exactly rank-deficient inputs (singular values off
//! by percents on low-rank projectors), which poisons range/kernel
//! computations. One-sided Jacobi orthogonalizes the columns directly,
//! so the computed left vectors are orthonormal by construction and
//! small singular values come out with high relative accuracy. At desk
//! scale the extra arithmetic is irrelevant.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Entry;

pub(crate) struct SvdParts<T: Entry> {
    /// `m x min(m, n)`, orthonormal columns up to the numerical rank.
    pub u: DMatrix<T>,
    /// Descending, length `min(m, n)`.
    pub singular_values: Vec<f64>,
    /// `min(m, n) x n`.
    pub v_t: DMatrix<T>,
}

const MAX_SWEEPS: usize = 128;

pub(crate) fn svd_parts<T: Entry>(m: &DMatrix<T>) -> Result<SvdParts<T>> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(SvdParts {
            u: DMatrix::zeros(rows, 0),
            singular_values: Vec::new(),
            v_t: DMatrix::zeros(0, cols),
        });
    }
    if rows >= cols {
        let (u, sigma, v) = jacobi_tall(m.clone())?;
        Ok(SvdParts {
            u,
            singular_values: sigma,
            v_t: v.adjoint(),
        })
    } else {
        // A = (A^H)^H: run on the tall adjoint and swap factors.
        let (u_t, sigma, v_t_side) = jacobi_tall(m.adjoint())?;
        Ok(SvdParts {
            u: v_t_side,
            singular_values: sigma,
            v_t: u_t.adjoint(),
        })
    }
}

/// Largest singular value; zero for empty shapes.
pub(crate) fn sigma_max_of<T: Entry>(m: &DMatrix<T>) -> f64 {
    svd_parts(m)
        .map(|p| p.singular_values.first().copied().unwrap_or(0.0))
        .unwrap_or(0.0)
}

/// One-sided Jacobi on a tall (or square) matrix: returns `(U, sigma, V)`
/// with `A = U diag(sigma) V^H`, `U` of shape `m x n` (columns for zero
/// singular values are zero), `V` unitary `n x n`, `sigma` descending.
fn jacobi_tall<T: Entry>(mut w: DMatrix<T>) -> Result<(DMatrix<T>, Vec<f64>, DMatrix<T>)> {
    let (mrows, n) = w.shape();
    debug_assert!(mrows >= n && n > 0);
    let mut v = DMatrix::<T>::identity(n, n);
    // The rotation threshold must sit above the rounding noise of a
    // length-m dot product (about m * eps * ||x|| ||y||), or pairs that
    // are orthogonal to machine precision keep rotating forever.
    let eps = f64::EPSILON * 2.0 * (mrows as f64).max(4.0);
    // Columns whose norm falls below the roundoff floor of the whole
    // matrix are cancellation residue; they correspond to singular values
    // below eps * ||M|| and get truncated to exact zero so they cannot
    // trade noise with real columns indefinitely.
    let floor_squared = {
        let f = f64::EPSILON * w.norm();
        f * f
    };

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = truncated_norm_squared(&mut w, p, floor_squared);
                let beta = truncated_norm_squared(&mut w, q, floor_squared);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = column_dot(&w, p, q);
                let g = gamma.modulus();
                if g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase_conj = (gamma / T::from_real(g)).conjugate();
                let tau = (beta - alpha) / (2.0 * g);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, p, q, c, s, phase_conj);
                rotate_columns(&mut v, p, q, c, s, phase_conj);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Internal("Jacobi SVD did not converge".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| column_norm_squared(&w, j).sqrt()).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap().then(a.cmp(&b)));

    let mut u = DMatrix::<T>::zeros(mrows, n);
    let mut v_sorted = DMatrix::<T>::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let norm = norms[src];
        sigma.push(norm);
        if norm > 0.0 {
            let scale = T::from_real(1.0 / norm);
            for i in 0..mrows {
                u[(i, dst)] = w[(i, src)] * scale;
            }
        }
        for i in 0..n {
            v_sorted[(i, dst)] = v[(i, src)];
        }
    }
    Ok((u, sigma, v_sorted))
}

fn column_norm_squared<T: Entry>(m: &DMatrix<T>, j: usize) -> f64 {
    (0..m.nrows()).map(|i| m[(i, j)].modulus_squared()).sum()
}

fn truncated_norm_squared<T: Entry>(m: &mut DMatrix<T>, j: usize, floor_squared: f64) -> f64 {
    let norm2 = column_norm_squared(m, j);
    if norm2 > 0.0 && norm2 <= floor_squared {
        for i in 0..m.nrows() {
            m[(i, j)] = T::zero();
        }
        return 0.0;
    }
    norm2
}

fn column_dot<T: Entry>(m: &DMatrix<T>, p: usize, q: usize) -> T {
    let mut acc = T::zero();
    for i in 0..m.nrows() {
        acc += m[(i, p)].conjugate() * m[(i, q)];
    }
    acc
}

/// Right-multiplication by the unitary plane rotation that orthogonalizes
/// the pair: `col_p <- c col_p - s phi^* col_q`, `col_q <- s col_p + c phi^* col_q`.
fn rotate_columns<T: Entry>(m: &mut DMatrix<T>, p: usize, q: usize, c: f64, s: f64, phase_conj: T) {
    let (tc, ts) = (T::from_real(c), T::from_real(s));
    for i in 0..m.nrows() {
        let wp = m[(i, p)];
        let wq = m[(i, q)] * phase_conj;
        m[(i, p)] = wp * tc - wq * ts;
        m[(i, q)] = wp * ts + wq * tc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{c64_matrix, rmat, seeded};
    use nalgebra::DMatrix;

    fn reconstruct<T: Entry>(parts: &SvdParts<T>) -> DMatrix<T> {
        let k = parts.singular_values.len();
        let sigma = DMatrix::<T>::from_fn(k, k, |i, j| {
            if i == j {
                T::from_real(parts.singular_values[i])
            } else {
                T::zero()
            }
        });
        &parts.u * sigma * &parts.v_t
    }

    #[test]
    fn exact_rank_one_projector() {
        // The case the backend SVD got wrong by 1.7 percent.
        let v = DMatrix::from_column_slice(3, 1, &[0.6688, 0.2397, -0.7039]);
        let v: DMatrix<f64> = &v / v.norm();
        let proj = &v * v.transpose();
        let parts = svd_parts(&proj).unwrap();
        assert!((parts.singular_values[0] - 1.0).abs() < 1e-12);
        assert!(parts.singular_values[1].abs() < 1e-12);
        assert!(parts.singular_values[2].abs() < 1e-12);
    }

    #[test]
    fn round_trip_and_orthogonality_random() {
        let mut rng = seeded(101);
        for trial in 0..40 {
            let rows = 1 + (trial % 7);
            let cols = 1 + (trial * 3 % 7);
            let m = rmat(&mut rng, rows, cols);
            let parts = svd_parts(&m).unwrap();
            assert!((reconstruct(&parts) - &m).norm() <= 1e-12 * m.norm().max(1.0));
            let k = rows.min(cols);
            let ug = parts.u.adjoint() * &parts.u;
            for i in 0..k {
                for j in 0..k {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((ug[(i, j)] - expect).abs() < 1e-12);
                }
            }
            for w in parts.singular_values.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn complex_round_trip() {
        let mut rng = seeded(7);
        for _ in 0..10 {
            let m = c64_matrix(&mut rng, 5, 3);
            let parts = svd_parts(&m).unwrap();
            assert!((reconstruct(&parts) - &m).norm() <= 1e-12 * m.norm());
        }
        let wide = c64_matrix(&mut rng, 2, 6);
        let parts = svd_parts(&wide).unwrap();
        assert!((reconstruct(&parts) - &wide).norm() <= 1e-12 * wide.norm());
    }

    #[test]
    fn low_rank_products_have_clean_tails() {
        let mut rng = seeded(55);
        let a = rmat(&mut rng, 8, 3);
        let b = rmat(&mut rng, 3, 6);
        let m = &a * &b;
        let parts = svd_parts(&m).unwrap();
        assert!(parts.singular_values[2] > 1e-3);
        assert!(parts.singular_values[3] < 1e-13 * parts.singular_values[0]);
    }

    #[test]
    fn zero_and_empty() {
        let z = DMatrix::<f64>::zeros(3, 2);
        let parts = svd_parts(&z).unwrap();
        assert_eq!(parts.singular_values, vec![0.0, 0.0]);
        let e = DMatrix::<f64>::zeros(0, 4);
        assert!(svd_parts(&e).unwrap().singular_values.is_empty());
    }
}
