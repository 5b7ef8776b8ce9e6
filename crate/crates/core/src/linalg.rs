//! Dense helpers shared by the decomposition, solver and oracle code.
//!
//! Matrix norms are Frobenius throughout; vector norms are Euclidean.

use alloc::vec::Vec;

use nalgebra::{ComplexField, DMatrix, DVector};

/// Singular value decomposition with descending singular values and a full
/// set of right singular vectors.
pub(crate) struct SortedSvd<T: ComplexField<RealField = f64>> {
    /// `nrows x ncols`; columns belonging to zero singular values carry no
    /// information.
    pub u: DMatrix<T>,
    pub sigma: Vec<f64>,
    /// Columns are right singular vectors; always `ncols x ncols`.
    pub v: DMatrix<T>,
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD.
///
/// Columns of `A V` are orthogonalised by plane rotations until every pair
/// is orthogonal to working precision; their norms are then the singular
/// values. Small singular values come out with high relative accuracy,
/// which the rank decisions downstream rely on.
pub(crate) fn sorted_svd<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> SortedSvd<T> {
    let (rows, cols) = a.shape();
    let mut work = a.clone();
    let mut v = DMatrix::<T>::identity(cols, cols);
    if rows > 0 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut rotated = false;
            for i in 0..cols {
                for j in (i + 1)..cols {
                    let alpha = work.column(i).norm_squared();
                    let beta = work.column(j).norm_squared();
                    if alpha == 0.0 || beta == 0.0 {
                        continue;
                    }
                    let gamma = work.column(i).dotc(&work.column(j));
                    let g = gamma.clone().modulus();
                    if g <= f64::EPSILON * libm::sqrt(alpha * beta) {
                        continue;
                    }
                    rotated = true;
                    let phase = gamma.conjugate().unscale(g);
                    for r in 0..rows {
                        work[(r, j)] = work[(r, j)].clone() * phase.clone();
                    }
                    for r in 0..cols {
                        v[(r, j)] = v[(r, j)].clone() * phase.clone();
                    }
                    let zeta = (beta - alpha) / (2.0 * g);
                    let t = libm::copysign(1.0, zeta) / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                    let c = 1.0 / libm::sqrt(1.0 + t * t);
                    let s = c * t;
                    rotate_columns(&mut work, i, j, c, s);
                    rotate_columns(&mut v, i, j, c, s);
                }
            }
            if !rotated {
                break;
            }
        }
    }
    let raw: Vec<f64> = (0..cols).map(|c| work.column(c).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| raw[j].partial_cmp(&raw[i]).unwrap_or(core::cmp::Ordering::Equal));
    let rank = rows.min(cols);
    let sigma: Vec<f64> = order.iter().take(rank).map(|&i| raw[i]).collect();
    let u = DMatrix::from_fn(rows, rank, |r, c| {
        let s = raw[order[c]];
        if s > 0.0 {
            work[(r, order[c])].clone().unscale(s)
        } else {
            T::zero()
        }
    });
    let v_sorted = DMatrix::from_fn(cols, cols, |r, c| v[(r, order[c])].clone());
    SortedSvd { u, sigma, v: v_sorted }
}

fn rotate_columns<T: ComplexField<RealField = f64>>(m: &mut DMatrix<T>, i: usize, j: usize, c: f64, s: f64) {
    for r in 0..m.nrows() {
        let x = m[(r, i)].clone();
        let y = m[(r, j)].clone();
        m[(r, i)] = x.clone().scale(c) - y.clone().scale(s);
        m[(r, j)] = x.scale(s) + y.scale(c);
    }
}

/// Orthonormal basis of `{x : a x = 0}`, treating singular values `<= thr`
/// as zero.
pub fn null_space<T: ComplexField<RealField = f64>>(a: &DMatrix<T>, thr: f64) -> DMatrix<T> {
    let cols = a.ncols();
    if a.nrows() == 0 {
        return DMatrix::identity(cols, cols);
    }
    let svd = sorted_svd(a);
    let rank = svd.sigma.iter().filter(|&&s| s > thr).count();
    svd.v.columns(rank, cols - rank).into_owned()
}

/// Orthonormal basis of the column space of `a` (singular values `> thr`).
pub fn column_space<T: ComplexField<RealField = f64>>(a: &DMatrix<T>, thr: f64) -> DMatrix<T> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let svd = sorted_svd(a);
    let rank = svd.sigma.iter().filter(|&&s| s > thr).count();
    svd.u.columns(0, rank).into_owned()
}

/// The `count` right singular vectors belonging to the smallest singular values.
pub(crate) fn trailing_right_vectors<T: ComplexField<RealField = f64>>(
    a: &DMatrix<T>,
    count: usize,
) -> DMatrix<T> {
    let svd = sorted_svd(a);
    let n = a.ncols();
    svd.v.columns(n - count, count).into_owned()
}

pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    sorted_svd(a).sigma
}

/// Two-norm condition number; `1` for empty matrices, infinity when singular.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

pub(crate) fn inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if a.is_empty() {
        return Some(DMatrix::zeros(0, 0));
    }
    a.clone().try_inverse()
}

/// Minimum-norm least-squares solution of `a x = b`.
pub(crate) fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> DVector<f64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let svd = sorted_svd(a);
    let cutoff = svd.sigma.first().copied().unwrap_or(0.0) * rel_tol;
    let mut x = DVector::zeros(a.ncols());
    for (i, &s) in svd.sigma.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        let ui = svd.u.column(i);
        let coef = ui.dot(b) / s;
        x += svd.v.column(i) * coef;
    }
    x
}

pub fn block_diag<T: ComplexField>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = DMatrix::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

pub fn hcat<T: ComplexField>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    debug_assert_eq!(a.nrows(), b.nrows());
    let rows = a.nrows();
    let mut out = DMatrix::zeros(rows, a.ncols() + b.ncols());
    out.view_mut((0, 0), (rows, a.ncols())).copy_from(a);
    out.view_mut((0, a.ncols()), (rows, b.ncols())).copy_from(b);
    out
}

pub(crate) fn matrix_power(a: &DMatrix<f64>, exp: usize) -> DMatrix<f64> {
    let mut out = DMatrix::identity(a.nrows(), a.ncols());
    for _ in 0..exp {
        out = &out * a;
    }
    out
}

/// Largest absolute entry over a sequence of vectors.
pub fn sup_norm(values: &[DVector<f64>]) -> f64 {
    values
        .iter()
        .flat_map(|v| v.iter())
        .fold(0.0_f64, |acc, x| acc.max(x.abs()))
}
