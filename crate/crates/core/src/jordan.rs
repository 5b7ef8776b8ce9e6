//! Jordan structure extraction: eigenvalue clustering, generalized
//! eigenspaces and chain construction for the nilpotent parts.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Complex, ComplexField, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{column_space, condition_number, inverse, null_space, sorted_svd, trailing_right_vectors};

/// Clusters eigenvalues whose distance is within `tol` (single linkage) and
/// returns `(mean, multiplicity)` pairs sorted by real then imaginary part.
pub fn cluster_eigenvalues(eigs: &[Complex<f64>], tol: f64) -> Vec<(Complex<f64>, usize)> {
    let n = eigs.len();
    let mut label: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if (eigs[i] - eigs[j]).modulus() <= tol {
                let (a, b) = (label[i], label[j]);
                if a != b {
                    for l in label.iter_mut() {
                        if *l == b {
                            *l = a;
                        }
                    }
                }
            }
        }
    }
    let mut out: Vec<(Complex<f64>, usize)> = Vec::new();
    let mut seen: Vec<usize> = Vec::new();
    for i in 0..n {
        if seen.contains(&label[i]) {
            continue;
        }
        seen.push(label[i]);
        let members: Vec<Complex<f64>> = (0..n).filter(|&j| label[j] == label[i]).map(|j| eigs[j]).collect();
        let sum = members.iter().fold(Complex::new(0.0, 0.0), |a, b| a + b);
        let mut mean = sum / members.len() as f64;
        if mean.im.abs() <= tol {
            mean.im = 0.0;
        }
        out.push((mean, members.len()));
    }
    out.sort_by(|a, b| {
        a.0.re
            .partial_cmp(&b.0.re)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.0.im.partial_cmp(&b.0.im).unwrap_or(core::cmp::Ordering::Equal))
    });
    out
}

pub(crate) fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    if m.is_empty() {
        return Vec::new();
    }
    m.clone().complex_eigenvalues().iter().copied().collect()
}

/// Jordan chains of a (numerically) nilpotent matrix.
pub(crate) struct NilpotentChains<T: ComplexField<RealField = f64>> {
    /// Columns grouped per chain as `[N^{l-1} v, ..., N v, v]`.
    pub basis: DMatrix<T>,
    /// Chain lengths, non-increasing.
    pub block_sizes: Vec<usize>,
}

fn normalize_phase<T: ComplexField<RealField = f64>>(v: &mut DVector<T>) {
    let mut best = 0;
    let mut best_mod = 0.0;
    for (i, x) in v.iter().enumerate() {
        let md = x.clone().modulus();
        if md > best_mod * (1.0 + 1e-12) {
            best = i;
            best_mod = md;
        }
    }
    if best_mod > 0.0 {
        let phase = v[best].clone().conjugate().unscale(best_mod);
        *v *= phase;
    }
}

/// Builds Jordan chains for `n`, deciding ranks of `n^j` with threshold
/// `rank_tol * scale^j`.
pub(crate) fn nilpotent_chains<T: ComplexField<RealField = f64>>(
    n: &DMatrix<T>,
    rank_tol: f64,
    scale: f64,
) -> Result<NilpotentChains<T>> {
    let d = n.nrows();
    if d == 0 {
        return Ok(NilpotentChains {
            basis: DMatrix::zeros(0, 0),
            block_sizes: Vec::new(),
        });
    }
    // kernels[j] spans ker n^j
    let mut kernels: Vec<DMatrix<T>> = vec![DMatrix::zeros(d, 0)];
    let mut power = DMatrix::<T>::identity(d, d);
    let mut index = 0;
    for j in 1..=d {
        power = &power * n;
        let thr = rank_tol * libm::pow(scale, j as f64);
        let k = null_space(&power, thr);
        let full = k.ncols() == d;
        kernels.push(k);
        if full {
            index = j;
            break;
        }
    }
    if index == 0 {
        return Err(Error::NotNilpotent { max_power: d });
    }

    // (length, top vector), created longest first
    let mut chains: Vec<(usize, DVector<T>)> = Vec::new();
    for level in (1..=index).rev() {
        let images: Vec<DVector<T>> = chains
            .iter()
            .map(|(len, top)| {
                let mut v = top.clone();
                for _ in 0..(len - level) {
                    v = n * v;
                }
                v
            })
            .collect();
        let lower = &kernels[level - 1];
        let upper = &kernels[level];
        let gained = upper.ncols() as isize - lower.ncols() as isize;
        let need = gained - images.len() as isize;
        if need < 0 {
            return Err(Error::Decomposition(alloc::format!(
                "inconsistent kernel dimensions at chain level {level}"
            )));
        }
        if need == 0 {
            continue;
        }
        let mut span = DMatrix::<T>::zeros(d, lower.ncols() + images.len());
        span.view_mut((0, 0), (d, lower.ncols())).copy_from(lower);
        for (i, v) in images.iter().enumerate() {
            span.set_column(lower.ncols() + i, v);
        }
        let span_scale = span.norm().max(1.0);
        let basis = column_space(&span, 1e-10 * span_scale);
        let residual = upper - &basis * (basis.adjoint() * upper);
        let svd = sorted_svd(&residual);
        let need = need as usize;
        if svd.sigma.len() < need || svd.sigma[need - 1] <= 1e-8 {
            return Err(Error::Decomposition(alloc::format!(
                "no complement for {need} new chain(s) at level {level}"
            )));
        }
        for c in 0..need {
            let mut top: DVector<T> = svd.u.column(c).into_owned();
            normalize_phase(&mut top);
            chains.push((level, top));
        }
    }

    let mut basis = DMatrix::<T>::zeros(d, d);
    let mut col = 0;
    let mut block_sizes = Vec::with_capacity(chains.len());
    for (len, top) in &chains {
        let mut vectors = Vec::with_capacity(*len);
        let mut v = top.clone();
        vectors.push(v.clone());
        for _ in 1..*len {
            v = n * v;
            vectors.push(v.clone());
        }
        for v in vectors.iter().rev() {
            if col >= d {
                return Err(Error::Decomposition("chain lengths exceed dimension".into()));
            }
            basis.set_column(col, v);
            col += 1;
        }
        block_sizes.push(*len);
    }
    if col != d {
        return Err(Error::Decomposition(alloc::format!(
            "chains cover {col} of {d} dimensions"
        )));
    }
    Ok(NilpotentChains { basis, block_sizes })
}

/// Upper-triangular nilpotent Jordan matrix with the given block sizes.
pub(crate) fn nilpotent_jordan_matrix(block_sizes: &[usize]) -> DMatrix<f64> {
    let d: usize = block_sizes.iter().sum();
    let mut h = DMatrix::zeros(d, d);
    let mut start = 0;
    for &s in block_sizes {
        for i in 0..s.saturating_sub(1) {
            h[(start + i, start + i + 1)] = 1.0;
        }
        start += s;
    }
    h
}

/// Real Jordan decomposition `basis^{-1} m basis = form`.
pub(crate) struct RealJordan {
    pub basis: DMatrix<f64>,
    pub form: DMatrix<f64>,
    pub complex_pairs: bool,
}

fn complexify(m: &DMatrix<f64>) -> DMatrix<Complex<f64>> {
    m.map(|x| Complex::new(x, 0.0))
}

fn shifted_power<T: ComplexField<RealField = f64>>(m: &DMatrix<T>, shift: T, exp: usize) -> DMatrix<T> {
    let d = m.nrows();
    let shifted = m - DMatrix::<T>::identity(d, d) * shift;
    let mut out = DMatrix::<T>::identity(d, d);
    for _ in 0..exp {
        out = &out * &shifted;
    }
    out
}

/// Real Jordan form: real eigenvalues produce classical Jordan blocks,
/// conjugate pairs `a +- ib` produce blocks with `[[a, b], [-b, a]]` on the
/// diagonal and `I_2` on the superdiagonal.
pub(crate) fn real_jordan(m: &DMatrix<f64>, rank_tol: f64, cluster_tol: f64) -> Result<RealJordan> {
    let d = m.nrows();
    if d == 0 {
        return Ok(RealJordan {
            basis: DMatrix::zeros(0, 0),
            form: DMatrix::zeros(0, 0),
            complex_pairs: false,
        });
    }
    let scale = 1.0 + m.norm();
    let clusters = cluster_eigenvalues(&eigenvalues(m), cluster_tol * scale);
    let mut basis = DMatrix::<f64>::zeros(d, d);
    let mut form = DMatrix::<f64>::zeros(d, d);
    let mut col = 0;
    let mut complex_pairs = false;

    for &(lambda, mult) in &clusters {
        if lambda.im < 0.0 {
            continue;
        }
        if col + mult * if lambda.im > 0.0 { 2 } else { 1 } > d {
            return Err(Error::Decomposition("eigenvalue clusters exceed dimension".into()));
        }
        if lambda.im == 0.0 {
            let a = shifted_power(m, lambda.re, mult);
            let x = trailing_right_vectors(&a, mult);
            let restricted = x.transpose() * m * &x - DMatrix::identity(mult, mult) * lambda.re;
            let chains = nilpotent_chains(&restricted, rank_tol, scale)?;
            let cols = &x * &chains.basis;
            let block = nilpotent_jordan_matrix(&chains.block_sizes);
            for i in 0..mult {
                basis.set_column(col + i, &cols.column(i));
                form[(col + i, col + i)] = lambda.re;
                for j in 0..mult {
                    if block[(i, j)] != 0.0 {
                        form[(col + i, col + j)] = block[(i, j)];
                    }
                }
            }
            col += mult;
        } else {
            complex_pairs = true;
            let mc = complexify(m);
            let a = shifted_power(&mc, lambda, mult);
            let x = trailing_right_vectors(&a, mult);
            let restricted = x.adjoint() * &mc * &x - DMatrix::<Complex<f64>>::identity(mult, mult) * lambda;
            let chains = nilpotent_chains(&restricted, rank_tol, scale)?;
            let cols = &x * &chains.basis;
            let (re, im) = (lambda.re, lambda.im);
            let mut local = 0;
            for &len in &chains.block_sizes {
                for t in 0..len {
                    let w = cols.column(local + t);
                    let c0 = col + 2 * (local + t);
                    basis.set_column(c0, &w.map(|z| z.re));
                    basis.set_column(c0 + 1, &w.map(|z| z.im));
                    form[(c0, c0)] = re;
                    form[(c0, c0 + 1)] = im;
                    form[(c0 + 1, c0)] = -im;
                    form[(c0 + 1, c0 + 1)] = re;
                    if t + 1 < len {
                        form[(c0, c0 + 2)] = 1.0;
                        form[(c0 + 1, c0 + 3)] = 1.0;
                    }
                }
                local += len;
            }
            col += 2 * mult;
        }
    }
    if col != d {
        return Err(Error::Decomposition(alloc::format!(
            "Jordan basis covers {col} of {d} dimensions"
        )));
    }
    let inv = inverse(&basis).ok_or_else(|| Error::Decomposition("singular Jordan basis".into()))?;
    let residual = (&inv * m * &basis - &form).norm();
    let bound = rank_tol * scale * condition_number(&basis) * d as f64;
    if residual.is_nan() || residual > bound {
        return Err(Error::IllConditioned {
            stage: "jordan extraction",
            residual,
            bound,
        });
    }
    Ok(RealJordan {
        basis,
        form,
        complex_pairs,
    })
}
