//! Synthetic systems with known canonical structure.
//!
//! A system is built from a chosen slow matrix `J`, a list of nilpotent block
//! sizes and two random well-conditioned transformations, so `p`, `q`, `q*`
//! and the finite spectrum are known exactly. The generators take any
//! [`RngCore`], which keeps test corpora reproducible from a seed.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand_core::RngCore;

use crate::jordan::nilpotent_jordan_matrix;
use crate::linalg::inverse;
use crate::pencil::{pencil_from_canonical, Pencil, WeierstrassForm};
use crate::{Complex, Error, Result};

/// Uniform sample from `[lo, hi)`.
pub fn uniform<R: RngCore + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let unit = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    lo + (hi - lo) * unit
}

pub fn random_matrix<R: RngCore + ?Sized>(rng: &mut R, rows: usize, cols: usize, amplitude: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| uniform(rng, -amplitude, amplitude))
}

pub fn random_vector<R: RngCore + ?Sized>(rng: &mut R, dim: usize, amplitude: f64) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| uniform(rng, -amplitude, amplitude))
}

pub fn random_vectors<R: RngCore + ?Sized>(rng: &mut R, dim: usize, len: usize, amplitude: f64) -> Vec<DVector<f64>> {
    (0..len).map(|_| random_vector(rng, dim, amplitude)).collect()
}

/// Orthogonal factor of the QR decomposition of a random matrix.
pub fn random_orthogonal<R: RngCore + ?Sized>(rng: &mut R, m: usize) -> DMatrix<f64> {
    loop {
        let a = random_matrix(rng, m, m, 1.0);
        if a.determinant().abs() > 1e-3 {
            return a.qr().q();
        }
    }
}

/// `U diag(s) V^T` with singular values drawn from `[1, max_cond]`.
pub fn well_conditioned<R: RngCore + ?Sized>(rng: &mut R, m: usize, max_cond: f64) -> DMatrix<f64> {
    let u = random_orthogonal(rng, m);
    let v = random_orthogonal(rng, m);
    let s = DVector::from_fn(m, |_, _| uniform(rng, 1.0, max_cond));
    u * DMatrix::from_diagonal(&s) * v.transpose()
}

/// Eigenvalues of a random slow block.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowSpectrum {
    /// Real eigenvalues.
    pub real: Vec<f64>,
    /// Complex pairs, stored by their upper half-plane member.
    pub pairs: Vec<Complex<f64>>,
}

impl SlowSpectrum {
    pub fn dim(&self) -> usize {
        self.real.len() + 2 * self.pairs.len()
    }

    /// All eigenvalues, conjugates included.
    pub fn eigenvalues(&self) -> Vec<Complex<f64>> {
        let mut out: Vec<Complex<f64>> = self.real.iter().map(|&r| Complex::new(r, 0.0)).collect();
        for z in &self.pairs {
            out.push(*z);
            out.push(z.conj());
        }
        out
    }

    /// Block-diagonal real matrix with this spectrum.
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.dim(), self.dim());
        for (i, &r) in self.real.iter().enumerate() {
            j[(i, i)] = r;
        }
        let mut at = self.real.len();
        for z in &self.pairs {
            j[(at, at)] = z.re;
            j[(at, at + 1)] = z.im;
            j[(at + 1, at)] = -z.im;
            j[(at + 1, at + 1)] = z.re;
            at += 2;
        }
        j
    }
}

/// Distinct eigenvalues inside the disk of `radius`, pairwise at least
/// `separation` apart; `pairs` of them come as complex conjugates.
pub fn random_spectrum<R: RngCore + ?Sized>(
    rng: &mut R,
    real: usize,
    pairs: usize,
    radius: f64,
    separation: f64,
) -> SlowSpectrum {
    let mut taken: Vec<Complex<f64>> = Vec::new();
    let far = |taken: &[Complex<f64>], z: Complex<f64>| taken.iter().all(|w| (w - z).norm_sqr() >= separation * separation);
    let mut out = SlowSpectrum {
        real: Vec::new(),
        pairs: Vec::new(),
    };
    while out.real.len() < real {
        let z = Complex::new(uniform(rng, -radius, radius), 0.0);
        if far(&taken, z) {
            taken.push(z);
            out.real.push(z.re);
        }
    }
    while out.pairs.len() < pairs {
        let z = Complex::new(uniform(rng, -radius, radius), uniform(rng, separation, radius));
        if z.norm_sqr() < radius * radius && far(&taken, z) && far(&taken, z.conj()) {
            taken.push(z);
            taken.push(z.conj());
            out.pairs.push(z);
        }
    }
    out
}

/// A pencil generated from a known canonical pair.
#[derive(Debug, Clone)]
pub struct Constructed {
    pub pencil: Pencil,
    pub p_inv: DMatrix<f64>,
    pub q_inv: DMatrix<f64>,
    pub j: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub nilpotent_blocks: Vec<usize>,
}

impl Constructed {
    pub fn new(j: DMatrix<f64>, nilpotent_blocks: &[usize], p_inv: DMatrix<f64>, q_inv: DMatrix<f64>) -> Result<Self> {
        let mut blocks = nilpotent_blocks.to_vec();
        blocks.sort_unstable_by(|a, b| b.cmp(a));
        let h = nilpotent_jordan_matrix(&blocks);
        let pencil = pencil_from_canonical(&p_inv, &q_inv, &j, &h)?;
        Ok(Self {
            pencil,
            p_inv,
            q_inv,
            j,
            h,
            nilpotent_blocks: blocks,
        })
    }

    /// Random transformations with condition numbers at most `max_cond`.
    pub fn random<R: RngCore + ?Sized>(
        rng: &mut R,
        j: DMatrix<f64>,
        nilpotent_blocks: &[usize],
        max_cond: f64,
    ) -> Result<Self> {
        let m = j.nrows() + nilpotent_blocks.iter().sum::<usize>();
        let p_inv = well_conditioned(rng, m, max_cond);
        let q_inv = well_conditioned(rng, m, max_cond);
        Self::new(j, nilpotent_blocks, p_inv, q_inv)
    }

    pub fn p(&self) -> usize {
        self.j.nrows()
    }

    pub fn q(&self) -> usize {
        self.h.nrows()
    }

    /// Largest nilpotent block, or 1 when there is no fast part.
    pub fn q_star(&self) -> usize {
        self.nilpotent_blocks.first().copied().unwrap_or(1)
    }

    /// The exact decomposition, validated against the pencil.
    pub fn form(&self, tol: f64) -> Result<WeierstrassForm> {
        let p_mat = inverse(&self.p_inv).ok_or_else(|| Error::Decomposition("singular P^{-1}".into()))?;
        let q_mat = inverse(&self.q_inv).ok_or_else(|| Error::Decomposition("singular Q^{-1}".into()))?;
        WeierstrassForm::from_parts(&self.pencil, p_mat, q_mat, self.j.clone(), self.h.clone(), self.q_star(), tol)
    }
}
