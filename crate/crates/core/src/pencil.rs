//! Matrix pencils `sF - G`: regularity, finite spectrum and the Weierstrass
//! canonical decomposition.
//!
//! The decomposition separates the finite and infinite deflating subspaces
//! with the Wong sequences
//!
//! ```text
//! V_0 = R^m,  V_{i+1} = G^{-1}(F V_i)      -> V*  (dimension p)
//! W_0 = {0},  W_{i+1} = F^{-1}(G W_i)      -> W*  (dimension q)
//! ```
//!
//! With orthonormal bases `V`, `W` the pair `P0 = [F V, G W]^{-1}`,
//! `Q0 = [V W]` block-diagonalizes the pencil, after which each diagonal
//! block is brought to (real) Jordan form.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{dim_error, Error, Result};
use crate::jordan::{cluster_eigenvalues, eigenvalues, nilpotent_chains, nilpotent_jordan_matrix, real_jordan};
use crate::linalg::{block_diag, column_space, condition_number, hcat, inverse, null_space, singular_values};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-5;
pub const DEFAULT_SEED: u64 = 0x5eed;

/// Tolerances and the probe seed used by the pencil routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionOptions {
    /// Relative rank tolerance, scaled by `|F| + |G|`.
    pub tol: f64,
    /// Relative distance below which eigenvalues are merged.
    pub cluster_tol: f64,
    pub seed: u64,
}

impl Default for DecompositionOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            cluster_tol: DEFAULT_CLUSTER_TOL,
            seed: DEFAULT_SEED,
        }
    }
}

/// The pair `(F, G)` of square matrices defining `sF - G`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pencil {
    f: DMatrix<f64>,
    g: DMatrix<f64>,
}

impl Pencil {
    pub fn new(f: DMatrix<f64>, g: DMatrix<f64>) -> Result<Self> {
        if !f.is_square() {
            return Err(dim_error("F", "square", format!("{}x{}", f.nrows(), f.ncols())));
        }
        if f.shape() != g.shape() {
            return Err(dim_error(
                "G",
                format!("{}x{}", f.nrows(), f.ncols()),
                format!("{}x{}", g.nrows(), g.ncols()),
            ));
        }
        if f.nrows() == 0 {
            return Err(dim_error("pencil", "m >= 1", 0));
        }
        Ok(Self { f, g })
    }

    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn dim(&self) -> usize {
        self.f.nrows()
    }

    /// `|F| + |G|`, the reference scale for rank decisions.
    pub fn scale(&self) -> f64 {
        self.f.norm() + self.g.norm()
    }

    /// `sF - G`.
    pub fn at(&self, s: f64) -> DMatrix<f64> {
        &self.f * s - &self.g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularityTest {
    /// Some probe determinant exceeded the tolerance.
    Determinant,
    /// Determinants were inconclusive; decided by the smallest singular value.
    SingularValue,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub s: f64,
    pub det: f64,
    /// `|det| / prod(row norms)`, in `[0, 1]` by Hadamard's inequality.
    pub normalized: f64,
    /// `sigma_min / sigma_max` of `sF - G`.
    pub rcond: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub regular: bool,
    pub probes: Vec<Probe>,
    /// Probe point with the largest normalized determinant.
    pub witness: Option<f64>,
    pub decided_by: RegularityTest,
}

fn unit_uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Decides whether `det(sF - G)` vanishes identically by evaluating it at
/// `m + 1` seeded random probe points.
pub fn is_regular(pencil: &Pencil, tol: f64, seed: u64) -> RegularityReport {
    let m = pencil.dim();
    let f_norm = pencil.f.norm();
    let radius = 2.0 * (1.0 + if f_norm > 0.0 { pencil.g.norm() / f_norm } else { pencil.g.norm() });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probes = Vec::with_capacity(m + 1);
    for _ in 0..=m {
        let s = radius * (2.0 * unit_uniform(&mut rng) - 1.0);
        let a = pencil.at(s);
        let det = a.clone().lu().determinant();
        let row_product: f64 = a.row_iter().map(|r| r.norm()).product();
        let normalized = if row_product > 0.0 { det.abs() / row_product } else { 0.0 };
        let sv = singular_values(&a);
        let rcond = match (sv.first(), sv.last()) {
            (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
            _ => 0.0,
        };
        probes.push(Probe {
            s,
            det,
            normalized,
            rcond,
        });
    }
    let best = probes
        .iter()
        .copied()
        .max_by(|a, b| a.normalized.partial_cmp(&b.normalized).unwrap_or(core::cmp::Ordering::Equal));
    let by_det = probes.iter().any(|p| p.normalized > tol);
    let (regular, decided_by) = if by_det {
        (true, RegularityTest::Determinant)
    } else {
        (probes.iter().any(|p| p.rcond > tol), RegularityTest::SingularValue)
    };
    let witness = if regular {
        if by_det {
            best.map(|p| p.s)
        } else {
            probes
                .iter()
                .max_by(|a, b| a.rcond.partial_cmp(&b.rcond).unwrap_or(core::cmp::Ordering::Equal))
                .map(|p| p.s)
        }
    } else {
        None
    };
    RegularityReport {
        regular,
        probes,
        witness,
        decided_by,
    }
}

/// Finite generalized eigenvalues `a_j` with algebraic multiplicities `p_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpectrum {
    pub eigenvalues: Vec<(Complex<f64>, usize)>,
}

impl FiniteSpectrum {
    /// Number of distinct finite eigenvalues.
    pub fn nu(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Total finite multiplicity.
    pub fn p(&self) -> usize {
        self.eigenvalues.iter().map(|(_, k)| k).sum()
    }

    pub fn has_complex(&self) -> bool {
        self.eigenvalues.iter().any(|(z, _)| z.im != 0.0)
    }

    pub fn of_matrix(j: &DMatrix<f64>, cluster_tol: f64) -> Self {
        let scale = 1.0 + j.norm();
        Self {
            eigenvalues: cluster_eigenvalues(&eigenvalues(j), cluster_tol * scale),
        }
    }
}

struct Split {
    v: DMatrix<f64>,
    w: DMatrix<f64>,
}

/// `{x : a x in span(basis)}` for an orthonormal `basis`.
fn preimage(a: &DMatrix<f64>, basis: &DMatrix<f64>, thr: f64) -> DMatrix<f64> {
    let m = a.nrows();
    let projector = DMatrix::<f64>::identity(m, m) - basis * basis.transpose();
    null_space(&(projector * a), thr)
}

/// Flips column signs so that each column's largest entry is positive.
fn normalize_signs(mut basis: DMatrix<f64>) -> DMatrix<f64> {
    for mut col in basis.column_iter_mut() {
        let pivot = col.iter().copied().fold(0.0_f64, |a, x| if x.abs() > a.abs() * (1.0 + 1e-12) { x } else { a });
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
    basis
}

fn wong_split(pencil: &Pencil, thr: f64) -> Split {
    let m = pencil.dim();
    let mut v = DMatrix::<f64>::identity(m, m);
    for _ in 0..=m {
        let image = column_space(&(&pencil.f * &v), thr);
        let next = preimage(&pencil.g, &image, thr);
        let done = next.ncols() == v.ncols();
        v = next;
        if done {
            break;
        }
    }
    let mut w = DMatrix::<f64>::zeros(m, 0);
    for _ in 0..=m {
        let image = column_space(&(&pencil.g * &w), thr);
        let next = preimage(&pencil.f, &image, thr);
        let done = next.ncols() == w.ncols();
        w = next;
        if done {
            break;
        }
    }
    Split {
        v: normalize_signs(v),
        w: normalize_signs(w),
    }
}

struct QuasiForm {
    p0: DMatrix<f64>,
    q0: DMatrix<f64>,
    /// Finite block of `P0 G Q0`.
    finite: DMatrix<f64>,
    /// Nilpotent block of `P0 F Q0`.
    nilpotent: DMatrix<f64>,
}

fn quasi_weierstrass(pencil: &Pencil, opts: &DecompositionOptions) -> Result<QuasiForm> {
    let report = is_regular(pencil, opts.tol, opts.seed);
    if !report.regular {
        let max_probe = report.probes.iter().fold(0.0_f64, |a, p| a.max(p.normalized));
        return Err(Error::Regularity { max_probe });
    }
    let m = pencil.dim();
    let thr = opts.tol * pencil.scale();
    let Split { v, w } = wong_split(pencil, thr);
    let (p, q) = (v.ncols(), w.ncols());
    if p + q != m {
        return Err(Error::Decomposition(format!(
            "deflating subspaces have dimensions {p} + {q} != {m}"
        )));
    }
    let q0 = hcat(&v, &w);
    let s0 = hcat(&(&pencil.f * &v), &(&pencil.g * &w));
    let p0 = inverse(&s0).ok_or_else(|| Error::Decomposition("deflating subspaces are not complementary".into()))?;
    let pgq = &p0 * &pencil.g * &q0;
    let pfq = &p0 * &pencil.f * &q0;
    let finite = pgq.view((0, 0), (p, p)).into_owned();
    let nilpotent = pfq.view((p, p), (q, q)).into_owned();
    Ok(QuasiForm {
        p0,
        q0,
        finite,
        nilpotent,
    })
}

/// All finite eigenvalues of a regular pencil with multiplicities.
pub fn finite_spectrum(pencil: &Pencil, opts: &DecompositionOptions) -> Result<FiniteSpectrum> {
    let quasi = quasi_weierstrass(pencil, opts)?;
    Ok(FiniteSpectrum::of_matrix(&quasi.finite, opts.cluster_tol))
}

/// Diagnostics reported alongside a [`WeierstrassForm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormDiagnostics {
    pub cond_p: f64,
    pub cond_q: f64,
    /// `max(|PFQ - diag(I, H)|, |PGQ - diag(J, I)|)`.
    pub residual: f64,
    pub residual_bound: f64,
    /// The finite block carries real 2x2 blocks for conjugate eigenvalue pairs.
    pub complex_pairs: bool,
    /// The form was supplied by the caller and only validated.
    pub external: bool,
}

/// `P F Q = diag(I_p, H_q)`, `P G Q = diag(J_p, I_q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeierstrassForm {
    p_mat: DMatrix<f64>,
    q_mat: DMatrix<f64>,
    j_p: DMatrix<f64>,
    h_q: DMatrix<f64>,
    q_star: usize,
    diagnostics: FormDiagnostics,
}

/// Column and row slices of `Q = [Q_p Q_q]` and `P = [P_1; P_2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partitions {
    pub q_p: DMatrix<f64>,
    pub q_q: DMatrix<f64>,
    pub p_1: DMatrix<f64>,
    pub p_2: DMatrix<f64>,
}

fn reconstruction_residual(
    pencil: &Pencil,
    p_mat: &DMatrix<f64>,
    q_mat: &DMatrix<f64>,
    j_p: &DMatrix<f64>,
    h_q: &DMatrix<f64>,
) -> f64 {
    let (p, q) = (j_p.nrows(), h_q.nrows());
    let target_f = block_diag(&DMatrix::identity(p, p), h_q);
    let target_g = block_diag(j_p, &DMatrix::identity(q, q));
    let rf = (p_mat * pencil.f() * q_mat - target_f).norm();
    let rg = (p_mat * pencil.g() * q_mat - target_g).norm();
    rf.max(rg)
}

impl WeierstrassForm {
    /// Validates a caller-supplied decomposition against `pencil`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        pencil: &Pencil,
        p_mat: DMatrix<f64>,
        q_mat: DMatrix<f64>,
        j_p: DMatrix<f64>,
        h_q: DMatrix<f64>,
        q_star: usize,
        tol: f64,
    ) -> Result<Self> {
        let m = pencil.dim();
        let (p, q) = (j_p.nrows(), h_q.nrows());
        for (what, mat) in [("P", &p_mat), ("Q", &q_mat)] {
            if mat.shape() != (m, m) {
                return Err(dim_error(what, format!("{m}x{m}"), format!("{}x{}", mat.nrows(), mat.ncols())));
            }
        }
        if !j_p.is_square() {
            return Err(dim_error("J_p", "square", format!("{}x{}", j_p.nrows(), j_p.ncols())));
        }
        if !h_q.is_square() {
            return Err(dim_error("H_q", "square", format!("{}x{}", h_q.nrows(), h_q.ncols())));
        }
        if p + q != m {
            return Err(dim_error("p + q", m, p + q));
        }
        let index = nilpotency_index(&h_q, tol)?;
        let q_star = if q == 0 && q_star == 0 { 1 } else { q_star };
        if index != q_star {
            return Err(dim_error("q_star", index, q_star));
        }
        let cond_p = condition_number(&p_mat);
        let cond_q = condition_number(&q_mat);
        if !cond_p.is_finite() || !cond_q.is_finite() {
            return Err(Error::Decomposition("P and Q must be invertible".into()));
        }
        let residual = reconstruction_residual(pencil, &p_mat, &q_mat, &j_p, &h_q);
        let residual_bound = tol * pencil.scale() * cond_p * cond_q;
        if residual.is_nan() || residual > residual_bound {
            return Err(Error::IllConditioned {
                stage: "reconstruction",
                residual,
                bound: residual_bound,
            });
        }
        let complex_pairs = FiniteSpectrum::of_matrix(&j_p, DEFAULT_CLUSTER_TOL).has_complex();
        Ok(Self {
            p_mat,
            q_mat,
            j_p,
            h_q,
            q_star,
            diagnostics: FormDiagnostics {
                cond_p,
                cond_q,
                residual,
                residual_bound,
                complex_pairs,
                external: true,
            },
        })
    }

    pub fn p_matrix(&self) -> &DMatrix<f64> {
        &self.p_mat
    }

    pub fn q_matrix(&self) -> &DMatrix<f64> {
        &self.q_mat
    }

    /// `J_p`, the finite (slow) block.
    pub fn j_p(&self) -> &DMatrix<f64> {
        &self.j_p
    }

    /// `H_q`, the nilpotent (fast) block.
    pub fn h_q(&self) -> &DMatrix<f64> {
        &self.h_q
    }

    pub fn p(&self) -> usize {
        self.j_p.nrows()
    }

    pub fn q(&self) -> usize {
        self.h_q.nrows()
    }

    pub fn dim(&self) -> usize {
        self.p() + self.q()
    }

    /// Nilpotency index of `H_q` (1 when `q = 0`).
    pub fn q_star(&self) -> usize {
        self.q_star
    }

    pub fn diagnostics(&self) -> &FormDiagnostics {
        &self.diagnostics
    }

    pub fn partitions(&self) -> Partitions {
        let (m, p, q) = (self.dim(), self.p(), self.q());
        Partitions {
            q_p: self.q_mat.columns(0, p).into_owned(),
            q_q: self.q_mat.columns(p, q).into_owned(),
            p_1: self.p_mat.rows(0, p).into_owned(),
            p_2: self.p_mat.rows(p, q).into_owned(),
        }
        .checked(m)
    }

    /// Eigenvalues of `J_p`, clustered.
    pub fn finite_spectrum(&self, cluster_tol: f64) -> FiniteSpectrum {
        FiniteSpectrum::of_matrix(&self.j_p, cluster_tol)
    }
}

impl Partitions {
    fn checked(self, m: usize) -> Self {
        debug_assert_eq!(self.q_p.nrows(), m);
        debug_assert_eq!(self.p_2.ncols(), m);
        self
    }
}

/// Builds `F = P^{-1} diag(I_p, H) Q^{-1}` and `G = P^{-1} diag(J, I_q) Q^{-1}`
/// from a canonical pair and the inverse transformations.
pub fn pencil_from_canonical(
    p_inv: &DMatrix<f64>,
    q_inv: &DMatrix<f64>,
    j_p: &DMatrix<f64>,
    h_q: &DMatrix<f64>,
) -> Result<Pencil> {
    let (p, q) = (j_p.nrows(), h_q.nrows());
    let m = p + q;
    if p_inv.shape() != (m, m) || q_inv.shape() != (m, m) {
        return Err(dim_error("transformation", format!("{m}x{m}"), format!("{}x{}", p_inv.nrows(), p_inv.ncols())));
    }
    let f = p_inv * block_diag(&DMatrix::identity(p, p), h_q) * q_inv;
    let g = p_inv * block_diag(j_p, &DMatrix::identity(q, q)) * q_inv;
    Pencil::new(f, g)
}

/// Computes the Weierstrass canonical form of a regular pencil.
pub fn weierstrass_decompose(pencil: &Pencil, opts: &DecompositionOptions) -> Result<WeierstrassForm> {
    let quasi = quasi_weierstrass(pencil, opts)?;
    let slow = real_jordan(&quasi.finite, opts.tol, opts.cluster_tol)?;
    let nil_scale = quasi.nilpotent.norm().max(1.0);
    let chains = nilpotent_chains(&quasi.nilpotent, opts.tol, nil_scale)?;
    let h_q = nilpotent_jordan_matrix(&chains.block_sizes);
    let q_star = chains.block_sizes.first().copied().unwrap_or(1);

    let slow_inv = inverse(&slow.basis).ok_or_else(|| Error::Decomposition("singular slow basis".into()))?;
    let fast_inv = inverse(&chains.basis).ok_or_else(|| Error::Decomposition("singular fast basis".into()))?;
    let p_mat = block_diag(&slow_inv, &fast_inv) * &quasi.p0;
    let q_mat = &quasi.q0 * block_diag(&slow.basis, &chains.basis);
    let j_p = slow.form;

    let cond_p = condition_number(&p_mat);
    let cond_q = condition_number(&q_mat);
    let residual = reconstruction_residual(pencil, &p_mat, &q_mat, &j_p, &h_q);
    let residual_bound = opts.tol * pencil.scale() * cond_p * cond_q;
    if residual.is_nan() || residual > residual_bound {
        return Err(Error::IllConditioned {
            stage: "reconstruction",
            residual,
            bound: residual_bound,
        });
    }
    Ok(WeierstrassForm {
        p_mat,
        q_mat,
        j_p,
        h_q,
        q_star,
        diagnostics: FormDiagnostics {
            cond_p,
            cond_q,
            residual,
            residual_bound,
            complex_pairs: slow.complex_pairs,
            external: false,
        },
    })
}

/// Smallest `i >= 1` with `|H^i| <= tol * max(|H|, 1)^i`.
pub fn nilpotency_index(h: &DMatrix<f64>, tol: f64) -> Result<usize> {
    if !h.is_square() {
        return Err(dim_error("H", "square", format!("{}x{}", h.nrows(), h.ncols())));
    }
    let q = h.nrows();
    if q == 0 {
        return Ok(1);
    }
    let scale = h.norm().max(1.0);
    let mut power = DMatrix::<f64>::identity(q, q);
    for i in 1..=q {
        power = &power * h;
        if power.norm() <= tol * libm::pow(scale, i as f64) {
            return Ok(i);
        }
    }
    Err(Error::NotNilpotent { max_power: q })
}
