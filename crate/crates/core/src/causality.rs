//! State and output causality of `F Y_{k+1} = G Y_k + B U_k`.
//!
//! The fast part of the standard solution reads `V_{k+1} .. V_{k+q*-1}`.
//! The state is causal iff `H_q P_2 B = 0`; the output `X = C Y` is causal
//! iff `C Q_q H_q^i P_2 B = 0` for `i = 1 .. q*-1`. The fractional system
//! only ever reads inputs up to index `k` and is causal for every `B`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{dim_error, Result};
use crate::linalg::{hcat, null_space};
use crate::pencil::WeierstrassForm;
use crate::solver::{d_k_standard, InputSignal};

#[derive(Debug, Clone, PartialEq)]
pub struct StateCausality {
    pub causal: bool,
    /// `H_q P_2 B` (`q x r_1`).
    pub witness: DMatrix<f64>,
    pub witness_norm: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputCausality {
    pub causal: bool,
    /// `[Q_q H_q P_2 B, ..., Q_q H_q^{q*-1} P_2 B]`.
    pub witness: DMatrix<f64>,
    /// `|C M|`.
    pub product_norm: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FractionalCausality {
    pub causal: bool,
    /// Largest input index entering `Y_k`, as an offset from `k`.
    pub max_input_lead: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalityReport {
    pub state: StateCausality,
    pub output: OutputCausality,
    pub fractional: FractionalCausality,
    pub tol: f64,
}

fn check_b(form: &WeierstrassForm, b: &DMatrix<f64>) -> Result<()> {
    if b.nrows() != form.dim() {
        return Err(dim_error("B rows", form.dim(), b.nrows()));
    }
    Ok(())
}

/// Causal iff `|H_q P_2 B| <= tol |P_2| |B|`.
pub fn check_state_causality(form: &WeierstrassForm, b: &DMatrix<f64>, tol: f64) -> Result<StateCausality> {
    check_b(form, b)?;
    let p_2 = form.partitions().p_2;
    let witness = form.h_q() * &p_2 * b;
    let witness_norm = witness.norm();
    let bound = tol * p_2.norm() * b.norm();
    Ok(StateCausality {
        causal: witness_norm <= bound,
        witness,
        witness_norm,
        bound,
    })
}

/// Causal iff every column of `M = [Q_q H_q^i P_2 B]_{i=1}^{q*-1}` lies in the
/// right null space of `C`, up to `tol |C| |Q_q| |P_2| |B| sum_{i<q*-1} |H^i|`.
pub fn check_output_causality(
    form: &WeierstrassForm,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    tol: f64,
) -> Result<OutputCausality> {
    check_b(form, b)?;
    if c.ncols() != form.dim() {
        return Err(dim_error("C columns", form.dim(), c.ncols()));
    }
    let parts = form.partitions();
    let base = &parts.p_2 * b;
    let mut witness = DMatrix::<f64>::zeros(form.dim(), 0);
    let mut power = DMatrix::<f64>::identity(form.q(), form.q());
    let mut power_norms = 0.0;
    for _ in 1..form.q_star() {
        power_norms += power.norm();
        power = &power * form.h_q();
        witness = hcat(&witness, &(&parts.q_q * &power * &base));
    }
    let product_norm = (c * &witness).norm();
    let bound = tol * c.norm() * parts.q_q.norm() * parts.p_2.norm() * b.norm() * power_norms;
    Ok(OutputCausality {
        causal: witness.ncols() == 0 || product_norm <= bound,
        witness,
        product_norm,
        bound,
    })
}

/// Orthonormal basis of `ker(H_q P_2)`: the largest input-shaping subspace
/// with a causal state.
pub fn maximal_causal_b(form: &WeierstrassForm, tol: f64) -> DMatrix<f64> {
    let p_2 = form.partitions().p_2;
    let map = form.h_q() * &p_2;
    null_space(&map, tol * p_2.norm())
}

/// Fractional solutions read `V_0 ..= V_k` only.
pub fn fractional_causality() -> FractionalCausality {
    FractionalCausality {
        causal: true,
        max_input_lead: 0,
    }
}

pub fn causality_report(
    form: &WeierstrassForm,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    tol: f64,
) -> Result<CausalityReport> {
    Ok(CausalityReport {
        state: check_state_causality(form, b, tol)?,
        output: check_output_causality(form, b, c, tol)?,
        fractional: fractional_causality(),
        tol,
    })
}

/// For each input channel `j`, `|Y_k(U) - Y_k(0)|` where `U` is the unit
/// impulse on channel `j` at index `k + 1`. Nonzero entries expose a
/// dependence of the state on future inputs.
pub fn future_input_sensitivity(form: &WeierstrassForm, b: &DMatrix<f64>, k: usize) -> Result<Vec<f64>> {
    check_b(form, b)?;
    let len = k + form.q_star() + 1;
    let zero = InputSignal::zeros(form.dim(), len);
    let base = form.q_matrix() * d_k_standard(form, &zero, k)?;
    (0..b.ncols())
        .map(|j| {
            let mut u = alloc::vec![DVector::zeros(b.ncols()); len];
            u[k + 1][j] = 1.0;
            let shaped = InputSignal::shaped(b, &u)?;
            let y = form.q_matrix() * d_k_standard(form, &shaped, k)?;
            Ok((y - &base).norm())
        })
        .collect()
}
