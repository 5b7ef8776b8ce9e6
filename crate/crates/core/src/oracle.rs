//! Independent checks of computed trajectories.
//!
//! Everything here works from `F`, `G`, the inputs and the states alone;
//! none of it touches the Weierstrass transformation.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{dim_error, Error, Result};
use crate::fracops::{nabla_fractional_difference, FracOrder};
use crate::linalg::{condition_number, inverse, sorted_svd};
use crate::pencil::Pencil;
use crate::solver::{InputSignal, SolverKind, SolverMeta, Trajectory, TrajectoryKind};

/// Default relative bound for the standard difference-equation residual.
pub const STANDARD_RESIDUAL_TOL: f64 = 1e-8;
/// Default relative bound for the fractional residual.
pub const FRACTIONAL_RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// Residual norms; entry `i` belongs to step `first_index + i`.
    pub per_k: Vec<f64>,
    pub first_index: usize,
    pub max_residual: f64,
    pub bound_used: f64,
    pub pass: bool,
}

impl ResidualReport {
    fn from_residuals(per_k: Vec<f64>, first_index: usize, bound_used: f64) -> Self {
        let max_residual = per_k.iter().fold(0.0_f64, |a, &r| a.max(r));
        let pass = per_k.iter().all(|r| *r <= bound_used);
        Self {
            per_k,
            first_index,
            max_residual,
            bound_used,
            pass,
        }
    }

    /// The `count` largest residuals as `(k, residual)`, largest first.
    pub fn worst_offenders(&self, count: usize) -> Vec<(usize, f64)> {
        let mut all: Vec<(usize, f64)> = self
            .per_k
            .iter()
            .enumerate()
            .map(|(i, &r)| (i + self.first_index, r))
            .collect();
        all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(core::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
        all.truncate(count);
        all
    }
}

fn check_trajectory(pencil: &Pencil, traj: &Trajectory, input: &InputSignal, last_input: usize) -> Result<()> {
    let m = pencil.dim();
    if let Some(bad) = traj.states.iter().find(|y| y.len() != m) {
        return Err(dim_error("trajectory state", m, bad.len()));
    }
    if input.dim() != m {
        return Err(dim_error("input sample", m, input.dim()));
    }
    if last_input > input.last_index() {
        return Err(Error::Horizon {
            required: last_input,
            available: input.last_index() as i64,
        });
    }
    Ok(())
}

/// `|F Y_{k+1} - G Y_k - V_k|` for `k = 0..K`, bounded by
/// `rel_tol * (1 + max|V|)`.
pub fn residual_standard(pencil: &Pencil, traj: &Trajectory, input: &InputSignal, rel_tol: f64) -> Result<ResidualReport> {
    let horizon = traj.states.len().saturating_sub(1);
    if horizon == 0 {
        return Ok(ResidualReport::from_residuals(Vec::new(), 0, rel_tol));
    }
    check_trajectory(pencil, traj, input, horizon - 1)?;
    let per_k = (0..horizon)
        .map(|k| (pencil.f() * &traj.states[k + 1] - pencil.g() * &traj.states[k] - &input.values()[k]).norm())
        .collect();
    let bound = rel_tol * (1.0 + input.sup_norm_through(horizon - 1));
    Ok(ResidualReport::from_residuals(per_k, 0, bound))
}

/// `|F (nabla_0^n Y)_k - G Y_k - V_k|` for `k = 1..=K`, with the fractional
/// difference taken from the trajectory itself.
pub fn residual_fractional(
    pencil: &Pencil,
    traj: &Trajectory,
    input: &InputSignal,
    n: FracOrder,
    rel_tol: f64,
) -> Result<ResidualReport> {
    let horizon = traj.states.len().saturating_sub(1);
    if horizon == 0 {
        return Ok(ResidualReport::from_residuals(Vec::new(), 1, rel_tol));
    }
    check_trajectory(pencil, traj, input, horizon)?;
    let mut per_k = Vec::with_capacity(horizon);
    for k in 1..=horizon {
        let diff = nabla_fractional_difference(&traj.states[..=k], n, k)?;
        per_k.push((pencil.f() * diff - pencil.g() * &traj.states[k] - &input.values()[k]).norm());
    }
    let bound = rel_tol * (1.0 + input.sup_norm_through(horizon));
    Ok(ResidualReport::from_residuals(per_k, 1, bound))
}

/// Condition number above which `F` is treated as singular.
const MAX_COND_F: f64 = 1e12;

/// `Y_{k+1} = F^{-1} (G Y_k + V_k)`, only for invertible `F`.
pub fn recursive_solve_invertible(
    pencil: &Pencil,
    c: &DMatrix<f64>,
    y0: &DVector<f64>,
    input: &InputSignal,
    horizon: usize,
) -> Result<Trajectory> {
    let m = pencil.dim();
    if y0.len() != m {
        return Err(dim_error("Y0", m, y0.len()));
    }
    let cond = condition_number(pencil.f());
    let f_inv = match inverse(pencil.f()) {
        Some(inv) if cond < MAX_COND_F => inv,
        _ => {
            return Err(Error::OracleInapplicable(format!(
                "F is singular (condition number {cond:e})"
            )))
        }
    };
    if horizon > 0 {
        if input.dim() != m {
            return Err(dim_error("input sample", m, input.dim()));
        }
        if horizon - 1 > input.last_index() {
            return Err(Error::Horizon {
                required: horizon - 1,
                available: input.last_index() as i64,
            });
        }
    }
    let mut states = Vec::with_capacity(horizon + 1);
    states.push(y0.clone());
    for k in 0..horizon {
        let next = &f_inv * (pencil.g() * &states[k] + &input.values()[k]);
        states.push(next);
    }
    Ok(Trajectory::new(states, c, TrajectoryKind::Standard, SolverMeta::new(SolverKind::Recursive)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackedSolution {
    pub trajectory: Trajectory,
    /// Euclidean norm of the least-squares residual of the stacked system.
    pub residual: f64,
    pub rank: usize,
    /// Dimension of the unresolved solution space.
    pub nullity: usize,
}

/// Last index at which the stacked solution is pinned down by the equations
/// `k = 0..K-1`: states beyond `K - q*` still depend on unseen inputs.
pub fn overlap_window(horizon: usize, q_star: usize) -> usize {
    horizon.saturating_sub(q_star)
}

/// Solves `F Y_{k+1} - G Y_k = V_k` for `k = 0..K-1` jointly over all
/// states, optionally pinning `Y_0`, as a minimum-norm least-squares problem.
pub fn stacked_solve(
    pencil: &Pencil,
    c: &DMatrix<f64>,
    y0: Option<&DVector<f64>>,
    input: &InputSignal,
    horizon: usize,
) -> Result<StackedSolution> {
    let m = pencil.dim();
    if let Some(y0) = y0 {
        if y0.len() != m {
            return Err(dim_error("Y0", m, y0.len()));
        }
    }
    if horizon > 0 {
        if input.dim() != m {
            return Err(dim_error("input sample", m, input.dim()));
        }
        if horizon - 1 > input.last_index() {
            return Err(Error::Horizon {
                required: horizon - 1,
                available: input.last_index() as i64,
            });
        }
    }
    let unknowns = m * (horizon + 1);
    let pin_rows = if y0.is_some() { m } else { 0 };
    let rows = m * horizon + pin_rows;
    let mut a = DMatrix::<f64>::zeros(rows.max(1), unknowns);
    let mut b = DVector::<f64>::zeros(rows.max(1));
    for k in 0..horizon {
        let r = k * m;
        a.view_mut((r, (k + 1) * m), (m, m)).copy_from(pencil.f());
        a.view_mut((r, k * m), (m, m)).copy_from(&(-pencil.g()));
        b.rows_mut(r, m).copy_from(&input.values()[k]);
    }
    if let Some(y0) = y0 {
        let r = m * horizon;
        a.view_mut((r, 0), (m, m)).fill_with_identity();
        b.rows_mut(r, m).copy_from(y0);
    }
    let svd = sorted_svd(&a);
    let cutoff = svd.sigma.first().copied().unwrap_or(0.0) * 1e-10;
    let rank = svd.sigma.iter().filter(|&&s| s > cutoff).count();
    let mut x = DVector::<f64>::zeros(unknowns);
    for i in 0..rank {
        let coef = svd.u.column(i).dot(&b) / svd.sigma[i];
        x += svd.v.column(i) * coef;
    }
    let residual = (&a * &x - &b).norm();
    let states = (0..=horizon).map(|k| x.rows(k * m, m).into_owned()).collect();
    let trajectory = Trajectory::new(states, c, TrajectoryKind::Standard, SolverMeta::new(SolverKind::Stacked));
    Ok(StackedSolution {
        trajectory,
        residual,
        rank,
        nullity: unknowns - rank,
    })
}

/// `max_k |a_k - b_k| / max(|a_k|, |b_k|)` over `k = 0..=last`.
pub fn max_relative_difference(a: &[DVector<f64>], b: &[DVector<f64>], last: usize) -> f64 {
    a.iter()
        .zip(b)
        .take(last + 1)
        .map(|(x, y)| {
            let scale = x.norm().max(y.norm());
            if scale == 0.0 {
                0.0
            } else {
                (x - y).norm() / scale
            }
        })
        .fold(0.0, f64::max)
}
