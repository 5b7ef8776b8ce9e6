//! Closed-form solutions of `F Y_{k+1} = G Y_k + V_k` and of its nabla
//! fractional variant `F nabla_0^n Y_k = G Y_k + V_k`, plus consistency of
//! initial conditions.
//!
//! Both solutions have the shape `Y_k = (slow homogeneous term) + Q D_k`
//! where `D_k` stacks a slow convolution over past inputs on top of a fast
//! block driven by the nilpotent part. In the standard case the fast block
//! reads the inputs `V_k .. V_{k+q*-1}`, which is why trajectories need an
//! input horizon reaching `K + q* - 1`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{Complex, ComplexField, DMatrix, DVector};

use crate::error::{dim_error, Error, Result};
use crate::fracops::{mittag_leffler, riemann_liouville_difference, rising_factorial, FracOrder, SeriesControl};
use crate::linalg::least_squares;
use crate::oracle::{self, ResidualReport};
use crate::pencil::{weierstrass_decompose, DecompositionOptions, Partitions, Pencil, WeierstrassForm, DEFAULT_CLUSTER_TOL};

pub const DEFAULT_CONSISTENCY_TOL: f64 = 1e-8;

/// Input sequence `V_0 ..= V_{K_max}`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSignal {
    values: Vec<DVector<f64>>,
    /// Column count of the shaping matrix when built from `U_k`.
    shaped_from: Option<usize>,
}

impl InputSignal {
    pub fn new(values: Vec<DVector<f64>>) -> Result<Self> {
        let dim = values.first().map(|v| v.len()).ok_or_else(|| dim_error("input", "at least one sample", 0))?;
        if let Some(bad) = values.iter().find(|v| v.len() != dim) {
            return Err(dim_error("input sample", dim, bad.len()));
        }
        Ok(Self {
            values,
            shaped_from: None,
        })
    }

    /// `V_k = B U_k`.
    pub fn shaped(b: &DMatrix<f64>, u: &[DVector<f64>]) -> Result<Self> {
        if let Some(bad) = u.iter().find(|x| x.len() != b.ncols()) {
            return Err(dim_error("shaped input sample", b.ncols(), bad.len()));
        }
        let mut signal = Self::new(u.iter().map(|x| b * x).collect())?;
        signal.shaped_from = Some(b.ncols());
        Ok(signal)
    }

    pub fn zeros(dim: usize, len: usize) -> Self {
        Self {
            values: vec![DVector::zeros(dim); len.max(1)],
            shaped_from: None,
        }
    }

    pub fn constant(v: DVector<f64>, len: usize) -> Self {
        Self {
            values: vec![v; len.max(1)],
            shaped_from: None,
        }
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn get(&self, k: usize) -> Option<&DVector<f64>> {
        self.values.get(k)
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    /// `K_max`, the last defined index.
    pub fn last_index(&self) -> usize {
        self.values.len() - 1
    }

    pub fn shaped_from(&self) -> Option<usize> {
        self.shaped_from
    }

    /// Copy extended with zero samples so that index `last` exists.
    pub fn zero_padded(&self, last: usize) -> Self {
        let mut values = self.values.clone();
        while values.len() <= last {
            values.push(DVector::zeros(self.dim()));
        }
        Self {
            values,
            shaped_from: self.shaped_from,
        }
    }

    fn require(&self, index: usize) -> Result<()> {
        if index > self.last_index() {
            return Err(Error::Horizon {
                required: index,
                available: self.last_index() as i64,
            });
        }
        Ok(())
    }

    /// Largest absolute entry among `V_0 ..= V_last`.
    pub fn sup_norm_through(&self, last: usize) -> f64 {
        let end = (last + 1).min(self.values.len());
        crate::linalg::sup_norm(&self.values[..end])
    }
}

/// Pencil, output map `C`, optional input shaping `B` and the attached
/// Weierstrass form.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSystem {
    pencil: Pencil,
    c: DMatrix<f64>,
    b: Option<DMatrix<f64>>,
    form: WeierstrassForm,
}

impl DescriptorSystem {
    pub fn new(pencil: Pencil, c: DMatrix<f64>, b: Option<DMatrix<f64>>, form: WeierstrassForm) -> Result<Self> {
        let m = pencil.dim();
        if c.ncols() != m {
            return Err(dim_error("C columns", m, c.ncols()));
        }
        if let Some(b) = &b {
            if b.nrows() != m {
                return Err(dim_error("B rows", m, b.nrows()));
            }
        }
        if form.dim() != m {
            return Err(dim_error("Weierstrass form", m, form.dim()));
        }
        Ok(Self { pencil, c, b, form })
    }

    /// Builds the system, computing the Weierstrass form.
    pub fn decompose(
        pencil: Pencil,
        c: DMatrix<f64>,
        b: Option<DMatrix<f64>>,
        opts: &DecompositionOptions,
    ) -> Result<Self> {
        let form = weierstrass_decompose(&pencil, opts)?;
        Self::new(pencil, c, b, form)
    }

    pub fn pencil(&self) -> &Pencil {
        &self.pencil
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn b(&self) -> Option<&DMatrix<f64>> {
        self.b.as_ref()
    }

    pub fn form(&self) -> &WeierstrassForm {
        &self.form
    }

    pub fn dim(&self) -> usize {
        self.pencil.dim()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyResult {
    pub consistent: bool,
    /// `Z^p_0`, present iff consistent.
    pub z_p0: Option<DVector<f64>>,
    /// `|Y_0 - Q_p Z - Q D_0|` at the least-squares minimizer.
    pub residual: f64,
    pub tolerance: f64,
    /// Closest point `Q_p Z + Q D_0` of the consistent manifold.
    pub nearest: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrajectoryKind {
    Standard,
    Fractional { order: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    ClosedFormStandard,
    ClosedFormFractional,
    Recursive,
    Stacked,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ClosedFormStandard => "closed-form standard",
            Self::ClosedFormFractional => "closed-form fractional",
            Self::Recursive => "recursive",
            Self::Stacked => "stacked least squares",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverMeta {
    pub solver: SolverKind,
    pub consistency_residual: Option<f64>,
    pub z_p0: Option<DVector<f64>>,
    /// Largest number of Mittag-Leffler terms used by any kernel evaluation.
    pub series_terms: Option<usize>,
    pub residual: Option<ResidualReport>,
    pub zero_padded: bool,
}

impl SolverMeta {
    pub fn new(solver: SolverKind) -> Self {
        Self {
            solver,
            consistency_residual: None,
            z_p0: None,
            series_terms: None,
            residual: None,
            zero_padded: false,
        }
    }
}

/// States `Y_0 ..= Y_K` and outputs `X_k = C Y_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub outputs: Vec<DVector<f64>>,
    pub kind: TrajectoryKind,
    pub meta: SolverMeta,
}

impl Trajectory {
    pub fn new(states: Vec<DVector<f64>>, c: &DMatrix<f64>, kind: TrajectoryKind, meta: SolverMeta) -> Self {
        let outputs = states.iter().map(|y| c * y).collect();
        Self {
            states,
            outputs,
            kind,
            meta,
        }
    }

    /// `K`, the last state index.
    pub fn horizon(&self) -> usize {
        self.states.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Relative consistency tolerance, scaled by `1 + |Y_0|`.
    pub consistency_tol: f64,
    /// Extend short inputs with zeros instead of failing with a horizon error.
    pub zero_pad: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            consistency_tol: DEFAULT_CONSISTENCY_TOL,
            zero_pad: false,
        }
    }
}

fn check_input_dim(form: &WeierstrassForm, input: &InputSignal) -> Result<()> {
    if input.dim() != form.dim() {
        return Err(dim_error("input sample", form.dim(), input.dim()));
    }
    Ok(())
}

/// Last input index read by `D_k` of the standard solution.
pub fn required_input_index(form: &WeierstrassForm, k: usize) -> Option<usize> {
    if form.q() > 0 {
        Some(k + form.q_star() - 1)
    } else {
        k.checked_sub(1)
    }
}

struct StandardEvaluator {
    parts: Partitions,
    j_powers: Vec<DMatrix<f64>>,
    h_powers: Vec<DMatrix<f64>>,
}

impl StandardEvaluator {
    fn new(form: &WeierstrassForm, horizon: usize) -> Self {
        let mut j_powers = vec![DMatrix::identity(form.p(), form.p())];
        for i in 1..=horizon {
            let next = &j_powers[i - 1] * form.j_p();
            j_powers.push(next);
        }
        let mut h_powers = vec![DMatrix::identity(form.q(), form.q())];
        for i in 1..form.q_star() {
            let next = &h_powers[i - 1] * form.h_q();
            h_powers.push(next);
        }
        Self {
            parts: form.partitions(),
            j_powers,
            h_powers,
        }
    }

    fn d_k(&self, input: &InputSignal, k: usize) -> DVector<f64> {
        let p = self.parts.p_1.nrows();
        let q = self.parts.p_2.nrows();
        let mut top = DVector::zeros(p);
        for i in 0..k {
            top += &self.j_powers[k - i - 1] * (&self.parts.p_1 * &input.values[i]);
        }
        let mut lower = DVector::zeros(q);
        if q > 0 {
            for (i, h) in self.h_powers.iter().enumerate() {
                lower -= h * (&self.parts.p_2 * &input.values[k + i]);
            }
        }
        let mut d = DVector::zeros(p + q);
        d.rows_mut(0, p).copy_from(&top);
        d.rows_mut(p, q).copy_from(&lower);
        d
    }
}

/// `D_k = [sum_{i<k} J^{k-i-1} P_1 V_i ; -sum_{i<q*} H^i P_2 V_{k+i}]`.
pub fn d_k_standard(form: &WeierstrassForm, input: &InputSignal, k: usize) -> Result<DVector<f64>> {
    check_input_dim(form, input)?;
    if let Some(idx) = required_input_index(form, k) {
        input.require(idx)?;
    }
    Ok(StandardEvaluator::new(form, k).d_k(input, k))
}

/// `Y_k = Q_p J^k D + Q D_k` for a free constant `D`.
pub fn general_solution_standard(
    form: &WeierstrassForm,
    d: &DVector<f64>,
    input: &InputSignal,
    k: usize,
) -> Result<DVector<f64>> {
    if d.len() != form.p() {
        return Err(dim_error("free constant D", form.p(), d.len()));
    }
    let dk = d_k_standard(form, input, k)?;
    let parts = form.partitions();
    let jk = crate::linalg::matrix_power(form.j_p(), k);
    Ok(&parts.q_p * (jk * d) + form.q_matrix() * dk)
}

fn consistency_from_offset(
    form: &WeierstrassForm,
    y0: &DVector<f64>,
    offset: DVector<f64>,
    tol: f64,
) -> ConsistencyResult {
    let parts = form.partitions();
    let rhs = y0 - &offset;
    let z = least_squares(&parts.q_p, &rhs, 1e-14);
    let nearest = &parts.q_p * &z + offset;
    let residual = (y0 - &nearest).norm();
    let tolerance = tol * (1.0 + y0.norm());
    let consistent = residual <= tolerance;
    ConsistencyResult {
        consistent,
        z_p0: consistent.then_some(z),
        residual,
        tolerance,
        nearest,
    }
}

fn check_state_dim(sys: &DescriptorSystem, y0: &DVector<f64>) -> Result<()> {
    if y0.len() != sys.dim() {
        return Err(dim_error("Y0", sys.dim(), y0.len()));
    }
    Ok(())
}

/// Decides whether `Y_0 = Q_p Z + Q D_0` has a solution `Z`.
pub fn check_consistency(
    sys: &DescriptorSystem,
    y0: &DVector<f64>,
    input: &InputSignal,
    tol: f64,
) -> Result<ConsistencyResult> {
    check_state_dim(sys, y0)?;
    let d0 = d_k_standard(sys.form(), input, 0)?;
    Ok(consistency_from_offset(sys.form(), y0, sys.form().q_matrix() * d0, tol))
}

fn prepare_input(form: &WeierstrassForm, input: &InputSignal, last: Option<usize>, zero_pad: bool) -> Result<(InputSignal, bool)> {
    check_input_dim(form, input)?;
    match last {
        Some(idx) if idx > input.last_index() => {
            if zero_pad {
                Ok((input.zero_padded(idx), true))
            } else {
                Err(Error::Horizon {
                    required: idx,
                    available: input.last_index() as i64,
                })
            }
        }
        _ => Ok((input.clone(), false)),
    }
}

/// Unique solution of the standard initial value problem on `0..=horizon`.
pub fn solve_standard(
    sys: &DescriptorSystem,
    y0: &DVector<f64>,
    input: &InputSignal,
    horizon: usize,
    opts: &SolveOptions,
) -> Result<Trajectory> {
    check_state_dim(sys, y0)?;
    let form = sys.form();
    let last = required_input_index(form, horizon).max(required_input_index(form, 0));
    let (input, padded) = prepare_input(form, input, last, opts.zero_pad)?;
    let consistency = check_consistency(sys, y0, &input, opts.consistency_tol)?;
    let z = match consistency.z_p0 {
        Some(z) => z,
        None => {
            return Err(Error::InconsistentInitialCondition {
                residual: consistency.residual,
                tolerance: consistency.tolerance,
            })
        }
    };
    let eval = StandardEvaluator::new(form, horizon);
    let q_p = &eval.parts.q_p;
    let states: Vec<DVector<f64>> = (0..=horizon)
        .map(|k| q_p * (&eval.j_powers[k] * &z) + form.q_matrix() * eval.d_k(&input, k))
        .collect();
    let mut meta = SolverMeta::new(SolverKind::ClosedFormStandard);
    meta.consistency_residual = Some(consistency.residual);
    meta.z_p0 = Some(z);
    meta.zero_padded = padded;
    let mut traj = Trajectory::new(states, sys.c(), TrajectoryKind::Standard, meta);
    if horizon >= 1 {
        traj.meta.residual = Some(oracle::residual_standard(
            sys.pencil(),
            &traj,
            &input,
            oracle::STANDARD_RESIDUAL_TOL,
        )?);
    }
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolvabilityViolation {
    Repeated { value: Complex<f64>, multiplicity: usize },
    OutsideDisk { value: Complex<f64>, modulus: f64 },
}

impl fmt::Display for SolvabilityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Repeated { value, multiplicity } => {
                write!(f, "repeated eigenvalue {} (multiplicity {multiplicity})", fmt_complex(*value))
            }
            Self::OutsideDisk { value, modulus } => {
                write!(f, "eigenvalue {} outside unit disk (modulus {modulus})", fmt_complex(*value))
            }
        }
    }
}

pub fn fmt_complex(z: Complex<f64>) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im > 0.0 {
        format!("{}+{}i", z.re, z.im)
    } else {
        format!("{}-{}i", z.re, -z.im)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolvabilityReport {
    pub solvable: bool,
    pub eigenvalues: Vec<(Complex<f64>, usize)>,
    pub violations: Vec<SolvabilityViolation>,
}

impl SolvabilityReport {
    fn into_error(self) -> Error {
        Error::Solvability {
            violations: self.violations.iter().map(|v| v.to_string()).collect(),
        }
    }
}

/// Finite eigenvalues must be pairwise distinct and inside the open unit disk.
/// Both decisions use `cluster_tol`: eigenvalues closer than that merge, and
/// moduli within it of 1 count as on the circle.
pub fn check_fractional_solvability(form: &WeierstrassForm, cluster_tol: f64) -> SolvabilityReport {
    let spectrum = form.finite_spectrum(cluster_tol);
    let mut violations = Vec::new();
    for &(value, multiplicity) in &spectrum.eigenvalues {
        if multiplicity > 1 {
            violations.push(SolvabilityViolation::Repeated { value, multiplicity });
        }
        let modulus = value.modulus();
        if modulus >= 1.0 - cluster_tol {
            violations.push(SolvabilityViolation::OutsideDisk { value, modulus });
        }
    }
    SolvabilityReport {
        solvable: violations.is_empty(),
        eigenvalues: spectrum.eigenvalues,
        violations,
    }
}

struct FractionalEvaluator<'a> {
    form: &'a WeierstrassForm,
    parts: Partitions,
    h_powers: Vec<DMatrix<f64>>,
    order: FracOrder,
    ctrl: SeriesControl,
    /// `(k+1)^(n-1) F_{n,n}(J (k+n)^(n))`, indexed by `k`.
    kernels: Vec<Option<DMatrix<f64>>>,
    max_terms: usize,
}

impl<'a> FractionalEvaluator<'a> {
    fn new(form: &'a WeierstrassForm, order: FracOrder, ctrl: SeriesControl) -> Self {
        let mut h_powers = vec![DMatrix::identity(form.q(), form.q())];
        for i in 1..form.q_star() {
            let next = &h_powers[i - 1] * form.h_q();
            h_powers.push(next);
        }
        Self {
            form,
            parts: form.partitions(),
            h_powers,
            order,
            ctrl,
            kernels: Vec::new(),
            max_terms: 0,
        }
    }

    fn kernel(&mut self, k: usize) -> Result<&DMatrix<f64>> {
        if self.kernels.len() <= k {
            self.kernels.resize(k + 1, None);
        }
        if self.kernels[k].is_none() {
            let n = self.order.value();
            let ml = mittag_leffler(self.form.j_p(), k as i64, self.order, &self.ctrl)?;
            self.max_terms = self.max_terms.max(ml.terms);
            let weight = rising_factorial(k as f64 + 1.0, n - 1.0)?;
            self.kernels[k] = Some(ml.value * weight);
        }
        Ok(self.kernels[k].as_ref().expect("kernel cached"))
    }

    fn d_k(&mut self, input: &InputSignal, k: usize) -> Result<DVector<f64>> {
        let p = self.form.p();
        let q = self.form.q();
        let mut top = DVector::zeros(p);
        if p > 0 {
            for i in 1..=k {
                let forced = &self.parts.p_1 * &input.values[i];
                top += self.kernel(k - i)? * forced;
            }
        }
        let mut lower = DVector::zeros(q);
        if q > 0 {
            let fast: Vec<DVector<f64>> = input.values[..=k].iter().map(|v| &self.parts.p_2 * v).collect();
            let n = self.order.value();
            for (i, h) in self.h_powers.iter().enumerate() {
                lower -= h * riemann_liouville_difference(&fast, i as f64 * n, k)?;
            }
        }
        let mut d = DVector::zeros(p + q);
        d.rows_mut(0, p).copy_from(&top);
        d.rows_mut(p, q).copy_from(&lower);
        Ok(d)
    }

    fn homogeneous(&mut self, k: usize, z: &DVector<f64>) -> Result<DVector<f64>> {
        let p = self.form.p();
        if p == 0 {
            return Ok(DVector::zeros(0));
        }
        let damped = (DMatrix::<f64>::identity(p, p) - self.form.j_p()) * z;
        Ok(self.kernel(k)? * damped)
    }
}

fn ensure_solvable(form: &WeierstrassForm) -> Result<()> {
    let report = check_fractional_solvability(form, DEFAULT_CLUSTER_TOL);
    if report.solvable {
        Ok(())
    } else {
        Err(report.into_error())
    }
}

/// Fractional `D_k`: the slow block convolves past inputs `V_1 ..= V_k`
/// with the Mittag-Leffler kernel; the fast block is
/// `-sum_i nabla_0^{i n} H^i P_2 V_k`.
pub fn d_k_fractional(
    form: &WeierstrassForm,
    input: &InputSignal,
    n: FracOrder,
    k: usize,
    ctrl: &SeriesControl,
) -> Result<DVector<f64>> {
    ensure_solvable(form)?;
    check_input_dim(form, input)?;
    input.require(k)?;
    FractionalEvaluator::new(form, n, *ctrl).d_k(input, k)
}

/// Consistency for the fractional system, using the fractional `D_0`.
pub fn check_fractional_consistency(
    sys: &DescriptorSystem,
    y0: &DVector<f64>,
    input: &InputSignal,
    n: FracOrder,
    ctrl: &SeriesControl,
    tol: f64,
) -> Result<ConsistencyResult> {
    check_state_dim(sys, y0)?;
    let d0 = d_k_fractional(sys.form(), input, n, 0, ctrl)?;
    Ok(consistency_from_offset(sys.form(), y0, sys.form().q_matrix() * d0, tol))
}

/// Unique solution of the fractional initial value problem on `0..=horizon`.
pub fn solve_fractional(
    sys: &DescriptorSystem,
    y0: &DVector<f64>,
    input: &InputSignal,
    n: FracOrder,
    horizon: usize,
    ctrl: &SeriesControl,
    opts: &SolveOptions,
) -> Result<Trajectory> {
    check_state_dim(sys, y0)?;
    let form = sys.form();
    ensure_solvable(form)?;
    let (input, padded) = prepare_input(form, input, Some(horizon), opts.zero_pad)?;
    let consistency = check_fractional_consistency(sys, y0, &input, n, ctrl, opts.consistency_tol)?;
    let z = match consistency.z_p0 {
        Some(z) => z,
        None => {
            return Err(Error::InconsistentInitialCondition {
                residual: consistency.residual,
                tolerance: consistency.tolerance,
            })
        }
    };
    let mut eval = FractionalEvaluator::new(form, n, *ctrl);
    let parts = form.partitions();
    let mut states = Vec::with_capacity(horizon + 1);
    for k in 0..=horizon {
        let slow = eval.homogeneous(k, &z)?;
        let dk = eval.d_k(&input, k)?;
        states.push(&parts.q_p * slow + form.q_matrix() * dk);
    }
    let mut meta = SolverMeta::new(SolverKind::ClosedFormFractional);
    meta.consistency_residual = Some(consistency.residual);
    meta.z_p0 = Some(z);
    meta.series_terms = Some(eval.max_terms);
    meta.zero_padded = padded;
    let mut traj = Trajectory::new(states, sys.c(), TrajectoryKind::Fractional { order: n.value() }, meta);
    if horizon >= 1 {
        traj.meta.residual = Some(oracle::residual_fractional(
            sys.pencil(),
            &traj,
            &input,
            n,
            oracle::FRACTIONAL_RESIDUAL_TOL,
        )?);
    }
    Ok(traj)
}
