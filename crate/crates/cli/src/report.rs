//! Serializable reports written by the commands.

use descriptor_core::causality::CausalityReport;
use descriptor_core::oracle::ResidualReport;
use descriptor_core::pencil::{Probe, RegularityReport, RegularityTest};
use descriptor_core::solver::{ConsistencyResult, SolvabilityReport};
use descriptor_core::{Complex, DMatrix};
use serde::Serialize;

use crate::format::{rows_from_matrix, Rows, WeierstrassFile};

#[derive(Debug, Clone, Serialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex<f64>> for ComplexValue {
    fn from(z: Complex<f64>) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenvalueEntry {
    pub value: ComplexValue,
    pub multiplicity: usize,
}

pub fn eigenvalue_entries(list: &[(Complex<f64>, usize)]) -> Vec<EigenvalueEntry> {
    list.iter()
        .map(|&(z, k)| EigenvalueEntry {
            value: z.into(),
            multiplicity: k,
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeEntry {
    pub s: f64,
    pub det: f64,
    pub normalized: f64,
    pub rcond: f64,
}

impl From<&Probe> for ProbeEntry {
    fn from(p: &Probe) -> Self {
        Self {
            s: p.s,
            det: p.det,
            normalized: p.normalized,
            rcond: p.rcond,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityEntry {
    pub regular: bool,
    pub decided_by: &'static str,
    pub witness: Option<f64>,
    pub probes: Vec<ProbeEntry>,
}

impl From<&RegularityReport> for RegularityEntry {
    fn from(r: &RegularityReport) -> Self {
        Self {
            regular: r.regular,
            decided_by: match r.decided_by {
                RegularityTest::Determinant => "determinant",
                RegularityTest::SingularValue => "singular value",
            },
            witness: r.witness,
            probes: r.probes.iter().map(ProbeEntry::from).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub verdict: &'static str,
    pub m: usize,
    pub tol: f64,
    pub seed: u64,
    pub regularity: RegularityEntry,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structure: Option<StructureEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureEntry {
    pub source: &'static str,
    pub p: usize,
    pub q: usize,
    pub q_star: usize,
    pub finite_spectrum: Vec<EigenvalueEntry>,
    pub complex_pairs: bool,
    pub cond_p: f64,
    pub cond_q: f64,
    pub reconstruction_residual: f64,
    pub residual_bound: f64,
    pub form: WeierstrassFile,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualEntry {
    pub pass: bool,
    pub max_residual: f64,
    pub bound: f64,
    pub first_index: usize,
    pub worst: Vec<(usize, f64)>,
    pub per_k: Vec<f64>,
}

impl From<&ResidualReport> for ResidualEntry {
    fn from(r: &ResidualReport) -> Self {
        Self {
            pass: r.pass,
            max_residual: r.max_residual,
            bound: r.bound_used,
            first_index: r.first_index,
            worst: r.worst_offenders(5),
            per_k: r.per_k.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyEntry {
    pub consistent: bool,
    pub residual: f64,
    pub tolerance: f64,
    #[serde(rename = "Z_p0", skip_serializing_if = "Option::is_none")]
    pub z_p0: Option<Vec<f64>>,
}

impl From<&ConsistencyResult> for ConsistencyEntry {
    fn from(c: &ConsistencyResult) -> Self {
        Self {
            consistent: c.consistent,
            residual: c.residual,
            tolerance: c.tolerance,
            z_p0: c.z_p0.as_ref().map(|z| z.iter().copied().collect()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionEntry {
    pub note: &'static str,
    pub original_y0: Vec<f64>,
    pub projected_y0: Vec<f64>,
}

pub const PROJECTION_NOTE: &str =
    "--project: Y0 replaced by its least-squares projection onto the consistent set; this is a tool convenience, not part of the model";

#[derive(Debug, Clone, Serialize)]
pub struct SolvabilityEntry {
    pub solvable: bool,
    pub eigenvalues: Vec<EigenvalueEntry>,
    pub violations: Vec<String>,
}

impl From<&SolvabilityReport> for SolvabilityEntry {
    fn from(s: &SolvabilityReport) -> Self {
        Self {
            solvable: s.solvable,
            eigenvalues: eigenvalue_entries(&s.eigenvalues),
            violations: s.violations.iter().map(|v| v.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub command: &'static str,
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<f64>,
    pub horizon: usize,
    pub p: usize,
    pub q: usize,
    pub q_star: usize,
    pub form_source: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solvability: Option<SolvabilityEntry>,
    pub consistency: ConsistencyEntry,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projection: Option<ProjectionEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series_terms: Option<usize>,
    pub zero_padded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<ResidualEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CausalityOut {
    pub tol: f64,
    pub state_causal: bool,
    pub output_causal: bool,
    pub witness_state: Rows,
    pub witness_state_norm: f64,
    pub state_bound: f64,
    pub witness_output: Rows,
    pub output_product_norm: f64,
    pub output_bound: f64,
    pub fractional_causal: bool,
    pub fractional_note: &'static str,
    pub input_matrix_source: &'static str,
    #[serde(rename = "B")]
    pub b: Rows,
    #[serde(rename = "maximal_causal_B", skip_serializing_if = "Option::is_none")]
    pub maximal_causal_b: Option<Rows>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_1: Option<usize>,
}

pub const FRACTIONAL_NOTE: &str =
    "the fractional system is causal by construction: D_k reads inputs V_0..V_k only";

impl CausalityOut {
    pub fn new(
        report: &CausalityReport,
        b: &DMatrix<f64>,
        source: &'static str,
        maximal: Option<&DMatrix<f64>>,
    ) -> Self {
        Self {
            tol: report.tol,
            state_causal: report.state.causal,
            output_causal: report.output.causal,
            witness_state: rows_from_matrix(&report.state.witness),
            witness_state_norm: report.state.witness_norm,
            state_bound: report.state.bound,
            witness_output: rows_from_matrix(&report.output.witness),
            output_product_norm: report.output.product_norm,
            output_bound: report.output.bound,
            fractional_causal: report.fractional.causal,
            fractional_note: FRACTIONAL_NOTE,
            input_matrix_source: source,
            b: rows_from_matrix(b),
            maximal_causal_b: maximal.map(rows_from_matrix),
            r_1: maximal.map(|m| m.ncols()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossCheckEntry {
    pub oracle: &'static str,
    pub window_end: usize,
    pub max_relative_difference: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nullity: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<f64>,
    pub horizon: usize,
    pub pass: bool,
    pub residual: ResidualEntry,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_check: Option<CrossCheckEntry>,
}
