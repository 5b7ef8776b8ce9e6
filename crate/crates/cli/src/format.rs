//! JSON file formats for pencils, Weierstrass forms and systems.
//!
//! Matrices are row-major nested arrays. Field names follow the model
//! notation (`F`, `G`, `C`, `B`, `P`, `Q`, `J_p`, `H_q`, ...).

use std::fs;
use std::path::Path;

use descriptor_core::pencil::{Pencil, WeierstrassForm};
use descriptor_core::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PencilFile {
    #[serde(rename = "F")]
    pub f: Rows,
    #[serde(rename = "G")]
    pub g: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeierstrassFile {
    #[serde(rename = "P")]
    pub p_mat: Rows,
    #[serde(rename = "Q")]
    pub q_mat: Rows,
    #[serde(rename = "J_p")]
    pub j_p: Rows,
    #[serde(rename = "H_q")]
    pub h_q: Rows,
    pub p: usize,
    pub q: usize,
    pub q_star: usize,
}

/// Self-describing system definition. Only `F` and `G` are mandatory at
/// parse time; each command checks the fields it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    #[serde(rename = "F")]
    pub f: Rows,
    #[serde(rename = "G")]
    pub g: Rows,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Rows>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wf: Option<WeierstrassFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(rename = "Y0", default, skip_serializing_if = "Option::is_none")]
    pub y0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
}

/// Row-major nested arrays to a matrix. An empty array is a matrix with no
/// rows and `empty_cols` columns.
pub fn matrix_from_rows(field: &str, rows: &Rows, empty_cols: usize) -> Result<DMatrix<f64>, CliError> {
    if rows.is_empty() {
        return Ok(DMatrix::zeros(0, empty_cols));
    }
    let cols = rows[0].len();
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
        return Err(CliError::Structure(format!(
            "field `{field}`: row {i} has {} entries, expected {cols}",
            r.len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub fn rows_from_matrix(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl PencilFile {
    pub fn to_pencil(&self) -> Result<Pencil, CliError> {
        let f = matrix_from_rows("F", &self.f, 0)?;
        let g = matrix_from_rows("G", &self.g, 0)?;
        Pencil::new(f, g).map_err(CliError::from)
    }

    pub fn from_pencil(pencil: &Pencil) -> Self {
        Self {
            f: rows_from_matrix(pencil.f()),
            g: rows_from_matrix(pencil.g()),
        }
    }
}

impl WeierstrassFile {
    pub fn from_form(form: &WeierstrassForm) -> Self {
        Self {
            p_mat: rows_from_matrix(form.p_matrix()),
            q_mat: rows_from_matrix(form.q_matrix()),
            j_p: rows_from_matrix(form.j_p()),
            h_q: rows_from_matrix(form.h_q()),
            p: form.p(),
            q: form.q(),
            q_star: form.q_star(),
        }
    }

    /// Validates the stored form against `pencil` without recomputing it.
    pub fn to_form(&self, pencil: &Pencil, tol: f64) -> Result<WeierstrassForm, CliError> {
        let j_p = matrix_from_rows("wf.J_p", &self.j_p, 0)?;
        let h_q = matrix_from_rows("wf.H_q", &self.h_q, 0)?;
        if j_p.nrows() != self.p || h_q.nrows() != self.q {
            return Err(CliError::Structure(format!(
                "field `wf`: p = {}, q = {} disagree with block sizes {} and {}",
                self.p,
                self.q,
                j_p.nrows(),
                h_q.nrows()
            )));
        }
        let p_mat = matrix_from_rows("wf.P", &self.p_mat, 0)?;
        let q_mat = matrix_from_rows("wf.Q", &self.q_mat, 0)?;
        WeierstrassForm::from_parts(pencil, p_mat, q_mat, j_p, h_q, self.q_star, tol).map_err(CliError::from)
    }
}

impl SystemFile {
    pub fn pencil(&self) -> Result<Pencil, CliError> {
        PencilFile {
            f: self.f.clone(),
            g: self.g.clone(),
        }
        .to_pencil()
    }

    pub fn c(&self, m: usize) -> Result<DMatrix<f64>, CliError> {
        let rows = self.c.as_ref().ok_or_else(|| CliError::missing("C"))?;
        matrix_from_rows("C", rows, m)
    }

    pub fn b(&self, m: usize) -> Result<Option<DMatrix<f64>>, CliError> {
        self.b.as_ref().map(|rows| matrix_from_rows("B", rows, m)).transpose()
    }

    pub fn y0(&self) -> Result<DVector<f64>, CliError> {
        let y0 = self.y0.as_ref().ok_or_else(|| CliError::missing("Y0"))?;
        Ok(DVector::from_column_slice(y0))
    }

    /// Input samples as given in the file (`U_k` when `B` is present).
    pub fn input_samples(&self) -> Result<Vec<DVector<f64>>, CliError> {
        let rows = self.inputs.as_ref().ok_or_else(|| CliError::missing("inputs"))?;
        if rows.is_empty() {
            return Err(CliError::Structure("field `inputs`: at least one sample required".into()));
        }
        Ok(rows.iter().map(|r| DVector::from_column_slice(r)).collect())
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    fs::write(path, to_json(value)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
