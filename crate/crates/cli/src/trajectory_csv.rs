//! Trajectory export: `k, Y_1..Y_m, X_1..X_n` with 17 significant digits.

use descriptor_core::solver::Trajectory;

use crate::error::CliError;

pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn header(m: usize, n_out: usize) -> Vec<String> {
    let mut h = vec!["k".to_string()];
    h.extend((1..=m).map(|i| format!("Y_{i}")));
    h.extend((1..=n_out).map(|i| format!("X_{i}")));
    h
}

pub fn trajectory_to_csv(traj: &Trajectory) -> Result<String, CliError> {
    let m = traj.states.first().map_or(0, |y| y.len());
    let n_out = traj.outputs.first().map_or(0, |x| x.len());
    let mut writer = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    writer.write_record(header(m, n_out)).map_err(io)?;
    for (k, (y, x)) in traj.states.iter().zip(&traj.outputs).enumerate() {
        let mut record = vec![k.to_string()];
        record.extend(y.iter().map(|v| format_value(*v)));
        record.extend(x.iter().map(|v| format_value(*v)));
        writer.write_record(&record).map_err(io)?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

/// Parses a CSV produced by [`trajectory_to_csv`] into `(k, values)` rows.
pub fn parse_trajectory_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| CliError::Parse(e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Parse(e.to_string()))?;
        let values = record
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| CliError::Parse(format!("{s}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(values);
    }
    Ok((header, rows))
}
