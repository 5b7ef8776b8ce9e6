#![allow(dead_code)]

use std::path::{Path, PathBuf};

use descriptor_cli::format::{to_json, SystemFile, WeierstrassFile};

pub fn s1(inputs: usize) -> SystemFile {
    SystemFile {
        f: vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0]],
        g: vec![vec![0.5, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        c: Some(vec![vec![1.0, 0.0, 1.0]]),
        b: None,
        wf: None,
        n: None,
        y0: Some(vec![7.0, -3.0, -2.0]),
        inputs: Some(vec![vec![0.0, 1.0, 2.0]; inputs]),
        horizon: Some(5),
    }
}

/// The exact S1 decomposition with `J_p` replaced by `j`.
pub fn s1_form(j: f64) -> WeierstrassFile {
    let id = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
    WeierstrassFile {
        p_mat: id.clone(),
        q_mat: id,
        j_p: vec![vec![j]],
        h_q: vec![vec![0.0, 1.0], vec![0.0, 0.0]],
        p: 1,
        q: 2,
        q_star: 2,
    }
}

pub fn write(dir: &Path, name: &str, sys: &SystemFile) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, to_json(sys)).unwrap();
    path
}
