//! Analysis and simulation of singular linear discrete-time systems
//!
//! ```text
//! F Y_{k+1}       = G Y_k + V_k        (standard)
//! F nabla_0^n Y_k = G Y_k + V_k        (nabla fractional, 0 < n < 1)
//! X_k             = C Y_k
//! ```
//!
//! with a regular pencil `sF - G`. The crate computes the Weierstrass
//! canonical form of the pencil, evaluates the closed-form solutions, decides
//! consistency of initial conditions and causality, and carries independent
//! oracles (difference-equation residuals, direct recursion, stacked least
//! squares) to check every result.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod causality;
pub mod corpus;
pub mod error;
pub mod fracops;
mod jordan;
pub mod linalg;
pub mod oracle;
pub mod pencil;
pub mod solver;

pub use error::{Error, Result};
pub use jordan::cluster_eigenvalues;
pub use nalgebra::{Complex, DMatrix, DVector};
