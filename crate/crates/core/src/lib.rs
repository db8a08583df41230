//! Sparse signal recovery from compressive measurements.
//!
//! Three reconstruction routes are provided over a shared measurement model
//! `y = φx`, `x ~ N(μ, σ²I)` with μ sparse:
//!
//! * [`l1`]: the conventional penalised-L1 (basis pursuit denoising) estimate
//!   of `x`;
//! * [`em::naive_em`]: EM whose M-step searches every support of size `≤ k`;
//! * [`em::recover_new_approach`]: unrestricted EM, per-coordinate z-tests to
//!   pick a support, then EM restricted to that support.
//!
//! [`sim`] runs the seeded Monte-Carlo comparisons and writes CSV/SVG output;
//! [`cli`] is the command-line front end.

pub mod cli;
pub mod combinatorics;
pub mod em;
pub mod error;
pub mod l1;
pub mod linalg;
pub mod sim;

pub use error::{Error, Result};
