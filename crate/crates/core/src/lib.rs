//! Probabilistic coherence distillation under maximally and dephasing
//! incoherent operations.
//!
//! * [`linalg`]: Hermitian operators, dephasing, fidelity, partial traces.
//! * [`states`]: targets, named example states, random inputs.
//! * [`sdp`]: a small interior-point SDP solver.
//! * [`distill`]: distillation programs, protocol extraction and checks.
//! * [`analytic`]: closed forms and thresholds for pure inputs.
//! * [`catalysis`]: catalyst-assisted distillation programs.
//! * [`cli`]: the `coherdist` command line.
//! * [`acceptance`]: the acceptance suite behind `coherdist verify`.

pub mod acceptance;
pub mod analytic;
pub mod catalysis;
pub mod cli;
pub mod distill;
pub mod error;
pub mod linalg;
pub mod sdp;
pub mod states;

pub use error::{Error, Result};
