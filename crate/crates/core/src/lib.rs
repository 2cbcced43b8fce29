//! Spectral-edge statistics of heavy-tailed random matrices: entry laws with
//! exact power tails, sparse and structured ensembles, the small/large entry
//! split, a Lanczos eigensolver, analytic limit laws and a reproducible Monte
//! Carlo harness that compares the two.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decomposition;
pub mod ensembles;
pub mod error;
pub mod experiments;
pub mod io;
pub mod limit_laws;
pub mod report;
pub mod seeding;
pub mod spectral;
pub mod tail_laws;

pub use error::{EdgeError, Result};
