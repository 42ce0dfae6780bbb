//! Multilevel stochastic block model (MLVSBM).
//!
//! A multilevel network joins an inter-individual graph and an
//! inter-organizational graph through an affiliation map sending every
//! individual to exactly one organization. Individual blocks depend on the
//! block of the affiliated organization through a column-stochastic mixing
//! matrix `gamma`.
//!
//! This crate holds the numerical core: data model and masking
//! ([`network`]), sampling ([`generate`]), likelihoods and the variational
//! bound ([`likelihood`]), variational EM ([`vem`]), initial clusterings
//! ([`init`]), ICL model selection ([`select`]) and prediction/evaluation
//! ([`predict`]). It is `no_std` with `alloc`; the `std` feature (on by
//! default) only switches float intrinsics to the platform libm.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod exec;
pub mod generate;
pub mod init;
pub mod likelihood;
pub mod math;
pub mod matrix;
pub mod model;
pub mod network;
pub mod predict;
pub mod rng;
pub mod select;
pub mod vem;

/// Crate version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use matrix::{BinMatrix, Matrix};
pub use model::{Assignments, ModelParams, SbmParams};
pub use network::{Level, LevelGraph, MultilevelNetwork};
