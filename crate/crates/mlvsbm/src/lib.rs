//! File formats, a thread-pool executor and the `mlvsbm` command line for
//! [`mlvsbm_core`].

pub mod cli;
pub mod error;
pub mod format;
pub mod parallel;

pub use error::{IoError, IoResult};
pub use parallel::Parallel;
