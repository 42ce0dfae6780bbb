use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::network::Violation;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// The network breaks one or more structural invariants.
    InvalidNetwork(Vec<Violation>),
    /// An argument is outside its documented domain.
    InvalidArgument(String),
    /// Matrix or vector sizes do not agree.
    DimensionMismatch(String),
    /// Exact enumeration was requested on an instance above the guard.
    InstanceTooLarge { assignments: f64, limit: f64 },
    /// Every restart of a fit ended in a degenerate state.
    DegenerateFit(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidNetwork(v) => {
                write!(f, "invalid network:")?;
                for (i, violation) in v.iter().enumerate() {
                    let sep = if i == 0 { " " } else { "; " };
                    write!(f, "{sep}{violation}")?;
                }
                Ok(())
            }
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::InstanceTooLarge { assignments, limit } => write!(
                f,
                "exact enumeration needs {assignments:e} assignments (limit {limit:e})"
            ),
            Error::DegenerateFit(msg) => write!(f, "degenerate fit: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

impl Error {
    /// True for failures of the numerical procedures, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::DegenerateFit(_) | Error::InstanceTooLarge { .. })
    }
}
