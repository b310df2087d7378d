use alloc::string::String;
use core::fmt;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside the mathematical domain of the operation.
    Domain(String),
    /// A size limit that protects memory or time was exceeded.
    ResourceGuard {
        what: &'static str,
        limit: usize,
        got: usize,
    },
    /// A tiling violates one of its structural invariants.
    InvalidTiling(String),
    /// The point is not in the liquid region.
    OutsideLiquid,
    /// Precision or convergence failure inside a numerical routine.
    Numerical(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::ResourceGuard { what, limit, got } => {
                write!(f, "resource guard: {what} limited to {limit}, got {got}")
            }
            Error::InvalidTiling(m) => write!(f, "invalid tiling: {m}"),
            Error::OutsideLiquid => f.write_str("point lies outside the liquid region"),
            Error::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

macro_rules! domain {
    ($($t:tt)*) => { $crate::Error::Domain(alloc::format!($($t)*)) };
}
pub(crate) use domain;

impl core::error::Error for Error {}
