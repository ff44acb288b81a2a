use thiserror::Error;

/// Failure kinds shared by every module.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Malformed or inconsistent caller input.
    #[error("input error: {0}")]
    Input(String),
    /// A structural condition the data should satisfy does not hold.
    #[error("structural error: {0}")]
    Structural(String),
    /// An operation was called outside its precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// An internal invariant of an algorithm failed.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! input_err {
    ($($arg:tt)*) => { $crate::error::Error::Input(format!($($arg)*)) };
}
macro_rules! structural_err {
    ($($arg:tt)*) => { $crate::error::Error::Structural(format!($($arg)*)) };
}
macro_rules! precondition_err {
    ($($arg:tt)*) => { $crate::error::Error::Precondition(format!($($arg)*)) };
}
macro_rules! invariant_err {
    ($($arg:tt)*) => { $crate::error::Error::Invariant(format!($($arg)*)) };
}
pub(crate) use {input_err, invariant_err, precondition_err, structural_err};
