use thiserror::Error;

use crate::extend::ExtensionKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{context}: expected length {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("cannot compose: outer operator takes {outer_in} inputs but inner operator produces {inner_out}")]
    Compose { outer_in: usize, inner_out: usize },

    #[error("signal of length {len} is too short for {kind} extension with pad {pad}")]
    UnsupportedSize {
        kind: ExtensionKind,
        len: usize,
        pad: usize,
    },

    #[error("too many stages: level {level} input has length {len}, which is below the extension pad {pad}")]
    TooManyLevels { level: usize, len: usize, pad: usize },

    #[error("matrix is singular or rank deficient (pivot {pivot:e})")]
    Singular { pivot: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite {what} at iteration {iteration}")]
    NonFinite { what: &'static str, iteration: usize },

    #[error("backtracking failed at iteration {iteration} after {shrinks} step reductions (step {step:e})")]
    BacktrackingFailed {
        iteration: usize,
        shrinks: usize,
        step: f64,
    },
}

pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        })
    }
}
