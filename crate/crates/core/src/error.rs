use thiserror::Error;

/// Errors raised by table construction, evaluation and the solver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A value lies outside the domain an operation accepts
    /// (symbol out of range, probability outside `[0, 1]`, bad state index, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Shapes, lengths or alphabets of the inputs do not fit together.
    #[error("structural error: {0}")]
    Structure(String),

    /// A table row is not a probability vector.
    #[error("row {row} of {table} is not a probability vector: {reason}")]
    NotStochastic { table: String, row: usize, reason: String },

    /// Malformed channel-definition text.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A requested horizon is missing from a capacity curve.
    #[error("no converged solution for horizon n={0}")]
    MissingHorizon(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn structure(msg: impl Into<String>) -> Error {
    Error::Structure(msg.into())
}

/// Row-stochasticity tolerance used by every table constructor.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Checks that `row` is a probability vector within [`ROW_SUM_TOLERANCE`].
pub(crate) fn check_row(table: &str, row_index: usize, row: &[f64]) -> Result<()> {
    let mut sum = 0.0;
    for &v in row {
        if v < 0.0 || !v.is_finite() {
            return Err(Error::NotStochastic {
                table: table.to_string(),
                row: row_index,
                reason: format!("entry {v} is negative or not finite"),
            });
        }
        sum += v;
    }
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(Error::NotStochastic {
            table: table.to_string(),
            row: row_index,
            reason: format!("sums to {sum}"),
        });
    }
    Ok(())
}
