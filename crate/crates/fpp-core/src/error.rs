//! Error taxonomy shared by every module in the crate.
//!
//! The split matters for the command-line front end, which maps each variant
//! to a distinct exit code: bad input that a caller can fix (`Config`),
//! mathematically invalid arguments (`Domain`), a weight law that violates
//! the standing moment/support assumptions (`Assumption`), and requests the
//! solver refuses because they would exhaust memory (`Resource`).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed user input: unparsable distribution literal, bad grid, ...
    #[error("configuration error: {0}")]
    Config(String),

    /// Arguments outside the mathematical domain of an operation
    /// (site outside the box, non-unit direction, zero replicas, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The weight distribution fails a required standing assumption
    /// (atom at zero too heavy, divergent moment, missing support in [1, inf)).
    #[error("assumption violation: {0}")]
    Assumption(String),

    /// The request is well-posed but too large to solve exactly.
    #[error("resource limit: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn assumption(msg: impl Into<String>) -> Self {
        Error::Assumption(msg.into())
    }
    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }
}
