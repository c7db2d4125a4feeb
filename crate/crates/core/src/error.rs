use std::fmt;

use thiserror::Error;

/// A single violated parameter invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn join(errors: &[FieldError]) -> String {
    errors
        .iter()
        .map(|e| format!("{}: {}", e.field, e.message))
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("reducible channel: p_g2b + p_b2g must be positive")]
    DegenerateChain,

    #[error("invalid parameters: {}", join(.0))]
    InvalidParams(Vec<FieldError>),

    #[error("unsupported configuration: {0}")]
    Unsupported(&'static str),

    #[error("{what} = {value} is outside [{low}, {high})")]
    OutOfRange {
        what: &'static str,
        value: f64,
        low: f64,
        high: f64,
    },

    #[error("queues are unstable: arrival rate {lambda} does not fit under service rate {service}")]
    Unstable { lambda: f64, service: f64 },

    #[error("stability polynomial has complex roots (lambda = {lambda} > f11/4 = {limit})")]
    ComplexRoots { lambda: f64, limit: f64 },

    #[error("parameters are not symmetric: {0}")]
    NotSymmetric(&'static str),

    #[error("invalid simulation config: {0}")]
    ConfigInvalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
