use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside the range its family or law accepts.
    #[error("invalid parameter {name} = {value}: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    /// A numerical operation was evaluated outside its domain.
    #[error("{op}: domain error: {detail}")]
    Domain { op: &'static str, detail: String },
    #[error("{op}: unsupported for {what}")]
    Unsupported { op: &'static str, what: String },
    #[error("{op}: need at least {min} samples, got {got}")]
    InsufficientSamples {
        op: &'static str,
        min: usize,
        got: usize,
    },
    #[error("unknown {kind} name `{name}`; valid names: {}", valid.join(", "))]
    UnknownName {
        kind: &'static str,
        name: String,
        valid: Vec<&'static str>,
    },
    #[error("malformed {kind} spec `{spec}`: {reason}")]
    Spec {
        kind: &'static str,
        spec: String,
        reason: String,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::Parameter {
            name,
            value,
            reason,
        }
    }

    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    /// True for errors raised by numerical-domain violations, as opposed to
    /// malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Domain { .. } | Error::InsufficientSamples { .. })
    }
}
