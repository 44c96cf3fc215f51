use std::fmt;

use gardingkit::Error;

pub const OK: u8 = 0;
pub const ANALYTIC: u8 = 2;
pub const INCONCLUSIVE: u8 = 3;
pub const USAGE: u8 = 64;
pub const DATA: u8 = 65;
const OTHER: u8 = 1;

/// An error together with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidInput(_) => USAGE,
            Error::Parse(_) => DATA,
            Error::DomainViolation { .. } | Error::ConeViolation(_) | Error::SymmetryViolation(_) => ANALYTIC,
            Error::SamplerExhausted { .. } | Error::InsufficientData(_) => INCONCLUSIVE,
            _ => OTHER,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(OTHER, format!("i/o error: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::new(OTHER, format!("json error: {e}"))
    }
}
