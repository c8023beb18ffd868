use std::fmt;

use veil_core::Error;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;

/// An error together with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(msg: impl fmt::Display) -> Self {
        Self {
            code: EXIT_USAGE,
            error: anyhow::anyhow!("{msg}"),
        }
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        Self {
            code: EXIT_DATA,
            error: anyhow::anyhow!("{msg}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InsufficientData { .. } | Error::PopulationMismatch(_) => EXIT_DATA,
            Error::Domain(_) | Error::Config(_) | Error::ReserveDepletion(_) => EXIT_USAGE,
        };
        Self {
            code,
            error: e.into(),
        }
    }
}

/// Failures while reading inputs or writing outputs.
impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self {
            code: EXIT_DATA,
            error,
        }
    }
}
