//! Process exit codes.

use std::fmt;

pub const SUCCESS: u8 = 0;
/// Anything not classified below.
pub const FAILURE: u8 = 1;
/// Unreadable or malformed input, invalid arguments.
pub const INPUT: u8 = 2;
/// Predictor unavailable, protocol error or contract violation.
pub const PREDICTOR: u8 = 3;
/// Unusable configuration.
pub const CONFIGURATION: u8 = 4;

/// Some files of a batch failed; `code` is the code of the first failure
/// in input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchFailure {
    pub failed: usize,
    pub total: usize,
    pub code: u8,
}

impl fmt::Display for BatchFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} of {} inputs failed", self.failed, self.total)
    }
}

impl std::error::Error for BatchFailure {}

pub fn code_for_core(err: &pavoc::Error) -> u8 {
    use pavoc::Error::*;
    match err {
        InvalidArgument(_) | Format(_) | Io(_) => INPUT,
        PredictorUnavailable(_) | Protocol(_) | ContractViolation(_) => PREDICTOR,
        Config(_) | RankDeficient(_) => CONFIGURATION,
    }
}

/// Exit code for an error chain: the first classifiable cause wins.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(batch) = cause.downcast_ref::<BatchFailure>() {
            return batch.code;
        }
        if let Some(core) = cause.downcast_ref::<pavoc::Error>() {
            return code_for_core(core);
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return INPUT;
        }
    }
    FAILURE
}
