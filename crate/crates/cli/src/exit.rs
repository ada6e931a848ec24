use std::fmt;

use omle_core::Error;

/// Bad command-line usage detected after argument parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// 1 for usage errors, 3 when a search or enumeration cap tripped, 2 for
/// everything else (bad input files, failed validation, unmet assumptions).
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::EnumerationTooLarge { .. } | Error::SearchCapExceeded { .. } | Error::GeneratorExhausted { .. } => 3,
                _ => 2,
            };
        }
    }
    2
}
