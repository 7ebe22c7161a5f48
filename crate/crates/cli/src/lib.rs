//! Library side of the `nmor` command-line tool: configuration, the model
//! registry and the command implementations.

pub mod commands;
pub mod config;
pub mod registry;
pub mod sweep;

use nmor_core::Error as CoreError;

use crate::config::ConfigError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_TRIM: i32 = 3;
pub const EXIT_REDUCTION: i32 = 4;
pub const EXIT_DIVERGENCE: i32 = 5;

/// Maps an error chain to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return EXIT_CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return match e {
                CoreError::TrimFailure { .. } | CoreError::SingularTrim => EXIT_TRIM,
                CoreError::Divergence { .. } => EXIT_DIVERGENCE,
                CoreError::InvalidParameter { .. } | CoreError::Unknown { .. } | CoreError::Dimension { .. } => {
                    EXIT_CONFIG
                }
                CoreError::Reduction(_)
                | CoreError::Defective { .. }
                | CoreError::Selection { .. }
                | CoreError::FiniteDifference { .. }
                | CoreError::JacobianColumn { .. }
                | CoreError::Singular(_)
                | CoreError::NonFinite { .. } => EXIT_REDUCTION,
                CoreError::Archive { .. } | CoreError::Io(_) => EXIT_OTHER,
            };
        }
    }
    EXIT_OTHER
}
