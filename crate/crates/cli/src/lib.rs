//! Command-line front end for `pairbet`.
//!
//! Every command produces a [`Report`]: parameters, summary values and a
//! table. CSV output writes parameters and summary as `# key=value` lines
//! followed by the table; JSON output writes one object with a
//! `schema_version` field. See `docs/FORMAT.md` for the layouts.

pub mod args;
mod commands;
mod input;
mod report;

use std::fmt;

pub use args::{Cli, Command, Format};
pub use commands::run;
pub use input::read_column;
pub use report::{Report, SCHEMA_VERSION};

/// Bad flags or an unusable combination of them (exit status 2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Exit status for a failed run: 2 for usage errors, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let usage = err.chain().any(|cause| {
        cause.downcast_ref::<UsageError>().is_some()
            || matches!(cause.downcast_ref::<pairbet::Error>(), Some(pairbet::Error::Usage(_)))
    });
    if usage {
        2
    } else {
        1
    }
}
