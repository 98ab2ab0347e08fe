//! Batch front end: config parsing, command dispatch and reports.

pub mod config;
pub mod execute;
pub mod report;

pub use config::{parse_config, Command, ConfigError, Document, RunConfig};
pub use execute::{execute, ExitStatus, Outcome};
pub use report::{Verdict, VerificationReport};
