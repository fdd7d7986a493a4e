//! Configuration, persistence and experiment orchestration for the
//! `glperiod` command-line tool.

pub mod commands;
pub mod config;
pub mod manifest;

/// Failures with a fixed exit status.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical divergence: {0}")]
    Divergence(String),
    #[error("{failed} of {total} verification checks failed")]
    ChecksFailed { failed: usize, total: usize },
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Divergence(_) => 3,
            Failure::ChecksFailed { .. } => 1,
        }
    }
}

/// Exit status for an error bubbling out of a command; unclassified
/// errors (I/O and the like) map to 1.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    err.downcast_ref::<Failure>().map_or(1, Failure::exit_code)
}
