//! Subcommand implementations.

mod common;
mod evolve;
mod stationary;
mod sweep;
mod verify;
mod weight;

pub use evolve::cmd_evolve;
pub use stationary::cmd_stationary;
pub use sweep::cmd_sweep;
pub use verify::cmd_verify;
pub use weight::cmd_weight;

/// Outcome of a command whose checks all ran.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandStatus {
    Pass,
    ChecksFailed,
}
