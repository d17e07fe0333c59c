//! Configuration, scenarios and artifacts of the `waterwave` command.

pub mod config;
pub mod output;
pub mod scenario;
