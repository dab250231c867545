//! Command-line tools and the HTTP task server.

pub mod commands;
pub mod config;
pub mod server;

pub use commands::{run, Cli};
