//! Command line tools and the session service for the parsing game.

pub mod commands;
pub mod config;
pub mod error;
pub mod live;
pub mod server;
pub mod wire;

pub use config::ServiceConfig;
pub use error::Failure;
