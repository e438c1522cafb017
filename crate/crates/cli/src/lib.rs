//! Library surface of the CLI so integration tests can drive commands
//! in-process.

pub mod config;
pub mod error;
pub mod evaluate;
pub mod manifest;
pub mod pipeline;
