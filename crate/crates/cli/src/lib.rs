//! Command-line front end: configuration, pipelines and artifacts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod failure;
pub mod output;

pub use commands::{execute, run, Command, Options};
pub use config::Config;
pub use failure::Failure;
