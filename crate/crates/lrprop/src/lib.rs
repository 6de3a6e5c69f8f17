//! Files, configuration, worker threads and the command-line front end for
//! `lrprop-core`.

pub mod checkpoint;
pub mod cli;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod parallel;
pub mod report;

pub use error::{AppError, AppResult};
