//! Command-line front end: configuration, the verification suite and reports.

pub mod commands;
pub mod config;
pub mod report;
pub mod suite;
