//! Config parsing and report emission behind the `streameval` binary.

pub mod config;
pub mod reports;
