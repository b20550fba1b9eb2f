//! Experiment driver for the `ccrt` library: configuration, Monte-Carlo
//! campaigns, CSV and manifest output, and the command-line interface.

pub mod campaigns;
pub mod cli;
pub mod config;
pub mod output;
