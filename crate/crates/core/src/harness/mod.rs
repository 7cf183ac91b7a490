//! Experiment harness behind the command-line tool: configuration, seeded
//! model generation, sweeps, reports and the verification suites.

pub mod config;
pub mod generate;
pub mod report;
pub mod sweep;
pub mod verify;
