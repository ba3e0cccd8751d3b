//! Experiment orchestration for the `hodge-transport` binary.

pub mod config;
pub mod experiments;
pub mod report;
pub mod svg;
pub mod sweep;
