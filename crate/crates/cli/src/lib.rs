//! Configuration-driven verification runs for modlab.

pub mod checks;
pub mod config;
pub mod report;
pub mod runner;
