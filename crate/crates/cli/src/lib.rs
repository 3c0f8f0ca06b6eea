//! Experiment harness for the analogical matching network: dataset
//! generation, training, matching, oracle runs, evaluation reports and
//! gradient checks.

pub mod commands;
pub mod config;
pub mod eval;
pub mod gradcheck;
pub mod train;
