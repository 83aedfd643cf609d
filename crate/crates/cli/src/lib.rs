//! Experiment runner and bound checker built on the `cbce` library.

pub mod config;
pub mod csv_io;
pub mod experiment;
pub mod simulate;
pub mod sweeps;
