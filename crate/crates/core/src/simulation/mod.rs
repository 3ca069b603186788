//! Synthetic designs and the Monte Carlo replication harness.

pub mod generate;
pub mod replicate;
pub mod scenario;
