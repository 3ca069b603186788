//! Survivor LATE estimators: weighted complier-survivor moments, the
//! mixing-intercept solve, plug-in estimation, joint GMM fitting, bootstrap
//! inference, and sensitivity sweeps.

pub mod alpha;
pub mod bootstrap;
pub mod gmm;
pub mod late;
pub mod moments;
pub mod sweep;

pub(crate) use late::sequential_estimate;
