//! Files, metrics and the command line around `mvsense-core`.

pub mod cli;
pub mod compare;
pub mod dump;
pub mod metrics;
pub mod script;
