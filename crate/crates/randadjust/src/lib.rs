//! Monte Carlo harness, file formats and command-line front end for
//! design-based regression adjustment. The numerical core lives in
//! `randadjust-core`.

pub mod analysis;
pub mod config;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod output;

pub use error::{AppError, AppResult};
pub use randadjust_core as core;
