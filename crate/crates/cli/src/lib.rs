//! Pipeline orchestration behind the `oie` binary.

pub mod config;
pub mod eval;
pub mod pipeline;
