//! CLI and HTTP front ends over the warehouse model.

pub mod cli;
pub mod http;
pub mod ops;
