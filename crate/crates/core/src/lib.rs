//! Performance model of a multi-tote storage and retrieval robot warehouse.

pub mod config;
pub mod layout;
pub mod model;
pub mod mva;
pub mod planner;
pub mod report;
pub mod scenario;
pub mod simulator;
pub mod solver;
pub mod stats;
pub mod travel;
