//! Typical event-duration acquisition by voting over per-sentence duration
//! verdicts, and generation of pseudo-labeled duration QA data.

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod eval;
pub mod events;
pub mod predictor;
pub mod pseudogen;
pub mod resources;
pub mod seeding;
pub mod sim;
pub mod units;
pub mod voting;

pub use units::DurationUnit;
