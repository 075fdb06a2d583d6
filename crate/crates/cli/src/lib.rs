//! Scenario-driven front end for the Cosserat kinematics and statics
//! library: a line-based scenario format with an arithmetic expression
//! language, a runner that turns scenarios into grid computations, and
//! deterministic table/record reports.

pub mod error;
pub mod expr;
pub mod report;
pub mod runner;
pub mod scenario;
