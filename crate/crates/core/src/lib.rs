//! Minimum-cost decomposition of rotations into turns about two fixed axes.

pub mod config;
pub mod patterns;
pub mod rotations;
pub mod par;
pub mod solver;
pub mod plan_json;
pub mod pmp;
pub mod oracle;
