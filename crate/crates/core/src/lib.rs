//! Multi-agent, multi-objective retrosynthesis planning.
//!
//! Modules are layered bottom-up: [`chemworld`] defines the molecule universe,
//! [`vfdsl`] the guidance expressions, [`planner`] the search loop, [`agents`]
//! the language-model roles, and [`evalbench`] reports, metrics and oracles.

pub mod agents;
pub mod chemworld;
pub mod evalbench;
pub mod par;
pub mod planner;
pub mod vfdsl;
