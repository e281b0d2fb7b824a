//! Deterministic agent-based simulator of ad-hoc teamwork in a grid kitchen,
//! with event-log analytics and an experiment harness.

pub mod agents;
pub mod config;
pub mod coordination;
pub mod events;
pub mod export;
pub mod harness;
pub mod metrics;
pub mod plot;
pub mod sim;
pub mod tasks;
pub mod world;

pub type AgentId = usize;
pub type MealId = usize;
pub type StepId = usize;
