//! Goal-reaching reinforcement learning workbench.
//!
//! Three task formulations (guiding reward, contact reward, minimum-time) wrap a
//! small set of simulated reaching environments. A from-scratch soft actor-critic
//! learner trains on any of them, the [`probe`] module measures how often the
//! initial policy reaches the goal under a given timeout, and [`eval`] scores
//! trained policies across formulations.

pub mod config;
pub mod env;
pub mod envs;
pub mod error;
pub mod eval;
pub mod nn;
pub mod probe;
pub mod sac;
pub mod seeding;
pub mod train;

pub use config::RunConfig;
pub use env::{
    accumulate_episode, contact_reward, guiding_reward, Dynamics, EpisodeRecord, FormulationKind,
    FormulationSpec, Observation, Segment, StepOutcome, Task,
};
pub use envs::EnvName;
pub use error::{Error, Result};
pub use probe::{learnability_verdict, run_probe, sweep_timeouts, ProbeReport};
pub use sac::{AgentConfig, ReplayBuffer, SacAgent, Transition};
