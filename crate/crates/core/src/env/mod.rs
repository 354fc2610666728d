//! Environment interface, task formulations, and episode accounting.
//!
//! A [`Dynamics`] is a bare simulator with a goal predicate. A [`Task`] wraps
//! one with a [`FormulationSpec`] that decides rewards, termination and
//! timeouts.

mod accounting;
mod formulation;
mod task;

pub use accounting::{accumulate_episode, EpisodeRecord, EpisodeTracker, Segment};
pub use formulation::{contact_reward, guiding_reward, FormulationKind, FormulationSpec};
pub use task::Task;

use crate::seeding::StreamRng;

/// Flat observation vector with per-environment semantic labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub values: Vec<f64>,
    pub layout: &'static [&'static str],
}

impl Observation {
    pub fn new(values: Vec<f64>, layout: &'static [&'static str]) -> Self {
        debug_assert_eq!(values.len(), layout.len());
        Self { values, layout }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Value of the component with the given label, if present.
    pub fn get(&self, label: &str) -> Option<f64> {
        self.layout
            .iter()
            .position(|l| *l == label)
            .map(|i| self.values[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_obs: Observation,
    pub reward: f64,
    /// Goal reached (minimum-time termination).
    pub terminated: bool,
    /// Timeout fired. Under minimum-time this resampled the start state and
    /// `next_obs` is the post-reset observation.
    pub truncated: bool,
}

/// A simulator with a goal region.
///
/// Implementations are deterministic given the random stream handed to the
/// sampling methods and the action sequence.
pub trait Dynamics: Send {
    fn name(&self) -> &'static str;

    fn obs_layout(&self) -> &'static [&'static str];

    fn obs_dim(&self) -> usize {
        self.obs_layout().len()
    }

    fn action_dim(&self) -> usize;

    /// Place a new goal.
    fn sample_goal(&mut self, rng: &mut StreamRng);

    /// Move the agent to a fresh start configuration, leaving the goal alone.
    fn sample_start(&mut self, rng: &mut StreamRng);

    /// Advance one tick. Action components are already in [-1, 1].
    fn advance(&mut self, action: &[f64]);

    fn observe(&self) -> Observation;

    fn in_goal(&self) -> bool;

    /// Speed at or below the near-zero-velocity tolerance.
    fn at_rest(&self) -> bool;

    /// Distance from the controlled point to the goal.
    fn distance_to_goal(&self) -> f64;

    fn goal(&self) -> Vec<f64>;

    /// The agent's configuration (positions and velocities), goal excluded.
    fn configuration(&self) -> Vec<f64>;

    fn clone_box(&self) -> Box<dyn Dynamics>;

    fn mintime_terminated(&self) -> bool {
        self.in_goal() && self.at_rest()
    }

    fn guiding_reward(&self) -> f64 {
        if self.in_goal() {
            1.0
        } else {
            -self.distance_to_goal()
        }
    }
}

impl Clone for Box<dyn Dynamics> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}
