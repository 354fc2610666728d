use rand::SeedableRng;

use super::{contact_reward, Dynamics, FormulationKind, FormulationSpec, Observation, StepOutcome};
use crate::error::{Error, Result};
use crate::seeding::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    NeedsReset,
    Running,
    Finished,
}

/// An environment wrapped in one of the three formulations.
///
/// `reset(Some(seed))` reseeds the task's random stream; goal placement and
/// every later start-state resample are drawn from that stream, goal first.
#[derive(Clone)]
pub struct Task {
    dynamics: Box<dyn Dynamics>,
    spec: FormulationSpec,
    rng: StreamRng,
    segment_steps: usize,
    phase: Phase,
}

impl Task {
    pub fn new(dynamics: Box<dyn Dynamics>, spec: FormulationSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            dynamics,
            spec,
            rng: StreamRng::seed_from_u64(0),
            segment_steps: 0,
            phase: Phase::NeedsReset,
        })
    }

    pub fn spec(&self) -> &FormulationSpec {
        &self.spec
    }

    pub fn dynamics(&self) -> &dyn Dynamics {
        self.dynamics.as_ref()
    }

    pub fn obs_dim(&self) -> usize {
        self.dynamics.obs_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.dynamics.action_dim()
    }

    /// Steps taken since the last reset or timeout.
    pub fn segment_steps(&self) -> usize {
        self.segment_steps
    }

    pub fn is_finished(&self) -> bool {
        self.phase == Phase::Finished
    }

    pub fn observe(&self) -> Observation {
        self.dynamics.observe()
    }

    pub fn reset(&mut self, seed: Option<u64>) -> Observation {
        if let Some(seed) = seed {
            self.rng = StreamRng::seed_from_u64(seed);
        }
        self.dynamics.sample_goal(&mut self.rng);
        self.dynamics.sample_start(&mut self.rng);
        self.segment_steps = 0;
        self.phase = Phase::Running;
        self.dynamics.observe()
    }

    pub fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        match self.phase {
            Phase::NeedsReset => return Err(Error::NotReset),
            Phase::Finished => return Err(Error::EpisodeFinished),
            Phase::Running => {}
        }
        let expected = self.dynamics.action_dim();
        if action.len() != expected {
            return Err(Error::ActionDim {
                expected,
                got: action.len(),
            });
        }
        if let Some((index, &value)) = action
            .iter()
            .enumerate()
            .find(|(_, a)| !(-1.0..=1.0).contains(*a))
        {
            return Err(Error::ActionRange { index, value });
        }

        self.dynamics.advance(action);
        self.segment_steps += 1;

        let outcome = match self.spec.kind {
            FormulationKind::Guiding | FormulationKind::Contact => {
                let reward = if self.spec.kind == FormulationKind::Guiding {
                    self.dynamics.guiding_reward()
                } else {
                    contact_reward(self.dynamics.in_goal())
                };
                let truncated = self.segment_steps >= self.spec.episode_length;
                if truncated {
                    self.phase = Phase::Finished;
                }
                StepOutcome {
                    next_obs: self.dynamics.observe(),
                    reward,
                    terminated: false,
                    truncated,
                }
            }
            FormulationKind::MinTime => {
                if self.dynamics.mintime_terminated() {
                    self.phase = Phase::Finished;
                    StepOutcome {
                        next_obs: self.dynamics.observe(),
                        reward: -1.0,
                        terminated: true,
                        truncated: false,
                    }
                } else if self.segment_steps >= self.spec.timeout {
                    self.dynamics.sample_start(&mut self.rng);
                    self.segment_steps = 0;
                    StepOutcome {
                        next_obs: self.dynamics.observe(),
                        reward: -1.0 - self.spec.reset_penalty,
                        terminated: false,
                        truncated: true,
                    }
                } else {
                    StepOutcome {
                        next_obs: self.dynamics.observe(),
                        reward: -1.0,
                        terminated: false,
                        truncated: false,
                    }
                }
            }
        };
        Ok(outcome)
    }
}
