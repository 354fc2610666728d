use super::{FormulationKind, FormulationSpec, StepOutcome};
use crate::error::{Error, Result};

/// A run of steps between two resets of the agent's start state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub steps: usize,
    pub timed_out: bool,
}

impl Segment {
    pub fn new(steps: usize, timed_out: bool) -> Self {
        Self { steps, timed_out }
    }
}

/// One logical episode.
///
/// For minimum-time episodes a timeout does not end the episode; each timeout
/// charges the reset penalty `K` to the return and `K` steps to the length,
/// so `adjusted_length == -adjusted_return` when the per-step reward is -1.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub segments: Vec<Segment>,
    pub adjusted_return: f64,
    pub adjusted_length: f64,
    pub reached_goal: bool,
    /// False when the run ended before the episode did.
    pub complete: bool,
}

impl EpisodeRecord {
    pub fn timeouts(&self) -> usize {
        self.segments.iter().filter(|s| s.timed_out).count()
    }

    pub fn raw_steps(&self) -> usize {
        self.segments.iter().map(|s| s.steps).sum()
    }
}

/// Minimum-time return and length of an episode made of `segments`.
///
/// Every timed-out segment must last exactly `timeout` steps and only the
/// final segment may end without a timeout. A list made only of timeouts is
/// an episode cut short by the run budget.
pub fn accumulate_episode(
    segments: &[Segment],
    timeout: usize,
    reset_penalty: f64,
) -> Result<EpisodeRecord> {
    if segments.is_empty() {
        return Err(Error::InvalidSegments("no segments".into()));
    }
    let last = segments.len() - 1;
    for (i, seg) in segments.iter().enumerate() {
        if !seg.timed_out && i != last {
            return Err(Error::InvalidSegments(format!(
                "segment {i} reached the goal but is not the final segment"
            )));
        }
        if seg.timed_out && seg.steps != timeout {
            return Err(Error::InvalidSegments(format!(
                "segment {i} timed out after {} steps, timeout is {timeout}",
                seg.steps
            )));
        }
        if !seg.timed_out && (seg.steps == 0 || seg.steps > timeout) {
            return Err(Error::InvalidSegments(format!(
                "final segment length {} outside 1..={timeout}",
                seg.steps
            )));
        }
    }
    let steps: usize = segments.iter().map(|s| s.steps).sum();
    let timeouts = segments.iter().filter(|s| s.timed_out).count();
    let penalty = reset_penalty * timeouts as f64;
    let reached_goal = !segments[last].timed_out;
    Ok(EpisodeRecord {
        segments: segments.to_vec(),
        adjusted_return: -(steps as f64) - penalty,
        adjusted_length: steps as f64 + penalty,
        reached_goal,
        complete: reached_goal,
    })
}

/// Builds [`EpisodeRecord`]s from a stream of step outcomes.
#[derive(Debug, Clone)]
pub struct EpisodeTracker {
    spec: FormulationSpec,
    segments: Vec<Segment>,
    steps: usize,
    reward_sum: f64,
    touched_goal: bool,
}

impl EpisodeTracker {
    pub fn new(spec: FormulationSpec) -> Self {
        Self {
            spec,
            segments: Vec::new(),
            steps: 0,
            reward_sum: 0.0,
            touched_goal: false,
        }
    }

    /// Feed one step; returns the record when the step ended an episode.
    pub fn record(&mut self, outcome: &StepOutcome, in_goal: bool) -> Option<EpisodeRecord> {
        self.steps += 1;
        self.reward_sum += outcome.reward;
        self.touched_goal |= in_goal;
        match self.spec.kind {
            FormulationKind::MinTime => {
                if outcome.truncated {
                    self.segments.push(Segment::new(self.steps, true));
                    self.steps = 0;
                    None
                } else if outcome.terminated {
                    self.segments.push(Segment::new(self.steps, false));
                    let record = accumulate_episode(
                        &self.segments,
                        self.spec.timeout,
                        self.spec.reset_penalty,
                    )
                    .expect("tracker produces well-formed segments");
                    self.clear();
                    Some(record)
                } else {
                    None
                }
            }
            FormulationKind::Guiding | FormulationKind::Contact => {
                if outcome.truncated {
                    let record = EpisodeRecord {
                        segments: vec![Segment::new(self.steps, true)],
                        adjusted_return: self.reward_sum,
                        adjusted_length: self.steps as f64,
                        reached_goal: self.touched_goal,
                        complete: true,
                    };
                    self.clear();
                    Some(record)
                } else {
                    None
                }
            }
        }
    }

    /// The episode in progress, flagged incomplete. `None` if nothing is pending.
    pub fn pending(&self) -> Option<EpisodeRecord> {
        if self.steps == 0 && self.segments.is_empty() {
            return None;
        }
        let mut segments = self.segments.clone();
        if self.steps > 0 {
            segments.push(Segment::new(self.steps, false));
        }
        let (adjusted_return, adjusted_length) = match self.spec.kind {
            FormulationKind::MinTime => {
                let timeouts = self.segments.len() as f64;
                let steps: usize = segments.iter().map(|s| s.steps).sum();
                let penalty = self.spec.reset_penalty * timeouts;
                (-(steps as f64) - penalty, steps as f64 + penalty)
            }
            _ => (self.reward_sum, self.steps as f64),
        };
        Some(EpisodeRecord {
            segments,
            adjusted_return,
            adjusted_length,
            reached_goal: false,
            complete: false,
        })
    }

    fn clear(&mut self) {
        self.segments.clear();
        self.steps = 0;
        self.reward_sum = 0.0;
        self.touched_goal = false;
    }
}
