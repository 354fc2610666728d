use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormulationKind {
    /// Negative distance, +1 inside the target; fixed-length episodes.
    Guiding,
    /// +1 inside the target, 0 elsewhere; fixed-length episodes.
    Contact,
    /// -1 per step until the goal is reached at near-zero velocity.
    MinTime,
}

impl FormulationKind {
    pub const ALL: [FormulationKind; 3] = [Self::Guiding, Self::Contact, Self::MinTime];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Guiding => "guiding",
            Self::Contact => "contact",
            Self::MinTime => "mintime",
        }
    }
}

impl fmt::Display for FormulationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FormulationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "guiding" => Ok(Self::Guiding),
            "contact" => Ok(Self::Contact),
            "mintime" | "min_time" => Ok(Self::MinTime),
            other => Err(Error::UnknownFormulation(other.to_string())),
        }
    }
}

/// Reward and termination regime applied on top of an environment.
///
/// `episode_length` only matters for guiding/contact, `timeout` and
/// `reset_penalty` only for minimum-time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormulationSpec {
    pub kind: FormulationKind,
    pub episode_length: usize,
    pub timeout: usize,
    pub reset_penalty: f64,
}

impl FormulationSpec {
    pub const DEFAULT_EPISODE_LENGTH: usize = 1000;

    pub fn guiding(episode_length: usize) -> Self {
        Self {
            kind: FormulationKind::Guiding,
            episode_length,
            timeout: episode_length,
            reset_penalty: 0.0,
        }
    }

    pub fn contact(episode_length: usize) -> Self {
        Self {
            kind: FormulationKind::Contact,
            ..Self::guiding(episode_length)
        }
    }

    pub fn min_time(timeout: usize, reset_penalty: f64) -> Self {
        Self {
            kind: FormulationKind::MinTime,
            episode_length: Self::DEFAULT_EPISODE_LENGTH,
            timeout,
            reset_penalty,
        }
    }

    /// Spec of `kind` sharing this spec's numeric parameters.
    pub fn with_kind(self, kind: FormulationKind) -> Self {
        Self { kind, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.episode_length == 0 {
            return Err(Error::Config("episode_length must be positive".into()));
        }
        if self.timeout == 0 {
            return Err(Error::Config("timeout must be positive".into()));
        }
        if !(self.reset_penalty >= 0.0 && self.reset_penalty.is_finite()) {
            return Err(Error::Config(format!(
                "reset_penalty must be a non-negative finite number, got {}",
                self.reset_penalty
            )));
        }
        Ok(())
    }
}

/// 1 inside the closed target ball, otherwise minus the Euclidean distance.
pub fn guiding_reward(fingertip: [f64; 2], target: [f64; 2], target_radius: f64) -> f64 {
    let dist = (fingertip[0] - target[0]).hypot(fingertip[1] - target[1]);
    if dist <= target_radius {
        1.0
    } else {
        -dist
    }
}

pub fn contact_reward(in_target: bool) -> f64 {
    if in_target {
        1.0
    } else {
        0.0
    }
}
