//! Simulated reaching environments.

mod mountain_car;
mod point_reacher;
mod two_link;

pub use mountain_car::MountainCar;
pub use point_reacher::PointReacher;
pub use two_link::{forward_kinematics, TwoLinkReacher};

use std::fmt;
use std::str::FromStr;

use crate::env::Dynamics;
use crate::error::Error;

/// Near-zero-velocity tolerance for minimum-time termination, in each
/// environment's own velocity units.
pub const V_TOL: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvName {
    PointReacherEasy,
    PointReacherHard,
    TwoLinkEasy,
    TwoLinkHard,
    MountainCar,
}

impl EnvName {
    pub const ALL: [EnvName; 5] = [
        Self::PointReacherEasy,
        Self::PointReacherHard,
        Self::TwoLinkEasy,
        Self::TwoLinkHard,
        Self::MountainCar,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::PointReacherEasy => "point_reacher_easy",
            Self::PointReacherHard => "point_reacher_hard",
            Self::TwoLinkEasy => "two_link_easy",
            Self::TwoLinkHard => "two_link_hard",
            Self::MountainCar => "mountain_car",
        }
    }

    pub fn build(self) -> Box<dyn Dynamics> {
        match self {
            Self::PointReacherEasy => Box::new(PointReacher::easy()),
            Self::PointReacherHard => Box::new(PointReacher::hard()),
            Self::TwoLinkEasy => Box::new(TwoLinkReacher::easy()),
            Self::TwoLinkHard => Box::new(TwoLinkReacher::hard()),
            Self::MountainCar => Box::new(MountainCar::new()),
        }
    }
}

impl fmt::Display for EnvName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::UnknownEnv(s.to_string()))
    }
}
