use rand::Rng;

use crate::env::{Dynamics, Observation};
use crate::seeding::StreamRng;

const LAYOUT: &[&str] = &["position", "velocity"];

const POWER: f64 = 0.001;
const GRAVITY: f64 = 0.0025;
const HILL_FREQ: f64 = 3.0;

/// Under-powered car in a valley; the goal is the top of the right hill.
///
/// Termination only requires reaching `GOAL_X`; there is no speed condition.
#[derive(Debug, Clone)]
pub struct MountainCar {
    x: f64,
    v: f64,
}

impl MountainCar {
    pub const X_MIN: f64 = -1.2;
    pub const X_MAX: f64 = 0.6;
    pub const V_MAX: f64 = 0.07;
    pub const GOAL_X: f64 = 0.45;

    pub fn new() -> Self {
        Self { x: -0.5, v: 0.0 }
    }

    pub fn set_state(&mut self, x: f64, v: f64) {
        self.x = x;
        self.v = v;
    }

    pub fn position(&self) -> f64 {
        self.x
    }

    pub fn velocity(&self) -> f64 {
        self.v
    }
}

impl Default for MountainCar {
    fn default() -> Self {
        Self::new()
    }
}

impl Dynamics for MountainCar {
    fn name(&self) -> &'static str {
        "mountain_car"
    }

    fn obs_layout(&self) -> &'static [&'static str] {
        LAYOUT
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn sample_goal(&mut self, _rng: &mut StreamRng) {}

    fn sample_start(&mut self, rng: &mut StreamRng) {
        self.x = rng.random_range(-0.6..-0.4);
        self.v = 0.0;
    }

    fn advance(&mut self, action: &[f64]) {
        self.v = (self.v + POWER * action[0] - GRAVITY * (HILL_FREQ * self.x).cos())
            .clamp(-Self::V_MAX, Self::V_MAX);
        self.x = (self.x + self.v).clamp(Self::X_MIN, Self::X_MAX);
        if self.x <= Self::X_MIN && self.v < 0.0 {
            self.v = 0.0;
        }
    }

    fn observe(&self) -> Observation {
        Observation::new(vec![self.x, self.v], LAYOUT)
    }

    fn in_goal(&self) -> bool {
        self.x >= Self::GOAL_X
    }

    fn at_rest(&self) -> bool {
        true
    }

    fn mintime_terminated(&self) -> bool {
        self.in_goal()
    }

    fn distance_to_goal(&self) -> f64 {
        (Self::GOAL_X - self.x).max(0.0)
    }

    fn goal(&self) -> Vec<f64> {
        vec![Self::GOAL_X]
    }

    fn configuration(&self) -> Vec<f64> {
        vec![self.x, self.v]
    }

    fn clone_box(&self) -> Box<dyn Dynamics> {
        Box::new(self.clone())
    }
}
