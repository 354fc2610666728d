use rand::Rng;

use super::V_TOL;
use crate::env::{Dynamics, Observation};
use crate::seeding::StreamRng;

const LAYOUT: &[&str] = &["pos_x", "pos_y", "vel_x", "vel_y", "to_goal_x", "to_goal_y"];

/// Point mass on the square [-1, 1]², driven by a bounded acceleration.
///
/// Velocity is integrated first (semi-implicit Euler) and clipped to
/// `max_speed`; hitting a wall zeroes the velocity component pointing into it.
#[derive(Debug, Clone)]
pub struct PointReacher {
    name: &'static str,
    dt: f64,
    max_accel: f64,
    max_speed: f64,
    target_radius: f64,
    pos: [f64; 2],
    vel: [f64; 2],
    goal: [f64; 2],
}

impl PointReacher {
    pub const EASY_RADIUS: f64 = 0.10;
    pub const HARD_RADIUS: f64 = 0.025;

    pub fn easy() -> Self {
        Self::named("point_reacher_easy", Self::EASY_RADIUS)
    }

    pub fn hard() -> Self {
        Self::named("point_reacher_hard", Self::HARD_RADIUS)
    }

    pub fn with_radius(target_radius: f64) -> Self {
        Self::named("point_reacher", target_radius)
    }

    fn named(name: &'static str, target_radius: f64) -> Self {
        Self {
            name,
            dt: 0.05,
            max_accel: 1.0,
            max_speed: 1.0,
            target_radius,
            pos: [0.0; 2],
            vel: [0.0; 2],
            goal: [0.0; 2],
        }
    }

    pub fn set_state(&mut self, pos: [f64; 2], vel: [f64; 2]) {
        self.pos = pos;
        self.vel = vel;
    }

    pub fn set_goal(&mut self, goal: [f64; 2]) {
        self.goal = goal;
    }

    pub fn position(&self) -> [f64; 2] {
        self.pos
    }

    pub fn velocity(&self) -> [f64; 2] {
        self.vel
    }

    pub fn max_speed(&self) -> f64 {
        self.max_speed
    }

    pub fn target_radius(&self) -> f64 {
        self.target_radius
    }
}

impl Dynamics for PointReacher {
    fn name(&self) -> &'static str {
        self.name
    }

    fn obs_layout(&self) -> &'static [&'static str] {
        LAYOUT
    }

    fn action_dim(&self) -> usize {
        2
    }

    fn sample_goal(&mut self, rng: &mut StreamRng) {
        self.goal = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
    }

    fn sample_start(&mut self, rng: &mut StreamRng) {
        self.pos = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        self.vel = [0.0; 2];
    }

    fn advance(&mut self, action: &[f64]) {
        for i in 0..2 {
            self.vel[i] += action[i] * self.max_accel * self.dt;
        }
        let speed = self.vel[0].hypot(self.vel[1]);
        if speed > self.max_speed {
            let scale = self.max_speed / speed;
            self.vel[0] *= scale;
            self.vel[1] *= scale;
        }
        for i in 0..2 {
            let p = self.pos[i] + self.vel[i] * self.dt;
            if p >= 1.0 {
                self.pos[i] = 1.0;
                if self.vel[i] > 0.0 {
                    self.vel[i] = 0.0;
                }
            } else if p <= -1.0 {
                self.pos[i] = -1.0;
                if self.vel[i] < 0.0 {
                    self.vel[i] = 0.0;
                }
            } else {
                self.pos[i] = p;
            }
        }
    }

    fn observe(&self) -> Observation {
        Observation::new(
            vec![
                self.pos[0],
                self.pos[1],
                self.vel[0],
                self.vel[1],
                self.goal[0] - self.pos[0],
                self.goal[1] - self.pos[1],
            ],
            LAYOUT,
        )
    }

    fn in_goal(&self) -> bool {
        self.distance_to_goal() <= self.target_radius
    }

    fn at_rest(&self) -> bool {
        self.vel[0].hypot(self.vel[1]) <= V_TOL
    }

    fn distance_to_goal(&self) -> f64 {
        (self.goal[0] - self.pos[0]).hypot(self.goal[1] - self.pos[1])
    }

    fn goal(&self) -> Vec<f64> {
        self.goal.to_vec()
    }

    fn configuration(&self) -> Vec<f64> {
        vec![self.pos[0], self.pos[1], self.vel[0], self.vel[1]]
    }

    fn clone_box(&self) -> Box<dyn Dynamics> {
        Box::new(self.clone())
    }
}
