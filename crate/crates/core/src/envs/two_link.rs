use std::f64::consts::PI;

use rand::Rng;

use super::V_TOL;
use crate::env::{Dynamics, Observation};
use crate::seeding::StreamRng;

const LAYOUT: &[&str] = &[
    "tip_x",
    "tip_y",
    "tip_vx",
    "tip_vy",
    "to_goal_x",
    "to_goal_y",
];

const LINK_1: f64 = 0.12;
const LINK_2: f64 = 0.12;
const INERTIA: f64 = 1.0;
const DAMPING: f64 = 0.1;
const MAX_TORQUE: f64 = 1.0;
const DT: f64 = 0.02;
const GOAL_R_MIN: f64 = 0.05;
const GOAL_R_MAX: f64 = 0.20;

/// Fingertip position of the planar arm for joint angles `theta`.
pub fn forward_kinematics(theta: [f64; 2]) -> [f64; 2] {
    let t12 = theta[0] + theta[1];
    [
        LINK_1 * theta[0].cos() + LINK_2 * t12.cos(),
        LINK_1 * theta[0].sin() + LINK_2 * t12.sin(),
    ]
}

fn wrap_angle(x: f64) -> f64 {
    let w = (x + PI).rem_euclid(2.0 * PI) - PI;
    if w >= PI {
        -PI
    } else {
        w
    }
}

/// Planar two-joint arm with independent damped joints.
///
/// Each joint follows `I * acc = max_torque * a - damping * vel`, integrated
/// with semi-implicit Euler. Joint speeds therefore never exceed
/// `max_torque / damping`.
#[derive(Debug, Clone)]
pub struct TwoLinkReacher {
    name: &'static str,
    target_radius: f64,
    theta: [f64; 2],
    theta_dot: [f64; 2],
    goal: [f64; 2],
}

impl TwoLinkReacher {
    pub const EASY_RADIUS: f64 = 0.05;
    pub const HARD_RADIUS: f64 = 0.015;

    pub fn easy() -> Self {
        Self::named("two_link_easy", Self::EASY_RADIUS)
    }

    pub fn hard() -> Self {
        Self::named("two_link_hard", Self::HARD_RADIUS)
    }

    fn named(name: &'static str, target_radius: f64) -> Self {
        Self {
            name,
            target_radius,
            theta: [0.0; 2],
            theta_dot: [0.0; 2],
            goal: [GOAL_R_MIN, 0.0],
        }
    }

    pub fn set_state(&mut self, theta: [f64; 2], theta_dot: [f64; 2]) {
        self.theta = [wrap_angle(theta[0]), wrap_angle(theta[1])];
        self.theta_dot = theta_dot;
    }

    pub fn set_goal(&mut self, goal: [f64; 2]) {
        self.goal = goal;
    }

    pub fn joint_angles(&self) -> [f64; 2] {
        self.theta
    }

    pub fn joint_velocities(&self) -> [f64; 2] {
        self.theta_dot
    }

    pub fn max_joint_speed(&self) -> f64 {
        MAX_TORQUE / DAMPING
    }

    pub fn target_radius(&self) -> f64 {
        self.target_radius
    }

    pub fn fingertip(&self) -> [f64; 2] {
        forward_kinematics(self.theta)
    }

    pub fn fingertip_velocity(&self) -> [f64; 2] {
        let t12 = self.theta[0] + self.theta[1];
        let w12 = self.theta_dot[0] + self.theta_dot[1];
        [
            -LINK_1 * self.theta[0].sin() * self.theta_dot[0] - LINK_2 * t12.sin() * w12,
            LINK_1 * self.theta[0].cos() * self.theta_dot[0] + LINK_2 * t12.cos() * w12,
        ]
    }
}

impl Dynamics for TwoLinkReacher {
    fn name(&self) -> &'static str {
        self.name
    }

    fn obs_layout(&self) -> &'static [&'static str] {
        LAYOUT
    }

    fn action_dim(&self) -> usize {
        2
    }

    /// Uniform by area over the annulus `GOAL_R_MIN <= r <= GOAL_R_MAX`.
    fn sample_goal(&mut self, rng: &mut StreamRng) {
        let r = rng
            .random_range(GOAL_R_MIN * GOAL_R_MIN..=GOAL_R_MAX * GOAL_R_MAX)
            .sqrt();
        let phi = rng.random_range(-PI..PI);
        self.goal = [r * phi.cos(), r * phi.sin()];
    }

    fn sample_start(&mut self, rng: &mut StreamRng) {
        self.theta = [rng.random_range(-PI..PI), rng.random_range(-PI..PI)];
        self.theta_dot = [0.0; 2];
    }

    fn advance(&mut self, action: &[f64]) {
        for i in 0..2 {
            let acc = (MAX_TORQUE * action[i] - DAMPING * self.theta_dot[i]) / INERTIA;
            self.theta_dot[i] += acc * DT;
            self.theta[i] = wrap_angle(self.theta[i] + self.theta_dot[i] * DT);
        }
    }

    fn observe(&self) -> Observation {
        let tip = self.fingertip();
        let vel = self.fingertip_velocity();
        Observation::new(
            vec![
                tip[0],
                tip[1],
                vel[0],
                vel[1],
                self.goal[0] - tip[0],
                self.goal[1] - tip[1],
            ],
            LAYOUT,
        )
    }

    fn in_goal(&self) -> bool {
        self.distance_to_goal() <= self.target_radius
    }

    fn at_rest(&self) -> bool {
        let v = self.fingertip_velocity();
        v[0].hypot(v[1]) <= V_TOL
    }

    fn distance_to_goal(&self) -> f64 {
        let tip = self.fingertip();
        (self.goal[0] - tip[0]).hypot(self.goal[1] - tip[1])
    }

    fn goal(&self) -> Vec<f64> {
        self.goal.to_vec()
    }

    fn configuration(&self) -> Vec<f64> {
        vec![
            self.theta[0],
            self.theta[1],
            self.theta_dot[0],
            self.theta_dot[1],
        ]
    }

    fn clone_box(&self) -> Box<dyn Dynamics> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::stream;
    use proptest::prelude::*;

    fn close(a: [f64; 2], b: [f64; 2]) -> bool {
        (a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12
    }

    #[test]
    fn kinematics_examples() {
        assert!(close(forward_kinematics([0.0, 0.0]), [0.24, 0.0]));
        assert!(close(forward_kinematics([PI / 2.0, 0.0]), [0.0, 0.24]));
        assert!(close(forward_kinematics([0.0, PI / 2.0]), [0.12, 0.12]));
    }

    #[test]
    fn observation_has_six_entries_after_reset() {
        let mut arm = TwoLinkReacher::easy();
        let mut rng = stream(0, "env", 0);
        arm.sample_goal(&mut rng);
        arm.sample_start(&mut rng);
        let obs = arm.observe();
        assert_eq!(obs.len(), 6);
        assert_eq!(obs.get("tip_vx"), Some(0.0));
    }

    #[test]
    fn goals_lie_in_reachable_annulus() {
        let mut arm = TwoLinkReacher::hard();
        let mut rng = stream(3, "env", 0);
        for _ in 0..10_000 {
            arm.sample_goal(&mut rng);
            let g = arm.goal();
            let r = g[0].hypot(g[1]);
            assert!((GOAL_R_MIN - 1e-12..=GOAL_R_MAX + 1e-12).contains(&r));
        }
    }

    #[test]
    fn termination_case_split() {
        let mut arm = TwoLinkReacher::easy();
        arm.set_state([0.3, 0.4], [0.0, 0.0]);
        let tip = arm.fingertip();
        arm.set_goal(tip);
        assert!(arm.mintime_terminated());
        // fingertip speed 10 * V_TOL via the first joint alone
        let r = tip[0].hypot(tip[1]);
        let w = 10.0 * V_TOL / r;
        arm.set_state([0.3, 0.4], [w, 0.0]);
        let v = arm.fingertip_velocity();
        assert!((v[0].hypot(v[1]) - 10.0 * V_TOL).abs() < 1e-9);
        assert!(arm.in_goal());
        assert!(!arm.mintime_terminated());
    }

    /// Fingertip velocity agrees with a central difference of the kinematics.
    #[test]
    fn fingertip_velocity_matches_finite_difference() {
        let mut arm = TwoLinkReacher::easy();
        arm.set_state([0.7, -1.1], [0.9, -0.4]);
        let h = 1e-6;
        let th = arm.joint_angles();
        let w = arm.joint_velocities();
        let plus = forward_kinematics([th[0] + h * w[0], th[1] + h * w[1]]);
        let minus = forward_kinematics([th[0] - h * w[0], th[1] - h * w[1]]);
        let v = arm.fingertip_velocity();
        for i in 0..2 {
            assert!((v[i] - (plus[i] - minus[i]) / (2.0 * h)).abs() < 1e-8);
        }
    }

    proptest! {
        #[test]
        fn wrap_angle_range(x in -1e4f64..1e4) {
            let w = wrap_angle(x);
            prop_assert!((-PI..PI).contains(&w));
            prop_assert!(((x - w) / (2.0 * PI)).fract().abs() < 1e-6
                || (1.0 - ((x - w) / (2.0 * PI)).fract().abs()) < 1e-6);
        }
    }
}
