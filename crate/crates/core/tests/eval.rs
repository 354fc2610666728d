use goalreach::env::{FormulationKind, FormulationSpec, Task};
use goalreach::envs::PointReacher;
use goalreach::eval::{
    cross_evaluate, cross_evaluate_tasks, evaluate_instances, evaluate_policy, FnPolicy,
    RandomPolicy,
};
use goalreach::{Dynamics, EnvName, Error};

fn parked(pos: [f64; 2], goal: [f64; 2]) -> Box<dyn Dynamics> {
    let mut d = PointReacher::easy();
    d.set_goal(goal);
    d.set_state(pos, [0.0, 0.0]);
    Box::new(d)
}

fn idle() -> FnPolicy<impl FnMut(&[f64]) -> Vec<f64>> {
    FnPolicy::new(2, |_: &[f64]| vec![0.0, 0.0])
}

fn homing(obs: &[f64]) -> Vec<f64> {
    (0..2)
        .map(|j| (4.0 * obs[4 + j] - 2.0 * obs[2 + j]).clamp(-1.0, 1.0))
        .collect()
}

#[test]
fn staying_on_the_goal_earns_the_full_guiding_return() {
    let stats = evaluate_instances(
        &mut idle(),
        vec![parked([0.3, -0.2], [0.3, -0.2]); 4],
        FormulationKind::Guiding,
        1000,
    )
    .unwrap();
    for e in &stats.episodes {
        assert_eq!(e.ret, 1000.0);
        assert_eq!(e.steps_to_goal, 0);
        assert_eq!(e.steps_on_goal, 1000);
    }
    assert_eq!(stats.reach_rate(), 1.0);
}

#[test]
fn parked_outside_pays_the_distance_every_step() {
    let stats = evaluate_instances(
        &mut idle(),
        vec![parked([-0.6, 0.0], [0.0, 0.8])],
        FormulationKind::Guiding,
        200,
    )
    .unwrap();
    // 3-4-5 triangle: distance exactly 1.
    assert!((stats.episodes[0].ret + 200.0).abs() < 1e-9);
}

#[test]
fn never_touching_the_goal_earns_no_contact_reward() {
    let stats = evaluate_instances(
        &mut idle(),
        vec![parked([-0.8, -0.8], [0.8, 0.8]); 3],
        FormulationKind::Contact,
        1000,
    )
    .unwrap();
    for e in &stats.episodes {
        assert_eq!(e.ret, 0.0);
        assert_eq!(e.steps_to_goal, 1000);
        assert_eq!(e.steps_on_goal, 0);
    }
    assert_eq!(stats.reach_rate(), 0.0);
}

#[test]
fn min_time_return_is_minus_episode_length() {
    let mut p = FnPolicy::new(2, homing);
    let stats = cross_evaluate(
        &mut p,
        EnvName::PointReacherEasy,
        FormulationSpec::min_time(1000, 0.0),
        30,
        5000,
        4,
    )
    .unwrap();
    assert_eq!(stats.completion_rate(), 1.0);
    let mut q = FnPolicy::new(2, homing);
    let fixed = evaluate_policy(
        &mut q,
        EnvName::PointReacherEasy,
        FormulationKind::MinTime,
        5,
        50,
        0,
    )
    .unwrap();
    for e in &fixed.episodes {
        assert_eq!(e.ret, -50.0);
    }
    for e in &stats.episodes {
        assert!(e.ret <= -1.0);
        assert_eq!(e.ret.fract(), 0.0);
    }
}

#[test]
fn censored_min_time_episodes_count_timeouts() {
    let spec = FormulationSpec::min_time(10, 5.0);
    let tasks: Vec<Task> = (0..4)
        .map(|i| {
            let mut t = Task::new(EnvName::PointReacherHard.build(), spec).unwrap();
            t.reset(Some(100 + i));
            t
        })
        .collect();
    let stats = cross_evaluate_tasks(&mut idle(), tasks, 100).unwrap();
    for e in &stats.episodes {
        assert!(!e.completed);
        assert_eq!(e.ret, -100.0 - 5.0 * 10.0);
    }
}

#[test]
fn mixed_formulations_are_rejected() {
    let mut a = Task::new(
        EnvName::PointReacherEasy.build(),
        FormulationSpec::guiding(10),
    )
    .unwrap();
    let mut b = Task::new(
        EnvName::PointReacherEasy.build(),
        FormulationSpec::contact(10),
    )
    .unwrap();
    a.reset(Some(0));
    b.reset(Some(0));
    assert!(cross_evaluate_tasks(&mut idle(), vec![a, b], 10).is_err());
}

#[test]
fn guiding_cross_evaluation_runs_exactly_t_steps() {
    let mut p = RandomPolicy::new(2, 3);
    let stats = cross_evaluate(
        &mut p,
        EnvName::TwoLinkEasy,
        FormulationSpec::guiding(1000),
        5,
        10,
        0,
    )
    .unwrap();
    assert_eq!(stats.horizon, 1000);
    assert!(stats.episodes.iter().all(|e| e.steps_to_goal <= 1000));
}

#[test]
fn dimension_mismatch_is_an_error() {
    let mut p = FnPolicy::new(1, |_: &[f64]| vec![0.0]);
    let err = evaluate_policy(
        &mut p,
        EnvName::PointReacherEasy,
        FormulationKind::Guiding,
        2,
        5,
        0,
    )
    .unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch(_)));
    let mut p = RandomPolicy::new(2, 0);
    assert!(matches!(
        evaluate_policy(
            &mut p,
            EnvName::MountainCar,
            FormulationKind::Guiding,
            2,
            5,
            0
        ),
        Err(Error::DimensionMismatch(_))
    ));
}
