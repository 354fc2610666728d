//! Policy evaluation: steps-to-goal / steps-on-goal over a fixed horizon and
//! returns under any formulation.

use std::io::Write;
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::env::{
    contact_reward, Dynamics, EpisodeTracker, FormulationKind, FormulationSpec, Observation, Task,
};
use crate::envs::EnvName;
use crate::error::{Error, Result};
use crate::nn::Scalar;
use crate::sac::{random_action, Checkpoint, DeterministicActor};
use crate::seeding::{derive_seed, stream, StreamRng};

pub const DEFAULT_EPISODES: usize = 500;
pub const DEFAULT_HORIZON: usize = 5000;

/// Maps a batch of observations (one per row) to actions in `[-1, 1]`.
pub trait Policy {
    fn obs_dim(&self) -> Option<usize>;
    fn action_dim(&self) -> usize;
    fn act_batch(&mut self, obs: ArrayView2<f64>) -> Array2<f64>;
}

impl<F: Scalar> Policy for DeterministicActor<F> {
    fn obs_dim(&self) -> Option<usize> {
        Some(DeterministicActor::obs_dim(self))
    }

    fn action_dim(&self) -> usize {
        DeterministicActor::action_dim(self)
    }

    fn act_batch(&mut self, obs: ArrayView2<f64>) -> Array2<f64> {
        self.actions(obs)
    }
}

/// `tanh(N(0, 1))` actions, the same distribution the probe uses.
pub struct RandomPolicy {
    rng: StreamRng,
    action_dim: usize,
}

impl RandomPolicy {
    pub fn new(action_dim: usize, seed: u64) -> Self {
        Self {
            rng: stream(seed, "random-policy", 0),
            action_dim,
        }
    }
}

impl Policy for RandomPolicy {
    fn obs_dim(&self) -> Option<usize> {
        None
    }

    fn action_dim(&self) -> usize {
        self.action_dim
    }

    fn act_batch(&mut self, obs: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((obs.nrows(), self.action_dim));
        for mut row in out.rows_mut() {
            let a = random_action(&mut self.rng, self.action_dim);
            row.iter_mut().zip(a).for_each(|(x, v)| *x = v);
        }
        out
    }
}

/// A policy given by a function of a single observation.
pub struct FnPolicy<P> {
    f: P,
    action_dim: usize,
}

impl<P: FnMut(&[f64]) -> Vec<f64>> FnPolicy<P> {
    pub fn new(action_dim: usize, f: P) -> Self {
        Self { f, action_dim }
    }
}

impl<P: FnMut(&[f64]) -> Vec<f64>> Policy for FnPolicy<P> {
    fn obs_dim(&self) -> Option<usize> {
        None
    }

    fn action_dim(&self) -> usize {
        self.action_dim
    }

    fn act_batch(&mut self, obs: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((obs.nrows(), self.action_dim));
        for (r, row) in obs.rows().into_iter().enumerate() {
            let a = (self.f)(row.as_slice().expect("rows are contiguous"));
            for (j, v) in a.into_iter().enumerate() {
                out[[r, j]] = v;
            }
        }
        out
    }
}

/// Index of the first in-goal state (or `flags.len()` if none) and the
/// number of in-goal states.
pub fn goal_metrics(flags: &[bool]) -> (usize, usize) {
    let first = flags.iter().position(|&f| f).unwrap_or(flags.len());
    (first, flags.iter().filter(|&&f| f).count())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeMetrics {
    pub steps_to_goal: usize,
    pub steps_on_goal: usize,
    pub ret: f64,
    /// For minimum-time returns: whether the goal termination happened.
    pub completed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalStats {
    pub horizon: usize,
    pub episodes: Vec<EpisodeMetrics>,
}

/// Mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl EvalStats {
    fn column(&self, f: impl Fn(&EpisodeMetrics) -> f64) -> Vec<f64> {
        self.episodes.iter().map(f).collect()
    }

    pub fn steps_to_goal(&self) -> (f64, f64) {
        mean_se(&self.column(|e| e.steps_to_goal as f64))
    }

    pub fn steps_on_goal(&self) -> (f64, f64) {
        mean_se(&self.column(|e| e.steps_on_goal as f64))
    }

    pub fn returns(&self) -> (f64, f64) {
        mean_se(&self.column(|e| e.ret))
    }

    /// Fraction of episodes that entered the goal at least once.
    pub fn reach_rate(&self) -> f64 {
        self.column(|e| f64::from(u8::from(e.steps_to_goal < self.horizon)))
            .iter()
            .sum::<f64>()
            / self.episodes.len() as f64
    }

    /// Fraction of episodes ending in a goal termination.
    pub fn completion_rate(&self) -> f64 {
        self.episodes.iter().filter(|e| e.completed).count() as f64 / self.episodes.len() as f64
    }
}

fn check_dims(policy: &dyn Policy, dynamics: &dyn Dynamics) -> Result<()> {
    if let Some(d) = policy.obs_dim() {
        if d != dynamics.obs_dim() {
            return Err(Error::DimensionMismatch(format!(
                "policy takes {d} observations, {} provides {}",
                dynamics.name(),
                dynamics.obs_dim()
            )));
        }
    }
    if policy.action_dim() != dynamics.action_dim() {
        return Err(Error::DimensionMismatch(format!(
            "policy emits {} actions, {} expects {}",
            policy.action_dim(),
            dynamics.name(),
            dynamics.action_dim()
        )));
    }
    Ok(())
}

fn stack(rows: &[Observation]) -> Array2<f64> {
    let dim = rows.first().map_or(0, Observation::len);
    Array2::from_shape_fn((rows.len(), dim), |(r, c)| rows[r].values[c])
}

fn clamp_row(actions: &Array2<f64>, r: usize) -> Vec<f64> {
    actions.row(r).iter().map(|a| a.clamp(-1.0, 1.0)).collect()
}

/// Run `episodes` fixed-horizon episodes without goal termination, all in
/// lockstep. Episode `i` starts from the `eval` stream of `seed` at index `i`.
///
/// `steps_to_goal` / `steps_on_goal` are measured on the states visited at
/// steps `0..horizon` (the initial state included). `ret` sums the rewards
/// of `reward_kind` over the horizon (minimum-time: `-horizon`).
pub fn evaluate_policy(
    policy: &mut dyn Policy,
    env: EnvName,
    reward_kind: FormulationKind,
    episodes: usize,
    horizon: usize,
    seed: u64,
) -> Result<EvalStats> {
    let instances = (0..episodes)
        .map(|i| {
            let mut d = env.build();
            let mut rng = stream(seed, "eval", i as u64);
            d.sample_goal(&mut rng);
            d.sample_start(&mut rng);
            d
        })
        .collect();
    evaluate_instances(policy, instances, reward_kind, horizon)
}

/// [`evaluate_policy`] on instances whose goal and start are already set.
pub fn evaluate_instances(
    policy: &mut dyn Policy,
    mut instances: Vec<Box<dyn Dynamics>>,
    reward_kind: FormulationKind,
    horizon: usize,
) -> Result<EvalStats> {
    if let Some(first) = instances.first() {
        check_dims(policy, first.as_ref())?;
    }
    let n = instances.len();
    let mut flags = vec![Vec::with_capacity(horizon); n];
    let mut returns = vec![0.0; n];
    for _ in 0..horizon {
        let obs: Vec<Observation> = instances.iter().map(|d| d.observe()).collect();
        let actions = policy.act_batch(stack(&obs).view());
        for (i, d) in instances.iter_mut().enumerate() {
            flags[i].push(d.in_goal());
            d.advance(&clamp_row(&actions, i));
            returns[i] += match reward_kind {
                FormulationKind::Guiding => d.guiding_reward(),
                FormulationKind::Contact => contact_reward(d.in_goal()),
                FormulationKind::MinTime => -1.0,
            };
        }
    }
    let episodes = flags
        .iter()
        .zip(returns)
        .map(|(f, ret)| {
            let (steps_to_goal, steps_on_goal) = goal_metrics(f);
            EpisodeMetrics {
                steps_to_goal,
                steps_on_goal,
                ret,
                completed: false,
            }
        })
        .collect();
    Ok(EvalStats { horizon, episodes })
}

/// Run the policy under `spec`'s own reward and termination rules.
///
/// Guiding/contact episodes last `spec.episode_length` steps. Minimum-time
/// episodes run until goal termination, with timeouts and reset penalties
/// accounted as in training; an episode still running after `max_steps`
/// steps is cut off and scored with its accumulated (censored) return.
/// Goal metrics are measured on the states visited before each step.
pub fn cross_evaluate(
    policy: &mut dyn Policy,
    env: EnvName,
    spec: FormulationSpec,
    episodes: usize,
    max_steps: usize,
    seed: u64,
) -> Result<EvalStats> {
    spec.validate()?;
    let mut tasks = Vec::with_capacity(episodes);
    for i in 0..episodes {
        let mut t = Task::new(env.build(), spec)?;
        t.reset(Some(derive_seed(seed, "eval", i as u64)));
        tasks.push(t);
    }
    cross_evaluate_tasks(policy, tasks, max_steps)
}

/// [`cross_evaluate`] on tasks that have already been reset. All tasks must
/// share one formulation spec.
pub fn cross_evaluate_tasks(
    policy: &mut dyn Policy,
    mut tasks: Vec<Task>,
    max_steps: usize,
) -> Result<EvalStats> {
    let Some(first) = tasks.first() else {
        return Ok(EvalStats {
            horizon: max_steps,
            episodes: Vec::new(),
        });
    };
    check_dims(policy, first.dynamics())?;
    let spec = *first.spec();
    if tasks.iter().any(|t| *t.spec() != spec) {
        return Err(Error::Config("tasks must share one formulation".into()));
    }
    let n = tasks.len();
    let limit = match spec.kind {
        FormulationKind::MinTime => max_steps,
        _ => spec.episode_length,
    };
    if limit == 0 {
        return Err(Error::Config("max_steps must be positive".into()));
    }
    let mut trackers: Vec<EpisodeTracker> = (0..n).map(|_| EpisodeTracker::new(spec)).collect();
    let mut flags: Vec<Vec<bool>> = vec![Vec::new(); n];
    let mut results: Vec<Option<(f64, bool)>> = vec![None; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut steps = 0;
    while !active.is_empty() && steps < limit {
        let obs: Vec<Observation> = active.iter().map(|&i| tasks[i].observe()).collect();
        let actions = policy.act_batch(stack(&obs).view());
        for (r, &i) in active.iter().enumerate() {
            flags[i].push(tasks[i].dynamics().in_goal());
            let outcome = tasks[i].step(&clamp_row(&actions, r))?;
            let in_goal = tasks[i].dynamics().in_goal();
            if let Some(record) = trackers[i].record(&outcome, in_goal) {
                results[i] = Some((record.adjusted_return, outcome.terminated));
            }
        }
        active.retain(|&i| results[i].is_none());
        steps += 1;
    }
    let episodes = (0..n)
        .map(|i| {
            let (ret, completed) = results[i].unwrap_or_else(|| {
                let pending = trackers[i].pending().expect("episode has steps");
                (pending.adjusted_return, false)
            });
            let (steps_to_goal, steps_on_goal) = goal_metrics(&flags[i]);
            EpisodeMetrics {
                steps_to_goal,
                steps_on_goal,
                ret,
                completed,
            }
        })
        .collect();
    Ok(EvalStats {
        horizon: limit,
        episodes,
    })
}

/// Load the actor of a checkpoint in `f64`.
pub fn load_actor(path: &Path) -> Result<(DeterministicActor<f64>, Checkpoint)> {
    if !path.exists() {
        return Err(Error::Checkpoint(format!(
            "{} does not exist",
            path.display()
        )));
    }
    let ckpt = Checkpoint::load(path)?;
    let actor = DeterministicActor::new(ckpt.mlp::<f64>("actor")?);
    let action_dim: usize = ckpt.header_parse("action_dim")?;
    if actor.action_dim() != action_dim {
        return Err(Error::Checkpoint(
            "actor output does not match action_dim".into(),
        ));
    }
    Ok((actor, ckpt))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub run_id: String,
    pub env: String,
    pub formulation_trained: String,
    pub formulation_evaluated: String,
    pub episode: usize,
    pub steps_to_goal: usize,
    pub steps_on_goal: usize,
    pub ret: f64,
}

pub fn eval_rows(
    run_id: &str,
    env: &str,
    trained: &str,
    evaluated: &str,
    stats: &EvalStats,
) -> Vec<EvalRow> {
    stats
        .episodes
        .iter()
        .enumerate()
        .map(|(episode, e)| EvalRow {
            run_id: run_id.to_string(),
            env: env.to_string(),
            formulation_trained: trained.to_string(),
            formulation_evaluated: evaluated.to_string(),
            episode,
            steps_to_goal: e.steps_to_goal,
            steps_on_goal: e.steps_on_goal,
            ret: e.ret,
        })
        .collect()
}

pub const EVAL_HEADER: [&str; 8] = [
    "run_id",
    "env",
    "formulation_trained",
    "formulation_evaluated",
    "episode",
    "steps_to_goal",
    "steps_on_goal",
    "return",
];

pub fn write_eval_csv(rows: &[EvalRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EVAL_HEADER)?;
    for r in rows {
        w.write_record([
            r.run_id.clone(),
            r.env.clone(),
            r.formulation_trained.clone(),
            r.formulation_evaluated.clone(),
            r.episode.to_string(),
            r.steps_to_goal.to_string(),
            r.steps_on_goal.to_string(),
            r.ret.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
