//! Python bindings: tasks, probing, training and evaluation.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::PathBuf;

use goalreach::env::{FormulationKind, FormulationSpec};
use goalreach::eval::{cross_evaluate, evaluate_policy, load_actor as load_ckpt_actor, EvalStats};
use goalreach::probe::{sweep_timeouts as sweep, verdict_for_rate, DEFAULT_VERDICT_THRESHOLD};
use goalreach::sac::DeterministicActor;
use goalreach::train::{train_to_dir, Trainer as CoreTrainer};
use goalreach::{EnvName, ProbeReport, RunConfig, Segment};
use ndarray::Array2;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn env_name(s: &str) -> PyResult<EnvName> {
    s.parse().map_err(err)
}

fn kind(s: &str) -> PyResult<FormulationKind> {
    s.parse().map_err(err)
}

fn spec(
    formulation: &str,
    timeout: usize,
    reset_penalty: f64,
    episode_length: usize,
) -> PyResult<FormulationSpec> {
    let spec = FormulationSpec {
        kind: kind(formulation)?,
        timeout,
        reset_penalty,
        episode_length,
    };
    spec.validate().map_err(err)?;
    Ok(spec)
}

fn config_from(settings: Option<HashMap<String, String>>) -> PyResult<RunConfig> {
    let mut config = RunConfig::default();
    for (k, v) in settings.unwrap_or_default() {
        config.set(&k, &v).map_err(err)?;
    }
    config.validate().map_err(err)?;
    Ok(config)
}

fn probe_dict<'py>(py: Python<'py>, r: &ProbeReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("env", &r.env)?;
    d.set_item("timeout", r.timeout)?;
    d.set_item("seed", r.seed)?;
    d.set_item("total_steps", r.total_steps)?;
    d.set_item("hits", r.hits)?;
    d.set_item("hits_per_20k", r.hits_per_20k)?;
    Ok(d)
}

fn stats_dict<'py>(py: Python<'py>, s: &EvalStats) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("horizon", s.horizon)?;
    d.set_item("episodes", s.episodes.len())?;
    d.set_item("steps_to_goal", s.steps_to_goal())?;
    d.set_item("steps_on_goal", s.steps_on_goal())?;
    d.set_item("return", s.returns())?;
    d.set_item("reach_rate", s.reach_rate())?;
    d.set_item("completion_rate", s.completion_rate())?;
    Ok(d)
}

/// One environment under one formulation, gym style.
#[pyclass(unsendable)]
struct Task {
    inner: goalreach::Task,
}

#[pymethods]
impl Task {
    #[new]
    #[pyo3(signature = (env, formulation="min_time", timeout=100, reset_penalty=0.0, episode_length=1000))]
    fn new(
        env: &str,
        formulation: &str,
        timeout: usize,
        reset_penalty: f64,
        episode_length: usize,
    ) -> PyResult<Self> {
        let spec = spec(formulation, timeout, reset_penalty, episode_length)?;
        let inner = goalreach::Task::new(env_name(env)?.build(), spec).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn obs_dim(&self) -> usize {
        self.inner.obs_dim()
    }

    #[getter]
    fn action_dim(&self) -> usize {
        self.inner.action_dim()
    }

    #[getter]
    fn obs_layout(&self) -> Vec<&'static str> {
        self.inner.dynamics().obs_layout().to_vec()
    }

    #[getter]
    fn in_goal(&self) -> bool {
        self.inner.dynamics().in_goal()
    }

    #[pyo3(signature = (seed=None))]
    fn reset(&mut self, seed: Option<u64>) -> Vec<f64> {
        self.inner.reset(seed).values
    }

    /// Returns `(next_obs, reward, terminated, truncated)`.
    fn step(&mut self, action: Vec<f64>) -> PyResult<(Vec<f64>, f64, bool, bool)> {
        let o = self.inner.step(&action).map_err(err)?;
        Ok((o.next_obs.values, o.reward, o.terminated, o.truncated))
    }
}

/// Deterministic policy `tanh(mean)` loaded from a checkpoint or a trainer.
#[pyclass(unsendable)]
struct Actor {
    inner: DeterministicActor<f64>,
}

#[pymethods]
impl Actor {
    #[getter]
    fn obs_dim(&self) -> usize {
        self.inner.obs_dim()
    }

    #[getter]
    fn action_dim(&self) -> usize {
        self.inner.action_dim()
    }

    fn act(&self, obs: Vec<f64>) -> PyResult<Vec<f64>> {
        if obs.len() != self.inner.obs_dim() {
            return Err(err(format!(
                "expected {} observations, got {}",
                self.inner.obs_dim(),
                obs.len()
            )));
        }
        let x = Array2::from_shape_vec((1, obs.len()), obs).map_err(err)?;
        Ok(self.inner.actions(x.view()).row(0).to_vec())
    }

    /// Fixed-horizon goal metrics.
    #[pyo3(signature = (env, formulation="guiding", episodes=100, horizon=5000, seed=0))]
    fn evaluate<'py>(
        &mut self,
        py: Python<'py>,
        env: &str,
        formulation: &str,
        episodes: usize,
        horizon: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let s = evaluate_policy(
            &mut self.inner,
            env_name(env)?,
            kind(formulation)?,
            episodes,
            horizon,
            seed,
        )
        .map_err(err)?;
        stats_dict(py, &s)
    }

    /// Returns under a formulation's own reward and termination rules.
    #[pyo3(signature = (env, formulation, timeout=100, reset_penalty=0.0, episode_length=1000, episodes=100, max_steps=5000, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn cross_evaluate<'py>(
        &mut self,
        py: Python<'py>,
        env: &str,
        formulation: &str,
        timeout: usize,
        reset_penalty: f64,
        episode_length: usize,
        episodes: usize,
        max_steps: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let spec = spec(formulation, timeout, reset_penalty, episode_length)?;
        let s = cross_evaluate(
            &mut self.inner,
            env_name(env)?,
            spec,
            episodes,
            max_steps,
            seed,
        )
        .map_err(err)?;
        stats_dict(py, &s)
    }
}

/// In-process SAC training loop.
#[pyclass(unsendable)]
struct Trainer {
    inner: CoreTrainer<f32>,
}

#[pymethods]
impl Trainer {
    /// `settings` maps config keys (as in config.txt) to values.
    #[new]
    #[pyo3(signature = (settings=None))]
    fn new(settings: Option<HashMap<String, String>>) -> PyResult<Self> {
        let config = config_from(settings)?;
        Ok(Self {
            inner: CoreTrainer::new(&config).map_err(err)?,
        })
    }

    #[getter]
    fn env_steps(&self) -> u64 {
        self.inner.env_steps()
    }

    #[getter]
    fn updates(&self) -> u64 {
        self.inner.agent().updates()
    }

    #[getter]
    fn hits(&self) -> u64 {
        self.inner.hits()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.agent().alpha()
    }

    fn run_for(&mut self, steps: u64) -> PyResult<()> {
        self.inner.run_for(steps).map_err(err)
    }

    /// Rows `(env_step, return, length, hits_so_far, complete)`.
    fn curve(&self) -> Vec<(u64, f64, f64, u64, bool)> {
        self.inner
            .curve_with_pending()
            .iter()
            .map(|r| {
                (
                    r.env_step_at_episode_end,
                    r.adjusted_return,
                    r.adjusted_length,
                    r.hits_so_far,
                    r.complete,
                )
            })
            .collect()
    }

    fn actor(&self) -> Actor {
        Actor {
            inner: DeterministicActor::new(self.inner.agent().actor().cast()),
        }
    }

    fn save_checkpoint(&self, path: PathBuf) -> PyResult<()> {
        self.inner.checkpoint().save(&path).map_err(err)
    }
}

#[pyfunction]
fn env_names() -> Vec<&'static str> {
    EnvName::ALL.iter().map(|e| e.as_str()).collect()
}

/// `segments` is a list of `(steps, timed_out)`; returns `(return, length)`.
#[pyfunction]
fn accumulate_episode(
    segments: Vec<(usize, bool)>,
    timeout: usize,
    reset_penalty: f64,
) -> PyResult<(f64, f64)> {
    let segs: Vec<Segment> = segments
        .into_iter()
        .map(|(s, t)| Segment::new(s, t))
        .collect();
    let r = goalreach::accumulate_episode(&segs, timeout, reset_penalty).map_err(err)?;
    Ok((r.adjusted_return, r.adjusted_length))
}

#[pyfunction]
#[pyo3(signature = (env, timeout, total_steps=20_000, seed=0))]
fn run_probe<'py>(
    py: Python<'py>,
    env: &str,
    timeout: usize,
    total_steps: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = goalreach::run_probe(env_name(env)?, timeout, total_steps, seed).map_err(err)?;
    probe_dict(py, &r)
}

#[pyfunction]
#[pyo3(signature = (env, timeouts, repeats=5, total_steps=20_000, seed=0))]
fn sweep_timeouts<'py>(
    py: Python<'py>,
    env: &str,
    timeouts: Vec<usize>,
    repeats: usize,
    total_steps: u64,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let reports = sweep(env_name(env)?, &timeouts, repeats, total_steps, seed).map_err(err)?;
    reports.iter().map(|r| probe_dict(py, r)).collect()
}

#[pyfunction]
#[pyo3(signature = (hits_per_20k, threshold=DEFAULT_VERDICT_THRESHOLD))]
fn learnability_verdict(hits_per_20k: f64, threshold: f64) -> bool {
    verdict_for_rate(hits_per_20k, threshold)
}

/// Train to `settings["out"]`; returns a summary dict.
#[pyfunction]
#[pyo3(signature = (settings=None, force=false))]
fn train<'py>(
    py: Python<'py>,
    settings: Option<HashMap<String, String>>,
    force: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let config = config_from(settings)?;
    let s = train_to_dir(&config, force).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("env_steps", s.env_steps)?;
    d.set_item("updates", s.updates)?;
    d.set_item("episodes", s.episodes)?;
    d.set_item("hits", s.hits)?;
    d.set_item("curve", s.curve_path)?;
    d.set_item("checkpoints", s.checkpoints)?;
    Ok(d)
}

#[pyfunction]
fn load_actor(path: PathBuf) -> PyResult<Actor> {
    let (inner, _) = load_ckpt_actor(&path).map_err(err)?;
    Ok(Actor { inner })
}

#[pymodule]
#[pyo3(name = "goalreach")]
fn goalreach_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Task>()?;
    m.add_class::<Actor>()?;
    m.add_class::<Trainer>()?;
    m.add_function(wrap_pyfunction!(env_names, m)?)?;
    m.add_function(wrap_pyfunction!(accumulate_episode, m)?)?;
    m.add_function(wrap_pyfunction!(run_probe, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_timeouts, m)?)?;
    m.add_function(wrap_pyfunction!(learnability_verdict, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(load_actor, m)?)?;
    Ok(())
}
