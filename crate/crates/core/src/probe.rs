//! Goal-hit counts of the untrained policy under a minimum-time timeout.

use std::io::Write;

use crate::env::{FormulationSpec, Task};
use crate::envs::EnvName;
use crate::error::{Error, Result};
use crate::sac::random_action;
use crate::seeding::{derive_seed, stream};

pub const PROBE_STEPS: u64 = 20_000;
pub const DEFAULT_VERDICT_THRESHOLD: f64 = 10.0;
pub const TIMEOUT_GRID: [usize; 7] = [25, 50, 100, 200, 500, 1000, 2000];

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub env: String,
    pub timeout: usize,
    pub seed: u64,
    pub total_steps: u64,
    pub hits: u64,
    pub hits_per_20k: f64,
}

impl ProbeReport {
    pub fn new(env: &str, timeout: usize, seed: u64, total_steps: u64, hits: u64) -> Self {
        Self {
            env: env.to_string(),
            timeout,
            seed,
            total_steps,
            hits,
            hits_per_20k: hits_per_20k(hits, total_steps),
        }
    }
}

pub fn hits_per_20k(hits: u64, total_steps: u64) -> f64 {
    hits as f64 * PROBE_STEPS as f64 / total_steps as f64
}

/// Step `task` for `total_steps` with `tanh(N(0, 1))` actions and count goal
/// terminations. The task is reset from `seed`'s `env` stream; actions come
/// from its `probe` stream.
pub fn count_hits(task: &mut Task, total_steps: u64, seed: u64) -> Result<u64> {
    let mut rng = stream(seed, "probe", 0);
    task.reset(Some(derive_seed(seed, "env", 0)));
    let dim = task.action_dim();
    let mut hits = 0;
    for _ in 0..total_steps {
        let outcome = task.step(&random_action(&mut rng, dim))?;
        if outcome.terminated {
            hits += 1;
            task.reset(None);
        }
    }
    Ok(hits)
}

pub fn run_probe(env: EnvName, timeout: usize, total_steps: u64, seed: u64) -> Result<ProbeReport> {
    if total_steps == 0 {
        return Err(Error::Config("probe needs at least one step".into()));
    }
    let mut task = Task::new(env.build(), FormulationSpec::min_time(timeout, 0.0))?;
    let hits = count_hits(&mut task, total_steps, seed)?;
    Ok(ProbeReport::new(
        env.as_str(),
        timeout,
        seed,
        total_steps,
        hits,
    ))
}

/// Probe seed for repeat `repeat` of the `timeout_index`-th timeout.
pub fn sweep_seed(master: u64, timeout_index: usize, repeats: usize, repeat: usize) -> u64 {
    derive_seed(
        master,
        "probe-sweep",
        (timeout_index * repeats + repeat) as u64,
    )
}

/// One report per (timeout, repeat), each with its own derived seed.
pub fn sweep_timeouts(
    env: EnvName,
    timeouts: &[usize],
    repeats: usize,
    total_steps: u64,
    master_seed: u64,
) -> Result<Vec<ProbeReport>> {
    check_grid(timeouts)?;
    let mut out = Vec::with_capacity(timeouts.len() * repeats);
    for (i, &timeout) in timeouts.iter().enumerate() {
        for r in 0..repeats {
            let seed = sweep_seed(master_seed, i, repeats, r);
            out.push(run_probe(env, timeout, total_steps, seed)?);
        }
    }
    Ok(out)
}

/// Like [`sweep_timeouts`] but with the probe seeds given explicitly; the
/// same seeds are used for every timeout.
pub fn sweep_with_seeds(
    env: EnvName,
    timeouts: &[usize],
    seeds: &[u64],
    total_steps: u64,
) -> Result<Vec<ProbeReport>> {
    check_grid(timeouts)?;
    let mut out = Vec::with_capacity(timeouts.len() * seeds.len());
    for &timeout in timeouts {
        for &seed in seeds {
            out.push(run_probe(env, timeout, total_steps, seed)?);
        }
    }
    Ok(out)
}

fn check_grid(timeouts: &[usize]) -> Result<()> {
    if timeouts.is_empty() || timeouts.contains(&0) {
        return Err(Error::Config(
            "timeouts must be a non-empty list of positive values".into(),
        ));
    }
    Ok(())
}

/// Mean hits per timeout, in first-appearance order.
pub fn mean_hits_by_timeout(reports: &[ProbeReport]) -> Vec<(usize, f64)> {
    let mut order: Vec<usize> = Vec::new();
    for r in reports {
        if !order.contains(&r.timeout) {
            order.push(r.timeout);
        }
    }
    order
        .into_iter()
        .map(|t| {
            let hits: Vec<f64> = reports
                .iter()
                .filter(|r| r.timeout == t)
                .map(|r| r.hits as f64)
                .collect();
            (t, hits.iter().sum::<f64>() / hits.len() as f64)
        })
        .collect()
}

pub fn verdict_for_rate(hits_per_20k: f64, threshold: f64) -> bool {
    hits_per_20k >= threshold
}

/// Learnable iff at least [`DEFAULT_VERDICT_THRESHOLD`] hits per 20K steps.
pub fn learnability_verdict(report: &ProbeReport) -> bool {
    verdict_for_rate(report.hits_per_20k, DEFAULT_VERDICT_THRESHOLD)
}

pub const PROBE_HEADER: [&str; 6] = [
    "env",
    "timeout",
    "seed",
    "total_steps",
    "hits",
    "hits_per_20k",
];

pub fn write_probe_csv(reports: &[ProbeReport], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PROBE_HEADER)?;
    for r in reports {
        w.write_record([
            r.env.clone(),
            r.timeout.to_string(),
            r.seed.to_string(),
            r.total_steps.to_string(),
            r.hits.to_string(),
            r.hits_per_20k.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
