//! Training loop and learning-curve output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::env::{EpisodeRecord, EpisodeTracker, Observation, Task};
use crate::error::{Error, Result};
use crate::nn::Scalar;
use crate::sac::{random_action, Checkpoint, ReplayBuffer, SacAgent, Transition};
use crate::seeding::{derive_seed, stream, StreamRng};

/// One learning-curve row, written when an episode ends.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub env_step_at_episode_end: u64,
    pub adjusted_return: f64,
    pub adjusted_length: f64,
    pub hits_so_far: u64,
    /// False only for the trailing, unfinished episode of a run.
    pub complete: bool,
}

impl CurveRow {
    pub fn new(env_step: u64, record: &EpisodeRecord, hits_so_far: u64) -> Self {
        Self {
            env_step_at_episode_end: env_step,
            adjusted_return: record.adjusted_return,
            adjusted_length: record.adjusted_length,
            hits_so_far,
            complete: record.complete,
        }
    }
}

pub const CURVE_HEADER: [&str; 5] = [
    "env_step_at_episode_end",
    "adjusted_return",
    "adjusted_length",
    "hits_so_far",
    "complete",
];

pub fn write_learning_curve(rows: &[CurveRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVE_HEADER)?;
    for r in rows {
        w.write_record([
            r.env_step_at_episode_end.to_string(),
            r.adjusted_return.to_string(),
            r.adjusted_length.to_string(),
            r.hits_so_far.to_string(),
            r.complete.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Whether the update rule fires after environment step `step` (1-based):
/// past warm-up, every `update_every` steps.
pub fn is_update_step(step: u64, warmup: u64, update_every: u64) -> bool {
    step > warmup && (step - warmup).is_multiple_of(update_every)
}

/// Sequential SAC training on one task: act, store, maybe update.
pub struct Trainer<F: Scalar> {
    config: RunConfig,
    task: Task,
    agent: SacAgent<F>,
    buffer: ReplayBuffer,
    tracker: EpisodeTracker,
    obs: Observation,
    explore_rng: StreamRng,
    env_steps: u64,
    update_rounds: u64,
    hits: u64,
    curve: Vec<CurveRow>,
}

impl<F: Scalar> Trainer<F> {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let spec = config.formulation_spec();
        let mut task = Task::new(config.env.build(), spec)?;
        let obs = task.reset(Some(derive_seed(config.seed, "env", 0)));
        let agent = SacAgent::new(
            task.obs_dim(),
            task.action_dim(),
            config.agent.clone(),
            config.seed,
        )?;
        Ok(Self {
            buffer: ReplayBuffer::new(config.agent.buffer_capacity),
            tracker: EpisodeTracker::new(spec),
            explore_rng: stream(config.seed, "exploration", 0),
            config: config.clone(),
            task,
            agent,
            obs,
            env_steps: 0,
            update_rounds: 0,
            hits: 0,
            curve: Vec::new(),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn agent(&self) -> &SacAgent<F> {
        &self.agent
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    /// Number of times the update rule fired (each runs `epochs_per_update` updates).
    pub fn update_rounds(&self) -> u64 {
        self.update_rounds
    }

    /// Completed episodes that reached the goal.
    pub fn hits(&self) -> u64 {
        self.hits
    }

    /// Rows for completed episodes.
    pub fn curve(&self) -> &[CurveRow] {
        &self.curve
    }

    /// Completed rows followed by the in-progress episode, if any.
    pub fn curve_with_pending(&self) -> Vec<CurveRow> {
        let mut rows = self.curve.clone();
        if let Some(p) = self.tracker.pending() {
            rows.push(CurveRow::new(self.env_steps, &p, self.hits));
        }
        rows
    }

    /// One environment step, followed by the scheduled updates.
    pub fn step(&mut self) -> Result<()> {
        let warmup = self.config.agent.warmup_steps as u64;
        let action = if self.env_steps < warmup {
            random_action(&mut self.explore_rng, self.task.action_dim())
        } else {
            self.agent.act(self.obs.as_slice(), false)
        };
        let outcome = self.task.step(&action)?;
        self.env_steps += 1;
        let in_goal = self.task.dynamics().in_goal();
        self.buffer.push(Transition {
            obs: self.obs.values.clone(),
            action,
            reward: outcome.reward,
            next_obs: outcome.next_obs.values.clone(),
            continuation: if outcome.terminated { 0.0 } else { 1.0 },
        });
        if let Some(record) = self.tracker.record(&outcome, in_goal) {
            self.hits += u64::from(record.reached_goal);
            self.curve
                .push(CurveRow::new(self.env_steps, &record, self.hits));
        }
        self.obs = if self.task.is_finished() {
            self.task.reset(None)
        } else {
            outcome.next_obs
        };

        if is_update_step(
            self.env_steps,
            warmup,
            self.config.agent.update_every as u64,
        ) {
            self.update_rounds += 1;
            for _ in 0..self.config.agent.epochs_per_update {
                self.agent.update(&self.buffer)?;
            }
        }
        Ok(())
    }

    pub fn run_for(&mut self, steps: u64) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }

    /// Agent parameters plus the run's config echo, step count and seed.
    pub fn checkpoint(&self) -> Checkpoint {
        let mut meta: Vec<(String, String)> = self
            .config
            .entries()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        meta.push(("step".into(), self.env_steps.to_string()));
        meta.push(("dtype".into(), (std::mem::size_of::<F>() * 8).to_string()));
        self.agent.to_checkpoint(&meta)
    }
}

/// Files produced by [`train_to_dir`].
#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub config_path: PathBuf,
    pub curve_path: PathBuf,
    pub checkpoints: Vec<PathBuf>,
    pub env_steps: u64,
    pub updates: u64,
    pub episodes: usize,
    pub hits: u64,
}

pub const CONFIG_FILE: &str = "config.txt";
pub const CURVE_FILE: &str = "learning_curve.csv";
pub const CHECKPOINT_DIR: &str = "checkpoints";

pub fn checkpoint_path(out: &Path, step: u64) -> PathBuf {
    out.join(CHECKPOINT_DIR)
        .join(format!("step_{step:08}.ckpt"))
}

/// Checkpoint steps for a run: every `every` steps, plus the final step.
pub fn checkpoint_steps(total: u64, every: u64) -> Vec<u64> {
    let mut steps: Vec<u64> = (1..=total / every).map(|i| i * every).collect();
    if total > 0 && !total.is_multiple_of(every) {
        steps.push(total);
    }
    steps
}

/// Refuse to clobber an earlier run unless `force`; with `force`, stale
/// checkpoints are removed.
pub fn prepare_out_dir(out: &Path, force: bool) -> Result<()> {
    let existing = [CONFIG_FILE, CURVE_FILE, CHECKPOINT_DIR]
        .iter()
        .map(|f| out.join(f))
        .find(|p| p.exists());
    if let Some(p) = existing {
        if !force {
            return Err(Error::WouldOverwrite(p));
        }
        let ckpts = out.join(CHECKPOINT_DIR);
        if ckpts.exists() {
            fs::remove_dir_all(&ckpts)?;
        }
    }
    fs::create_dir_all(out.join(CHECKPOINT_DIR))?;
    Ok(())
}

/// Full training run writing the config echo, checkpoints and learning curve
/// under `config.out`. Networks train in `f32`.
pub fn train_to_dir(config: &RunConfig, force: bool) -> Result<TrainSummary> {
    config.validate()?;
    let out = config.out.clone();
    prepare_out_dir(&out, force)?;
    let config_path = out.join(CONFIG_FILE);
    fs::write(&config_path, config.echo())?;

    let mut trainer: Trainer<f32> = Trainer::new(config)?;
    let mut checkpoints = Vec::new();
    for step in checkpoint_steps(config.total_env_steps, config.checkpoint_every) {
        trainer.run_for(step - trainer.env_steps())?;
        let path = checkpoint_path(&out, step);
        trainer.checkpoint().save(&path)?;
        checkpoints.push(path);
    }
    let curve_path = out.join(CURVE_FILE);
    let rows = trainer.curve_with_pending();
    write_learning_curve(&rows, fs::File::create(&curve_path)?)?;
    Ok(TrainSummary {
        config_path,
        curve_path,
        checkpoints,
        env_steps: trainer.env_steps(),
        updates: trainer.agent().updates(),
        episodes: trainer.curve().len(),
        hits: trainer.hits(),
    })
}
