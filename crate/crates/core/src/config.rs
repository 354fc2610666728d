//! Run configuration: a flat `key=value` text format.
//!
//! Lines are `key=value`; blank lines and lines starting with `#` are
//! ignored. Every agent hyper-parameter is accepted alongside the run keys
//! below. Unknown keys are errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::env::{FormulationKind, FormulationSpec};
use crate::envs::EnvName;
use crate::error::{Error, Result};
use crate::sac::AgentConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env: EnvName,
    pub formulation: FormulationKind,
    pub timeout: usize,
    pub reset_penalty: f64,
    pub episode_length: usize,
    pub total_env_steps: u64,
    pub seed: u64,
    pub out: PathBuf,
    pub checkpoint_every: u64,
    pub agent: AgentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: EnvName::PointReacherEasy,
            formulation: FormulationKind::MinTime,
            timeout: Self::DEFAULT_TIMEOUT,
            reset_penalty: 0.0,
            episode_length: FormulationSpec::DEFAULT_EPISODE_LENGTH,
            total_env_steps: 200_000,
            seed: 0,
            out: PathBuf::from("runs/default"),
            checkpoint_every: 10_000,
            agent: AgentConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value for {key}: `{value}`")))
}

impl RunConfig {
    pub const DEFAULT_TIMEOUT: usize = 100;

    pub const RUN_KEYS: &'static [&'static str] = &[
        "env",
        "formulation",
        "timeout",
        "reset_penalty",
        "episode_length",
        "total_env_steps",
        "seed",
        "out",
        "checkpoint_every",
    ];

    /// Set one key from text. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match key {
            "env" => self.env = value.trim().parse()?,
            "formulation" => self.formulation = value.trim().parse()?,
            "timeout" => self.timeout = parse(key, value)?,
            "reset_penalty" => self.reset_penalty = parse(key, value)?,
            "episode_length" => self.episode_length = parse(key, value)?,
            "total_env_steps" => self.total_env_steps = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "out" => self.out = PathBuf::from(value.trim()),
            "checkpoint_every" => self.checkpoint_every = parse(key, value)?,
            _ => {
                if !self.agent.set(key, value)? {
                    return Err(Error::Config(format!("unknown key `{key}`")));
                }
            }
        }
        Ok(())
    }

    /// Apply `key=value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![
            ("env", self.env.to_string()),
            ("formulation", self.formulation.to_string()),
            ("timeout", self.timeout.to_string()),
            ("reset_penalty", self.reset_penalty.to_string()),
            ("episode_length", self.episode_length.to_string()),
            ("total_env_steps", self.total_env_steps.to_string()),
            ("seed", self.seed.to_string()),
            ("out", self.out.display().to_string()),
            ("checkpoint_every", self.checkpoint_every.to_string()),
        ];
        out.extend(self.agent.entries());
        out
    }

    /// Text form accepted by [`RunConfig::from_text`]; reproduces `self` exactly.
    pub fn echo(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn formulation_spec(&self) -> FormulationSpec {
        FormulationSpec {
            kind: self.formulation,
            episode_length: self.episode_length,
            timeout: self.timeout,
            reset_penalty: self.reset_penalty,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.formulation_spec().validate()?;
        self.agent.validate()?;
        if self.checkpoint_every == 0 {
            return Err(Error::Config("checkpoint_every must be positive".into()));
        }
        if self.out.as_os_str().is_empty() || self.out.to_string_lossy().contains('\n') {
            return Err(Error::Config("out must be a single-line path".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_reference_values() {
        let c = RunConfig::default();
        assert_eq!(c.agent, AgentConfig::default());
        assert_eq!(c.episode_length, 1000);
        assert_eq!(c.checkpoint_every, 10_000);
        c.validate().unwrap();
    }

    #[test]
    fn echo_round_trips() {
        let mut c = RunConfig::default();
        c.apply_text("env=two_link_hard\nformulation=guiding\nreset_penalty=0.3\nactor_hidden=64,64\n# note\n\nseed=42\n")
            .unwrap();
        c.agent.actor_lr = 1.0 / 3.0;
        let back = RunConfig::from_text(&c.echo()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.echo(), c.echo());
    }

    #[test]
    fn unknown_and_malformed_keys_are_rejected() {
        assert!(RunConfig::from_text("learning_rate=0.1").is_err());
        assert!(RunConfig::from_text("timeout").is_err());
        assert!(RunConfig::from_text("timeout=-3").is_err());
        assert!(RunConfig::from_text("env=cartpole").is_err());
        assert!(RunConfig::from_text("formulation=dense").is_err());
    }

    #[test]
    fn later_settings_override_earlier_ones() {
        let mut c = RunConfig::from_text("seed=1\nbatch_size=32").unwrap();
        c.set("seed", "2").unwrap();
        assert_eq!(c.seed, 2);
        assert_eq!(c.agent.batch_size, 32);
    }
}
