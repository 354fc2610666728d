use crate::error::{Error, Result};

/// Learner hyper-parameters. Defaults are the reference settings used for
/// every formulation.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub buffer_capacity: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub temp_lr: f64,
    pub batch_size: usize,
    pub gamma: f64,
    /// Environment steps between update rounds.
    pub update_every: usize,
    /// Gradient steps per update round.
    pub epochs_per_update: usize,
    pub warmup_steps: usize,
    pub adam_betas: (f64, f64),
    pub init_temperature: f64,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    /// Soft target update rate for the critics.
    pub tau: f64,
    /// `None` means `-(action dimension)`.
    pub target_entropy: Option<f64>,
    pub log_std_min: f64,
    pub log_std_max: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            buffer_capacity: 100_000,
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            temp_lr: 3e-4,
            batch_size: 256,
            gamma: 0.99,
            update_every: 2,
            epochs_per_update: 1,
            warmup_steps: 1000,
            adam_betas: (0.9, 0.999),
            init_temperature: 0.1,
            actor_hidden: vec![512, 512],
            critic_hidden: vec![512, 512],
            tau: 0.005,
            target_entropy: None,
            log_std_min: -10.0,
            log_std_max: 2.0,
        }
    }
}

pub(crate) fn parse_sizes(value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad layer size list `{value}`")))
        })
        .collect()
}

fn join_sizes(sizes: &[usize]) -> String {
    sizes
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

impl AgentConfig {
    pub const KEYS: &'static [&'static str] = &[
        "buffer_capacity",
        "actor_lr",
        "critic_lr",
        "temp_lr",
        "batch_size",
        "gamma",
        "update_every",
        "epochs_per_update",
        "warmup_steps",
        "adam_beta1",
        "adam_beta2",
        "init_temperature",
        "actor_hidden",
        "critic_hidden",
        "tau",
        "target_entropy",
        "log_std_min",
        "log_std_max",
    ];

    /// Set one field from its text form. Returns `Ok(false)` for keys that
    /// are not agent settings.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "buffer_capacity" => self.buffer_capacity = parse(key, value)?,
            "actor_lr" => self.actor_lr = parse(key, value)?,
            "critic_lr" => self.critic_lr = parse(key, value)?,
            "temp_lr" => self.temp_lr = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "update_every" => self.update_every = parse(key, value)?,
            "epochs_per_update" => self.epochs_per_update = parse(key, value)?,
            "warmup_steps" => self.warmup_steps = parse(key, value)?,
            "adam_beta1" => self.adam_betas.0 = parse(key, value)?,
            "adam_beta2" => self.adam_betas.1 = parse(key, value)?,
            "init_temperature" => self.init_temperature = parse(key, value)?,
            "actor_hidden" => self.actor_hidden = parse_sizes(value)?,
            "critic_hidden" => self.critic_hidden = parse_sizes(value)?,
            "tau" => self.tau = parse(key, value)?,
            "target_entropy" => {
                self.target_entropy = match value.trim() {
                    "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "log_std_min" => self.log_std_min = parse(key, value)?,
            "log_std_max" => self.log_std_max = parse(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// All fields as `(key, value)` text pairs; floats use shortest
    /// round-trip formatting so `set` reproduces them exactly.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("buffer_capacity", self.buffer_capacity.to_string()),
            ("actor_lr", self.actor_lr.to_string()),
            ("critic_lr", self.critic_lr.to_string()),
            ("temp_lr", self.temp_lr.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("gamma", self.gamma.to_string()),
            ("update_every", self.update_every.to_string()),
            ("epochs_per_update", self.epochs_per_update.to_string()),
            ("warmup_steps", self.warmup_steps.to_string()),
            ("adam_beta1", self.adam_betas.0.to_string()),
            ("adam_beta2", self.adam_betas.1.to_string()),
            ("init_temperature", self.init_temperature.to_string()),
            ("actor_hidden", join_sizes(&self.actor_hidden)),
            ("critic_hidden", join_sizes(&self.critic_hidden)),
            ("tau", self.tau.to_string()),
            (
                "target_entropy",
                self.target_entropy
                    .map_or_else(|| "auto".to_string(), |v| v.to_string()),
            ),
            ("log_std_min", self.log_std_min.to_string()),
            ("log_std_max", self.log_std_max.to_string()),
        ]
    }

    pub fn target_entropy_for(&self, action_dim: usize) -> f64 {
        self.target_entropy.unwrap_or(-(action_dim as f64))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        for (name, v) in [
            ("buffer_capacity", self.buffer_capacity),
            ("batch_size", self.batch_size),
            ("update_every", self.update_every),
            ("epochs_per_update", self.epochs_per_update),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.batch_size > self.buffer_capacity {
            return bad("batch_size exceeds buffer_capacity".into());
        }
        for (name, v) in [
            ("actor_lr", self.actor_lr),
            ("critic_lr", self.critic_lr),
            ("temp_lr", self.temp_lr),
            ("init_temperature", self.init_temperature),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must be in [0, 1], got {}", self.gamma));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad(format!("tau must be in (0, 1], got {}", self.tau));
        }
        let (b1, b2) = self.adam_betas;
        if !((0.0..1.0).contains(&b1) && (0.0..1.0).contains(&b2)) {
            return bad("adam betas must be in [0, 1)".into());
        }
        if self.log_std_min.partial_cmp(&self.log_std_max) != Some(std::cmp::Ordering::Less) {
            return bad("log_std_min must be below log_std_max".into());
        }
        if self.actor_hidden.contains(&0) || self.critic_hidden.contains(&0) {
            return bad("hidden layer sizes must be positive".into());
        }
        if matches!(self.target_entropy, Some(v) if !v.is_finite()) {
            return bad("target_entropy must be finite".into());
        }
        Ok(())
    }
}
