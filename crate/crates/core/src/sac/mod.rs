//! Soft actor-critic with a squashed Gaussian policy, twin critics and
//! automatic temperature tuning.

mod agent;
mod checkpoint;
mod config;
mod policy;
mod replay;

pub use agent::{critic_target, Losses, SacAgent};
pub use checkpoint::{Checkpoint, Tensor, TensorData};
pub use config::AgentConfig;
pub use policy::{
    random_action, squashed_log_prob, squashed_sample, DeterministicActor, SquashedBatch,
    LOG_SQRT_2PI,
};
pub use replay::{Batch, ReplayBuffer, Transition};
