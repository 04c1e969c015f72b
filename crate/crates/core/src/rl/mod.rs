//! Neural policy/value machinery and the hierarchical trainer.

pub mod buffer;
pub mod checkpoint;
pub mod features;
pub mod gae;
pub mod heads;
pub mod net;
pub mod ppo;
pub mod trainer;

pub use checkpoint::{Checkpoint, CheckpointError};
pub use gae::gae;
pub use heads::{BernoulliHead, SquashSpec};
pub use net::{Adam, DenseNet};
pub use ppo::{BernoulliActor, GaussianActor, PpoConfig, ValueNet};
pub use trainer::{
    rollout_episodes, summarize, train_hmappo, EpisodeMetrics, MacroMode, MicroMode, Policies,
    RolloutSummary, TrainConfig, TrainError, TrainOutput, TrajectoryPoint,
};
