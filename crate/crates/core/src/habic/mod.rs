//! Actor / bi-critic Lagrangian trainer: the matching-degree policy, advantage estimation, the
//! clipped surrogate, dual ascent on the multiplier and TD learning for both critics.

mod config;
mod features;
mod math;
mod policy;
mod trainer;

pub use config::{CostAccounting, TrainConfig};
pub use features::{FeatureEncoder, MATCHING_DIM, STATE_DIM};
pub use math::{
    clipped_objective, clipped_objective_slope, compute_gae, discounted_returns, has_converged, lambda_update,
    log_prob, ppo_clip_term, select_agent, softmax, SelectionMode,
};
pub use policy::{matching_degrees, policy_distribution, PolicyDispatcher, Transition};
pub use trainer::{
    actor_update, cost_estimate, critic_update, critic_values, evaluate_policy, normalize, train, train_episode,
    Checkpoint, EpisodeLog, EpisodeReport, TrainState, CHECKPOINT_FORMAT,
};
