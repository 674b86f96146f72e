use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which episode cost estimate drives the multiplier update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostAccounting {
    /// Undiscounted sum of dispatch costs over the episode.
    #[default]
    Total,
    /// Sum of dispatch costs discounted by `gamma_c` per decision.
    Discounted,
    /// Fraction of dispatches into a negative region.
    ViolationRate,
}

/// Trainer hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub gamma_r: f64,
    pub gamma_c: f64,
    pub gae_decay: f64,
    pub clip_epsilon: f64,
    pub actor_lr: f64,
    pub reward_critic_lr: f64,
    pub cost_critic_lr: f64,
    pub lambda_lr: f64,
    pub initial_lambda: f64,
    /// Cost budget ξ, in the units of `cost_accounting`.
    pub cost_budget: f64,
    pub cost_accounting: CostAccounting,
    /// Parameter tolerance as a fraction of the current actor parameter norm.
    pub eps_theta_rel: f64,
    pub eps_lambda: f64,
    pub convergence_window: usize,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    /// Multiplier applied to rewards before they reach the reward critic and the estimator.
    pub reward_scale: f64,
    /// When false the multiplier is frozen at `initial_lambda` and the cost critic is not trained.
    pub constrained: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma_r: 0.99,
            gamma_c: 0.99,
            gae_decay: 0.95,
            clip_epsilon: 0.2,
            actor_lr: 3e-4,
            reward_critic_lr: 1e-3,
            cost_critic_lr: 1e-3,
            lambda_lr: 0.01,
            initial_lambda: 0.0,
            cost_budget: 50.0,
            cost_accounting: CostAccounting::Total,
            eps_theta_rel: 1e-3,
            eps_lambda: 1e-3,
            convergence_window: 3,
            epochs: 4,
            minibatch_size: 256,
            actor_hidden: vec![64, 64],
            critic_hidden: vec![64, 64],
            reward_scale: 0.01,
            constrained: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: String| Err(Error::InvalidConfig { key: key.into(), reason });
        for (key, g) in [("gamma_r", self.gamma_r), ("gamma_c", self.gamma_c)] {
            if !(g > 0.0 && g <= 1.0) {
                return bad(key, format!("{g} not in (0, 1]"));
            }
        }
        if !(0.0..=1.0).contains(&self.gae_decay) {
            return bad("gae_decay", format!("{} not in [0, 1]", self.gae_decay));
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return bad("clip_epsilon", format!("{} not in (0, 1)", self.clip_epsilon));
        }
        for (key, lr) in [
            ("actor_lr", self.actor_lr),
            ("reward_critic_lr", self.reward_critic_lr),
            ("cost_critic_lr", self.cost_critic_lr),
            ("lambda_lr", self.lambda_lr),
            ("reward_scale", self.reward_scale),
        ] {
            if !(lr > 0.0 && lr.is_finite()) {
                return bad(key, format!("{lr} must be positive"));
            }
        }
        if !(self.initial_lambda >= 0.0 && self.initial_lambda.is_finite()) {
            return bad("initial_lambda", format!("{} must be non-negative", self.initial_lambda));
        }
        if !self.cost_budget.is_finite() {
            return bad("cost_budget", "must be finite".into());
        }
        if !(self.eps_theta_rel >= 0.0 && self.eps_lambda >= 0.0) {
            return bad("eps_theta_rel", "tolerances must be non-negative".into());
        }
        if self.convergence_window == 0 {
            return bad("convergence_window", "must be at least 1".into());
        }
        if self.epochs == 0 {
            return bad("epochs", "must be at least 1".into());
        }
        if self.minibatch_size == 0 {
            return bad("minibatch_size", "must be at least 1".into());
        }
        for (key, hidden) in [("actor_hidden", &self.actor_hidden), ("critic_hidden", &self.critic_hidden)] {
            if hidden.contains(&0) {
                return bad(key, "layer widths must be positive".into());
            }
        }
        Ok(())
    }
}
