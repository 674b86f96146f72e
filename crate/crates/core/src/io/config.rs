//! Flat key/value run configuration with environment and command-line overrides.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::city::SimParams;
use crate::error::{Error, Result};
use crate::habic::{CostAccounting, TrainConfig};
use crate::human::NeutralQuantifier;

/// Prefix of environment variables that override config keys, e.g. `FAIRDISPATCH_ALPHA=0.3`.
pub const ENV_PREFIX: &str = "FAIRDISPATCH_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalMode {
    #[default]
    Poisson,
    Trace,
}

/// Every tunable of the pipeline. Missing keys take their defaults, unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub grid_rows: Option<usize>,
    pub grid_cols: Option<usize>,
    pub n_drivers: Option<usize>,
    pub cell_km: f64,
    pub slot_seconds: u32,
    pub episode_slots: usize,
    pub speed_kmh: f64,
    pub pickup_radius_km: f64,
    pub max_wait_slots: usize,
    pub p_home: f64,

    pub orders_per_day: f64,
    pub hotspot_count: usize,
    pub hotspot_multiplier: f64,
    pub rush_periods: Vec<usize>,
    pub trip_length_km: f64,
    pub history_visits: usize,
    pub home_range_km: f64,
    pub home_spread_km: f64,
    pub preference_concentration: f64,
    pub preference_spread: f64,
    pub arrivals: ArrivalMode,

    pub pref_threshold: f64,
    pub pref_kappa_km: f64,
    pub neutral_quantifier: NeutralQuantifier,
    pub beta: f64,
    pub base_wait_seconds: f64,
    pub alpha: f64,

    pub gamma_r: f64,
    pub gamma_c: f64,
    pub gae_decay: f64,
    pub clip_epsilon: f64,
    pub actor_lr: f64,
    pub reward_critic_lr: f64,
    pub cost_critic_lr: f64,
    pub lambda_lr: f64,
    pub initial_lambda: f64,
    pub cost_budget: f64,
    pub cost_accounting: CostAccounting,
    pub eps_theta_rel: f64,
    pub eps_lambda: f64,
    pub convergence_window: usize,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub reward_scale: f64,
    pub constrained: bool,

    pub seed: u64,
    pub episodes: usize,
    pub eval_episodes: usize,
    pub assignment_exact_cap: usize,
    pub log_wall_ms: bool,

    /// Keys given explicitly by the file or an override.
    #[serde(skip)]
    pub explicit: BTreeSet<String>,
}

impl Default for Config {
    fn default() -> Self {
        let sim = SimParams::default();
        let train = TrainConfig::default();
        Config {
            grid_rows: None,
            grid_cols: None,
            n_drivers: None,
            cell_km: 1.5,
            slot_seconds: sim.slot_seconds,
            episode_slots: sim.episode_slots,
            speed_kmh: sim.speed_kmh,
            pickup_radius_km: sim.pickup_radius_km,
            max_wait_slots: sim.max_wait_slots,
            p_home: sim.p_home,

            orders_per_day: 5000.0,
            hotspot_count: 4,
            hotspot_multiplier: 5.0,
            rush_periods: vec![7, 8, 9, 17, 18, 19],
            trip_length_km: 4.0,
            history_visits: 500,
            home_range_km: 2.0,
            home_spread_km: 4.0,
            preference_concentration: 0.5,
            preference_spread: 1.0,
            arrivals: ArrivalMode::Poisson,

            pref_threshold: 0.02,
            pref_kappa_km: 10.0,
            neutral_quantifier: NeutralQuantifier::Exists,
            beta: 1.0,
            base_wait_seconds: 300.0,
            alpha: 0.5,

            gamma_r: train.gamma_r,
            gamma_c: train.gamma_c,
            gae_decay: train.gae_decay,
            clip_epsilon: train.clip_epsilon,
            actor_lr: train.actor_lr,
            reward_critic_lr: train.reward_critic_lr,
            cost_critic_lr: train.cost_critic_lr,
            lambda_lr: train.lambda_lr,
            initial_lambda: train.initial_lambda,
            cost_budget: train.cost_budget,
            cost_accounting: train.cost_accounting,
            eps_theta_rel: train.eps_theta_rel,
            eps_lambda: train.eps_lambda,
            convergence_window: train.convergence_window,
            epochs: train.epochs,
            minibatch_size: train.minibatch_size,
            actor_hidden: train.actor_hidden,
            critic_hidden: train.critic_hidden,
            reward_scale: train.reward_scale,
            constrained: train.constrained,

            seed: 0,
            episodes: 50,
            eval_episodes: 5,
            assignment_exact_cap: crate::baselines::ASSIGNMENT_EXACT_CAP,
            log_wall_ms: false,
            explicit: BTreeSet::new(),
        }
    }
}

/// Parses an override value as a TOML scalar or array, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn config_error(err: toml::de::Error) -> Error {
    let msg = err.message().to_string();
    let key = msg.split('`').nth(1).unwrap_or("<config>").to_string();
    Error::InvalidConfig { key, reason: msg }
}

impl Config {
    /// Builds a config from TOML text plus `(key, value)` overrides applied in order.
    pub fn from_toml_with(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(config_error)?;
        for (k, v) in overrides {
            table.insert(k.clone(), parse_value(v));
        }
        let explicit: BTreeSet<String> = table.keys().cloned().collect();
        let mut cfg = Config::deserialize(toml::Value::Table(table)).map_err(config_error)?;
        cfg.explicit = explicit;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with(text, &[])
    }

    /// Reads `path` (or starts from defaults when `None`), then applies `FAIRDISPATCH_*`
    /// environment overrides and finally the explicit `key=value` overrides.
    pub fn load(path: Option<&Path>, cli_overrides: &[(String, String)]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            None => String::new(),
        };
        let mut overrides = env_overrides(std::env::vars());
        overrides.extend_from_slice(cli_overrides);
        Self::from_toml_with(&text, &overrides)
    }

    pub fn sim_params(&self) -> SimParams {
        SimParams {
            slot_seconds: self.slot_seconds,
            episode_slots: self.episode_slots,
            speed_kmh: self.speed_kmh,
            pickup_radius_km: self.pickup_radius_km,
            max_wait_slots: self.max_wait_slots,
            p_home: self.p_home,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            gamma_r: self.gamma_r,
            gamma_c: self.gamma_c,
            gae_decay: self.gae_decay,
            clip_epsilon: self.clip_epsilon,
            actor_lr: self.actor_lr,
            reward_critic_lr: self.reward_critic_lr,
            cost_critic_lr: self.cost_critic_lr,
            lambda_lr: self.lambda_lr,
            initial_lambda: self.initial_lambda,
            cost_budget: self.cost_budget,
            cost_accounting: self.cost_accounting,
            eps_theta_rel: self.eps_theta_rel,
            eps_lambda: self.eps_lambda,
            convergence_window: self.convergence_window,
            epochs: self.epochs,
            minibatch_size: self.minibatch_size,
            actor_hidden: self.actor_hidden.clone(),
            critic_hidden: self.critic_hidden.clone(),
            reward_scale: self.reward_scale,
            constrained: self.constrained,
        }
    }

    pub fn require<T: Copy>(value: Option<T>, key: &str) -> Result<T> {
        value.ok_or_else(|| Error::MissingConfigKey(key.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.sim_params().validate()?;
        self.train_config().validate()?;
        let bad = |key: &str, reason: String| Err(Error::InvalidConfig { key: key.into(), reason });
        for (key, v) in [("grid_rows", self.grid_rows), ("grid_cols", self.grid_cols), ("n_drivers", self.n_drivers)] {
            if v == Some(0) {
                return bad(key, "must be positive".into());
            }
        }
        for (key, v) in [
            ("cell_km", self.cell_km),
            ("trip_length_km", self.trip_length_km),
            ("home_range_km", self.home_range_km),
            ("home_spread_km", self.home_spread_km),
            ("preference_concentration", self.preference_concentration),
            ("pref_kappa_km", self.pref_kappa_km),
            ("beta", self.beta),
            ("base_wait_seconds", self.base_wait_seconds),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(key, format!("{v} must be positive"));
            }
        }
        if !(self.orders_per_day >= 0.0 && self.orders_per_day.is_finite()) {
            return bad("orders_per_day", format!("{} must be non-negative", self.orders_per_day));
        }
        if !(self.hotspot_multiplier >= 0.0 && self.hotspot_multiplier.is_finite()) {
            return bad("hotspot_multiplier", format!("{} must be non-negative", self.hotspot_multiplier));
        }
        if !(self.preference_spread >= 0.0 && self.preference_spread.is_finite()) {
            return bad("preference_spread", format!("{} must be non-negative", self.preference_spread));
        }
        if let Some(v) = self.rush_periods.iter().find(|&&v| v >= crate::city::PERIODS) {
            return bad("rush_periods", format!("period {v} out of range 0..24"));
        }
        if self.history_visits == 0 {
            return bad("history_visits", "must be positive".into());
        }
        if !(self.pref_threshold > 0.0 && self.pref_threshold < 1.0) {
            return bad("pref_threshold", format!("{} not in (0, 1)", self.pref_threshold));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha", format!("{} not in [0, 1]", self.alpha));
        }
        Ok(())
    }
}

/// `FAIRDISPATCH_FOO_BAR=x` becomes the override `foo_bar = x`.
pub fn env_overrides(vars: impl IntoIterator<Item = (String, String)>) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = vars
        .into_iter()
        .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|key| (key.to_ascii_lowercase(), v)))
        .collect();
    out.sort();
    out
}

/// Splits `key=value`.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::InvalidConfig { key: s.to_string(), reason: "expected key=value".into() })?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}
