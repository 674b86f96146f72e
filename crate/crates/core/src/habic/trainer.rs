use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{CostAccounting, TrainConfig};
use super::features::FeatureEncoder;
use super::math::{clipped_objective_slope, compute_gae, has_converged, lambda_update, log_prob, softmax, SelectionMode};
use super::policy::{PolicyDispatcher, Transition};
use crate::episode::{run_episode, stream_seed, Environment, EpisodeOutcome, Stream};
use crate::error::{Error, Result};
use crate::neural::{Adam, AdamSnapshot, GradientSet, Mlp, MlpSnapshot};

/// Actor, the two critics, their optimizers, the multiplier and the convergence history.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub config: TrainConfig,
    pub actor: Mlp<f64>,
    pub reward_critic: Mlp<f64>,
    pub cost_critic: Mlp<f64>,
    pub actor_opt: Adam<f64>,
    pub reward_opt: Adam<f64>,
    pub cost_opt: Adam<f64>,
    lambda: f64,
    /// Episodes trained so far; the next episode gets this index.
    pub episodes_done: u64,
    pub converged: bool,
    theta_history: VecDeque<Vec<f64>>,
    lambda_history: VecDeque<f64>,
}

fn widths(input: usize, hidden: &[usize]) -> Vec<usize> {
    let mut w = vec![input];
    w.extend_from_slice(hidden);
    w.push(1);
    w
}

impl TrainState {
    pub fn new(config: TrainConfig, matching_dim: usize, state_dim: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        let net = |dim: usize, hidden: &[usize], stream: Stream| {
            Mlp::new(&widths(dim, hidden), &mut ChaCha8Rng::seed_from_u64(stream_seed(seed, stream)))
        };
        let actor = net(matching_dim, &config.actor_hidden, Stream::ActorInit)?;
        let reward_critic = net(state_dim, &config.critic_hidden, Stream::RewardCriticInit)?;
        let cost_critic = net(state_dim, &config.critic_hidden, Stream::CostCriticInit)?;
        Ok(TrainState {
            actor_opt: Adam::new(&actor, config.actor_lr),
            reward_opt: Adam::new(&reward_critic, config.reward_critic_lr),
            cost_opt: Adam::new(&cost_critic, config.cost_critic_lr),
            lambda: config.initial_lambda,
            episodes_done: 0,
            converged: false,
            theta_history: VecDeque::new(),
            lambda_history: VecDeque::new(),
            actor,
            reward_critic,
            cost_critic,
            config,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT,
            config: self.config.clone(),
            actor: self.actor.to_snapshot(),
            reward_critic: self.reward_critic.to_snapshot(),
            cost_critic: self.cost_critic.to_snapshot(),
            actor_opt: self.actor_opt.to_snapshot(),
            reward_opt: self.reward_opt.to_snapshot(),
            cost_opt: self.cost_opt.to_snapshot(),
            lambda: self.lambda,
            episodes_done: self.episodes_done,
            converged: self.converged,
            theta_history: self.theta_history.iter().cloned().collect(),
            lambda_history: self.lambda_history.iter().copied().collect(),
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::InvalidArgument(format!("unsupported checkpoint format {}", ck.format)));
        }
        ck.config.validate()?;
        if !(ck.lambda >= 0.0 && ck.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("checkpoint multiplier {} is invalid", ck.lambda)));
        }
        if ck.theta_history.len() != ck.lambda_history.len() {
            return Err(Error::ShapeMismatch { expected: ck.theta_history.len(), actual: ck.lambda_history.len() });
        }
        let actor = Mlp::from_snapshot(&ck.actor)?;
        let reward_critic = Mlp::from_snapshot(&ck.reward_critic)?;
        let cost_critic = Mlp::from_snapshot(&ck.cost_critic)?;
        if reward_critic.input_dim() != cost_critic.input_dim() {
            return Err(Error::ShapeMismatch { expected: reward_critic.input_dim(), actual: cost_critic.input_dim() });
        }
        Ok(TrainState {
            config: ck.config.clone(),
            actor_opt: Adam::from_snapshot(&actor, &ck.actor_opt)?,
            reward_opt: Adam::from_snapshot(&reward_critic, &ck.reward_opt)?,
            cost_opt: Adam::from_snapshot(&cost_critic, &ck.cost_opt)?,
            actor,
            reward_critic,
            cost_critic,
            lambda: ck.lambda,
            episodes_done: ck.episodes_done,
            converged: ck.converged,
            theta_history: ck.theta_history.iter().cloned().collect(),
            lambda_history: ck.lambda_history.iter().copied().collect(),
        })
    }

    /// Checks that the networks accept the encoder's feature widths.
    pub fn check_dims(&self, encoder: &FeatureEncoder) -> Result<()> {
        if self.actor.input_dim() != encoder.matching_dim() {
            return Err(Error::ShapeMismatch { expected: encoder.matching_dim(), actual: self.actor.input_dim() });
        }
        if self.reward_critic.input_dim() != encoder.state_dim() {
            return Err(Error::ShapeMismatch { expected: encoder.state_dim(), actual: self.reward_critic.input_dim() });
        }
        Ok(())
    }

    fn record_iteration(&mut self) -> Result<bool> {
        let window = self.config.convergence_window;
        self.theta_history.push_back(self.actor.flat_params());
        self.lambda_history.push_back(self.lambda);
        while self.theta_history.len() > window + 1 {
            self.theta_history.pop_front();
            self.lambda_history.pop_front();
        }
        if self.theta_history.len() < window + 1 {
            return Ok(false);
        }
        let norm = self.theta_history.back().map_or(0.0, |t| t.iter().map(|x| x * x).sum::<f64>().sqrt());
        let thetas: Vec<Vec<f64>> = self.theta_history.iter().cloned().collect();
        let lambdas: Vec<f64> = self.lambda_history.iter().copied().collect();
        has_converged(&thetas, &lambdas, self.config.eps_theta_rel * norm, self.config.eps_lambda, window)
    }
}

pub const CHECKPOINT_FORMAT: u32 = 1;

/// Serializable training state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: u32,
    pub config: TrainConfig,
    pub actor: MlpSnapshot,
    pub reward_critic: MlpSnapshot,
    pub cost_critic: MlpSnapshot,
    pub actor_opt: AdamSnapshot,
    pub reward_opt: AdamSnapshot,
    pub cost_opt: AdamSnapshot,
    pub lambda: f64,
    pub episodes_done: u64,
    pub converged: bool,
    pub theta_history: Vec<Vec<f64>>,
    pub lambda_history: Vec<f64>,
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: u64,
    pub mean_reward: f64,
    pub mean_cost: f64,
    pub lambda: f64,
    pub apwt: f64,
    pub pf_inter: f64,
    pub pf_intra: f64,
    pub pvr: f64,
    /// Wall-clock milliseconds for the episode; omitted unless requested, so logs stay
    /// reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<u64>,
    pub dispatches: usize,
    pub expired: usize,
    pub cost_estimate: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct EpisodeReport {
    pub log: EpisodeLog,
    pub region_waits: Vec<Option<f64>>,
}

/// Critic values of every decision point and of its successor (zero after a terminal step).
pub fn critic_values(critic: &Mlp<f64>, batch: &[Transition]) -> Result<(Vec<f64>, Vec<f64>)> {
    let values: Vec<f64> = batch.iter().map(|t| critic.predict(&t.state)).collect::<Result<_>>()?;
    let next = (0..batch.len())
        .map(|i| if batch[i].terminal || i + 1 >= batch.len() { 0.0 } else { values[i + 1] })
        .collect();
    Ok((values, next))
}

/// Zero mean, unit variance. A constant vector maps to zeros.
pub fn normalize(xs: &[f64]) -> Vec<f64> {
    if xs.is_empty() {
        return Vec::new();
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    xs.iter().map(|x| if std > 1e-12 { (x - mean) / std } else { 0.0 }).collect()
}

/// Clipped-surrogate ascent on `advantages` over `epochs` shuffled passes.
pub fn actor_update(
    actor: &mut Mlp<f64>,
    opt: &mut Adam<f64>,
    batch: &[Transition],
    advantages: &[f64],
    clip_epsilon: f64,
    epochs: usize,
    minibatch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Empty("transition batch"));
    }
    if advantages.len() != batch.len() {
        return Err(Error::ShapeMismatch { expected: batch.len(), actual: advantages.len() });
    }
    for t in batch {
        t.validate()?;
    }
    let mut grads = GradientSet::zeros_like(actor);
    let mut order: Vec<usize> = (0..batch.len()).collect();
    for _ in 0..epochs {
        order.shuffle(rng);
        for mb in order.chunks(minibatch_size.max(1)) {
            grads.fill_zero();
            let b = mb.len() as f64;
            for &i in mb {
                let t = &batch[i];
                let caches =
                    (0..t.n_candidates).map(|j| actor.forward(t.candidate(j))).collect::<Result<Vec<_>>>()?;
                let q: Vec<f64> = caches.iter().map(|c| c.output()[0]).collect();
                let ratio = (log_prob(&q, t.chosen)? - t.old_logp).exp();
                let slope = clipped_objective_slope(ratio, advantages[i], clip_epsilon);
                if slope == 0.0 {
                    continue;
                }
                let p = softmax(&q)?;
                // descent on the negated surrogate; d log p_a / d q_j = 1[j = a] − p_j
                let coef = -slope * ratio / b;
                for (j, cache) in caches.iter().enumerate() {
                    let indicator = if j == t.chosen { 1.0 } else { 0.0 };
                    actor.backward_into(cache, &[coef * (indicator - p[j])], &mut grads)?;
                }
            }
            opt.step(actor, &grads)?;
            if !actor.is_finite() {
                return Err(Error::NonFinite("actor parameters"));
            }
        }
    }
    Ok(())
}

/// Squared TD(0) regression of `critic` towards `signal_t + γ · V(s_{t+1})`, with targets
/// recomputed from the network frozen at the start of every pass.
pub fn critic_update(
    critic: &mut Mlp<f64>,
    opt: &mut Adam<f64>,
    batch: &[Transition],
    signal: &[f64],
    gamma: f64,
    epochs: usize,
    minibatch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Empty("transition batch"));
    }
    if signal.len() != batch.len() {
        return Err(Error::ShapeMismatch { expected: batch.len(), actual: signal.len() });
    }
    let mut grads = GradientSet::zeros_like(critic);
    let mut order: Vec<usize> = (0..batch.len()).collect();
    for _ in 0..epochs {
        let (_, next) = critic_values(critic, batch)?;
        let targets: Vec<f64> = signal.iter().zip(&next).map(|(s, v)| s + gamma * v).collect();
        order.shuffle(rng);
        for mb in order.chunks(minibatch_size.max(1)) {
            grads.fill_zero();
            let b = mb.len() as f64;
            for &i in mb {
                let cache = critic.forward(&batch[i].state)?;
                let err = cache.output()[0] - targets[i];
                critic.backward_into(&cache, &[err / b], &mut grads)?;
            }
            opt.step(critic, &grads)?;
            if !critic.is_finite() {
                return Err(Error::NonFinite("critic parameters"));
            }
        }
    }
    Ok(())
}

/// Episode cost estimate used by the multiplier update.
pub fn cost_estimate(accounting: CostAccounting, gamma_c: f64, outcome: &EpisodeOutcome) -> f64 {
    match accounting {
        CostAccounting::Total => outcome.total_cost(),
        CostAccounting::Discounted => {
            let mut discount = 1.0;
            let mut acc = 0.0;
            for r in &outcome.records {
                acc += discount * r.cost;
                discount *= gamma_c;
            }
            acc
        }
        CostAccounting::ViolationRate => outcome.metrics.pvr,
    }
}

/// Rolls out one sampled episode and applies one round of critic, actor and multiplier updates.
pub fn train_episode(env: &Environment, encoder: &FeatureEncoder, state: &mut TrainState, seed: u64) -> Result<EpisodeReport> {
    let index = state.episodes_done;
    let episode_seed = seed.wrapping_add(index);
    let cfg = state.config.clone();

    let mut dispatcher =
        PolicyDispatcher::new(&state.actor, encoder, SelectionMode::Sample, stream_seed(episode_seed, Stream::Policy))
            .recording();
    let outcome = run_episode(env, episode_seed, &mut dispatcher)?;
    let batch = dispatcher.into_transitions();
    if batch.is_empty() {
        return Err(Error::Empty("episode produced no dispatch decisions"));
    }

    let terminals: Vec<bool> = batch.iter().map(|t| t.terminal).collect();
    let rewards: Vec<f64> = batch.iter().map(|t| t.reward * cfg.reward_scale).collect();
    let (v, v_next) = critic_values(&state.reward_critic, &batch)?;
    let adv_r = compute_gae(&rewards, &v, &v_next, &terminals, cfg.gamma_r, cfg.gae_decay)?;
    let costs: Vec<f64> = batch.iter().map(|t| t.cost).collect();
    let adv_c = if cfg.constrained {
        let (c, c_next) = critic_values(&state.cost_critic, &batch)?;
        compute_gae(&costs, &c, &c_next, &terminals, cfg.gamma_c, cfg.gae_decay)?
    } else {
        vec![0.0; batch.len()]
    };

    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(episode_seed, Stream::RewardCritic));
    critic_update(
        &mut state.reward_critic,
        &mut state.reward_opt,
        &batch,
        &rewards,
        cfg.gamma_r,
        cfg.epochs,
        cfg.minibatch_size,
        &mut rng,
    )?;
    if cfg.constrained {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(episode_seed, Stream::CostCritic));
        critic_update(
            &mut state.cost_critic,
            &mut state.cost_opt,
            &batch,
            &costs,
            cfg.gamma_c,
            cfg.epochs,
            cfg.minibatch_size,
            &mut rng,
        )?;
    }

    let lambda = state.lambda;
    let harmonized: Vec<f64> = normalize(&adv_r).iter().zip(&adv_c).map(|(r, c)| r - lambda * c).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(episode_seed, Stream::ActorShuffle));
    actor_update(
        &mut state.actor,
        &mut state.actor_opt,
        &batch,
        &harmonized,
        cfg.clip_epsilon,
        cfg.epochs,
        cfg.minibatch_size,
        &mut rng,
    )?;

    let j_c = cost_estimate(cfg.cost_accounting, cfg.gamma_c, &outcome);
    if cfg.constrained {
        state.lambda = lambda_update(state.lambda, j_c, cfg.cost_budget, cfg.lambda_lr)?;
    }
    state.episodes_done += 1;
    state.converged = state.record_iteration()?;

    let m = &outcome.metrics;
    let n = outcome.records.len() as f64;
    Ok(EpisodeReport {
        log: EpisodeLog {
            episode: index,
            mean_reward: outcome.total_reward() / n,
            mean_cost: m.mean_cost,
            lambda: state.lambda,
            apwt: m.apwt,
            pf_inter: m.pf_inter,
            pf_intra: m.pf_intra,
            pvr: m.pvr,
            wall_ms: None,
            dispatches: m.dispatches,
            expired: m.expired,
            cost_estimate: j_c,
            converged: state.converged,
        },
        region_waits: outcome.region_waits,
    })
}

/// Trains for up to `n_episodes`, stopping early once the convergence test passes. Episode `i`
/// (counting from the start of training, resumed runs included) is seeded with `seed + i`.
pub fn train(
    env: &Environment,
    state: &mut TrainState,
    n_episodes: usize,
    seed: u64,
    mut on_episode: impl FnMut(&EpisodeReport) -> Result<()>,
) -> Result<Vec<EpisodeLog>> {
    let encoder = FeatureEncoder::new(env);
    state.check_dims(&encoder)?;
    let mut logs = Vec::with_capacity(n_episodes);
    for _ in 0..n_episodes {
        if state.converged {
            break;
        }
        let report = train_episode(env, &encoder, state, seed)?;
        on_episode(&report)?;
        logs.push(report.log);
    }
    Ok(logs)
}

/// Runs the actor greedily (or sampled) for evaluation.
pub fn evaluate_policy(env: &Environment, actor: &Mlp<f64>, mode: SelectionMode, seed: u64) -> Result<EpisodeOutcome> {
    let encoder = FeatureEncoder::new(env);
    if actor.input_dim() != encoder.matching_dim() {
        return Err(Error::ShapeMismatch { expected: encoder.matching_dim(), actual: actor.input_dim() });
    }
    let mut dispatcher = PolicyDispatcher::new(actor, &encoder, mode, stream_seed(seed, Stream::Policy));
    run_episode(env, seed, &mut dispatcher)
}
