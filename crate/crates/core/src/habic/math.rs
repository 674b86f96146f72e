//! Scalar-generic estimators used by the trainer: softmax policy, agent selection, discounted
//! returns, generalized advantage estimation, the clipped surrogate, the dual update and the
//! convergence test.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Softmax over matching degrees, computed with max-subtraction.
pub fn softmax<T: Scalar>(q: &[T]) -> Result<Vec<T>> {
    if q.is_empty() {
        return Err(Error::Empty("candidate set"));
    }
    if q.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matching degree"));
    }
    let max = q.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = q.iter().map(|&x| (x - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// `log softmax(q)[index]`.
pub fn log_prob<T: Scalar>(q: &[T], index: usize) -> Result<T> {
    if index >= q.len() {
        return Err(Error::InvalidArgument(format!("index {index} outside {} candidates", q.len())));
    }
    let max = q.iter().copied().fold(T::neg_infinity(), T::max);
    let log_sum = q.iter().map(|&x| (x - max).exp()).sum::<T>().ln() + max;
    Ok(q[index] - log_sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    Sample,
    Greedy,
}

/// Draws an index from `probs` (sample mode) or takes the lowest-index argmax (greedy mode).
pub fn select_agent<T: Scalar, R: Rng + ?Sized>(probs: &[T], rng: &mut R, mode: SelectionMode) -> Result<usize> {
    if probs.is_empty() {
        return Err(Error::Empty("distribution"));
    }
    let total: T = probs.iter().copied().sum();
    if probs.iter().any(|p| !p.is_finite() || *p < T::zero()) || (total - T::one()).abs() > T::lit(1e-9) {
        return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
    }
    match mode {
        SelectionMode::Greedy => {
            let mut best = 0;
            for (i, p) in probs.iter().enumerate() {
                if *p > probs[best] {
                    best = i;
                }
            }
            Ok(best)
        }
        SelectionMode::Sample => {
            let u = T::lit(rng.random::<f64>()) * total;
            let mut acc = T::zero();
            for (i, p) in probs.iter().enumerate() {
                acc += *p;
                if u < acc {
                    return Ok(i);
                }
            }
            // rounding left u at the very top; take the last index with positive mass
            Ok(probs.iter().rposition(|p| *p > T::zero()).unwrap_or(probs.len() - 1))
        }
    }
}

/// `G_t = Σ_{l≥0} γ^l x_{t+l}` by backward recursion.
pub fn discounted_returns<T: Scalar>(values: &[T], gamma: T) -> Result<Vec<T>> {
    if values.is_empty() {
        return Err(Error::Empty("reward sequence"));
    }
    check_discount(gamma, "gamma")?;
    let mut out = vec![T::zero(); values.len()];
    let mut acc = T::zero();
    for t in (0..values.len()).rev() {
        acc = values[t] + gamma * acc;
        out[t] = acc;
    }
    Ok(out)
}

/// Generalized advantage estimates.
///
/// `δ_t = r_t + γ · V(s_{t+1}) − V(s_t)` and `A_t = Σ_l (γ · decay)^l δ_{t+l}`. `next_values`
/// must already hold zero at terminal steps, and the recursion restarts after every terminal.
pub fn compute_gae<T: Scalar>(
    rewards: &[T],
    values: &[T],
    next_values: &[T],
    terminals: &[bool],
    gamma: T,
    decay: T,
) -> Result<Vec<T>> {
    let n = rewards.len();
    for len in [values.len(), next_values.len(), terminals.len()] {
        if len != n {
            return Err(Error::ShapeMismatch { expected: n, actual: len });
        }
    }
    check_discount(gamma, "gamma")?;
    if !(decay >= T::zero() && decay <= T::one()) {
        return Err(Error::InvalidConfig { key: "gae_decay".into(), reason: format!("{decay} not in [0, 1]") });
    }
    let mut adv = vec![T::zero(); n];
    let mut acc = T::zero();
    for t in (0..n).rev() {
        if terminals[t] {
            acc = T::zero();
        }
        let delta = rewards[t] + gamma * next_values[t] - values[t];
        acc = delta + gamma * decay * acc;
        adv[t] = acc;
    }
    Ok(adv)
}

fn check_discount<T: Scalar>(gamma: T, key: &str) -> Result<()> {
    if gamma > T::zero() && gamma <= T::one() {
        Ok(())
    } else {
        Err(Error::InvalidConfig { key: key.into(), reason: format!("{gamma} not in (0, 1]") })
    }
}

/// `min(ρ · A, clip(ρ, 1 − ε, 1 + ε) · A)` with `ρ = exp(new_logp − old_logp)`.
pub fn ppo_clip_term<T: Scalar>(new_logp: T, old_logp: T, advantage: T, epsilon: T) -> T {
    let ratio = (new_logp - old_logp).exp();
    clipped_objective(ratio, advantage, epsilon)
}

pub fn clipped_objective<T: Scalar>(ratio: T, advantage: T, epsilon: T) -> T {
    let clipped = ratio.max(T::one() - epsilon).min(T::one() + epsilon);
    (ratio * advantage).min(clipped * advantage)
}

/// Derivative of [`clipped_objective`] with respect to the ratio: `A` where the unclipped branch
/// is active, zero where clipping holds the objective constant.
pub fn clipped_objective_slope<T: Scalar>(ratio: T, advantage: T, epsilon: T) -> T {
    let clipped = ratio.max(T::one() - epsilon).min(T::one() + epsilon);
    if ratio * advantage <= clipped * advantage {
        advantage
    } else {
        T::zero()
    }
}

/// Projected dual ascent: `λ' = max(0, λ + η · (Ĵ_c − ξ))`.
pub fn lambda_update<T: Scalar>(lambda: T, cost_estimate: T, budget: T, step: T) -> Result<T> {
    if !(step > T::zero()) {
        return Err(Error::InvalidConfig { key: "lambda_lr".into(), reason: format!("{step} must be positive") });
    }
    Ok((lambda + step * (cost_estimate - budget)).max(T::zero()))
}

/// True when the last `window` consecutive snapshot pairs (fewer if the history is shorter) all
/// moved by at most `eps_theta` in parameters (L2) and `eps_lambda` in the multiplier.
pub fn has_converged<T: Scalar>(
    thetas: &[Vec<T>],
    lambdas: &[T],
    eps_theta: T,
    eps_lambda: T,
    window: usize,
) -> Result<bool> {
    if thetas.len() != lambdas.len() {
        return Err(Error::ShapeMismatch { expected: thetas.len(), actual: lambdas.len() });
    }
    if thetas.len() < 2 {
        return Err(Error::InvalidArgument("convergence needs at least two recorded iterations".into()));
    }
    let n = thetas.len();
    let pairs = window.max(1).min(n - 1);
    for i in (n - pairs)..n {
        let (a, b) = (&thetas[i], &thetas[i - 1]);
        if a.len() != b.len() {
            return Err(Error::ShapeMismatch { expected: b.len(), actual: a.len() });
        }
        let drift = a.iter().zip(b).map(|(x, y)| (*x - *y) * (*x - *y)).sum::<T>().sqrt();
        if drift > eps_theta || (lambdas[i] - lambdas[i - 1]).abs() > eps_lambda {
            return Ok(false);
        }
    }
    Ok(true)
}
