use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::FeatureEncoder;
use super::math::{log_prob, select_agent, softmax, SelectionMode};
use crate::episode::{Dispatcher, Episode};
use crate::error::{Error, Result};
use crate::neural::Mlp;

/// One dispatch decision as seen by the trainer.
///
/// The successor decision point is the next transition of the same rollout; `terminal` marks
/// the last decision of an episode, whose successor value is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    /// Row-major `n_candidates × matching_dim` features.
    pub features: Vec<f64>,
    pub n_candidates: usize,
    pub chosen: usize,
    pub old_logp: f64,
    pub reward: f64,
    pub cost: f64,
    pub state: Vec<f64>,
    pub terminal: bool,
}

impl Transition {
    pub fn candidate(&self, j: usize) -> &[f64] {
        let dim = self.features.len() / self.n_candidates;
        &self.features[j * dim..(j + 1) * dim]
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_candidates == 0 || self.features.len() % self.n_candidates != 0 {
            return Err(Error::InvalidArgument("transition has no candidates or ragged features".into()));
        }
        if self.chosen >= self.n_candidates {
            return Err(Error::InvalidArgument(format!(
                "chosen index {} outside {} candidates",
                self.chosen, self.n_candidates
            )));
        }
        if !self.old_logp.is_finite() {
            return Err(Error::NonFinite("old log-probability"));
        }
        Ok(())
    }
}

/// Matching degrees `Q(m)` of every candidate row.
pub fn matching_degrees(actor: &Mlp<f64>, features: &[f64], n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Empty("candidate set"));
    }
    let dim = features.len() / n;
    features.chunks_exact(dim).map(|row| actor.predict(row)).collect()
}

/// Softmax over the actor's matching degrees for `n` stacked candidate features.
pub fn policy_distribution(actor: &Mlp<f64>, features: &[f64], n: usize) -> Result<Vec<f64>> {
    softmax(&matching_degrees(actor, features, n)?)
}

/// Dispatches open orders one at a time, in creation order, by letting the candidates compete
/// through the actor's softmax.
pub struct PolicyDispatcher<'a> {
    actor: &'a Mlp<f64>,
    encoder: &'a FeatureEncoder,
    mode: SelectionMode,
    rng: ChaCha8Rng,
    record: bool,
    transitions: Vec<Transition>,
}

impl<'a> PolicyDispatcher<'a> {
    pub fn new(actor: &'a Mlp<f64>, encoder: &'a FeatureEncoder, mode: SelectionMode, seed: u64) -> Self {
        PolicyDispatcher { actor, encoder, mode, rng: ChaCha8Rng::seed_from_u64(seed), record: false, transitions: Vec::new() }
    }

    /// Keeps a [`Transition`] for every decision.
    pub fn recording(mut self) -> Self {
        self.record = true;
        self
    }

    /// Recorded transitions, with the final one marked terminal.
    pub fn into_transitions(mut self) -> Vec<Transition> {
        if let Some(last) = self.transitions.last_mut() {
            last.terminal = true;
        }
        self.transitions
    }
}

impl Dispatcher for PolicyDispatcher<'_> {
    fn dispatch(&mut self, episode: &mut Episode<'_>) -> Result<()> {
        let env = episode.env();
        let open = episode.world().open_orders().to_vec();
        for order in open {
            let world = episode.world();
            let candidates = world.candidate_set(order);
            if candidates.is_empty() {
                continue;
            }
            let n = candidates.len();
            let mut features = Vec::with_capacity(n * self.encoder.matching_dim());
            self.encoder.matching_features(world, env, order, &candidates, &mut features);
            let q = matching_degrees(self.actor, &features, n)?;
            let probs = softmax(&q)?;
            let chosen = select_agent(&probs, &mut self.rng, self.mode)?;
            let mut state = Vec::new();
            if self.record {
                state.reserve(self.encoder.state_dim());
                self.encoder.state_features(world, env, order, n, &mut state);
            }
            let rec = episode.commit(order, candidates[chosen])?;
            if self.record {
                self.transitions.push(Transition {
                    features,
                    n_candidates: n,
                    chosen,
                    old_logp: log_prob(&q, chosen)?,
                    reward: rec.reward,
                    cost: rec.cost,
                    state,
                    terminal: false,
                });
            }
        }
        Ok(())
    }
}
