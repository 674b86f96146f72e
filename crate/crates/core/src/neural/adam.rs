use serde::{Deserialize, Serialize};

use super::mlp::{GradientSet, Mlp};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Adaptive-moment optimizer state for one network (descends the gradient).
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
    step: u64,
    first: GradientSet<T>,
    second: GradientSet<T>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(net: &Mlp<T>, learning_rate: T) -> Self {
        Adam {
            learning_rate,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            epsilon: T::lit(1e-8),
            step: 0,
            first: GradientSet::zeros_like(net),
            second: GradientSet::zeros_like(net),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one bias-corrected update `θ ← θ − lr · m̂ / (√v̂ + eps)`.
    ///
    /// Non-finite gradients are rejected before any state is touched.
    pub fn step(&mut self, net: &mut Mlp<T>, grads: &GradientSet<T>) -> Result<()> {
        self.first.check_congruent(grads)?;
        if !grads.is_finite() {
            return Err(Error::NonFinite("gradient"));
        }
        self.step += 1;
        let t = i32::try_from(self.step).unwrap_or(i32::MAX);
        let bc1 = T::one() - self.beta1.powi(t);
        let bc2 = T::one() - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.learning_rate, self.epsilon);
        let layers = net.layers_mut();
        for (li, layer) in layers.iter_mut().enumerate() {
            let g = &grads.layers[li];
            let m = &mut self.first.layers[li];
            let v = &mut self.second.layers[li];
            let params = layer.weights.iter_mut().chain(layer.biases.iter_mut());
            let gs = g.weights.iter().chain(&g.biases);
            let ms = m.weights.iter_mut().chain(m.biases.iter_mut());
            let vs = v.weights.iter_mut().chain(v.biases.iter_mut());
            for (((p, &gi), mi), vi) in params.zip(gs).zip(ms).zip(vs) {
                *mi = b1 * *mi + (T::one() - b1) * gi;
                *vi = b2 * *vi + (T::one() - b2) * gi * gi;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }

    pub fn to_snapshot(&self) -> AdamSnapshot {
        let to64 = |g: &GradientSet<T>| g.flat().into_iter().map(Scalar::to_f64_lossy).collect();
        AdamSnapshot {
            learning_rate: self.learning_rate.to_f64_lossy(),
            beta1: self.beta1.to_f64_lossy(),
            beta2: self.beta2.to_f64_lossy(),
            epsilon: self.epsilon.to_f64_lossy(),
            step: self.step,
            first: to64(&self.first),
            second: to64(&self.second),
        }
    }

    pub fn from_snapshot(net: &Mlp<T>, snap: &AdamSnapshot) -> Result<Self> {
        let mut opt = Adam::new(net, T::lit(snap.learning_rate));
        opt.beta1 = T::lit(snap.beta1);
        opt.beta2 = T::lit(snap.beta2);
        opt.epsilon = T::lit(snap.epsilon);
        opt.step = snap.step;
        fill(&mut opt.first, &snap.first)?;
        fill(&mut opt.second, &snap.second)?;
        if opt.second.flat().iter().any(|v| *v < T::zero()) {
            return Err(Error::InvalidArgument("negative second moment in optimizer snapshot".into()));
        }
        Ok(opt)
    }
}

fn fill<T: Scalar>(target: &mut GradientSet<T>, flat: &[f64]) -> Result<()> {
    let total: usize = target.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum();
    if flat.len() != total {
        return Err(Error::ShapeMismatch { expected: total, actual: flat.len() });
    }
    let mut it = flat.iter();
    for l in &mut target.layers {
        for w in l.weights.iter_mut().chain(l.biases.iter_mut()) {
            *w = T::lit(*it.next().expect("length checked"));
        }
    }
    Ok(())
}

/// Serializable optimizer accumulators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamSnapshot {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}
