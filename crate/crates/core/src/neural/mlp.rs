use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One dense layer. `weights` is row-major `outputs × inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub biases: Vec<T>,
}

impl<T: Scalar> Layer<T> {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer { inputs, outputs, weights: vec![T::zero(); inputs * outputs], biases: vec![T::zero(); outputs] }
    }

    #[inline]
    fn row(&self, o: usize) -> &[T] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }
}

/// Multi-layer perceptron: `tanh` hidden activations, linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    layers: Vec<Layer<T>>,
    /// Bumped on every parameter update; caches remember the version they were built against.
    version: u64,
}

/// Activations recorded by [`Mlp::forward`], consumed by [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    version: u64,
    /// `activations[0]` is the input, `activations[i]` the output of layer `i - 1`
    /// after its activation function.
    activations: Vec<Vec<T>>,
}

impl<T: Scalar> ForwardCache<T> {
    pub fn output(&self) -> &[T] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl<T: Scalar> Mlp<T> {
    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(widths: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(widths)?;
        for layer in &mut net.layers {
            let limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            for w in &mut layer.weights {
                *w = T::lit(rng.random_range(-limit..=limit));
            }
        }
        Ok(net)
    }

    pub fn zeros(widths: &[usize]) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::InvalidArgument(format!("network needs at least two widths, got {widths:?}")));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidArgument(format!("zero layer width in {widths:?}")));
        }
        let layers = widths.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
        Ok(Mlp { layers, version: 0 })
    }

    pub fn from_layers(layers: Vec<Layer<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("layers"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs {
                return Err(Error::ShapeMismatch { expected: l.inputs * l.outputs, actual: l.weights.len() });
            }
            if l.biases.len() != l.outputs {
                return Err(Error::ShapeMismatch { expected: l.outputs, actual: l.biases.len() });
            }
            if i > 0 && layers[i - 1].outputs != l.inputs {
                return Err(Error::ShapeMismatch { expected: layers[i - 1].outputs, actual: l.inputs });
            }
        }
        Ok(Mlp { layers, version: 0 })
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.layers[0].inputs];
        w.extend(self.layers.iter().map(|l| l.outputs));
        w
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn forward(&self, input: &[T]) -> Result<ForwardCache<T>> {
        if input.len() != self.input_dim() {
            return Err(Error::ShapeMismatch { expected: self.input_dim(), actual: input.len() });
        }
        if input.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("network input"));
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let x = &activations[i];
            let mut y = Vec::with_capacity(layer.outputs);
            for o in 0..layer.outputs {
                let z = dot(layer.row(o), x) + layer.biases[o];
                y.push(if i == last { z } else { z.tanh() });
            }
            activations.push(y);
        }
        Ok(ForwardCache { version: self.version, activations })
    }

    /// Scalar output of a single-output network.
    pub fn predict(&self, input: &[T]) -> Result<T> {
        let cache = self.forward(input)?;
        Ok(cache.output()[0])
    }

    /// Gradient of `output · output_grad` with respect to every parameter.
    pub fn backward(&self, cache: &ForwardCache<T>, output_grad: &[T]) -> Result<GradientSet<T>> {
        let mut grads = GradientSet::zeros_like(self);
        self.backward_into(cache, output_grad, &mut grads)?;
        Ok(grads)
    }

    /// Accumulating variant of [`Mlp::backward`]: adds into `grads`.
    pub fn backward_into(&self, cache: &ForwardCache<T>, output_grad: &[T], grads: &mut GradientSet<T>) -> Result<()> {
        if cache.version != self.version {
            return Err(Error::StaleCache(format!(
                "cache built at parameter version {}, network is at {}",
                cache.version, self.version
            )));
        }
        if cache.activations.len() != self.layers.len() + 1 {
            return Err(Error::StaleCache("cache depth does not match network".into()));
        }
        if output_grad.len() != self.output_dim() {
            return Err(Error::ShapeMismatch { expected: self.output_dim(), actual: output_grad.len() });
        }
        if grads.layers.len() != self.layers.len() {
            return Err(Error::ShapeMismatch { expected: self.layers.len(), actual: grads.layers.len() });
        }
        let last = self.layers.len() - 1;
        // delta holds dLoss/dz for the current layer's pre-activation
        let mut delta: Vec<T> = output_grad.to_vec();
        for i in (0..=last).rev() {
            let layer = &self.layers[i];
            let input = &cache.activations[i];
            if i != last {
                let out = &cache.activations[i + 1];
                for (d, a) in delta.iter_mut().zip(out) {
                    *d *= T::one() - *a * *a;
                }
            }
            let g = &mut grads.layers[i];
            for o in 0..layer.outputs {
                let d = delta[o];
                g.biases[o] += d;
                if d != T::zero() {
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (w, x) in row.iter_mut().zip(input) {
                        *w += d * *x;
                    }
                }
            }
            if i > 0 {
                let mut prev = vec![T::zero(); layer.inputs];
                for o in 0..layer.outputs {
                    let d = delta[o];
                    if d != T::zero() {
                        for (p, w) in prev.iter_mut().zip(layer.row(o)) {
                            *p += d * *w;
                        }
                    }
                }
                delta = prev;
            }
        }
        Ok(())
    }

    /// All parameters flattened layer by layer (weights then biases).
    pub fn flat_params(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn set_flat_params(&mut self, params: &[T]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::ShapeMismatch { expected: self.num_params(), actual: params.len() });
        }
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&params[at..at + nw]);
            at += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&params[at..at + nb]);
            at += nb;
        }
        self.version += 1;
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.biases).all(|x| x.is_finite()))
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer<T>] {
        self.version += 1;
        &mut self.layers
    }

    pub fn to_snapshot(&self) -> MlpSnapshot {
        MlpSnapshot { widths: self.widths(), params: self.flat_params().into_iter().map(Scalar::to_f64_lossy).collect() }
    }

    pub fn from_snapshot(snapshot: &MlpSnapshot) -> Result<Self> {
        let mut net = Self::zeros(&snapshot.widths)?;
        let params: Vec<T> = snapshot.params.iter().map(|&p| T::lit(p)).collect();
        net.set_flat_params(&params)?;
        net.version = 0;
        if !net.is_finite() {
            return Err(Error::NonFinite("network snapshot"));
        }
        Ok(net)
    }
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        acc += *x * *y;
    }
    acc
}

/// Gradients congruent with an [`Mlp`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet<T> {
    pub layers: Vec<Layer<T>>,
}

impl<T: Scalar> GradientSet<T> {
    pub fn zeros_like(net: &Mlp<T>) -> Self {
        GradientSet { layers: net.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect() }
    }

    pub fn fill_zero(&mut self) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w = T::zero());
            l.biases.iter_mut().for_each(|b| *b = T::zero());
        }
    }

    pub fn scale(&mut self, factor: T) {
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.biases.iter_mut()).for_each(|w| *w *= factor);
        }
    }

    pub fn add_assign(&mut self, other: &GradientSet<T>) -> Result<()> {
        self.check_congruent(other)?;
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights.iter_mut().zip(&b.weights).for_each(|(x, y)| *x += *y);
            a.biases.iter_mut().zip(&b.biases).for_each(|(x, y)| *x += *y);
        }
        Ok(())
    }

    pub fn flat(&self) -> Vec<T> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.biases).all(|x| x.is_finite()))
    }

    pub fn is_zero(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.biases).all(|x| *x == T::zero()))
    }

    pub fn norm(&self) -> T {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases))
            .fold(T::zero(), |acc, x| acc + *x * *x)
            .sqrt()
    }

    pub(crate) fn check_congruent(&self, other: &GradientSet<T>) -> Result<()> {
        if self.layers.len() != other.layers.len() {
            return Err(Error::ShapeMismatch { expected: self.layers.len(), actual: other.layers.len() });
        }
        for (a, b) in self.layers.iter().zip(&other.layers) {
            if a.weights.len() != b.weights.len() || a.biases.len() != b.biases.len() {
                return Err(Error::ShapeMismatch { expected: a.weights.len(), actual: b.weights.len() });
            }
        }
        Ok(())
    }
}

/// Serializable network parameters: layer widths plus a flat parameter array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSnapshot {
    pub widths: Vec<usize>,
    pub params: Vec<f64>,
}
