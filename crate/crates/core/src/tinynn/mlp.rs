use rand::Rng;
use serde::{Deserialize, Serialize};

use super::loss::{cross_entropy, softmax};
use super::param::{add_into, add_outer, Gradients, Param, Parameterized};
use super::train::Trainable;
use super::{NnError, Result};

/// Hidden-layer shape of a word-expert MLP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub hidden_size: usize,
    pub hidden_layers: usize,
}

impl Default for MlpConfig {
    /// Two hidden layers of 100 units.
    fn default() -> Self {
        Self {
            hidden_size: 100,
            hidden_layers: 2,
        }
    }
}

/// Feed-forward classifier: tanh hidden layers, softmax output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    input_dim: usize,
    class_count: usize,
    /// (weight, bias) per layer; the last pair is the output layer.
    layers: Vec<(Param, Param)>,
}

/// Intermediate values of one forward pass, kept for backprop.
pub(crate) struct MlpCache {
    /// Input to each layer (x, then each hidden activation).
    inputs: Vec<Vec<f64>>,
    pub(crate) logits: Vec<f64>,
}

impl MlpModel {
    pub fn new<R: Rng + ?Sized>(
        input_dim: usize,
        class_count: usize,
        config: MlpConfig,
        rng: &mut R,
    ) -> Self {
        Self::with_prefix("mlp", input_dim, class_count, config, rng)
    }

    pub(crate) fn with_prefix<R: Rng + ?Sized>(
        prefix: &str,
        input_dim: usize,
        class_count: usize,
        config: MlpConfig,
        rng: &mut R,
    ) -> Self {
        let mut dims = vec![input_dim];
        dims.extend(std::iter::repeat_n(
            config.hidden_size,
            config.hidden_layers,
        ));
        dims.push(class_count);
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let weight = Param::glorot(format!("{prefix}.layer{i}.weight"), w[1], w[0], rng);
                let bias = Param::zeros(format!("{prefix}.layer{i}.bias"), w[1], 1);
                (weight, bias)
            })
            .collect();
        Self {
            input_dim,
            class_count,
            layers,
        }
    }

    /// Rebuilds a model from tensors in [`Parameterized::params`] order.
    pub fn from_params(params: Vec<Param>) -> Result<Self> {
        if params.len() < 2 || !params.len().is_multiple_of(2) {
            return Err(NnError::Checkpoint(format!(
                "MLP needs weight/bias pairs, got {} tensors",
                params.len()
            )));
        }
        let mut layers = Vec::with_capacity(params.len() / 2);
        let mut iter = params.into_iter();
        while let (Some(w), Some(b)) = (iter.next(), iter.next()) {
            if b.rows != w.rows || b.cols != 1 {
                return Err(NnError::Checkpoint(format!(
                    "bias {} does not match weight {}",
                    b.name, w.name
                )));
            }
            if let Some((prev, _)) = layers.last() {
                let prev: &Param = prev;
                if prev.rows != w.cols {
                    return Err(NnError::Checkpoint(format!(
                        "layer {} input does not chain",
                        w.name
                    )));
                }
            }
            layers.push((w, b));
        }
        Ok(Self {
            input_dim: layers[0].0.cols,
            class_count: layers.last().map(|(w, _)| w.rows).unwrap_or(0),
            layers,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn hidden_layers(&self) -> usize {
        self.layers.len() - 1
    }

    /// Layer widths from input to output.
    pub fn shape(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim];
        dims.extend(self.layers.iter().map(|(w, _)| w.rows));
        dims
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(NnError::Shape(format!(
                "MLP expects {} inputs, got {}",
                self.input_dim,
                x.len()
            )));
        }
        Ok(())
    }

    pub(crate) fn forward_cached(&self, x: &[f64]) -> MlpCache {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, (w, b)) in self.layers.iter().enumerate() {
            let mut z = w.affine(&h, &b.value);
            if i < last {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            inputs.push(std::mem::replace(&mut h, z));
        }
        MlpCache { inputs, logits: h }
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.forward_cached(x).logits)
    }

    /// Class probabilities for one input.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    /// Accumulates parameter gradients into `grads` (one tensor per param, in
    /// order) and returns the gradient w.r.t. the input.
    pub(crate) fn backward(
        &self,
        cache: &MlpCache,
        dlogits: &[f64],
        grads: &mut [Vec<f64>],
    ) -> Vec<f64> {
        let mut delta = dlogits.to_vec();
        for (i, (w, _)) in self.layers.iter().enumerate().rev() {
            let input = &cache.inputs[i];
            add_outer(&mut grads[2 * i], &delta, input);
            add_into(&mut grads[2 * i + 1], &delta);
            let mut upstream = w.transpose_mul(&delta);
            if i > 0 {
                // input[i] is tanh output of layer i-1
                for (u, &a) in upstream.iter_mut().zip(input) {
                    *u *= 1.0 - a * a;
                }
            }
            delta = upstream;
        }
        delta
    }
}

impl Parameterized for MlpModel {
    fn params(&self) -> Vec<&Param> {
        self.layers.iter().flat_map(|(w, b)| [w, b]).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers.iter_mut().flat_map(|(w, b)| [w, b]).collect()
    }
}

impl Trainable for MlpModel {
    type Input = [f64];

    fn class_count(&self) -> usize {
        self.class_count
    }

    fn loss(&self, input: &[f64], label: usize) -> Result<f64> {
        Ok(cross_entropy(&self.logits(input)?, label))
    }

    fn accumulate_gradients(
        &self,
        input: &[f64],
        label: usize,
        grads: &mut Gradients,
    ) -> Result<f64> {
        self.check_input(input)?;
        let cache = self.forward_cached(input);
        let loss = cross_entropy(&cache.logits, label);
        let mut dlogits = softmax(&cache.logits);
        dlogits[label] -= 1.0;
        self.backward(&cache, &dlogits, &mut grads.tensors);
        Ok(loss)
    }
}
