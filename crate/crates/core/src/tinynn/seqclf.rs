use rand::Rng;

use super::loss::{cross_entropy, softmax};
use super::lstm::BiLstmEncoder;
use super::mlp::{MlpConfig, MlpModel};
use super::param::{add_into, Gradients, Param, Parameterized};
use super::train::Trainable;
use super::{NnError, Result};

/// One position of an encoder input sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum ContextSlot {
    /// A known word vector.
    Vector(Vec<f64>),
    /// Out-of-vocabulary token; replaced by the model's trainable UNK vector.
    Unknown,
    /// Edge padding; a constant zero vector.
    Padding,
}

/// BiLSTM encoder feeding an MLP, with a trainable UNK embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmMlp {
    encoder: BiLstmEncoder,
    mlp: MlpModel,
    unk: Param,
}

struct Cache {
    encoder: super::lstm::BiTrace,
    mlp: super::mlp::MlpCache,
}

impl BiLstmMlp {
    /// UNK starts at zero.
    pub fn new<R: Rng + ?Sized>(
        input_dim: usize,
        lstm_hidden: usize,
        class_count: usize,
        mlp: MlpConfig,
        rng: &mut R,
    ) -> Self {
        let encoder = BiLstmEncoder::new(input_dim, lstm_hidden, rng);
        let mlp = MlpModel::with_prefix("mlp", 2 * lstm_hidden, class_count, mlp, rng);
        Self {
            encoder,
            mlp,
            unk: Param::zeros("unk", input_dim, 1),
        }
    }

    pub fn from_parts(encoder: BiLstmEncoder, mlp: MlpModel, unk: Param) -> Result<Self> {
        if mlp.input_dim() != encoder.output_dim() || unk.len() != encoder.input_dim() {
            return Err(NnError::Shape(
                "encoder, MLP and UNK shapes do not chain".into(),
            ));
        }
        Ok(Self { encoder, mlp, unk })
    }

    pub fn encoder(&self) -> &BiLstmEncoder {
        &self.encoder
    }

    pub fn mlp(&self) -> &MlpModel {
        &self.mlp
    }

    pub fn encoder_mut(&mut self) -> &mut BiLstmEncoder {
        &mut self.encoder
    }

    pub fn unk_vector(&self) -> &[f64] {
        &self.unk.value
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.input_dim()
    }

    fn materialize(&self, slots: &[ContextSlot]) -> Result<Vec<Vec<f64>>> {
        let dim = self.input_dim();
        slots
            .iter()
            .map(|slot| match slot {
                ContextSlot::Vector(v) if v.len() == dim => Ok(v.clone()),
                ContextSlot::Vector(v) => Err(NnError::Shape(format!(
                    "context vector has dim {}, expected {dim}",
                    v.len()
                ))),
                ContextSlot::Unknown => Ok(self.unk.value.clone()),
                ContextSlot::Padding => Ok(vec![0.0; dim]),
            })
            .collect()
    }

    fn forward_cached(&self, slots: &[ContextSlot]) -> Result<Cache> {
        let seq = self.materialize(slots)?;
        let (encoding, encoder) = self.encoder.encode_cached(&seq);
        let mlp = self.mlp.forward_cached(&encoding);
        Ok(Cache { encoder, mlp })
    }

    pub fn forward(&self, slots: &[ContextSlot]) -> Result<Vec<f64>> {
        Ok(softmax(&self.forward_cached(slots)?.mlp.logits))
    }
}

impl Parameterized for BiLstmMlp {
    /// Encoder tensors, then MLP tensors, then UNK.
    fn params(&self) -> Vec<&Param> {
        let mut p = self.encoder.params();
        p.extend(self.mlp.params());
        p.push(&self.unk);
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = self.encoder.params_mut();
        p.extend(self.mlp.params_mut());
        p.push(&mut self.unk);
        p
    }
}

impl Trainable for BiLstmMlp {
    type Input = [ContextSlot];

    fn class_count(&self) -> usize {
        self.mlp.class_count()
    }

    fn loss(&self, input: &[ContextSlot], label: usize) -> Result<f64> {
        Ok(cross_entropy(
            &self.forward_cached(input)?.mlp.logits,
            label,
        ))
    }

    fn accumulate_gradients(
        &self,
        input: &[ContextSlot],
        label: usize,
        grads: &mut Gradients,
    ) -> Result<f64> {
        let cache = self.forward_cached(input)?;
        let loss = cross_entropy(&cache.mlp.logits, label);
        let mut dlogits = softmax(&cache.mlp.logits);
        dlogits[label] -= 1.0;
        let (enc_grads, rest) = grads.tensors.split_at_mut(4);
        let (mlp_grads, unk_grad) = rest.split_at_mut(rest.len() - 1);
        let d_encoding = self.mlp.backward(&cache.mlp, &dlogits, mlp_grads);
        let d_inputs = self
            .encoder
            .backward(&cache.encoder, &d_encoding, enc_grads);
        for (slot, d) in input.iter().zip(&d_inputs) {
            if matches!(slot, ContextSlot::Unknown) {
                add_into(&mut unk_grad[0], d);
            }
        }
        Ok(loss)
    }
}
