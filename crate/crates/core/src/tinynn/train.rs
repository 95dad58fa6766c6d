use std::borrow::Borrow;

use rand::seq::SliceRandom;

use super::adam::{AdamConfig, AdamState};
use super::param::{Gradients, Parameterized};
use super::{NnError, Result};
use crate::rng;

/// A classifier trained with softmax cross-entropy.
pub trait Trainable: Parameterized {
    type Input: ?Sized;

    fn class_count(&self) -> usize;

    /// Forward-only loss.
    fn loss(&self, input: &Self::Input, label: usize) -> Result<f64>;

    /// Adds d(loss)/d(params) into `grads` and returns the loss.
    fn accumulate_gradients(
        &self,
        input: &Self::Input,
        label: usize,
        grads: &mut Gradients,
    ) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainStats {
    pub steps: usize,
    /// Mean loss per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Per-example Adam training. The visiting order is reshuffled every epoch from
/// a generator seeded with `seed`, so the result is a pure function of the
/// initial model, the data and the seed.
pub fn train<M, X>(
    model: &mut M,
    examples: &[(X, usize)],
    epochs: usize,
    seed: u64,
    adam: AdamConfig,
) -> Result<TrainStats>
where
    M: Trainable,
    X: Borrow<M::Input>,
{
    let class_count = model.class_count();
    if let Some((_, label)) = examples.iter().find(|(_, l)| *l >= class_count) {
        return Err(NnError::Label {
            label: *label,
            class_count,
        });
    }
    let mut optimizer = AdamState::new(adam, &model.params());
    let mut grads = model.zero_gradients();
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = rng::seeded(seed);
    let mut step = 0;
    let mut epoch_losses = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let (input, label) = &examples[i];
            grads.zero();
            let loss = model.accumulate_gradients(input.borrow(), *label, &mut grads)?;
            if !loss.is_finite() {
                return Err(NnError::Divergence { step, epoch, loss });
            }
            total += loss;
            optimizer.step(&mut model.params_mut(), &grads);
            step += 1;
        }
        epoch_losses.push(if examples.is_empty() {
            0.0
        } else {
            total / examples.len() as f64
        });
    }
    Ok(TrainStats {
        steps: step,
        epoch_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::tinynn::{MlpConfig, MlpModel};
    use rand::Rng;

    fn clusters(seed: u64) -> Vec<(Vec<f64>, usize)> {
        let mut rng = seeded(seed);
        (0..100)
            .map(|i| {
                let label = i % 2;
                let centre = if label == 0 { -2.0 } else { 2.0 };
                let x = vec![
                    centre + rng.random_range(-1.0..1.0),
                    rng.random_range(-3.0..3.0),
                ];
                (x, label)
            })
            .collect()
    }

    #[test]
    fn separable_clusters_fit_perfectly() {
        let data = clusters(4);
        // x0 = 0 separates the classes: every class-0 point has x0 < -1, class-1 has x0 > 1
        assert!(data.iter().all(|(x, l)| (x[0] > 0.0) == (*l == 1)));
        let mut model = MlpModel::new(2, 2, MlpConfig::default(), &mut seeded(5));
        train(&mut model, &data, 3, 6, AdamConfig::default()).unwrap();
        let correct = data
            .iter()
            .filter(|(x, l)| crate::tinynn::argmax(&model.forward(x).unwrap()) == *l)
            .count();
        assert_eq!(correct, data.len());
    }

    #[test]
    fn zero_epochs_is_identity() {
        let data = clusters(1);
        let initial = MlpModel::new(2, 2, MlpConfig::default(), &mut seeded(5));
        let mut model = initial.clone();
        let stats = train(&mut model, &data, 0, 6, AdamConfig::default()).unwrap();
        assert_eq!(stats.steps, 0);
        assert_eq!(model, initial);
    }

    #[test]
    fn reruns_are_bit_identical() {
        let data = clusters(2);
        let run = || {
            let mut model = MlpModel::new(2, 2, MlpConfig::default(), &mut seeded(8));
            train(&mut model, &data, 3, 9, AdamConfig::default()).unwrap();
            model
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn divergence_is_reported() {
        let mut model = MlpModel::new(2, 2, MlpConfig::default(), &mut seeded(8));
        let data = vec![(vec![f64::NAN, 0.0], 0)];
        assert!(matches!(
            train(&mut model, &data, 1, 0, AdamConfig::default()),
            Err(NnError::Divergence { step: 0, .. })
        ));
        let bad_label = vec![(vec![0.0, 0.0], 5)];
        assert!(matches!(
            train(&mut model, &bad_label, 1, 0, AdamConfig::default()),
            Err(NnError::Label { label: 5, .. })
        ));
    }
}
