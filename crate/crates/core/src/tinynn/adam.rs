use serde::{Deserialize, Serialize};

use super::param::{Gradients, Param};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moments for one model.
///
/// A tensor whose gradient is exactly zero for a step is skipped entirely (no
/// update, no moment decay), the same treatment sparse lookup parameters such
/// as the UNK vector get when they are not used by an example.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    config: AdamConfig,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    /// Per-tensor step counters, for bias correction of skipped tensors.
    steps: Vec<u64>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &[&Param]) -> Self {
        Self {
            config,
            first: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            second: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            steps: vec![0; params.len()],
        }
    }

    pub fn config(&self) -> AdamConfig {
        self.config
    }

    pub fn step(&mut self, params: &mut [&mut Param], grads: &Gradients) {
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        for (k, (param, grad)) in params.iter_mut().zip(&grads.tensors).enumerate() {
            if grad.iter().all(|&g| g == 0.0) {
                continue;
            }
            self.steps[k] += 1;
            let t = self.steps[k] as i32;
            let c1 = 1.0 - beta1.powi(t);
            let c2 = 1.0 - beta2.powi(t);
            let m = &mut self.first[k];
            let v = &mut self.second[k];
            for (((w, &g), m), v) in param
                .value
                .iter_mut()
                .zip(grad)
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *w -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = Param {
            name: "w".into(),
            rows: 2,
            cols: 1,
            value: vec![0.5, -0.25],
        };
        let before = p.clone();
        let mut adam = AdamState::new(AdamConfig::default(), &[&p]);
        let nudge = Gradients {
            tensors: vec![vec![1.0, -1.0]],
        };
        adam.step(&mut [&mut p], &nudge);
        assert_ne!(p, before);
        let moved = p.clone();
        adam.step(
            &mut [&mut p],
            &Gradients {
                tensors: vec![vec![0.0, 0.0]],
            },
        );
        assert_eq!(p, moved);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = Param::zeros("w", 3, 1);
        let mut adam = AdamState::new(AdamConfig::default(), &[&p]);
        adam.step(
            &mut [&mut p],
            &Gradients {
                tensors: vec![vec![2.0, -0.5, 1e-3]],
            },
        );
        // bias-corrected first step is lr * g / (|g| + eps)
        for (w, g) in p.value.iter().zip([2.0f64, -0.5, 1e-3]) {
            let expected = -0.001 * g / (g.abs() + 1e-8);
            assert!((w - expected).abs() < 1e-15);
        }
    }
}
