use homobench::tinynn::{
    grad_check, softmax, BiLstmMlp, ContextSlot, Gradients, MlpConfig, MlpModel, NnError, Param,
    Parameterized, Trainable,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

fn randomize<M: Parameterized>(model: &mut M, rng: &mut ChaCha8Rng, scale: f64) {
    for p in model.params_mut() {
        p.value
            .iter_mut()
            .for_each(|v| *v = rng.random_range(-scale..scale));
    }
}

/// Independent straight-line forward pass: explicit index loops over the
/// parameter tensors, no shared helpers.
fn reference_mlp_probs(model: &MlpModel, x: &[f64]) -> Vec<f64> {
    let params = model.params();
    let layers = params.len() / 2;
    let mut h = x.to_vec();
    for l in 0..layers {
        let (w, b) = (params[2 * l], params[2 * l + 1]);
        let mut z = vec![0.0; w.rows];
        for r in 0..w.rows {
            let mut s = b.value[r];
            for c in 0..w.cols {
                s += w.value[r * w.cols + c] * h[c];
            }
            z[r] = if l + 1 < layers { s.tanh() } else { s };
        }
        h = z;
    }
    let max = h.iter().cloned().fold(f64::MIN, f64::max);
    let e: Vec<f64> = h.iter().map(|z| (z - max).exp()).collect();
    let t: f64 = e.iter().sum();
    e.into_iter().map(|v| v / t).collect()
}

#[test]
fn mlp_forward_matches_reference() {
    for seed in 0..20 {
        let mut r = rng(seed);
        let model = MlpModel::new(7, 4, MlpConfig::default(), &mut r);
        let x = random_vec(&mut r, 7, 2.0);
        let got = model.forward(&x).unwrap();
        let want = reference_mlp_probs(&model, &x);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((got.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn softmax_survives_huge_logits() {
    let p = softmax(&[1e300, -1e300, 5.0]);
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert_eq!(p[0], 1.0);
}

#[test]
fn mlp_gradients_pass() {
    let mut r = rng(42);
    let model = MlpModel::new(
        6,
        3,
        MlpConfig {
            hidden_size: 5,
            hidden_layers: 2,
        },
        &mut r,
    );
    let x = random_vec(&mut r, 6, 1.0);
    let report = grad_check(&model, &x, 1, 1e-4).unwrap();
    assert_eq!(report.checked, model.parameter_count());
}

#[test]
fn composite_gradients_pass_on_length_three() {
    let mut r = rng(7);
    let mut model = BiLstmMlp::new(
        4,
        3,
        2,
        MlpConfig {
            hidden_size: 5,
            hidden_layers: 2,
        },
        &mut r,
    );
    randomize(&mut model, &mut r, 0.5);
    let seq = vec![
        ContextSlot::Vector(random_vec(&mut r, 4, 1.0)),
        ContextSlot::Unknown,
        ContextSlot::Padding,
    ];
    grad_check(&model, &seq, 0, 1e-4).unwrap();
}

/// Wraps a model and doubles the gradient of one named tensor.
#[derive(Clone)]
struct CorruptBias {
    inner: MlpModel,
    target: String,
}

impl Parameterized for CorruptBias {
    fn params(&self) -> Vec<&Param> {
        self.inner.params()
    }
    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.inner.params_mut()
    }
}

impl Trainable for CorruptBias {
    type Input = [f64];
    fn class_count(&self) -> usize {
        self.inner.class_count()
    }
    fn loss(&self, input: &[f64], label: usize) -> homobench::tinynn::Result<f64> {
        self.inner.loss(input, label)
    }
    fn accumulate_gradients(
        &self,
        input: &[f64],
        label: usize,
        grads: &mut Gradients,
    ) -> homobench::tinynn::Result<f64> {
        let loss = self.inner.accumulate_gradients(input, label, grads)?;
        let k = self
            .params()
            .iter()
            .position(|p| p.name == self.target)
            .unwrap();
        grads.tensors[k].iter_mut().for_each(|g| *g *= 2.0);
        Ok(loss)
    }
}

#[test]
fn corrupted_bias_gradient_is_caught() {
    let mut r = rng(3);
    let inner = MlpModel::new(
        4,
        3,
        MlpConfig {
            hidden_size: 5,
            hidden_layers: 2,
        },
        &mut r,
    );
    let target = "mlp.layer2.bias".to_string();
    let model = CorruptBias {
        inner,
        target: target.clone(),
    };
    let x = random_vec(&mut r, 4, 1.0);
    match grad_check(&model, &x, 2, 1e-4) {
        Err(NnError::GradCheck { report, .. }) => {
            assert!(!report.worst.is_empty());
            assert!(report.worst.iter().all(|m| m.param == target));
        }
        other => panic!("expected a gradient-check failure, got {other:?}"),
    }
}
