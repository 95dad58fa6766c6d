use rand::Rng;

use super::param::{add_into, add_outer, Param, Parameterized};
use super::{NnError, Result};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One LSTM direction. Gate rows are stacked as input, forget, candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    input_dim: usize,
    hidden_dim: usize,
    /// `4h × (input + h)`, acting on `[x_t ; h_{t-1}]`.
    weight: Param,
    bias: Param,
}

/// Per-step values needed for backpropagation through time.
struct StepCache {
    /// `[x_t ; h_{t-1}]`
    joint: Vec<f64>,
    /// post-activation gates, `4h`
    gates: Vec<f64>,
    c_prev: Vec<f64>,
    tanh_c: Vec<f64>,
}

pub(crate) struct CellTrace {
    steps: Vec<StepCache>,
}

impl LstmCell {
    pub fn new<R: Rng + ?Sized>(
        name: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Self {
        Self {
            input_dim,
            hidden_dim,
            weight: Param::glorot(
                format!("{name}.weight"),
                4 * hidden_dim,
                input_dim + hidden_dim,
                rng,
            ),
            bias: Param::zeros(format!("{name}.bias"), 4 * hidden_dim, 1),
        }
    }

    pub(crate) fn from_params(weight: Param, bias: Param) -> Result<Self> {
        if !weight.rows.is_multiple_of(4) || bias.rows != weight.rows || bias.cols != 1 {
            return Err(NnError::Checkpoint(format!(
                "bad LSTM tensors {}/{}",
                weight.name, bias.name
            )));
        }
        let hidden_dim = weight.rows / 4;
        let input_dim = weight.cols.checked_sub(hidden_dim).ok_or_else(|| {
            NnError::Checkpoint(format!("LSTM weight {} too narrow", weight.name))
        })?;
        Ok(Self {
            input_dim,
            hidden_dim,
            weight,
            bias,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    /// Runs the cell over `inputs` in the given order from zero state; returns
    /// the final hidden state and the trace for backprop.
    pub(crate) fn run<'a, I>(&self, inputs: I) -> (Vec<f64>, CellTrace)
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let h_dim = self.hidden_dim;
        let mut h = vec![0.0; h_dim];
        let mut c = vec![0.0; h_dim];
        let mut steps = Vec::new();
        for x in inputs {
            let mut joint = Vec::with_capacity(self.input_dim + h_dim);
            joint.extend_from_slice(x);
            joint.extend_from_slice(&h);
            let mut gates = self.weight.affine(&joint, &self.bias.value);
            for (k, g) in gates.iter_mut().enumerate() {
                *g = if (2 * h_dim..3 * h_dim).contains(&k) {
                    g.tanh()
                } else {
                    sigmoid(*g)
                };
            }
            let (i, rest) = gates.split_at(h_dim);
            let (f, rest) = rest.split_at(h_dim);
            let (g, o) = rest.split_at(h_dim);
            let c_new: Vec<f64> = (0..h_dim).map(|j| f[j] * c[j] + i[j] * g[j]).collect();
            let tanh_c: Vec<f64> = c_new.iter().map(|v| v.tanh()).collect();
            h = (0..h_dim).map(|j| o[j] * tanh_c[j]).collect();
            steps.push(StepCache {
                joint,
                gates,
                c_prev: std::mem::replace(&mut c, c_new),
                tanh_c,
            });
        }
        (h, CellTrace { steps })
    }

    /// Backpropagates `d_final` (gradient of the final hidden state). Adds the
    /// weight/bias gradients and returns per-step input gradients in run order.
    pub(crate) fn backward(
        &self,
        trace: &CellTrace,
        d_final: &[f64],
        d_weight: &mut [f64],
        d_bias: &mut [f64],
    ) -> Vec<Vec<f64>> {
        let h_dim = self.hidden_dim;
        let mut dh = d_final.to_vec();
        let mut dc = vec![0.0; h_dim];
        let mut d_inputs = vec![Vec::new(); trace.steps.len()];
        for (t, step) in trace.steps.iter().enumerate().rev() {
            let (i, rest) = step.gates.split_at(h_dim);
            let (f, rest) = rest.split_at(h_dim);
            let (g, o) = rest.split_at(h_dim);
            let mut d_pre = vec![0.0; 4 * h_dim];
            for j in 0..h_dim {
                let tc = step.tanh_c[j];
                let d_o = dh[j] * tc;
                let dc_j = dc[j] + dh[j] * o[j] * (1.0 - tc * tc);
                d_pre[j] = dc_j * g[j] * i[j] * (1.0 - i[j]);
                d_pre[h_dim + j] = dc_j * step.c_prev[j] * f[j] * (1.0 - f[j]);
                d_pre[2 * h_dim + j] = dc_j * i[j] * (1.0 - g[j] * g[j]);
                d_pre[3 * h_dim + j] = d_o * o[j] * (1.0 - o[j]);
                dc[j] = dc_j * f[j];
            }
            add_outer(d_weight, &d_pre, &step.joint);
            add_into(d_bias, &d_pre);
            let mut d_joint = self.weight.transpose_mul(&d_pre);
            dh = d_joint.split_off(self.input_dim);
            d_inputs[t] = d_joint;
        }
        d_inputs
    }
}

impl Parameterized for LstmCell {
    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }
}

/// Bidirectional LSTM; the encoding is `[final forward h ; final backward h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmEncoder {
    forward: LstmCell,
    backward: LstmCell,
}

pub(crate) struct BiTrace {
    forward: CellTrace,
    backward: CellTrace,
}

impl BiLstmEncoder {
    pub fn new<R: Rng + ?Sized>(input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        Self {
            forward: LstmCell::new("bilstm.forward", input_dim, hidden_dim, rng),
            backward: LstmCell::new("bilstm.backward", input_dim, hidden_dim, rng),
        }
    }

    pub fn from_cells(forward: LstmCell, backward: LstmCell) -> Result<Self> {
        if forward.input_dim != backward.input_dim || forward.hidden_dim != backward.hidden_dim {
            return Err(NnError::Shape(
                "forward and backward cells differ in shape".into(),
            ));
        }
        Ok(Self { forward, backward })
    }

    pub fn forward_cell(&self) -> &LstmCell {
        &self.forward
    }

    pub fn backward_cell(&self) -> &LstmCell {
        &self.backward
    }

    /// Copies the forward cell's parameters into the backward cell.
    pub fn tie_directions(&mut self) {
        self.backward
            .weight
            .value
            .clone_from(&self.forward.weight.value);
        self.backward
            .bias
            .value
            .clone_from(&self.forward.bias.value);
    }

    pub fn input_dim(&self) -> usize {
        self.forward.input_dim
    }

    pub fn output_dim(&self) -> usize {
        2 * self.forward.hidden_dim
    }

    fn check(&self, sequence: &[Vec<f64>]) -> Result<()> {
        if let Some(x) = sequence.iter().find(|x| x.len() != self.input_dim()) {
            return Err(NnError::Shape(format!(
                "BiLSTM expects {}-d inputs, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        Ok(())
    }

    /// Encodes a sequence. An empty sequence encodes to the zero vector.
    pub fn encode(&self, sequence: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.check(sequence)?;
        Ok(self.encode_cached(sequence).0)
    }

    pub(crate) fn encode_cached(&self, sequence: &[Vec<f64>]) -> (Vec<f64>, BiTrace) {
        let (hf, forward) = self.forward.run(sequence.iter().map(Vec::as_slice));
        let (hb, backward) = self.backward.run(sequence.iter().rev().map(Vec::as_slice));
        let mut out = hf;
        out.extend(hb);
        (out, BiTrace { forward, backward })
    }

    /// `grads` holds [fw weight, fw bias, bw weight, bw bias]. Returns input
    /// gradients in sequence order.
    pub(crate) fn backward(
        &self,
        trace: &BiTrace,
        d_out: &[f64],
        grads: &mut [Vec<f64>],
    ) -> Vec<Vec<f64>> {
        let h = self.forward.hidden_dim;
        let n = trace.forward.steps.len();
        let (fw, bw) = grads.split_at_mut(2);
        let (fw_w, fw_b) = fw.split_at_mut(1);
        let (bw_w, bw_b) = bw.split_at_mut(1);
        let mut d_in =
            self.forward
                .backward(&trace.forward, &d_out[..h], &mut fw_w[0], &mut fw_b[0]);
        let d_rev =
            self.backward
                .backward(&trace.backward, &d_out[h..], &mut bw_w[0], &mut bw_b[0]);
        for (t, d) in d_rev.into_iter().enumerate() {
            add_into(&mut d_in[n - 1 - t], &d);
        }
        d_in
    }
}

impl Parameterized for BiLstmEncoder {
    fn params(&self) -> Vec<&Param> {
        vec![
            &self.forward.weight,
            &self.forward.bias,
            &self.backward.weight,
            &self.backward.bias,
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![
            &mut self.forward.weight,
            &mut self.forward.bias,
            &mut self.backward.weight,
            &mut self.backward.bias,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    /// Straight-line LSTM recurrence written independently of `LstmCell::run`.
    fn reference_lstm(cell: &LstmCell, seq: &[Vec<f64>]) -> Vec<f64> {
        let h_dim = cell.hidden_dim;
        let cols = cell.input_dim + h_dim;
        let w = |r: usize, c: usize| cell.weight.value[r * cols + c];
        let mut h = vec![0.0; h_dim];
        let mut c = vec![0.0; h_dim];
        for x in seq {
            let mut next_h = vec![0.0; h_dim];
            let mut next_c = vec![0.0; h_dim];
            for j in 0..h_dim {
                let pre = |gate: usize| {
                    let r = gate * h_dim + j;
                    let mut s = cell.bias.value[r];
                    for (k, xv) in x.iter().enumerate() {
                        s += w(r, k) * xv;
                    }
                    for (k, hv) in h.iter().enumerate() {
                        s += w(r, cell.input_dim + k) * hv;
                    }
                    s
                };
                let i = 1.0 / (1.0 + (-pre(0)).exp());
                let f = 1.0 / (1.0 + (-pre(1)).exp());
                let g = pre(2).tanh();
                let o = 1.0 / (1.0 + (-pre(3)).exp());
                next_c[j] = f * c[j] + i * g;
                next_h[j] = o * next_c[j].tanh();
            }
            h = next_h;
            c = next_c;
        }
        h
    }

    fn random_seq(len: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = seeded(seed);
        (0..len)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    }

    #[test]
    fn matches_reference_recurrence() {
        for seed in 0..5 {
            let mut enc = BiLstmEncoder::new(6, 5, &mut seeded(seed));
            for p in enc.params_mut() {
                let mut rng = seeded(seed + 100);
                p.value
                    .iter_mut()
                    .for_each(|v| *v = rng.random_range(-0.8..0.8));
            }
            let seq = random_seq(4, 6, seed + 7);
            let out = enc.encode(&seq).unwrap();
            let fwd = reference_lstm(enc.forward_cell(), &seq);
            let rev: Vec<_> = seq.iter().rev().cloned().collect();
            let bwd = reference_lstm(enc.backward_cell(), &rev);
            let expected: Vec<f64> = fwd.into_iter().chain(bwd).collect();
            for (a, b) in out.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn single_element_sees_same_input() {
        let mut enc = BiLstmEncoder::new(3, 4, &mut seeded(9));
        enc.tie_directions();
        let out = enc.encode(&random_seq(1, 3, 1)).unwrap();
        assert_eq!(out[..4], out[4..]);
    }

    #[test]
    fn reversal_swaps_tied_directions() {
        let mut enc = BiLstmEncoder::new(3, 4, &mut seeded(10));
        enc.tie_directions();
        let seq = random_seq(5, 3, 2);
        let rev: Vec<_> = seq.iter().rev().cloned().collect();
        let a = enc.encode(&seq).unwrap();
        let b = enc.encode(&rev).unwrap();
        assert_eq!(a[..4], b[4..]);
        assert_eq!(a[4..], b[..4]);
    }

    #[test]
    fn empty_sequence_is_zero() {
        let enc = BiLstmEncoder::new(100, 100, &mut seeded(0));
        let out = enc.encode(&[]).unwrap();
        assert_eq!(out, vec![0.0; 200]);
        assert!(enc.encode(&[vec![0.0; 3]]).is_err());
    }
}
