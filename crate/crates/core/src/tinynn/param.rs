use rand::Rng;

/// A named dense tensor stored row-major. Vectors have `cols == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub value: Vec<f64>,
}

impl Param {
    pub fn zeros(name: impl Into<String>, rows: usize, cols: usize) -> Self {
        Self {
            name: name.into(),
            rows,
            cols,
            value: vec![0.0; rows * cols],
        }
    }

    /// Glorot-uniform initialisation, limit `sqrt(6 / (fan_in + fan_out))`.
    pub fn glorot<R: Rng + ?Sized>(
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        rng: &mut R,
    ) -> Self {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let value = (0..rows * cols)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        Self {
            name: name.into(),
            rows,
            cols,
            value,
        }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    /// `out = W x + b`, where `self` is `W` and `bias` has `rows` entries.
    pub(crate) fn affine(&self, x: &[f64], bias: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        self.value
            .chunks_exact(self.cols)
            .zip(bias)
            .map(|(row, b)| b + dot(row, x))
            .collect()
    }

    /// `W^T d`.
    pub(crate) fn transpose_mul(&self, d: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (row, &dv) in self.value.chunks_exact(self.cols).zip(d) {
            if dv != 0.0 {
                for (o, &w) in out.iter_mut().zip(row) {
                    *o += w * dv;
                }
            }
        }
        out
    }
}

/// Dot product with eight independent partial sums so the loop vectorizes.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let chunks = n / 8;
    for (ca, cb) in a.chunks_exact(8).zip(b.chunks_exact(8)) {
        for k in 0..8 {
            acc[k] += ca[k] * cb[k];
        }
    }
    let mut tail = 0.0;
    for i in chunks * 8..n {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[4]) + (acc[1] + acc[5]) + (acc[2] + acc[6]) + (acc[3] + acc[7]) + tail
}

/// `grad += d ⊗ x` for a `d.len() × x.len()` row-major matrix.
pub(crate) fn add_outer(grad: &mut [f64], d: &[f64], x: &[f64]) {
    for (row, &dv) in grad.chunks_exact_mut(x.len()).zip(d) {
        if dv != 0.0 {
            for (g, &xv) in row.iter_mut().zip(x) {
                *g += dv * xv;
            }
        }
    }
}

pub(crate) fn add_into(acc: &mut [f64], v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

/// Per-tensor gradients aligned with [`Parameterized::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn for_params(params: &[&Param]) -> Self {
        Self {
            tensors: params.iter().map(|p| vec![0.0; p.len()]).collect(),
        }
    }

    pub fn zero(&mut self) {
        for t in &mut self.tensors {
            t.iter_mut().for_each(|g| *g = 0.0);
        }
    }
}

/// Anything with an ordered list of trainable tensors.
pub trait Parameterized {
    fn params(&self) -> Vec<&Param>;
    fn params_mut(&mut self) -> Vec<&mut Param>;

    fn zero_gradients(&self) -> Gradients {
        Gradients::for_params(&self.params())
    }

    fn parameter_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}
