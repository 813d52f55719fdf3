use rand::Rng;

use super::matrix::DenseMatrix;
use crate::error::{check_dim, Error, Result};

/// Default width of the hidden layer.
pub const DEFAULT_HIDDEN: usize = 512;

/// Two-layer tanh projection from semantic space (dim `d`) to feature
/// space (dim `m`):
///
/// `Θ(e) = tanh(W2ᵀ · tanh(W1ᵀ · e + b1) + b2)`
///
/// The same layout is reused for gradients and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionNet {
    pub w1: DenseMatrix,
    pub b1: Vec<f64>,
    pub w2: DenseMatrix,
    pub b2: Vec<f64>,
}

/// Parameter-shaped gradient.
pub type Gradient = ProjectionNet;

/// Intermediate activations of one forward pass.
#[derive(Debug, Clone)]
pub struct Activations {
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

impl ProjectionNet {
    pub fn zeros(semantic_dim: usize, hidden: usize, feature_dim: usize) -> Self {
        Self {
            w1: DenseMatrix::zeros(semantic_dim, hidden),
            b1: vec![0.0; hidden],
            w2: DenseMatrix::zeros(hidden, feature_dim),
            b2: vec![0.0; feature_dim],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(
        semantic_dim: usize,
        hidden: usize,
        feature_dim: usize,
        rng: &mut R,
    ) -> Self {
        let mut net = Self::zeros(semantic_dim, hidden, feature_dim);
        glorot_fill(&mut net.w1, rng);
        glorot_fill(&mut net.w2, rng);
        net
    }

    pub fn from_parts(
        w1: DenseMatrix,
        b1: Vec<f64>,
        w2: DenseMatrix,
        b2: Vec<f64>,
    ) -> Result<Self> {
        check_dim("b1 length", w1.cols(), b1.len())?;
        check_dim("w2 rows", w1.cols(), w2.rows())?;
        check_dim("b2 length", w2.cols(), b2.len())?;
        let net = Self { w1, b1, w2, b2 };
        if !net.is_finite() {
            return Err(Error::NonFinite("network parameters"));
        }
        Ok(net)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.semantic_dim(), self.hidden_dim(), self.feature_dim())
    }

    pub fn semantic_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn feature_dim(&self) -> usize {
        self.w2.cols()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.semantic_dim() == other.semantic_dim()
            && self.hidden_dim() == other.hidden_dim()
            && self.feature_dim() == other.feature_dim()
    }

    pub fn num_params(&self) -> usize {
        self.segments().iter().map(|s| s.len()).sum()
    }

    /// Parameter blocks in storage order: W1, b1, W2, b2.
    pub fn segments(&self) -> [&[f64]; 4] {
        [self.w1.as_slice(), &self.b1, self.w2.as_slice(), &self.b2]
    }

    pub fn segments_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w1.as_mut_slice(),
            &mut self.b1,
            self.w2.as_mut_slice(),
            &mut self.b2,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.segments()
            .iter()
            .all(|s| s.iter().all(|x| x.is_finite()))
    }

    /// Squared Frobenius norm of the weight matrices (biases excluded).
    pub fn weight_sq_norm(&self) -> f64 {
        self.w1.sum_squares() + self.w2.sum_squares()
    }

    /// `self += scale · other`, block by block.
    pub fn add_scaled(&mut self, other: &Self, scale: f64) {
        for (dst, src) in self.segments_mut().into_iter().zip(other.segments()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    pub fn forward(&self, e: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_full(e)?.output)
    }

    pub fn forward_full(&self, e: &[f64]) -> Result<Activations> {
        check_dim("semantic vector", self.semantic_dim(), e.len())?;
        let mut hidden = self.w1.transpose_mul_vec(e, &self.b1);
        hidden.iter_mut().for_each(|h| *h = super::tanh(*h));
        let mut output = self.w2.transpose_mul_vec(&hidden, &self.b2);
        output.iter_mut().for_each(|o| *o = super::tanh(*o));
        Ok(Activations { hidden, output })
    }

    /// Gradient of `Σ_i ⟨upstream_i, Θ(e_i)⟩` with respect to every parameter.
    ///
    /// Each entry pairs a semantic input with the gradient of the scalar loss
    /// with respect to that input's projection. Entries are accumulated left
    /// to right.
    pub fn backward(&self, batch: &[(&[f64], &[f64])]) -> Result<Gradient> {
        if batch.is_empty() {
            return Err(Error::Invalid("backward called on an empty batch".into()));
        }
        let mut grad = self.zeros_like();
        for &(e, upstream) in batch {
            check_dim("upstream gradient", self.feature_dim(), upstream.len())?;
            if upstream.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFinite("upstream gradient"));
            }
            let act = self.forward_full(e)?;
            self.accumulate_backward(e, &act, upstream, &mut grad);
        }
        Ok(grad)
    }

    /// Backward pass for one input with precomputed activations.
    pub(crate) fn accumulate_backward(
        &self,
        e: &[f64],
        act: &Activations,
        upstream: &[f64],
        grad: &mut Gradient,
    ) {
        let delta_out: Vec<f64> = upstream
            .iter()
            .zip(&act.output)
            .map(|(g, o)| g * (1.0 - o * o))
            .collect();
        grad.w2.add_outer(&act.hidden, &delta_out);
        for (gb, d) in grad.b2.iter_mut().zip(&delta_out) {
            *gb += d;
        }
        let mut delta_hidden = self.w2.mul_vec(&delta_out);
        for (dh, h) in delta_hidden.iter_mut().zip(&act.hidden) {
            *dh *= 1.0 - h * h;
        }
        grad.w1.add_outer(e, &delta_hidden);
        for (gb, d) in grad.b1.iter_mut().zip(&delta_hidden) {
            *gb += d;
        }
    }
}

fn glorot_fill<R: Rng + ?Sized>(m: &mut DenseMatrix, rng: &mut R) {
    let bound = (6.0 / (m.rows() + m.cols()) as f64).sqrt();
    for w in m.as_mut_slice() {
        *w = rng.random_range(-bound..=bound);
    }
}
