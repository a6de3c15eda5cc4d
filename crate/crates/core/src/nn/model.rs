use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::tape::{Gradients, Tape, Var};
use crate::error::{Error, Result};

/// One fully connected layer: `weight: out × in`, `bias: 1 × out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Matrix,
}

impl Dense {
    pub fn new(weight: Matrix, bias: Vec<f64>) -> Result<Self> {
        if weight.rows() != bias.len() {
            return Err(Error::Config(format!(
                "bias length {} does not match {} output units",
                bias.len(),
                weight.rows()
            )));
        }
        Ok(Self {
            weight,
            bias: Matrix::row_vector(&bias),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    /// Glorot-uniform weights, zero bias.
    fn glorot<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (input + output) as f64).sqrt();
        let data = (0..input * output)
            .map(|_| rng.gen_range(-limit..=limit))
            .collect();
        Self {
            weight: Matrix::from_vec(output, input, data),
            bias: Matrix::zeros(1, output),
        }
    }
}

/// Dense feed-forward classifier producing logits.
///
/// Hidden layers use the rectifier; the output layer is linear. With no hidden
/// layer the model is the multinomial linear classifier `Θx + b`, and
/// `layers()[0].weight[(k, d)]` is the coefficient of feature `d` for class `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    layers: Vec<Dense>,
}

impl MlpModel {
    /// Glorot-initialised model with the given hidden widths.
    pub fn new<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: &[usize],
        classes: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Config("input dimension must be positive".into()));
        }
        if classes < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {classes}")));
        }
        if hidden.contains(&0) {
            return Err(Error::Config("hidden layers must have at least one unit".into()));
        }
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(input_dim);
        widths.extend_from_slice(hidden);
        widths.push(classes);
        let layers = widths
            .windows(2)
            .map(|w| Dense::glorot(w[0], w[1], rng))
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("model needs at least one layer".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::Config(format!(
                    "layer {i} outputs {} units but layer {} expects {}",
                    pair[0].output_dim(),
                    i + 1,
                    pair[1].input_dim()
                )));
            }
        }
        for l in &layers {
            if l.bias.len() != l.output_dim() {
                return Err(Error::Config("bias length does not match layer width".into()));
            }
        }
        let classes = layers.last().map(Dense::output_dim).unwrap_or(0);
        if classes < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {classes}")));
        }
        Ok(Self { layers })
    }

    /// Linear classifier `logits = Θx + b`.
    pub fn linear(theta: Matrix, bias: Vec<f64>) -> Result<Self> {
        Self::from_layers(vec![Dense::new(theta, bias)?])
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn classes(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    /// Number of hidden layers.
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    fn check_input(&self, width: usize) -> Result<()> {
        if width != self.input_dim() {
            return Err(Error::Config(format!(
                "input has {width} features, model expects {}",
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Logits for a single input.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x.len())?;
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut h = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let w = &layer.weight;
            let mut out = layer.bias.as_slice().to_vec();
            for (o, row) in out.iter_mut().zip(w.as_slice().chunks_exact(w.cols())) {
                for (a, b) in h.iter().zip(row) {
                    *o += a * b;
                }
            }
            if i != last {
                for v in &mut out {
                    *v = v.max(0.0);
                }
            }
            h = out;
        }
        h
    }

    /// Logits for every row of `x`.
    pub fn forward_batch(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x.cols())?;
        let last = self.layers.len() - 1;
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            h = Matrix::affine(&h, &layer.weight, &layer.bias);
            if i != last {
                h = h.map(|v| v.max(0.0));
            }
        }
        Ok(h)
    }

    /// Predicted class (first index on ties).
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    pub fn predict_batch(&self, x: &Matrix) -> Result<Vec<usize>> {
        let logits = self.forward_batch(x)?;
        Ok((0..logits.rows()).map(|i| argmax(logits.row(i))).collect())
    }

    /// Fraction of rows whose prediction equals the label.
    pub fn accuracy(&self, x: &Matrix, y: &[usize]) -> Result<f64> {
        if x.rows() == 0 {
            return Err(Error::Input("accuracy of an empty set".into()));
        }
        let pred = self.predict_batch(x)?;
        let hits = pred.iter().zip(y).filter(|(p, t)| p == t).count();
        Ok(hits as f64 / x.rows() as f64)
    }

    /// Records the parameters on `tape`, as leaves if `trainable`, else as constants.
    pub fn params_on<'t>(&self, tape: &'t Tape, trainable: bool) -> ParamVars<'t> {
        let record = |m: &Matrix| {
            if trainable {
                tape.leaf(m.clone())
            } else {
                tape.constant(m.clone())
            }
        };
        ParamVars {
            layers: self
                .layers
                .iter()
                .map(|l| (record(&l.weight), record(&l.bias)))
                .collect(),
        }
    }

    /// Mutable views of all parameter tensors in a fixed order
    /// (weight, bias per layer).
    pub fn parameters_mut(&mut self) -> Vec<&mut Matrix> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weight, &mut l.bias])
            .collect()
    }

    pub fn parameters(&self) -> Vec<&Matrix> {
        self.layers
            .iter()
            .flat_map(|l| [&l.weight, &l.bias])
            .collect()
    }
}

/// Model parameters recorded on a tape.
#[derive(Debug, Clone)]
pub struct ParamVars<'t> {
    layers: Vec<(Var<'t>, Var<'t>)>,
}

impl<'t> ParamVars<'t> {
    /// Logits for the rows of `x`.
    pub fn forward(&self, x: Var<'t>) -> Var<'t> {
        let last = self.layers.len() - 1;
        let mut h = x;
        for (i, &(w, b)) in self.layers.iter().enumerate() {
            h = h.affine(w, b);
            if i != last {
                h = h.relu();
            }
        }
        h
    }

    /// Extracts parameter-shaped gradients in [`MlpModel::parameters`] order.
    pub fn gradients(&self, grads: &Gradients) -> ModelGrads {
        ModelGrads(
            self.layers
                .iter()
                .flat_map(|&(w, b)| [grads.wrt(w), grads.wrt(b)])
                .collect(),
        )
    }
}

/// Gradients shaped like [`MlpModel::parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads(pub Vec<Matrix>);

impl ModelGrads {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self(
            model
                .parameters()
                .into_iter()
                .map(|m| Matrix::zeros(m.rows(), m.cols()))
                .collect(),
        )
    }

    pub fn add_scaled(&mut self, other: &ModelGrads, scale: f64) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            a.add_scaled(b, scale);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, g| m.max(g.max_abs()))
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.0.iter().flat_map(|m| m.as_slice().iter().copied()).collect()
    }
}

/// Index of the largest entry, first on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
