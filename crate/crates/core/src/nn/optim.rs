use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::model::{MlpModel, ModelGrads};
use crate::error::{Error, Result};

/// Update rule and its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OptimizerKind {
    Sgd { learning_rate: f64 },
    Adam {
        learning_rate: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
}

impl OptimizerKind {
    /// Adam with the usual constants (β1 = 0.9, β2 = 0.999, ε = 1e-8).
    pub fn adam(learning_rate: f64) -> Self {
        OptimizerKind::Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn sgd(learning_rate: f64) -> Self {
        OptimizerKind::Sgd { learning_rate }
    }
}

/// Optimizer with per-parameter moment buffers (Adam only).
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    steps: u64,
    first: Vec<Matrix>,
    second: Vec<Matrix>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind) -> Self {
        Self {
            kind,
            steps: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Applies one update to `params` in place.
    pub fn step(&mut self, params: &mut [&mut Matrix], grads: &[Matrix]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::Config(format!(
                "{} parameter tensors but {} gradients",
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() {
                return Err(Error::Config(format!(
                    "gradient {i} has shape {:?}, parameter has {:?}",
                    g.shape(),
                    p.shape()
                )));
            }
        }
        match self.kind {
            OptimizerKind::Sgd { learning_rate } => {
                for (p, g) in params.iter_mut().zip(grads) {
                    p.add_scaled(g, -learning_rate);
                }
            }
            OptimizerKind::Adam {
                learning_rate,
                beta1,
                beta2,
                epsilon,
            } => {
                if self.first.is_empty() {
                    self.first = grads.iter().map(|g| Matrix::zeros(g.rows(), g.cols())).collect();
                    self.second = self.first.clone();
                } else if self.first.len() != grads.len()
                    || self.first.iter().zip(grads).any(|(m, g)| m.shape() != g.shape())
                {
                    return Err(Error::Config(
                        "parameter shapes changed between optimizer steps".into(),
                    ));
                }
                let t = (self.steps + 1) as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for ((p, g), (m, v)) in params
                    .iter_mut()
                    .zip(grads)
                    .zip(self.first.iter_mut().zip(self.second.iter_mut()))
                {
                    let ps = p.as_mut_slice();
                    let ms = m.as_mut_slice();
                    let vs = v.as_mut_slice();
                    for (((pi, &gi), mi), vi) in ps.iter_mut().zip(g.as_slice()).zip(ms).zip(vs) {
                        *mi = beta1 * *mi + (1.0 - beta1) * gi;
                        *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                        let m_hat = *mi / c1;
                        let v_hat = *vi / c2;
                        *pi -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
                    }
                }
            }
        }
        self.steps += 1;
        Ok(())
    }

    /// Updates all parameters of `model`.
    pub fn step_model(&mut self, model: &mut MlpModel, grads: &ModelGrads) -> Result<()> {
        let mut params = model.parameters_mut();
        self.step(&mut params, &grads.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_definition() {
        let mut p = Matrix::scalar(1.0);
        let mut opt = Optimizer::new(OptimizerKind::sgd(0.25));
        opt.step(&mut [&mut p], &[Matrix::scalar(2.0)]).unwrap();
        assert_eq!(p.get(0, 0), 0.5);
        assert_eq!(opt.steps(), 1);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        for kind in [OptimizerKind::sgd(0.25), OptimizerKind::adam(0.001)] {
            let mut p = Matrix::row_vector(&[1.0, -2.0]);
            let mut opt = Optimizer::new(kind);
            opt.step(&mut [&mut p], &[Matrix::zeros(1, 2)]).unwrap();
            assert_eq!(p.as_slice(), &[1.0, -2.0]);
        }
    }

    #[test]
    fn shape_mismatch_is_config_error() {
        let mut p = Matrix::scalar(1.0);
        let mut opt = Optimizer::new(OptimizerKind::adam(0.1));
        let err = opt.step(&mut [&mut p], &[Matrix::zeros(1, 2)]).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    /// Independent scalar Adam for f(p) = p².
    fn scalar_adam(mut p: f64, lr: f64, steps: usize) -> Vec<f64> {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let (mut m, mut v) = (0.0, 0.0);
        let mut out = Vec::new();
        for t in 1..=steps {
            let g = 2.0 * p;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t as i32));
            let vh = v / (1.0 - b2.powi(t as i32));
            p -= lr * mh / (vh.sqrt() + eps);
            out.push(p);
        }
        out
    }

    #[test]
    fn adam_matches_scalar_reference_on_quadratic() {
        let reference = scalar_adam(1.0, 0.001, 3);
        // first Adam step moves by ~lr regardless of gradient scale
        assert!((reference[0] - 0.999).abs() < 1e-8);
        let mut p = Matrix::scalar(1.0);
        let mut opt = Optimizer::new(OptimizerKind::adam(0.001));
        for expected in reference {
            let g = Matrix::scalar(2.0 * p.get(0, 0));
            opt.step(&mut [&mut p], &[g]).unwrap();
            assert!((p.get(0, 0) - expected).abs() < 1e-15);
        }
    }
}
