//! Numerical substrate: dense matrices, reverse-mode autodiff, MLP classifiers,
//! losses and optimizers. Everything is `f64`.

mod loss;
mod matrix;
mod model;
mod optim;
mod tape;

pub use loss::{cross_entropy_logits, energy, grad_input, grad_params, softmax};
pub use matrix::Matrix;
pub use model::{argmax, Dense, MlpModel, ModelGrads, ParamVars};
pub use optim::{Optimizer, OptimizerKind};
pub use tape::{Gradients, Tape, Var};
