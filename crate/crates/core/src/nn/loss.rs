//! Scalar losses on logits and helpers for differentiating them.

use super::matrix::Matrix;
use super::model::{MlpModel, ModelGrads, ParamVars};
use super::tape::{cross_entropy_rows, softmax_rows, Tape, Var};
use crate::error::{Error, Result};

/// Max-shifted softmax of one logit vector.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    softmax_rows(&Matrix::row_vector(logits)).into_vec()
}

/// `-log softmax(logits)[target]`.
pub fn cross_entropy_logits(logits: &[f64], target: usize) -> Result<f64> {
    if target >= logits.len() {
        return Err(Error::Input(format!(
            "target class {target} out of range for {} classes",
            logits.len()
        )));
    }
    Ok(cross_entropy_rows(&Matrix::row_vector(logits), &[target]).get(0, 0))
}

/// Energy of `x` under class `y`: the negated logit.
pub fn energy(model: &MlpModel, x: &[f64], y: usize) -> Result<f64> {
    let logits = model.forward(x)?;
    if y >= logits.len() {
        return Err(Error::Input(format!(
            "class {y} out of range for {} classes",
            logits.len()
        )));
    }
    Ok(-logits[y])
}

/// Gradient of a scalar loss with respect to a single input `x`.
///
/// `loss` receives the tape, `x` as a `1 × D` leaf and the model parameters
/// recorded as constants.
pub fn grad_input<F>(model: &MlpModel, x: &[f64], loss: F) -> Result<(f64, Vec<f64>)>
where
    F: for<'t> Fn(&'t Tape, Var<'t>, &ParamVars<'t>) -> Result<Var<'t>>,
{
    if x.len() != model.input_dim() {
        return Err(Error::Config(format!(
            "input has {} features, model expects {}",
            x.len(),
            model.input_dim()
        )));
    }
    let tape = Tape::new();
    let params = model.params_on(&tape, false);
    let xv = tape.leaf(Matrix::row_vector(x));
    let out = loss(&tape, xv, &params)?;
    let value = out.scalar();
    let grads = tape.backward(out)?;
    Ok((value, grads.wrt(xv).into_vec()))
}

/// Gradient of a scalar loss with respect to every model parameter.
pub fn grad_params<F>(model: &MlpModel, loss: F) -> Result<(f64, ModelGrads)>
where
    F: for<'t> Fn(&'t Tape, &ParamVars<'t>) -> Result<Var<'t>>,
{
    let tape = Tape::new();
    let params = model.params_on(&tape, true);
    let out = loss(&tape, &params)?;
    let value = out.scalar();
    let grads = tape.backward(out)?;
    Ok((value, params.gradients(&grads)))
}
