//! Gradient-based counterfactual search.
//!
//! A counterfactual `x′` for factual `x0` and target class `y⁺` is found by
//! gradient descent on
//!
//! ```text
//! CE(M(x′), y⁺) + λ_cst·‖x′ − x0‖₁ [+ λ_egy·E(x′, y⁺)]
//! ```
//!
//! where the energy term is only used by the [`GeneratorKind::Eccco`]
//! generator. Every step honours per-feature mutability (masked partial
//! derivatives plus a clamp against `x0`) and domain bounds (projection). The
//! search stops as soon as the target-class probability reaches the decision
//! threshold; such counterfactuals are *mature*. Along the way the most
//! strongly perturbed iterate that is still within an ℓ∞ ball of radius ε
//! around `x0` is kept as an adversarial example.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{FeatureSpec, Mutability};
use crate::error::{Error, Result};
use crate::nn::{argmax, cross_entropy_logits, grad_input, softmax, Matrix, MlpModel, ParamVars, Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    /// Cross-entropy plus ℓ1 distance.
    Generic,
    /// Generic plus an energy penalty on the counterfactual.
    Eccco,
}

impl std::str::FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "generic" | "wachter" => Ok(GeneratorKind::Generic),
            "eccco" | "ecco" => Ok(GeneratorKind::Eccco),
            other => Err(Error::Config(format!("unknown generator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    /// Weight of the ℓ1 distance penalty.
    pub lambda_cst: f64,
    /// Weight of the energy penalty (ignored by `Generic`).
    pub lambda_egy: f64,
    /// Target-class probability at which a search has matured.
    pub threshold: f64,
    pub max_iter: usize,
    /// SGD step size.
    pub step_size: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            kind: GeneratorKind::Eccco,
            lambda_cst: 0.001,
            lambda_egy: 5.0,
            threshold: 0.75,
            max_iter: 30,
            step_size: 0.25,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!(
                "decision threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::Config(format!("step size must be positive, got {}", self.step_size)));
        }
        check_penalty("lambda_cst", self.lambda_cst)?;
        check_penalty("lambda_egy", self.lambda_egy)?;
        Ok(())
    }

    /// Energy weight actually applied.
    pub fn effective_lambda_egy(&self) -> f64 {
        match self.kind {
            GeneratorKind::Generic => 0.0,
            GeneratorKind::Eccco => self.lambda_egy,
        }
    }
}

fn check_penalty(name: &str, value: f64) -> Result<()> {
    if !(value >= 0.0 && value.is_finite()) {
        return Err(Error::Config(format!("{name} must be finite and >= 0, got {value}")));
    }
    Ok(())
}

/// Nascent iterate kept as an adversarial example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialExample {
    pub x: Vec<f64>,
    /// Search step `t_ε` at which it was recorded (≥ 1).
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualResult {
    pub x0: Vec<f64>,
    pub y_factual: usize,
    pub y_target: usize,
    pub x_final: Vec<f64>,
    pub mature: bool,
    pub steps_taken: usize,
    /// Target-class probability at `x_final`.
    pub target_prob: f64,
    pub adversarial: Option<AdversarialExample>,
    /// Label attached to the adversarial example: the factual's ground truth.
    pub y_ae: usize,
}

/// One search to run: factual, its ground-truth label, and the target class.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchRequest {
    pub x0: Vec<f64>,
    pub y_factual: usize,
    pub y_target: usize,
}

/// Search objective evaluated at `x_prime`.
pub fn ce_loss(
    kind: GeneratorKind,
    model: &MlpModel,
    x_prime: &[f64],
    x0: &[f64],
    y_target: usize,
    lambda_cst: f64,
    lambda_egy: f64,
) -> Result<f64> {
    check_penalty("lambda_cst", lambda_cst)?;
    check_penalty("lambda_egy", lambda_egy)?;
    if x_prime.len() != x0.len() {
        return Err(Error::Config("counterfactual and factual differ in length".into()));
    }
    let logits = model.forward(x_prime)?;
    let mut loss = cross_entropy_logits(&logits, y_target)?;
    loss += lambda_cst * x_prime.iter().zip(x0).map(|(a, b)| (a - b).abs()).sum::<f64>();
    if kind == GeneratorKind::Eccco {
        loss += lambda_egy * -logits[y_target];
    }
    Ok(loss)
}

/// The search objective recorded on a tape (for `x: 1 × D`).
pub fn ce_loss_on_tape<'t>(
    kind: GeneratorKind,
    params: &ParamVars<'t>,
    x: Var<'t>,
    x0: Var<'t>,
    y_target: usize,
    lambda_cst: f64,
    lambda_egy: f64,
) -> Var<'t> {
    let logits = params.forward(x);
    let mut loss = logits.cross_entropy(&[y_target]).sum();
    if lambda_cst != 0.0 {
        loss = loss.add(x.sub(x0).abs().sum().scale(lambda_cst));
    }
    if kind == GeneratorKind::Eccco && lambda_egy != 0.0 {
        loss = loss.add(logits.pick(&[y_target]).neg().sum().scale(lambda_egy));
    }
    loss
}

/// One SGD step under mutability and domain constraints.
///
/// Partial derivatives of immutable features are zeroed, as are those that
/// would move a directional feature the wrong way. After the step every
/// coordinate is projected into its domain, and directional features are
/// additionally clamped against their factual value.
pub fn constrained_step(
    x: &[f64],
    gradient: &[f64],
    step_size: f64,
    x0: &[f64],
    specs: &[FeatureSpec],
) -> Vec<f64> {
    debug_assert_eq!(x.len(), gradient.len());
    debug_assert_eq!(x.len(), specs.len());
    x.iter()
        .zip(gradient)
        .zip(x0)
        .zip(specs)
        .map(|(((&xi, &gi), &x0i), spec)| {
            let g = match spec.mutability {
                Mutability::Free => gi,
                Mutability::Immutable => 0.0,
                // descent moves by -η·g: positive g would decrease the value
                Mutability::IncreaseOnly if gi > 0.0 => 0.0,
                Mutability::DecreaseOnly if gi < 0.0 => 0.0,
                _ => gi,
            };
            let mut v = xi - step_size * g;
            if let Some((lb, ub)) = spec.domain {
                v = v.clamp(lb, ub);
            }
            match spec.mutability {
                Mutability::Immutable => x0i,
                Mutability::IncreaseOnly => v.max(x0i),
                Mutability::DecreaseOnly => v.min(x0i),
                Mutability::Free => v,
            }
        })
        .collect()
}

/// Runs one counterfactual search against a frozen model.
pub fn search(
    model: &MlpModel,
    request: &SearchRequest,
    specs: &[FeatureSpec],
    cfg: &GeneratorConfig,
    eps_adv: f64,
) -> Result<CounterfactualResult> {
    cfg.validate()?;
    let SearchRequest {
        x0,
        y_factual,
        y_target,
    } = request;
    let (y_factual, y_target) = (*y_factual, *y_target);
    if specs.len() != x0.len() {
        return Err(Error::Config(format!(
            "{} feature specs for {} features",
            specs.len(),
            x0.len()
        )));
    }
    let logits = model.forward(x0)?;
    let k = logits.len();
    if y_target >= k || y_factual >= k {
        return Err(Error::Input(format!("class index out of range for {k} classes")));
    }
    if argmax(&logits) == y_target {
        return Err(Error::Input(format!(
            "target class {y_target} coincides with the model's prediction for the factual"
        )));
    }

    let lambda_egy = cfg.effective_lambda_egy();
    let mut x = x0.clone();
    let mut prob = softmax(&logits)[y_target];
    let mut steps = 0;
    let mut adversarial = None;
    let mut mature = prob >= cfg.threshold;
    let x0_row = Matrix::row_vector(x0);

    while !mature && steps < cfg.max_iter {
        let (_, grad) = grad_input(model, &x, |tape: &Tape, xv, params| {
            let x0v = tape.constant(x0_row.clone());
            Ok(ce_loss_on_tape(cfg.kind, params, xv, x0v, y_target, cfg.lambda_cst, lambda_egy))
        })?;
        x = constrained_step(&x, &grad, cfg.step_size, x0, specs);
        steps += 1;

        let delta = x.iter().zip(x0).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if delta < eps_adv {
            adversarial = Some(AdversarialExample {
                x: x.clone(),
                step: steps,
            });
        }
        prob = softmax(&model.forward_unchecked(&x))[y_target];
        mature = prob >= cfg.threshold;
    }

    Ok(CounterfactualResult {
        x0: x0.clone(),
        y_factual,
        y_target,
        x_final: x,
        mature,
        steps_taken: steps,
        target_prob: prob,
        adversarial,
        y_ae: y_factual,
    })
}

/// Runs independent searches in parallel; order is preserved and each element
/// equals the corresponding sequential [`search`].
pub fn batch_search(
    model: &MlpModel,
    requests: &[SearchRequest],
    specs: &[FeatureSpec],
    cfg: &GeneratorConfig,
    eps_adv: f64,
) -> Vec<Result<CounterfactualResult>> {
    requests
        .par_iter()
        .map(|r| search(model, r, specs, cfg, eps_adv))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free(d: usize) -> Vec<FeatureSpec> {
        (0..d).map(|i| FeatureSpec::free(format!("x{i}"))).collect()
    }

    #[test]
    fn immutable_feature_is_masked() {
        let specs = vec![FeatureSpec::free("a").with_mutability(Mutability::Immutable)];
        let x = constrained_step(&[1.0], &[5.0], 0.25, &[1.0], &specs);
        assert_eq!(x, vec![1.0]);
    }

    #[test]
    fn projection_lands_on_bound() {
        let specs = vec![FeatureSpec::free("a").with_domain(-1.0, 1.0)];
        // 0 - 0.25 * 5.2 = -1.3 -> -1
        let x = constrained_step(&[0.0], &[5.2], 0.25, &[0.0], &specs);
        assert_eq!(x, vec![-1.0]);
    }

    #[test]
    fn directional_masks() {
        let inc = vec![FeatureSpec::free("a").with_mutability(Mutability::IncreaseOnly)];
        assert_eq!(constrained_step(&[0.0], &[1.0], 1.0, &[0.0], &inc), vec![0.0]);
        assert_eq!(constrained_step(&[0.0], &[-1.0], 1.0, &[0.0], &inc), vec![1.0]);
        let dec = vec![FeatureSpec::free("a").with_mutability(Mutability::DecreaseOnly)];
        assert_eq!(constrained_step(&[0.0], &[-1.0], 1.0, &[0.0], &dec), vec![0.0]);
        assert_eq!(constrained_step(&[0.0], &[1.0], 1.0, &[0.0], &dec), vec![-1.0]);
    }

    #[test]
    fn loss_without_penalties_is_cross_entropy() {
        let m = MlpModel::linear(Matrix::from_rows(&[[1.0, -1.0], [0.5, 2.0]]), vec![0.1, 0.0]).unwrap();
        let xp = [0.3, -0.2];
        let ce = cross_entropy_logits(&m.forward(&xp).unwrap(), 1).unwrap();
        let g = ce_loss(GeneratorKind::Generic, &m, &xp, &[1.0, 1.0], 1, 0.0, 0.0).unwrap();
        let e = ce_loss(GeneratorKind::Eccco, &m, &xp, &[1.0, 1.0], 1, 0.0, 0.0).unwrap();
        assert_eq!(g, ce);
        assert_eq!(e, ce);
        let same = ce_loss(GeneratorKind::Generic, &m, &xp, &xp, 1, 7.0, 0.0).unwrap();
        assert_eq!(same, ce);
        assert!(ce_loss(GeneratorKind::Generic, &m, &xp, &xp, 1, -1.0, 0.0).is_err());
    }

    #[test]
    fn rejects_target_equal_to_prediction() {
        let m = MlpModel::linear(Matrix::from_rows(&[[1.0, 0.0], [-1.0, 0.0]]), vec![0.0, 0.0]).unwrap();
        let req = SearchRequest {
            x0: vec![1.0, 0.0],
            y_factual: 0,
            y_target: 0,
        };
        let err = search(&m, &req, &free(2), &GeneratorConfig::default(), 0.1).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn steep_model_matures_after_one_step() {
        let m = MlpModel::linear(Matrix::from_rows(&[[-10.0, 0.0], [10.0, 0.0]]), vec![0.0, 0.0]).unwrap();
        let cfg = GeneratorConfig {
            kind: GeneratorKind::Generic,
            threshold: 0.5,
            ..GeneratorConfig::default()
        };
        let req = SearchRequest {
            x0: vec![-0.1, 0.0],
            y_factual: 0,
            y_target: 1,
        };
        let res = search(&m, &req, &free(2), &cfg, 0.1).unwrap();
        assert!(res.mature);
        assert_eq!(res.steps_taken, 1);
        assert!(res.target_prob >= 0.5);
    }

    #[test]
    fn adversarial_example_is_last_iterate_inside_ball() {
        // Gentle linear model: step sizes are small and constant-ish, so the
        // displacement grows monotonically until it leaves the ball.
        let m = MlpModel::linear(Matrix::from_rows(&[[-0.2, 0.0], [0.2, 0.0]]), vec![0.0, 0.0]).unwrap();
        let cfg = GeneratorConfig {
            kind: GeneratorKind::Generic,
            lambda_cst: 0.0,
            threshold: 0.99,
            max_iter: 10,
            step_size: 0.1,
            ..GeneratorConfig::default()
        };
        let req = SearchRequest {
            x0: vec![-1.0, 0.0],
            y_factual: 0,
            y_target: 1,
        };
        let res = search(&m, &req, &free(2), &cfg, 0.1).unwrap();
        let ae = res.adversarial.expect("early iterates stay within 0.1");
        // re-run the trajectory by hand to find the largest qualifying step
        let mut x = req.x0.clone();
        let mut last = 0;
        for t in 1..=res.steps_taken {
            let (_, g) = grad_input(&m, &x, |tape, xv, p| {
                let x0 = tape.constant(Matrix::row_vector(&req.x0));
                Ok(ce_loss_on_tape(GeneratorKind::Generic, p, xv, x0, 1, 0.0, 0.0))
            })
            .unwrap();
            x = constrained_step(&x, &g, 0.1, &req.x0, &free(2));
            if (x[0] - req.x0[0]).abs().max((x[1] - req.x0[1]).abs()) < 0.1 {
                last = t;
            }
        }
        assert_eq!(ae.step, last);
        assert!(ae.x.iter().zip(&req.x0).all(|(a, b)| (a - b).abs() < 0.1));
        assert_eq!(res.y_ae, 0);
    }
}
