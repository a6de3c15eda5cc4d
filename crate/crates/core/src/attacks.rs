//! ℓ∞ gradient-sign attacks and robust accuracy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{grad_input, MlpModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackKind {
    Fgsm,
    Pgd,
}

impl AttackKind {
    pub fn name(self) -> &'static str {
        match self {
            AttackKind::Fgsm => "fgsm",
            AttackKind::Pgd => "pgd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub kind: AttackKind,
    /// ℓ∞ budget.
    pub epsilon: f64,
    /// PGD only.
    pub pgd_steps: usize,
    /// PGD only.
    pub pgd_step_size: f64,
}

impl AttackConfig {
    pub fn fgsm(epsilon: f64) -> Self {
        Self {
            kind: AttackKind::Fgsm,
            epsilon,
            pgd_steps: 40,
            pgd_step_size: 0.01,
        }
    }

    pub fn pgd(epsilon: f64) -> Self {
        Self {
            kind: AttackKind::Pgd,
            ..Self::fgsm(epsilon)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("attack budget must be >= 0, got {}", self.epsilon)));
        }
        if self.kind == AttackKind::Pgd && !(self.pgd_step_size > 0.0) {
            return Err(Error::Config("PGD step size must be positive".into()));
        }
        Ok(())
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn loss_gradient(model: &MlpModel, x: &[f64], y: usize) -> Result<Vec<f64>> {
    Ok(grad_input(model, x, |_, xv, params| Ok(params.forward(xv).cross_entropy(&[y]).sum()))?.1)
}

fn clamp_domain(x: &mut [f64], domain: &[Option<(f64, f64)>]) {
    for (v, d) in x.iter_mut().zip(domain) {
        if let Some((lb, ub)) = d {
            *v = v.clamp(*lb, *ub);
        }
    }
}

fn check_domain(x: &[f64], domain: &[Option<(f64, f64)>]) -> Result<()> {
    if !domain.is_empty() && domain.len() != x.len() {
        return Err(Error::Config(format!(
            "{} domain bounds for {} features",
            domain.len(),
            x.len()
        )));
    }
    Ok(())
}

/// Fast gradient sign method. `domain` is empty or holds one bound per feature.
pub fn fgsm(
    model: &MlpModel,
    x: &[f64],
    y: usize,
    epsilon: f64,
    domain: &[Option<(f64, f64)>],
) -> Result<Vec<f64>> {
    check_domain(x, domain)?;
    if epsilon == 0.0 {
        return Ok(x.to_vec());
    }
    let g = loss_gradient(model, x, y)?;
    let mut adv: Vec<f64> = x.iter().zip(&g).map(|(v, gi)| v + epsilon * sign(*gi)).collect();
    clamp_domain(&mut adv, domain);
    Ok(adv)
}

/// Projected gradient ascent on the loss inside the ε-ball around `x`,
/// starting from `x` itself.
pub fn pgd(
    model: &MlpModel,
    x: &[f64],
    y: usize,
    cfg: &AttackConfig,
    domain: &[Option<(f64, f64)>],
) -> Result<Vec<f64>> {
    pgd_trajectory(model, x, y, cfg, domain, |_| {})
}

/// [`pgd`], calling `monitor` with every iterate.
pub fn pgd_trajectory(
    model: &MlpModel,
    x: &[f64],
    y: usize,
    cfg: &AttackConfig,
    domain: &[Option<(f64, f64)>],
    mut monitor: impl FnMut(&[f64]),
) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_domain(x, domain)?;
    let eps = cfg.epsilon;
    let mut adv = x.to_vec();
    if eps == 0.0 {
        return Ok(adv);
    }
    for _ in 0..cfg.pgd_steps {
        let g = loss_gradient(model, &adv, y)?;
        for ((a, gi), x0) in adv.iter_mut().zip(&g).zip(x) {
            *a = (*a + cfg.pgd_step_size * sign(*gi)).clamp(x0 - eps, x0 + eps);
        }
        clamp_domain(&mut adv, domain);
        monitor(&adv);
    }
    Ok(adv)
}

/// Applies the attack to one point.
pub fn attack(
    model: &MlpModel,
    x: &[f64],
    y: usize,
    cfg: &AttackConfig,
    domain: &[Option<(f64, f64)>],
) -> Result<Vec<f64>> {
    match cfg.kind {
        AttackKind::Fgsm => fgsm(model, x, y, cfg.epsilon, domain),
        AttackKind::Pgd => pgd(model, x, y, cfg, domain),
    }
}

/// Accuracy on attacked test points for each budget in `epsilons`.
///
/// Points are attacked under their true labels; an `ε = 0` row is clean
/// accuracy.
pub fn robust_accuracy(
    model: &MlpModel,
    test: &Dataset,
    kind: AttackKind,
    epsilons: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if test.is_empty() {
        return Err(Error::Input("robust accuracy needs a nonempty test set".into()));
    }
    let domain = test.domains();
    epsilons
        .iter()
        .map(|&eps| {
            let cfg = AttackConfig {
                kind,
                ..AttackConfig::fgsm(eps)
            };
            cfg.validate()?;
            let hits = (0..test.len())
                .into_par_iter()
                .map(|i| {
                    let adv = attack(model, test.x.row(i), test.y[i], &cfg, &domain)?;
                    Ok((model.predict(&adv)? == test.y[i]) as usize)
                })
                .collect::<Result<Vec<usize>>>()?;
            Ok((eps, hits.iter().sum::<usize>() as f64 / test.len() as f64))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Matrix;

    fn linear() -> MlpModel {
        MlpModel::linear(Matrix::from_rows(&[[1.0, -2.0, 0.0], [-1.0, 2.0, 0.0]]), vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn fgsm_on_linear_model() {
        // CE for class 0 increases along Θ[1] − Θ[0] = (−2, 4, 0)
        let adv = fgsm(&linear(), &[0.0, 0.0, 0.0], 0, 0.1, &[]).unwrap();
        assert_eq!(adv, vec![-0.1, 0.1, 0.0]);
    }

    #[test]
    fn zero_budget_is_identity() {
        let x = [0.3, -0.2, 1.0];
        assert_eq!(fgsm(&linear(), &x, 1, 0.0, &[]).unwrap(), x.to_vec());
        assert_eq!(pgd(&linear(), &x, 1, &AttackConfig::pgd(0.0), &[]).unwrap(), x.to_vec());
    }

    #[test]
    fn single_saturating_pgd_step_equals_fgsm() {
        let cfg = AttackConfig {
            pgd_steps: 1,
            pgd_step_size: 0.5,
            ..AttackConfig::pgd(0.1)
        };
        let x = [0.3, -0.2, 1.0];
        assert_eq!(pgd(&linear(), &x, 0, &cfg, &[]).unwrap(), fgsm(&linear(), &x, 0, 0.1, &[]).unwrap());
    }

    #[test]
    fn domain_clamps() {
        let dom = vec![Some((0.0, 0.05)), None, None];
        let adv = fgsm(&linear(), &[0.0, 0.0, 0.0], 0, 0.1, &dom).unwrap();
        assert_eq!(adv, vec![0.0, 0.1, 0.0]);
    }
}
