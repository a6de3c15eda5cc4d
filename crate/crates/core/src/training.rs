//! Counterfactual training.
//!
//! Each epoch (after an optional Vanilla burn-in) draws factuals, targets and
//! target-class samples, searches counterfactuals against a frozen copy of
//! the model, and spreads the resulting tuples over the epoch's mini-batches.
//! The per-batch objective is
//!
//! ```text
//! λ_clf·CE(batch) + λ_div·div + λ_adv·advloss + λ_reg·ridge
//! ```
//!
//! with the last three terms gated by the [`Objective`] variant.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cegen::{batch_search, CounterfactualResult, GeneratorConfig, SearchRequest};
use crate::data::{Dataset, FeatureSpec, Mutability};
use crate::error::{Error, Result};
use crate::nn::{cross_entropy_logits, Matrix, MlpModel, Optimizer, OptimizerKind, ParamVars, Tape, Var};

/// Which terms of the training objective are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Objective {
    /// Classification, contrastive divergence, adversarial loss and ridge.
    #[serde(rename = "full")]
    Full,
    /// Classification only.
    #[serde(rename = "vanilla")]
    Vanilla,
    /// Classification and adversarial loss.
    #[serde(rename = "ar")]
    Ar,
    /// Classification, contrastive divergence and ridge.
    #[serde(rename = "cd")]
    Cd,
}

impl Objective {
    pub const ALL: [Objective; 4] = [Objective::Full, Objective::Vanilla, Objective::Ar, Objective::Cd];

    pub fn name(self) -> &'static str {
        match self {
            Objective::Full => "full",
            Objective::Vanilla => "vanilla",
            Objective::Ar => "ar",
            Objective::Cd => "cd",
        }
    }

    pub fn uses_divergence(self) -> bool {
        matches!(self, Objective::Full | Objective::Cd)
    }

    pub fn uses_adversarial(self) -> bool {
        matches!(self, Objective::Full | Objective::Ar)
    }

    /// Whether counterfactuals need to be generated at all.
    pub fn needs_counterfactuals(self) -> bool {
        self != Objective::Vanilla
    }
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" | "ct" => Ok(Objective::Full),
            "vanilla" | "bl" => Ok(Objective::Vanilla),
            "ar" => Ok(Objective::Ar),
            "cd" => Ok(Objective::Cd),
            other => Err(Error::Config(format!("unknown objective {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub objective: Objective,
    pub lambda_clf: f64,
    pub lambda_div: f64,
    pub lambda_adv: f64,
    pub lambda_reg: f64,
    /// Counterfactuals generated per epoch.
    pub n_ce: usize,
    pub epochs: usize,
    pub batch_size: usize,
    /// Fraction of epochs trained as Vanilla before the full objective kicks in.
    pub burn_in: f64,
    pub generator: GeneratorConfig,
    /// ℓ∞ radius below which search iterates count as adversarial examples.
    pub eps_adv: f64,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            objective: Objective::Full,
            lambda_clf: 1.0,
            lambda_div: 0.5,
            lambda_adv: 0.25,
            lambda_reg: 0.1,
            n_ce: 1000,
            epochs: 100,
            batch_size: 30,
            burn_in: 0.0,
            generator: GeneratorConfig::default(),
            eps_adv: 0.1,
            learning_rate: 0.001,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_clf", self.lambda_clf),
            ("lambda_div", self.lambda_div),
            ("lambda_adv", self.lambda_adv),
            ("lambda_reg", self.lambda_reg),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.burn_in) {
            return Err(Error::Config(format!("burn-in must lie in [0, 1], got {}", self.burn_in)));
        }
        if !(self.eps_adv >= 0.0 && self.eps_adv.is_finite()) {
            return Err(Error::Config(format!("eps_adv must be >= 0, got {}", self.eps_adv)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        self.generator.validate()
    }

    /// `(λ_div, λ_adv, λ_reg)` after variant gating.
    pub fn effective_lambdas(&self) -> (f64, f64, f64) {
        let o = self.objective;
        (
            if o.uses_divergence() { self.lambda_div } else { 0.0 },
            if o.uses_adversarial() { self.lambda_adv } else { 0.0 },
            if o.uses_divergence() { self.lambda_reg } else { 0.0 },
        )
    }

    /// Number of leading epochs trained as Vanilla.
    pub fn burn_in_epochs(&self) -> usize {
        (self.burn_in * self.epochs as f64).round() as usize
    }
}

/// Draw for one counterfactual search.
#[derive(Debug, Clone, PartialEq)]
pub struct Triple {
    pub x0: Vec<f64>,
    /// Ground-truth label of `x0`.
    pub y_factual: usize,
    pub y_target: usize,
    /// Sample from the target class.
    pub x_plus: Vec<f64>,
}

/// Search outcome prepared for the loss terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CeTuple {
    pub x_ce: Vec<f64>,
    pub y_target: usize,
    /// Target-class sample, protected against `x_ce`.
    pub x_plus: Vec<f64>,
    pub mature: bool,
    /// Nascent counterfactual and the label it is trained towards.
    pub adversarial: Option<(Vec<f64>, usize)>,
}

impl CeTuple {
    pub fn from_search(result: &CounterfactualResult, x_plus: &[f64], specs: &[FeatureSpec]) -> Self {
        Self {
            x_ce: result.x_final.clone(),
            y_target: result.y_target,
            x_plus: protect_plausibility_targets(x_plus, &result.x_final, specs),
            mature: result.mature,
            adversarial: result.adversarial.as_ref().map(|a| (a.x.clone(), result.y_ae)),
        }
    }
}

/// Samples factuals uniformly, targets uniformly among classes other than the
/// model's prediction, and a target-class sample for each.
pub fn sample_triples<R: Rng + ?Sized>(
    train: &Dataset,
    model: &MlpModel,
    n_ce: usize,
    rng: &mut R,
) -> Result<Vec<Triple>> {
    let by_class: Vec<Vec<usize>> = (0..train.classes).map(|c| train.indices_of(c)).collect();
    if let Some(c) = by_class.iter().position(Vec::is_empty) {
        return Err(Error::Config(format!(
            "class {:?} has no training samples",
            train.class_names.get(c).map_or("?", String::as_str)
        )));
    }
    let mut out = Vec::with_capacity(n_ce);
    for _ in 0..n_ce {
        let i = rng.gen_range(0..train.len());
        let x0 = train.x.row(i).to_vec();
        let pred = model.predict(&x0)?;
        let mut t = rng.gen_range(0..train.classes - 1);
        if t >= pred {
            t += 1;
        }
        let j = by_class[t][rng.gen_range(0..by_class[t].len())];
        out.push(Triple {
            x0,
            y_factual: train.y[i],
            y_target: t,
            x_plus: train.x.row(j).to_vec(),
        });
    }
    Ok(out)
}

/// Copies `x′[d]` into `x⁺[d]` wherever moving towards `x⁺[d]` would violate
/// the mutability of feature `d`.
pub fn protect_plausibility_targets(x_plus: &[f64], x_ce: &[f64], specs: &[FeatureSpec]) -> Vec<f64> {
    x_plus
        .iter()
        .zip(x_ce)
        .zip(specs)
        .map(|((&p, &c), spec)| match spec.mutability {
            Mutability::Immutable => c,
            Mutability::DecreaseOnly if p > c => c,
            Mutability::IncreaseOnly if p < c => c,
            _ => p,
        })
        .collect()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn energy_of(model: &MlpModel, x: &[f64], y: usize) -> Result<f64> {
    Ok(-model.forward(x)?[y])
}

/// Mean of `E(x⁺, y⁺) − E(x′, y⁺)` over mature tuples.
pub fn contrastive_divergence(model: &MlpModel, tuples: &[CeTuple]) -> Result<f64> {
    let terms = tuples
        .iter()
        .filter(|t| t.mature)
        .map(|t| Ok(energy_of(model, &t.x_plus, t.y_target)? - energy_of(model, &t.x_ce, t.y_target)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean(terms.into_iter()))
}

/// Mean of `E(x⁺, y⁺)² + E(x′, y⁺)²` over mature tuples.
pub fn ridge_energy_penalty(model: &MlpModel, tuples: &[CeTuple]) -> Result<f64> {
    let terms = tuples
        .iter()
        .filter(|t| t.mature)
        .map(|t| {
            Ok(energy_of(model, &t.x_plus, t.y_target)?.powi(2) + energy_of(model, &t.x_ce, t.y_target)?.powi(2))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean(terms.into_iter()))
}

/// Mean cross-entropy of the adversarial examples under their labels.
pub fn adversarial_loss(model: &MlpModel, tuples: &[CeTuple]) -> Result<f64> {
    let terms = tuples
        .iter()
        .filter_map(|t| t.adversarial.as_ref())
        .map(|(x, y)| cross_entropy_logits(&model.forward(x)?, *y))
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean(terms.into_iter()))
}

/// Values of the objective's terms; `None` for terms that were not evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub clf: f64,
    pub div: Option<f64>,
    pub adv: Option<f64>,
    pub reg: Option<f64>,
}

/// How often each term was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TermCounts {
    pub clf: usize,
    pub div: usize,
    pub adv: usize,
    pub reg: usize,
}

impl TermCounts {
    fn record(&mut self, b: &LossBreakdown) {
        self.clf += 1;
        self.div += b.div.is_some() as usize;
        self.adv += b.adv.is_some() as usize;
        self.reg += b.reg.is_some() as usize;
    }
}

fn stack(rows: &[&[f64]], dim: usize) -> Matrix {
    let mut data = Vec::with_capacity(rows.len() * dim);
    for r in rows {
        data.extend_from_slice(r);
    }
    Matrix::from_vec(rows.len(), dim, data)
}

/// Records the objective on `tape`. Counterfactual inputs enter as constants.
fn composite_on_tape<'t>(
    tape: &'t Tape,
    params: &ParamVars<'t>,
    x: &Matrix,
    y: &[usize],
    tuples: &[&CeTuple],
    objective: Objective,
    cfg: &TrainConfig,
) -> (Var<'t>, LossBreakdown) {
    let dim = x.cols();
    let clf = params.forward(tape.constant(x.clone())).cross_entropy(y).mean();
    let mut total = clf.scale(cfg.lambda_clf);
    let mut breakdown = LossBreakdown {
        clf: clf.scalar(),
        ..LossBreakdown::default()
    };

    if objective.uses_divergence() {
        let mature: Vec<&CeTuple> = tuples.iter().copied().filter(|t| t.mature).collect();
        if !mature.is_empty() {
            let targets: Vec<usize> = mature.iter().map(|t| t.y_target).collect();
            let plus = stack(&mature.iter().map(|t| t.x_plus.as_slice()).collect::<Vec<_>>(), dim);
            let ce = stack(&mature.iter().map(|t| t.x_ce.as_slice()).collect::<Vec<_>>(), dim);
            let e_plus = params.forward(tape.constant(plus)).pick(&targets).neg();
            let e_ce = params.forward(tape.constant(ce)).pick(&targets).neg();
            let div = e_plus.sub(e_ce).mean();
            let reg = e_plus.square().add(e_ce.square()).mean();
            breakdown.div = Some(div.scalar());
            breakdown.reg = Some(reg.scalar());
            total = total.add(div.scale(cfg.lambda_div)).add(reg.scale(cfg.lambda_reg));
        }
    }
    if objective.uses_adversarial() {
        let advs: Vec<(&[f64], usize)> = tuples
            .iter()
            .filter_map(|t| t.adversarial.as_ref().map(|(x, y)| (x.as_slice(), *y)))
            .collect();
        if !advs.is_empty() {
            let xs = stack(&advs.iter().map(|a| a.0).collect::<Vec<_>>(), dim);
            let ys: Vec<usize> = advs.iter().map(|a| a.1).collect();
            let adv = params.forward(tape.constant(xs)).cross_entropy(&ys).mean();
            breakdown.adv = Some(adv.scalar());
            total = total.add(adv.scale(cfg.lambda_adv));
        }
    }
    breakdown.total = total.scalar();
    (total, breakdown)
}

/// Value of the training objective for one mini-batch.
pub fn composite_loss(
    model: &MlpModel,
    x: &Matrix,
    y: &[usize],
    tuples: &[CeTuple],
    cfg: &TrainConfig,
) -> Result<LossBreakdown> {
    check_batch(model, x, y)?;
    let tape = Tape::new();
    let params = model.params_on(&tape, false);
    let refs: Vec<&CeTuple> = tuples.iter().collect();
    Ok(composite_on_tape(&tape, &params, x, y, &refs, cfg.objective, cfg).1)
}

/// Value and parameter gradient of the training objective for one mini-batch.
pub fn composite_loss_grad(
    model: &MlpModel,
    x: &Matrix,
    y: &[usize],
    tuples: &[CeTuple],
    cfg: &TrainConfig,
) -> Result<(LossBreakdown, crate::nn::ModelGrads)> {
    check_batch(model, x, y)?;
    let refs: Vec<&CeTuple> = tuples.iter().collect();
    batch_gradient(model, x, y, &refs, cfg.objective, cfg)
}

fn check_batch(model: &MlpModel, x: &Matrix, y: &[usize]) -> Result<()> {
    if x.cols() != model.input_dim() || x.rows() != y.len() || x.rows() == 0 {
        return Err(Error::Config(format!(
            "batch of shape {:?} with {} labels does not fit a model with {} inputs",
            x.shape(),
            y.len(),
            model.input_dim()
        )));
    }
    if let Some(bad) = y.iter().find(|&&c| c >= model.classes()) {
        return Err(Error::Input(format!("label {bad} out of range")));
    }
    Ok(())
}

fn batch_gradient(
    model: &MlpModel,
    x: &Matrix,
    y: &[usize],
    tuples: &[&CeTuple],
    objective: Objective,
    cfg: &TrainConfig,
) -> Result<(LossBreakdown, crate::nn::ModelGrads)> {
    let tape = Tape::new();
    let params = model.params_on(&tape, true);
    let (loss, breakdown) = composite_on_tape(&tape, &params, x, y, tuples, objective, cfg);
    let grads = tape.backward(loss)?;
    Ok((breakdown, params.gradients(&grads)))
}

/// Aggregates of one training epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Objective actually used in this epoch (Vanilla during burn-in).
    pub objective: Objective,
    /// Means over mini-batches; `None` where the term was never evaluated.
    pub loss: f64,
    pub clf: f64,
    pub div: Option<f64>,
    pub adv: Option<f64>,
    pub reg: Option<f64>,
    /// Share of searches that matured; `None` when none were run.
    pub mature_fraction: Option<f64>,
    /// Number of searches that yielded an adversarial example.
    pub adversarial_count: usize,
    /// Training accuracy at the end of the epoch.
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: MlpModel,
    pub log: Vec<EpochLog>,
    pub counts: TermCounts,
}

/// RNG stream for batch order; kept apart from counterfactual sampling so
/// Vanilla epochs follow the same trajectory whatever the objective.
const SHUFFLE_STREAM: u64 = 1;
const SAMPLING_STREAM: u64 = 2;

/// Trains `init` on `train`. Deterministic for a given config and seed.
pub fn train(train: &Dataset, init: &MlpModel, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    train.validate()?;
    if train.dim() != init.input_dim() || train.classes != init.classes() {
        return Err(Error::Config(format!(
            "model maps {} inputs to {} classes but data has {} features and {} classes",
            init.input_dim(),
            init.classes(),
            train.dim(),
            train.classes
        )));
    }

    let mut model = init.clone();
    let mut optimizer = Optimizer::new(OptimizerKind::adam(cfg.learning_rate));
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(SHUFFLE_STREAM);
    let mut sample_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    sample_rng.set_stream(SAMPLING_STREAM);
    let burn_in = cfg.burn_in_epochs();
    let mut counts = TermCounts::default();
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 0..cfg.epochs {
        let objective = if epoch < burn_in { Objective::Vanilla } else { cfg.objective };

        let mut tuples = Vec::new();
        let mut mature_fraction = None;
        let mut adversarial_count = 0;
        if objective.needs_counterfactuals() && cfg.n_ce > 0 {
            let snapshot = model.clone();
            let triples = sample_triples(train, &snapshot, cfg.n_ce, &mut sample_rng)?;
            let requests: Vec<SearchRequest> = triples
                .iter()
                .map(|t| SearchRequest {
                    x0: t.x0.clone(),
                    y_factual: t.y_factual,
                    y_target: t.y_target,
                })
                .collect();
            let results = batch_search(&snapshot, &requests, &train.specs, &cfg.generator, cfg.eps_adv);
            for (triple, res) in triples.iter().zip(results) {
                tuples.push(CeTuple::from_search(&res?, &triple.x_plus, &train.specs));
            }
            let mature = tuples.iter().filter(|t| t.mature).count();
            mature_fraction = Some(mature as f64 / tuples.len() as f64);
            adversarial_count = tuples.iter().filter(|t| t.adversarial.is_some()).count();
        }

        order.shuffle(&mut shuffle_rng);
        let batches: Vec<&[usize]> = order.chunks(cfg.batch_size).collect();
        let mut assigned: Vec<Vec<&CeTuple>> = vec![Vec::new(); batches.len()];
        for (i, t) in tuples.iter().enumerate() {
            assigned[i % batches.len()].push(t);
        }

        let mut sums = [0.0; 5];
        let mut seen = [0usize; 3];
        for (idx, batch_tuples) in batches.iter().zip(&assigned) {
            let x = train.x.select_rows(idx);
            let y: Vec<usize> = idx.iter().map(|&i| train.y[i]).collect();
            let (b, grads) = batch_gradient(&model, &x, &y, batch_tuples, objective, cfg)?;
            optimizer.step_model(&mut model, &grads)?;
            counts.record(&b);
            sums[0] += b.total;
            sums[1] += b.clf;
            for (k, term) in [b.div, b.adv, b.reg].into_iter().enumerate() {
                if let Some(v) = term {
                    sums[2 + k] += v;
                    seen[k] += 1;
                }
            }
        }
        let n_batches = batches.len() as f64;
        let avg = |k: usize| (seen[k] > 0).then(|| sums[2 + k] / seen[k] as f64);
        log.push(EpochLog {
            epoch: epoch + 1,
            objective,
            loss: sums[0] / n_batches,
            clf: sums[1] / n_batches,
            div: avg(0),
            adv: avg(1),
            reg: avg(2),
            mature_fraction,
            adversarial_count,
            accuracy: model.accuracy(&train.x, &train.y)?,
        });
    }

    Ok(TrainOutcome { model, log, counts })
}
