//! Counterfactual quality metrics, bootstrap confidence intervals and
//! integrated-gradients sensitivity.
//!
//! The bootstrap protocol: in every round a factual class and a different
//! target class are drawn; each model then receives test points it predicts
//! as the factual class (sampled with replacement) and counterfactuals are
//! generated for them, cycling through a grid of energy penalties. Metrics
//! are computed over valid counterfactuals only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cegen::{batch_search, CounterfactualResult, GeneratorConfig, GeneratorKind, SearchRequest};
use crate::data::{Dataset, FeatureSpec};
use crate::error::{Error, Result};
use crate::nn::{grad_input, Matrix, MlpModel};

/// Mean ℓ1 distance from `x` to every row of `targets`.
pub fn implausibility_ip(x: &[f64], targets: &Matrix) -> Result<f64> {
    if targets.rows() == 0 {
        return Err(Error::Input("implausibility needs at least one target-class sample".into()));
    }
    if targets.cols() != x.len() {
        return Err(Error::Input("dimension mismatch between counterfactual and targets".into()));
    }
    let total: f64 = (0..targets.rows())
        .map(|r| cost_l1(x, targets.row(r)))
        .sum();
    Ok(total / targets.rows() as f64)
}

/// `exp(−‖x − x′‖² / (2ℓ²))`.
pub fn gaussian_kernel(x: &[f64], x_prime: &[f64], lengthscale: f64) -> f64 {
    let sq: f64 = x.iter().zip(x_prime).map(|(a, b)| (a - b).powi(2)).sum();
    (-sq / (2.0 * lengthscale * lengthscale)).exp()
}

/// Unbiased estimate of the squared maximum mean discrepancy between the
/// rows of `a` and `b`.
pub fn mmd_unbiased(a: &Matrix, b: &Matrix, lengthscale: f64) -> Result<f64> {
    let (m, n) = (a.rows(), b.rows());
    if m < 2 || n < 2 {
        return Err(Error::Input(format!(
            "unbiased MMD needs at least two samples per side, got {m} and {n}"
        )));
    }
    if a.cols() != b.cols() {
        return Err(Error::Input("MMD samples differ in dimension".into()));
    }
    if !(lengthscale > 0.0) {
        return Err(Error::Input(format!("kernel length-scale must be positive, got {lengthscale}")));
    }
    let within = |s: &Matrix| {
        let k = s.rows();
        let mut sum = 0.0;
        for i in 0..k {
            for j in (i + 1)..k {
                sum += gaussian_kernel(s.row(i), s.row(j), lengthscale);
            }
        }
        2.0 * sum / (k * (k - 1)) as f64
    };
    let mut cross = 0.0;
    for i in 0..m {
        for j in 0..n {
            cross += gaussian_kernel(a.row(i), b.row(j), lengthscale);
        }
    }
    Ok(within(a) + within(b) - 2.0 * cross / (m * n) as f64)
}

pub const DEFAULT_LENGTHSCALE: f64 = 0.5;

/// Divergence-based implausibility of a set of counterfactuals.
pub fn implausibility_ipstar(counterfactuals: &Matrix, targets: &Matrix) -> Result<f64> {
    mmd_unbiased(counterfactuals, targets, DEFAULT_LENGTHSCALE)
}

pub fn cost_l1(x_prime: &[f64], x0: &[f64]) -> f64 {
    x_prime.iter().zip(x0).map(|(a, b)| (a - b).abs()).sum()
}

/// Share of results whose target-class probability at `x_final` reaches `threshold`.
pub fn validity_rate(results: &[CounterfactualResult], threshold: f64) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::Input("validity of an empty result set".into()));
    }
    let valid = results.iter().filter(|r| r.target_prob >= threshold).count();
    Ok(valid as f64 / results.len() as f64)
}

/// Mean and percentile interval of a bootstrap distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub lb: f64,
    pub ub: f64,
}

impl Interval {
    pub fn excludes(&self, value: f64) -> bool {
        value < self.lb || value > self.ub
    }

    /// Significant at the interval's level when it does not contain zero.
    pub fn significant(&self) -> bool {
        self.excludes(0.0)
    }
}

/// Nearest-rank empirical quantile of sorted data.
fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Percentile interval: nearest-rank `α/2` and `1 − α/2` quantiles.
pub fn bootstrap_percentile_ci(values: &[f64], alpha: f64) -> Result<Interval> {
    if values.len() < 2 {
        return Err(Error::Input(format!(
            "a percentile interval needs at least two rounds, got {}",
            values.len()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Input(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Input("bootstrap statistics contain NaN".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Interval {
        mean: values.iter().sum::<f64>() / values.len() as f64,
        lb: nearest_rank(&sorted, alpha / 2.0),
        ub: nearest_rank(&sorted, 1.0 - alpha / 2.0),
    })
}

/// Function whose attribution is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IgOutput {
    Probability,
    Logit,
}

/// Integrated gradients of class `class` along the straight path from
/// `baseline` to `x`, as a right Riemann sum with `steps` points.
pub fn integrated_gradients(
    model: &MlpModel,
    x: &[f64],
    baseline: &[f64],
    class: usize,
    steps: usize,
    output: IgOutput,
) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::Config("integrated gradients need at least one step".into()));
    }
    if baseline.len() != x.len() {
        return Err(Error::Input("baseline and input differ in length".into()));
    }
    if class >= model.classes() {
        return Err(Error::Input(format!("class {class} out of range")));
    }
    let mut acc = vec![0.0; x.len()];
    for k in 1..=steps {
        let a = k as f64 / steps as f64;
        let point: Vec<f64> = baseline.iter().zip(x).map(|(b, v)| b + a * (v - b)).collect();
        let (_, g) = grad_input(model, &point, |_, xv, params| {
            let logits = params.forward(xv);
            Ok(match output {
                IgOutput::Probability => logits.softmax().pick(&[class]).sum(),
                IgOutput::Logit => logits.pick(&[class]).sum(),
            })
        })?;
        for (s, gi) in acc.iter_mut().zip(g) {
            *s += gi;
        }
    }
    Ok(acc
        .iter()
        .zip(x)
        .zip(baseline)
        .map(|((s, v), b)| (v - b) * s / steps as f64)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IgScaling {
    /// `|g_d| / (max g − min g)`.
    RangeRatio,
    /// `(g_d − min g) / (max g − min g)`.
    MinMax,
}

impl IgScaling {
    /// Range ratio for two-dimensional inputs, min-max otherwise.
    pub fn for_dim(dim: usize) -> Self {
        if dim == 2 {
            IgScaling::RangeRatio
        } else {
            IgScaling::MinMax
        }
    }
}

/// Puts attributions on a common scale across features. A constant vector
/// maps to zeros.
pub fn standardize_ig(g: &[f64], scaling: IgScaling) -> Vec<f64> {
    let max = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = g.iter().copied().fold(f64::INFINITY, f64::min);
    let range = max - min;
    if !(range > 0.0) {
        return vec![0.0; g.len()];
    }
    g.iter()
        .map(|&v| match scaling {
            IgScaling::RangeRatio => v.abs() / range,
            IgScaling::MinMax => (v - min) / range,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Bootstrap rounds.
    pub runs: usize,
    /// Factuals per model per round, spread over the energy grid.
    pub individuals: usize,
    pub threshold: f64,
    pub max_iter: usize,
    /// Decision threshold of the constrained (cost) scenario.
    pub cost_threshold: f64,
    pub lambda_egy_grid: Vec<f64>,
    pub lambda_cst: f64,
    pub step_size: f64,
    pub alpha: f64,
    pub ig_alpha: f64,
    pub lengthscale: f64,
    pub ig_steps: usize,
    /// Test points per round in the sensitivity analysis.
    pub ig_samples: usize,
    /// Attack budgets for robust accuracy curves.
    pub epsilons: Vec<f64>,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            runs: 20,
            individuals: 100,
            threshold: 0.95,
            max_iter: 50,
            cost_threshold: 0.5,
            lambda_egy_grid: vec![0.1, 0.5, 1.0, 5.0, 10.0],
            lambda_cst: 0.001,
            step_size: 0.25,
            alpha: 0.01,
            ig_alpha: 0.05,
            lengthscale: DEFAULT_LENGTHSCALE,
            ig_steps: 64,
            ig_samples: 200,
            epsilons: (0..=10).map(|i| i as f64 / 100.0).collect(),
            seed: 0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs < 2 {
            return Err(Error::Config(format!("need at least 2 bootstrap rounds, got {}", self.runs)));
        }
        if self.individuals == 0 {
            return Err(Error::Config("individuals per round must be positive".into()));
        }
        if self.lambda_egy_grid.is_empty() {
            return Err(Error::Config("energy grid must not be empty".into()));
        }
        for a in [self.alpha, self.ig_alpha] {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::Config(format!("alpha must lie in (0, 1), got {a}")));
            }
        }
        if !(self.lengthscale > 0.0) {
            return Err(Error::Config("kernel length-scale must be positive".into()));
        }
        if self.ig_steps == 0 || self.ig_samples == 0 {
            return Err(Error::Config("integrated-gradient settings must be positive".into()));
        }
        if self.epsilons.iter().any(|e| !(*e >= 0.0)) {
            return Err(Error::Config("attack budgets must be >= 0".into()));
        }
        for &l in &self.lambda_egy_grid {
            self.generator(Scenario::Unconstrained, l).validate()?;
        }
        self.generator(Scenario::Constrained, 0.0).validate()
    }

    pub fn generator(&self, scenario: Scenario, lambda_egy: f64) -> GeneratorConfig {
        GeneratorConfig {
            kind: GeneratorKind::Eccco,
            lambda_cst: self.lambda_cst,
            lambda_egy,
            threshold: match scenario {
                Scenario::Unconstrained => self.threshold,
                Scenario::Constrained => self.cost_threshold,
            },
            max_iter: self.max_iter,
            step_size: self.step_size,
        }
    }
}

/// Whether mutability constraints are imposed at evaluation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Unconstrained,
    Constrained,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Unconstrained => "unconstrained",
            Scenario::Constrained => "constrained",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Ip,
    IpStar,
    Cost,
    Validity,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Ip, Metric::IpStar, Metric::Cost, Metric::Validity];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Ip => "ip",
            Metric::IpStar => "ipstar",
            Metric::Cost => "cost",
            Metric::Validity => "validity",
        }
    }
}

/// Per-round outcomes of one model; `None` where a round produced too few
/// valid counterfactuals for the metric.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub ip: Option<f64>,
    pub ipstar: Option<f64>,
    pub cost: Option<f64>,
    pub validity: Option<f64>,
    /// Valid counterfactuals, kept for plotting.
    #[serde(skip)]
    pub counterfactuals: Vec<Vec<f64>>,
}

impl RoundOutcome {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Ip => self.ip,
            Metric::IpStar => self.ipstar,
            Metric::Cost => self.cost,
            Metric::Validity => self.validity,
        }
    }
}

/// Comparison of one metric between a candidate and the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub metric: Metric,
    /// Rounds where both models produced the metric.
    pub rounds: usize,
    /// Candidate's per-round values.
    pub candidate: Option<Interval>,
    pub baseline: Option<Interval>,
    /// Per-round `baseline − candidate`.
    pub difference: Option<Interval>,
    /// `100·(mean baseline − mean candidate) / mean baseline`.
    pub reduction_pct: Option<f64>,
    /// Per-round percentage reductions.
    pub reduction_pct_ci: Option<Interval>,
}

impl MetricComparison {
    pub fn significant(&self) -> bool {
        self.difference.map_or(false, |d| d.significant())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scenario: Scenario,
    pub comparisons: Vec<MetricComparison>,
    #[serde(skip)]
    pub candidate_rounds: Vec<RoundOutcome>,
    #[serde(skip)]
    pub baseline_rounds: Vec<RoundOutcome>,
}

impl EvalReport {
    pub fn comparison(&self, metric: Metric) -> &MetricComparison {
        self.comparisons
            .iter()
            .find(|c| c.metric == metric)
            .expect("every metric is compared")
    }
}

fn round_rng(seed: u64, round: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (round as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(stream);
    rng
}

/// Runs one bootstrap round for one model.
fn run_round(
    model: &MlpModel,
    test: &Dataset,
    specs: &[FeatureSpec],
    factual: usize,
    target: usize,
    scenario: Scenario,
    cfg: &EvalConfig,
    rng: &mut ChaCha8Rng,
) -> Result<RoundOutcome> {
    let predicted = model.predict_batch(&test.x)?;
    let candidates: Vec<usize> = (0..test.len()).filter(|&i| predicted[i] == factual).collect();
    if candidates.is_empty() {
        return Ok(RoundOutcome::default());
    }
    let mut grouped: Vec<Vec<SearchRequest>> = vec![Vec::new(); cfg.lambda_egy_grid.len()];
    for i in 0..cfg.individuals {
        let idx = candidates[rng.gen_range(0..candidates.len())];
        grouped[i % cfg.lambda_egy_grid.len()].push(SearchRequest {
            x0: test.x.row(idx).to_vec(),
            y_factual: test.y[idx],
            y_target: target,
        });
    }
    let mut results = Vec::with_capacity(cfg.individuals);
    for (requests, &lambda) in grouped.iter().zip(&cfg.lambda_egy_grid) {
        let gen = cfg.generator(scenario, lambda);
        for r in batch_search(model, requests, specs, &gen, 0.0) {
            results.push(r?);
        }
    }
    let threshold = cfg.generator(scenario, 0.0).threshold;
    let validity = validity_rate(&results, threshold)?;
    let valid: Vec<&CounterfactualResult> = results.iter().filter(|r| r.target_prob >= threshold).collect();
    let targets = test.class_samples(target);
    let mut out = RoundOutcome {
        validity: Some(validity),
        counterfactuals: valid.iter().map(|r| r.x_final.clone()).collect(),
        ..RoundOutcome::default()
    };
    if !valid.is_empty() && targets.rows() > 0 {
        let ips = valid
            .iter()
            .map(|r| implausibility_ip(&r.x_final, &targets))
            .collect::<Result<Vec<f64>>>()?;
        out.ip = Some(ips.iter().sum::<f64>() / ips.len() as f64);
        out.cost = Some(valid.iter().map(|r| cost_l1(&r.x_final, &r.x0)).sum::<f64>() / valid.len() as f64);
    }
    if valid.len() >= 2 && targets.rows() >= 2 {
        let cf = Matrix::from_rows(&out.counterfactuals);
        out.ipstar = Some(mmd_unbiased(&cf, &targets, cfg.lengthscale)?);
    }
    Ok(out)
}

fn compare(metric: Metric, cand: &[RoundOutcome], base: &[RoundOutcome], alpha: f64) -> MetricComparison {
    let pairs: Vec<(f64, f64)> = cand
        .iter()
        .zip(base)
        .filter_map(|(c, b)| Some((c.get(metric)?, b.get(metric)?)))
        .collect();
    let ci = |v: Vec<f64>| bootstrap_percentile_ci(&v, alpha).ok();
    let c_mean = ci(pairs.iter().map(|p| p.0).collect());
    let b_mean = ci(pairs.iter().map(|p| p.1).collect());
    let reduction_pct = match (c_mean, b_mean) {
        (Some(c), Some(b)) if b.mean != 0.0 => Some(100.0 * (b.mean - c.mean) / b.mean),
        _ => None,
    };
    let pct: Vec<f64> = pairs
        .iter()
        .filter(|p| p.1 != 0.0)
        .map(|p| 100.0 * (p.1 - p.0) / p.1)
        .collect();
    MetricComparison {
        metric,
        rounds: pairs.len(),
        candidate: c_mean,
        baseline: b_mean,
        difference: ci(pairs.iter().map(|p| p.1 - p.0).collect()),
        reduction_pct,
        reduction_pct_ci: ci(pct),
    }
}

/// Bootstrap comparison of a candidate model against a baseline on `test`.
///
/// `specs` carries the mutability and domain constraints imposed on the
/// search; the scenario selects the decision threshold.
pub fn evaluate_models(
    candidate: &MlpModel,
    baseline: &MlpModel,
    test: &Dataset,
    specs: &[FeatureSpec],
    scenario: Scenario,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    cfg.validate()?;
    test.validate()?;
    if specs.len() != test.dim() {
        return Err(Error::Config("one feature spec per test feature is required".into()));
    }
    let mut cand_rounds = Vec::with_capacity(cfg.runs);
    let mut base_rounds = Vec::with_capacity(cfg.runs);
    for round in 0..cfg.runs {
        let mut rng = round_rng(cfg.seed, round, 0);
        let factual = rng.gen_range(0..test.classes);
        let mut target = rng.gen_range(0..test.classes - 1);
        if target >= factual {
            target += 1;
        }
        // both models draw from identical streams so self-comparisons are exact
        let mut r1 = round_rng(cfg.seed, round, 1);
        let mut r2 = round_rng(cfg.seed, round, 1);
        cand_rounds.push(run_round(candidate, test, specs, factual, target, scenario, cfg, &mut r1)?);
        base_rounds.push(run_round(baseline, test, specs, factual, target, scenario, cfg, &mut r2)?);
    }
    let comparisons = Metric::ALL
        .iter()
        .map(|&m| compare(m, &cand_rounds, &base_rounds, cfg.alpha))
        .collect();
    Ok(EvalReport {
        scenario,
        comparisons,
        candidate_rounds: cand_rounds,
        baseline_rounds: base_rounds,
    })
}

/// Sensitivity of both models to one feature, measured by standardized
/// integrated gradients at test points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub feature: usize,
    /// Per-round medians of the standardized attribution.
    pub candidate: Interval,
    pub baseline: Interval,
    /// Per-round `candidate / baseline` of the medians.
    pub ratio: Interval,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Bootstrap comparison of standardized integrated gradients for `feature`.
///
/// Each round samples test points with replacement and a baseline from
/// `U(−1, 1)` per point; attributions are for each model's predicted class.
pub fn protected_sensitivity(
    candidate: &MlpModel,
    baseline: &MlpModel,
    test: &Dataset,
    feature: usize,
    cfg: &EvalConfig,
) -> Result<SensitivityReport> {
    cfg.validate()?;
    if feature >= test.dim() {
        return Err(Error::Config(format!("feature {feature} out of range")));
    }
    let scaling = IgScaling::for_dim(test.dim());
    let attribution = |model: &MlpModel, x: &[f64], b: &[f64]| -> Result<f64> {
        let class = model.predict(x)?;
        let g = integrated_gradients(model, x, b, class, cfg.ig_steps, IgOutput::Probability)?;
        Ok(standardize_ig(&g, scaling)[feature])
    };
    let mut cand = Vec::with_capacity(cfg.runs);
    let mut base = Vec::with_capacity(cfg.runs);
    let mut ratio = Vec::with_capacity(cfg.runs);
    for round in 0..cfg.runs {
        let mut rng = round_rng(cfg.seed, round, 2);
        let draws: Vec<(usize, Vec<f64>)> = (0..cfg.ig_samples)
            .map(|_| {
                let i = rng.gen_range(0..test.len());
                let b = (0..test.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                (i, b)
            })
            .collect();
        let eval = |model: &MlpModel| -> Result<f64> {
            use rayon::prelude::*;
            let mut v = draws
                .par_iter()
                .map(|(i, b)| attribution(model, test.x.row(*i), b))
                .collect::<Result<Vec<f64>>>()?;
            Ok(median(&mut v))
        };
        let (c, b) = (eval(candidate)?, eval(baseline)?);
        cand.push(c);
        base.push(b);
        ratio.push(if b > 0.0 { c / b } else { f64::INFINITY });
    }
    Ok(SensitivityReport {
        feature,
        candidate: bootstrap_percentile_ci(&cand, cfg.ig_alpha)?,
        baseline: bootstrap_percentile_ci(&base, cfg.ig_alpha)?,
        ratio: bootstrap_percentile_ci(&ratio, cfg.ig_alpha)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ip_arithmetic() {
        let t = Matrix::from_rows(&[[1.0, 0.0], [0.0, -1.0]]);
        assert_eq!(implausibility_ip(&[0.0, 0.0], &t).unwrap(), 1.0);
        assert!(implausibility_ip(&[0.0, 0.0], &Matrix::zeros(0, 2)).is_err());
    }

    #[test]
    fn coincident_masses_have_zero_mmd() {
        let a = Matrix::from_rows(&[[0.3, 0.1], [0.3, 0.1]]);
        assert_eq!(mmd_unbiased(&a, &a, 0.5).unwrap(), 0.0);
        assert!(mmd_unbiased(&Matrix::from_rows(&[[0.0]]), &a, 0.5).is_err());
    }

    #[test]
    fn nearest_rank_bounds() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let ci = bootstrap_percentile_ci(&v, 0.01).unwrap();
        assert_eq!((ci.lb, ci.ub), (1.0, 100.0));
        let ci = bootstrap_percentile_ci(&v, 0.1).unwrap();
        assert_eq!((ci.lb, ci.ub), (5.0, 95.0));
        let c = bootstrap_percentile_ci(&[2.5; 4], 0.05).unwrap();
        assert_eq!((c.mean, c.lb, c.ub), (2.5, 2.5, 2.5));
        assert!(bootstrap_percentile_ci(&[1.0], 0.05).is_err());
    }

    #[test]
    fn standardization_examples() {
        assert_eq!(standardize_ig(&[-1.0, 1.0], IgScaling::RangeRatio), vec![0.5, 0.5]);
        assert_eq!(standardize_ig(&[0.0, 2.0, 4.0], IgScaling::MinMax), vec![0.0, 0.5, 1.0]);
        assert_eq!(standardize_ig(&[3.0, 3.0], IgScaling::MinMax), vec![0.0, 0.0]);
    }

    #[test]
    fn ig_of_zero_path_is_zero() {
        let m = MlpModel::linear(Matrix::from_rows(&[[1.0, 2.0], [0.0, -1.0]]), vec![0.0, 0.0]).unwrap();
        let g = integrated_gradients(&m, &[0.4, 0.2], &[0.4, 0.2], 0, 16, IgOutput::Probability).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }
}
