//! Trains the configured objective variants, evaluates them against the
//! Vanilla baseline and collects everything that ends up on disk.

use cftrain_core::attacks::{robust_accuracy, AttackKind};
use cftrain_core::data::{
    gen_synthetic, load_csv, train_test_split, CsvOptions, Dataset, FeatureSpec, Mutability, DEFAULT_N_SIGMA,
};
use cftrain_core::eval::{evaluate_models, protected_sensitivity, EvalReport, Scenario, SensitivityReport};
use cftrain_core::nn::MlpModel;
use cftrain_core::training::{train, EpochLog, Objective};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ConfigError, DomainMode, ExperimentConfig};
use crate::error::CliError;

/// Train and test splits with the unconstrained feature specs.
#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Dataset,
    pub test: Dataset,
}

/// Seeds derived from the global seed for each stage.
fn data_seed(cfg: &ExperimentConfig) -> u64 {
    cfg.data.seed.unwrap_or(cfg.seed)
}

fn split_seed(cfg: &ExperimentConfig) -> u64 {
    data_seed(cfg).wrapping_add(1)
}

fn init_seed(cfg: &ExperimentConfig) -> u64 {
    cfg.seed.wrapping_add(2)
}

/// Loads or generates the data and splits it.
pub fn load_data(cfg: &ExperimentConfig) -> Result<Splits, CliError> {
    let d = &cfg.data;
    let total = d.n_train + d.n_test;
    let (train, test) = match (&d.kind, &d.csv) {
        (Some(kind), _) => {
            let noise = d.noise.unwrap_or(kind.default_noise());
            let ds = gen_synthetic(*kind, total, noise, data_seed(cfg))?;
            train_test_split(&ds, d.n_test as f64 / total as f64, split_seed(cfg))?
        }
        (None, Some(path)) => {
            let opts = CsvOptions {
                standardize: d.standardize,
                ..CsvOptions::new(d.label.clone())
            };
            let ds = load_csv(path, &opts)?;
            let frac = d.n_test as f64 / total as f64;
            train_test_split(&ds, frac, split_seed(cfg))?
        }
        (None, None) => return Err(ConfigError { line: None, message: "[data] needs `kind` or `csv`".into() }.into()),
    };
    let names: Vec<String> = train.specs.iter().map(|s| s.name.clone()).collect();
    cfg.check_features(&names).map_err(|message| ConfigError { line: None, message })?;
    let train = match d.domain {
        DomainMode::None => train,
        DomainMode::Inferred => train.with_inferred_domains(DEFAULT_N_SIGMA)?,
    };
    let test = Dataset {
        specs: train.specs.clone(),
        ..test
    };
    Ok(Splits { train, test })
}

/// Feature specs of the constrained scenario.
pub fn constrained_specs(cfg: &ExperimentConfig, base: &[FeatureSpec]) -> Vec<FeatureSpec> {
    let constraints = cfg.data.constraints();
    base.iter()
        .map(|s| match constraints.iter().find(|(n, _)| *n == s.name) {
            Some((_, m)) => s.clone().with_mutability(*m),
            None => s.clone(),
        })
        .collect()
}

/// Shared initial parameters of every variant.
pub fn init_model(cfg: &ExperimentConfig, splits: &Splits) -> Result<MlpModel, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(init_seed(cfg));
    Ok(MlpModel::new(
        splits.train.dim(),
        &cfg.model.hidden(),
        splits.train.classes,
        &mut rng,
    )?)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainedVariant {
    pub objective: Objective,
    pub scenario: Scenario,
    pub clean_accuracy: f64,
    #[serde(skip)]
    pub model: MlpModel,
    #[serde(skip)]
    pub log: Vec<EpochLog>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Evaluation {
    pub objective: Objective,
    pub report: EvalReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct Sensitivity {
    pub objective: Objective,
    pub feature_name: String,
    pub report: SensitivityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustCurve {
    pub objective: Objective,
    pub attack: AttackKind,
    /// `(ε, accuracy)` over the configured budgets.
    pub points: Vec<(f64, f64)>,
}

/// Everything an experiment produces.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub seed: u64,
    pub epsilons: Vec<f64>,
    pub constraints: Vec<(String, Mutability)>,
    pub variants: Vec<TrainedVariant>,
    pub evaluations: Vec<Evaluation>,
    pub sensitivity: Vec<Sensitivity>,
    pub robustness: Vec<RobustCurve>,
    /// Training split, kept for plotting.
    #[serde(skip)]
    pub train: Option<Dataset>,
}

impl ExperimentReport {
    pub fn variant(&self, objective: Objective, scenario: Scenario) -> Option<&TrainedVariant> {
        self.variants
            .iter()
            .find(|v| v.objective == objective && v.scenario == scenario)
    }

    pub fn evaluation(&self, objective: Objective, scenario: Scenario) -> Option<&EvalReport> {
        self.evaluations
            .iter()
            .find(|e| e.objective == objective && e.report.scenario == scenario)
            .map(|e| &e.report)
    }

    /// Valid counterfactuals from the first unconstrained evaluation round.
    pub fn counterfactuals(&self, objective: Objective) -> Vec<Vec<f64>> {
        let first = |rounds: &[cftrain_core::eval::RoundOutcome]| {
            rounds.first().map(|r| r.counterfactuals.clone()).unwrap_or_default()
        };
        if objective == Objective::Vanilla {
            return self
                .evaluations
                .iter()
                .find(|e| e.report.scenario == Scenario::Unconstrained)
                .map(|e| first(&e.report.baseline_rounds))
                .unwrap_or_default();
        }
        self.evaluation(objective, Scenario::Unconstrained)
            .map(|r| first(&r.candidate_rounds))
            .unwrap_or_default()
    }
}

fn train_variant(
    cfg: &ExperimentConfig,
    data: &Dataset,
    test: &Dataset,
    init: &MlpModel,
    objective: Objective,
    scenario: Scenario,
) -> Result<TrainedVariant, CliError> {
    let out = train(data, init, &cfg.train_config(objective))?;
    let clean_accuracy = out.model.accuracy(&test.x, &test.y)?;
    Ok(TrainedVariant {
        objective,
        scenario,
        clean_accuracy,
        model: out.model,
        log: out.log,
    })
}

/// Runs the full protocol without touching the file system.
///
/// Vanilla is always trained since it is the baseline of every comparison.
/// Variants that generate counterfactuals are trained a second time with the
/// constrained feature specs so that feature protection applies during
/// training; Vanilla ignores specs and is shared by both scenarios.
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentReport, CliError> {
    cfg.validate().map_err(|message| ConfigError { line: None, message })?;
    let splits = load_data(cfg)?;
    let init = init_model(cfg, &splits)?;
    let eval_cfg = cfg.eval_config();

    let mut objectives = cfg.objectives();
    if !objectives.contains(&Objective::Vanilla) {
        objectives.push(Objective::Vanilla);
    }
    let specs_c = constrained_specs(cfg, &splits.train.specs);
    let train_c = Dataset {
        specs: specs_c.clone(),
        ..splits.train.clone()
    };
    let test_c = Dataset {
        specs: specs_c.clone(),
        ..splits.test.clone()
    };
    let has_constraints = specs_c != splits.train.specs;

    let mut variants = Vec::new();
    for &o in &objectives {
        variants.push(train_variant(cfg, &splits.train, &splits.test, &init, o, Scenario::Unconstrained)?);
    }
    for &o in &objectives {
        if o == Objective::Vanilla {
            continue;
        }
        let v = if has_constraints {
            train_variant(cfg, &train_c, &splits.test, &init, o, Scenario::Constrained)?
        } else {
            let base = variants.iter().find(|v| v.objective == o).expect("trained above");
            TrainedVariant {
                scenario: Scenario::Constrained,
                ..base.clone()
            }
        };
        variants.push(v);
    }
    let model_of = |o: Objective, s: Scenario| {
        let s = if o == Objective::Vanilla { Scenario::Unconstrained } else { s };
        &variants
            .iter()
            .find(|v| v.objective == o && v.scenario == s)
            .expect("every objective is trained")
            .model
    };
    let baseline = model_of(Objective::Vanilla, Scenario::Unconstrained);

    let mut evaluations = Vec::new();
    let mut sensitivity = Vec::new();
    for &o in objectives.iter().filter(|o| **o != Objective::Vanilla) {
        let report = evaluate_models(
            model_of(o, Scenario::Unconstrained),
            baseline,
            &splits.test,
            &splits.test.specs,
            Scenario::Unconstrained,
            &eval_cfg,
        )?;
        evaluations.push(Evaluation { objective: o, report });
        let report = evaluate_models(model_of(o, Scenario::Constrained), baseline, &test_c, &specs_c, Scenario::Constrained, &eval_cfg)?;
        evaluations.push(Evaluation { objective: o, report });
        for (d, spec) in specs_c.iter().enumerate() {
            if spec.mutability != Mutability::Immutable {
                continue;
            }
            let report = protected_sensitivity(model_of(o, Scenario::Constrained), baseline, &test_c, d, &eval_cfg)?;
            sensitivity.push(Sensitivity {
                objective: o,
                feature_name: spec.name.clone(),
                report,
            });
        }
    }

    let mut robustness = Vec::new();
    for attack in [AttackKind::Fgsm, AttackKind::Pgd] {
        for &o in &objectives {
            let points = robust_accuracy(model_of(o, Scenario::Unconstrained), &splits.test, attack, &eval_cfg.epsilons)?;
            robustness.push(RobustCurve {
                objective: o,
                attack,
                points,
            });
        }
    }

    Ok(ExperimentReport {
        dataset: cfg.data.dataset_name(),
        seed: cfg.seed,
        epsilons: eval_cfg.epsilons.clone(),
        constraints: cfg.data.constraints(),
        variants,
        evaluations,
        sensitivity,
        robustness,
        train: Some(splits.train),
    })
}
