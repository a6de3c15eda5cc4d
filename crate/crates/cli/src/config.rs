//! Experiment configuration in sectioned TOML.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use cftrain_core::cegen::GeneratorConfig;
use cftrain_core::data::{Mutability, SyntheticKind};
use cftrain_core::eval::EvalConfig;
use cftrain_core::training::{Objective, TrainConfig};
use serde::{Deserialize, Serialize};

/// Parse or validation failure, located in the source text when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub data: DataSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DomainMode {
    /// Unbounded features.
    #[default]
    None,
    /// Bounds inferred from the training split.
    Inferred,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    /// Synthetic generator; exclusive with `csv`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<SyntheticKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    /// Label column of a CSV file.
    pub label: String,
    /// Z-score CSV features.
    pub standardize: bool,
    /// Name used in reports; defaults to the generator's short name or the file stem.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n_train: usize,
    pub n_test: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    /// Dataset seed; the global seed when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub domain: DomainMode,
    /// Features held immutable in the constrained scenario.
    pub protected: Vec<String>,
    /// Directional constraints for the constrained scenario.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub mutability: BTreeMap<String, Mutability>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            kind: None,
            csv: None,
            label: "label".into(),
            standardize: true,
            name: None,
            n_train: 3600,
            n_test: 600,
            noise: None,
            seed: None,
            domain: DomainMode::None,
            protected: Vec::new(),
            mutability: BTreeMap::new(),
        }
    }
}

impl DataSection {
    pub fn dataset_name(&self) -> String {
        if let Some(name) = &self.name {
            return name.clone();
        }
        match (&self.kind, &self.csv) {
            (Some(kind), _) => kind.short_name().into(),
            (None, Some(path)) => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "csv".into()),
            (None, None) => "data".into(),
        }
    }

    /// Constraints of the constrained scenario by feature name, sorted.
    pub fn constraints(&self) -> Vec<(String, Mutability)> {
        let mut out: BTreeMap<String, Mutability> = self.mutability.clone();
        for p in &self.protected {
            out.insert(p.clone(), Mutability::Immutable);
        }
        out.into_iter().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub hidden_units: usize,
    /// Hidden layers; 0 gives a linear model.
    pub layers: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            hidden_units: 32,
            layers: 1,
        }
    }
}

impl ModelSection {
    pub fn hidden(&self) -> Vec<usize> {
        vec![self.hidden_units; self.layers]
    }
}

/// Training hyperparameters shared by all objective variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub objectives: Vec<Objective>,
    pub lambda_clf: f64,
    pub lambda_div: f64,
    pub lambda_adv: f64,
    pub lambda_reg: f64,
    pub n_ce: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub burn_in: f64,
    pub eps_adv: f64,
    pub learning_rate: f64,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            objectives: vec![Objective::Full, Objective::Vanilla],
            lambda_clf: t.lambda_clf,
            lambda_div: t.lambda_div,
            lambda_adv: t.lambda_adv,
            lambda_reg: t.lambda_reg,
            n_ce: t.n_ce,
            epochs: t.epochs,
            batch_size: t.batch_size,
            burn_in: t.burn_in,
            eps_adv: t.eps_adv,
            learning_rate: t.learning_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub plots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            plots: true,
        }
    }
}

impl ExperimentConfig {
    /// Default settings for a synthetic dataset.
    pub fn synthetic(kind: SyntheticKind) -> Self {
        Self {
            seed: default_seed(),
            data: DataSection {
                kind: Some(kind),
                ..DataSection::default()
            },
            model: ModelSection::default(),
            training: TrainingSection::default(),
            generator: GeneratorConfig::default(),
            eval: EvalConfig::default(),
            output: OutputSection::default(),
        }
    }

    pub fn train_config(&self, objective: Objective) -> TrainConfig {
        let t = &self.training;
        TrainConfig {
            objective,
            lambda_clf: t.lambda_clf,
            lambda_div: t.lambda_div,
            lambda_adv: t.lambda_adv,
            lambda_reg: t.lambda_reg,
            n_ce: t.n_ce,
            epochs: t.epochs,
            batch_size: t.batch_size,
            burn_in: t.burn_in,
            generator: self.generator,
            eps_adv: t.eps_adv,
            learning_rate: t.learning_rate,
            seed: self.seed,
        }
    }

    /// Evaluation settings; the `[eval]` seed is an offset to the global seed.
    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            seed: self.seed.wrapping_add(self.eval.seed),
            ..self.eval.clone()
        }
    }

    /// Objectives in configured order without repeats.
    pub fn objectives(&self) -> Vec<Objective> {
        let mut out = Vec::new();
        for &o in &self.training.objectives {
            if !out.contains(&o) {
                out.push(o);
            }
        }
        out
    }

    /// Checks cross-field invariants that the schema cannot express.
    pub fn validate(&self) -> Result<(), String> {
        match (&self.data.kind, &self.data.csv) {
            (Some(_), Some(_)) => return Err("[data] takes either `kind` or `csv`, not both".into()),
            (None, None) => return Err("[data] needs `kind` or `csv`".into()),
            _ => {}
        }
        if self.training.objectives.is_empty() {
            return Err("[training] objectives must not be empty".into());
        }
        if self.data.n_train == 0 || self.data.n_test == 0 {
            return Err("[data] n_train and n_test must be positive".into());
        }
        if self.model.layers > 0 && self.model.hidden_units == 0 {
            return Err("[model] hidden_units must be positive".into());
        }
        if let Some(noise) = self.data.noise {
            if !(noise > 0.0 && noise.is_finite()) {
                return Err(format!("[data] noise must be positive, got {noise}"));
            }
        }
        self.train_config(Objective::Full).validate().map_err(|e| e.to_string())?;
        self.eval.validate().map_err(|e| e.to_string())?;
        Ok(())
    }

    /// Checks that constrained features name real columns.
    pub fn check_features(&self, names: &[String]) -> Result<(), String> {
        for (name, _) in self.data.constraints() {
            if !names.contains(&name) {
                return Err(format!("constrained feature {name:?} not in data (features: {})", names.join(", ")));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of the first `key =` assignment, used to place semantic errors.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let mut message = e.message().trim().to_string();
        if message.starts_with("duplicate key") {
            // the parser's message omits the key itself
            if let Some(key) = e.span().and_then(|s| text.get(s)).map(str::trim).filter(|k| !k.is_empty()) {
                message = format!("duplicate key `{key}`");
            }
        }
        ConfigError {
            line: Some(e.span().map_or(1, |s| line_of(text, s.start))),
            message,
        }
    })?;
    cfg.validate().map_err(|message| {
        let key = ["objectives", "kind", "csv", "noise", "n_train", "n_test", "hidden_units"]
            .into_iter()
            .find(|k| message.contains(k));
        ConfigError {
            line: key.and_then(|k| line_of_key(text, k)),
            message,
        }
    })?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_lines_are_found() {
        let text = "[data]\nkind = \"moons\"\n[training]\n  objectives = []\n";
        assert_eq!(line_of_key(text, "objectives"), Some(4));
        assert_eq!(line_of_key(text, "epochs"), None);
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.line, Some(4));
    }
}
