//! Datasets with per-feature actionability metadata.

mod bounds;
mod split;
mod synthetic;
mod tabular;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Matrix;

pub use bounds::{infer_domain_bounds, DEFAULT_N_SIGMA};
pub use split::train_test_split;
pub use synthetic::{gen_gaussian_classes, gen_synthetic, SyntheticKind};
pub use tabular::{load_csv, load_csv_from_reader, standardize, write_csv, write_csv_to, CsvOptions};

/// Direction(s) in which a feature may be changed by recourse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mutability {
    #[default]
    Free,
    Immutable,
    IncreaseOnly,
    DecreaseOnly,
}

impl std::str::FromStr for Mutability {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "free" | "both" => Ok(Mutability::Free),
            "immutable" | "none" => Ok(Mutability::Immutable),
            "increase_only" | "increase" => Ok(Mutability::IncreaseOnly),
            "decrease_only" | "decrease" => Ok(Mutability::DecreaseOnly),
            other => Err(Error::Config(format!("unknown mutability {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub mutability: Mutability,
    /// Inclusive `(lower, upper)` bound.
    pub domain: Option<(f64, f64)>,
}

impl FeatureSpec {
    pub fn free(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            mutability: Mutability::Free,
            domain: None,
        }
    }

    pub fn with_mutability(mut self, mutability: Mutability) -> Self {
        self.mutability = mutability;
        self
    }

    pub fn with_domain(mut self, lb: f64, ub: f64) -> Self {
        self.domain = Some((lb, ub));
        self
    }
}

/// Features `x: n × D`, labels in `0..classes`, and one spec per feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<usize>,
    pub specs: Vec<FeatureSpec>,
    pub classes: usize,
    /// Display names of the classes, indexed by label.
    pub class_names: Vec<String>,
}

impl Dataset {
    /// Builds and validates a dataset with free, unbounded features named `x1..xD`.
    pub fn new(x: Matrix, y: Vec<usize>, classes: usize) -> Result<Self> {
        let specs = (0..x.cols()).map(|d| FeatureSpec::free(format!("x{}", d + 1))).collect();
        let class_names = (0..classes).map(|k| k.to_string()).collect();
        let ds = Self {
            x,
            y,
            specs,
            classes,
            class_names,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.rows() == 0 {
            return Err(Error::Input("dataset has no samples".into()));
        }
        if self.y.len() != self.x.rows() {
            return Err(Error::Input(format!(
                "{} labels for {} samples",
                self.y.len(),
                self.x.rows()
            )));
        }
        if self.specs.len() != self.x.cols() {
            return Err(Error::Input(format!(
                "{} feature specs for {} features",
                self.specs.len(),
                self.x.cols()
            )));
        }
        if self.classes < 2 {
            return Err(Error::Input("need at least two classes".into()));
        }
        if let Some(bad) = self.y.iter().find(|&&c| c >= self.classes) {
            return Err(Error::Input(format!(
                "label {bad} out of range for {} classes",
                self.classes
            )));
        }
        for (d, spec) in self.specs.iter().enumerate() {
            if let Some((lb, ub)) = spec.domain {
                if lb > ub {
                    return Err(Error::Input(format!(
                        "feature {:?} has empty domain [{lb}, {ub}]",
                        spec.name
                    )));
                }
                if let Some(r) = (0..self.x.rows()).find(|&r| {
                    let v = self.x.get(r, d);
                    v < lb || v > ub
                }) {
                    return Err(Error::Input(format!(
                        "row {r} violates the domain of feature {:?}",
                        spec.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    /// Row indices with label `class`.
    pub fn indices_of(&self, class: usize) -> Vec<usize> {
        self.y
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| (c == class).then_some(i))
            .collect()
    }

    /// Rows with label `class`.
    pub fn class_samples(&self, class: usize) -> Matrix {
        self.x.select_rows(&self.indices_of(class))
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            specs: self.specs.clone(),
            classes: self.classes,
            class_names: self.class_names.clone(),
        }
    }

    /// Per-feature domain bounds, `None` where unbounded.
    pub fn domains(&self) -> Vec<Option<(f64, f64)>> {
        self.specs.iter().map(|s| s.domain).collect()
    }

    /// Attaches inferred `n_sigma` domain bounds to every feature.
    pub fn with_inferred_domains(mut self, n_sigma: f64) -> Result<Self> {
        let bounds = infer_domain_bounds(&self.x, n_sigma)?;
        for (spec, b) in self.specs.iter_mut().zip(bounds) {
            spec.domain = Some(b);
        }
        Ok(self)
    }

    pub fn set_mutability(&mut self, feature: usize, mutability: Mutability) -> Result<()> {
        let dim = self.dim();
        let spec = self
            .specs
            .get_mut(feature)
            .ok_or_else(|| Error::Config(format!("feature {feature} out of range for {dim}")))?;
        spec.mutability = mutability;
        Ok(())
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.name == name)
    }

    /// Number of samples per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for &c in &self.y {
            counts[c] += 1;
        }
        counts
    }
}
