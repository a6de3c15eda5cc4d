use std::io::{Read, Write};
use std::path::Path;

use super::bounds::mean_std;
use super::{Dataset, FeatureSpec, Mutability};
use crate::error::{Error, Result};
use crate::nn::Matrix;

/// Standard deviations below this are treated as zero during z-scoring.
const SIGMA_FLOOR: f64 = 1e-12;

/// How a CSV file is turned into a [`Dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct CsvOptions {
    pub label_column: String,
    /// Mutability overrides by feature name.
    pub mutability: Vec<(String, Mutability)>,
    /// Z-score every feature column.
    pub standardize: bool,
    /// Fixed label order; defaults to order of first appearance.
    pub class_order: Option<Vec<String>>,
}

impl CsvOptions {
    pub fn new(label_column: impl Into<String>) -> Self {
        Self {
            label_column: label_column.into(),
            mutability: Vec::new(),
            standardize: true,
            class_order: None,
        }
    }

    pub fn protect(mut self, feature: impl Into<String>, mutability: Mutability) -> Self {
        self.mutability.push((feature.into(), mutability));
        self
    }
}

/// Reads a headed, comma-separated file with numeric feature columns.
pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref()).map_err(|e| {
        Error::Io(format!("cannot open {}: {e}", path.as_ref().display()))
    })?;
    load_csv_from_reader(file, options)
}

pub fn load_csv_from_reader<R: Read>(reader: R, options: &CsvOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Data {
            row: 0,
            column: None,
            message: format!("cannot read header: {e}"),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::Data {
            row: 0,
            column: None,
            message: "file is empty".into(),
        });
    }
    let label_idx = headers
        .iter()
        .position(|h| *h == options.label_column)
        .ok_or_else(|| Error::Data {
            row: 0,
            column: Some(options.label_column.clone()),
            message: "label column not found".into(),
        })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| (i != label_idx).then(|| h.clone()))
        .collect();
    if feature_names.is_empty() {
        return Err(Error::Data {
            row: 0,
            column: None,
            message: "no feature columns".into(),
        });
    }
    for (name, _) in &options.mutability {
        if !feature_names.contains(name) {
            return Err(Error::Data {
                row: 0,
                column: Some(name.clone()),
                message: "mutability override names a missing feature column".into(),
            });
        }
    }

    let mut class_names: Vec<String> = options.class_order.clone().unwrap_or_default();
    let fixed_order = options.class_order.is_some();
    let mut data = Vec::new();
    let mut y = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        // header is row 1 in a spreadsheet view
        let row = r + 2;
        let record = record.map_err(|e| Error::Data {
            row,
            column: None,
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(Error::Data {
                row,
                column: None,
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (i, field) in record.iter().enumerate() {
            let field = field.trim();
            if i == label_idx {
                let label = match class_names.iter().position(|c| c == field) {
                    Some(k) => k,
                    None if fixed_order => {
                        return Err(Error::Data {
                            row,
                            column: Some(headers[i].clone()),
                            message: format!("label {field:?} not in the configured class order"),
                        })
                    }
                    None => {
                        class_names.push(field.to_string());
                        class_names.len() - 1
                    }
                };
                y.push(label);
            } else {
                let v: f64 = field.parse().map_err(|_| Error::Data {
                    row,
                    column: Some(headers[i].clone()),
                    message: format!("non-numeric value {field:?}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Data {
                        row,
                        column: Some(headers[i].clone()),
                        message: format!("non-finite value {field:?}"),
                    });
                }
                data.push(v);
            }
        }
    }
    if y.is_empty() {
        return Err(Error::Data {
            row: 1,
            column: None,
            message: "file has a header but no data rows".into(),
        });
    }
    if class_names.len() < 2 {
        return Err(Error::Data {
            row: 1,
            column: Some(options.label_column.clone()),
            message: "label column has fewer than two classes".into(),
        });
    }

    let x = Matrix::from_vec(y.len(), feature_names.len(), data);
    let specs = feature_names
        .iter()
        .map(|name| {
            let mutability = options
                .mutability
                .iter()
                .rev()
                .find(|(n, _)| n == name)
                .map_or(Mutability::Free, |(_, m)| *m);
            FeatureSpec::free(name.clone()).with_mutability(mutability)
        })
        .collect();
    let ds = Dataset {
        x,
        y,
        specs,
        classes: class_names.len(),
        class_names,
    };
    ds.validate()?;
    if options.standardize {
        Ok(standardize(&ds).0)
    } else {
        Ok(ds)
    }
}

/// Z-scores every column (sample standard deviation); constant columns become zero.
///
/// Returns the scaled dataset with the per-column means and deviations used.
/// Domain bounds are dropped since they no longer apply to the scaled values.
pub fn standardize(ds: &Dataset) -> (Dataset, Vec<f64>, Vec<f64>) {
    let mut out = ds.clone();
    let mut means = Vec::with_capacity(ds.dim());
    let mut stds = Vec::with_capacity(ds.dim());
    for d in 0..ds.dim() {
        let (mean, std) = mean_std(&ds.x.column(d));
        let scale = if std < SIGMA_FLOOR { 0.0 } else { 1.0 / std };
        for r in 0..ds.len() {
            out.x[(r, d)] = (ds.x.get(r, d) - mean) * scale;
        }
        means.push(mean);
        stds.push(std);
    }
    for spec in &mut out.specs {
        spec.domain = None;
    }
    (out, means, stds)
}

/// Writes features and the label (as class name) with a header row.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>, label_column: &str) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    write_csv_to(ds, file, label_column)
}

pub fn write_csv_to<W: Write>(ds: &Dataset, writer: W, label_column: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut header: Vec<&str> = ds.specs.iter().map(|s| s.name.as_str()).collect();
    header.push(label_column);
    w.write_record(&header).map_err(io)?;
    for r in 0..ds.len() {
        let mut fields: Vec<String> = ds.x.row(r).iter().map(|v| format!("{v:e}")).collect();
        fields.push(ds.class_names[ds.y[r]].clone());
        w.write_record(&fields).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
