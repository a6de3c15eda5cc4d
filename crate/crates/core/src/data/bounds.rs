use crate::error::{Error, Result};
use crate::nn::Matrix;

pub const DEFAULT_N_SIGMA: f64 = 3.0;

/// Per-feature `(lb, ub)` with `lb = min(μ − nσ, min x)` and `ub = max(μ + nσ, max x)`.
///
/// `σ` is the sample standard deviation (n − 1 denominator).
pub fn infer_domain_bounds(x: &Matrix, n_sigma: f64) -> Result<Vec<(f64, f64)>> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::Input(format!(
            "domain inference needs at least 2 samples, got {n}"
        )));
    }
    if !(n_sigma >= 0.0) {
        return Err(Error::Input(format!("n_sigma must be >= 0, got {n_sigma}")));
    }
    Ok((0..x.cols())
        .map(|d| {
            let col = x.column(d);
            let (mean, std) = mean_std(&col);
            let min = col.iter().copied().fold(f64::INFINITY, f64::min);
            let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ((mean - n_sigma * std).min(min), (mean + n_sigma * std).max(max))
        })
        .collect())
}

/// Mean and sample standard deviation.
pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_feature_collapses_to_point() {
        let x = Matrix::from_rows(&[[4.0], [4.0], [4.0]]);
        assert_eq!(infer_domain_bounds(&x, 3.0).unwrap(), vec![(4.0, 4.0)]);
    }

    #[test]
    fn unit_feature_uses_three_sigma() {
        // mean 0, sample std 1: values ±a with a = sqrt((n-1)/n) for n even
        let n = 8;
        let a = ((n - 1) as f64 / n as f64).sqrt();
        let rows: Vec<[f64; 1]> = (0..n).map(|i| [if i % 2 == 0 { a } else { -a }]).collect();
        let x = Matrix::from_rows(&rows);
        let b = infer_domain_bounds(&x, 3.0).unwrap()[0];
        assert!((b.0 + 3.0).abs() < 1e-12 && (b.1 - 3.0).abs() < 1e-12);
    }

    #[test]
    fn outliers_widen_bounds() {
        let x = Matrix::from_rows(&[[0.0], [0.0], [0.0], [0.0], [100.0]]);
        let (lb, ub) = infer_domain_bounds(&x, 0.5).unwrap()[0];
        assert!(lb <= 0.0 && ub >= 100.0);
    }

    #[test]
    fn too_few_samples() {
        assert!(infer_domain_bounds(&Matrix::from_rows(&[[1.0]]), 3.0).is_err());
    }
}
