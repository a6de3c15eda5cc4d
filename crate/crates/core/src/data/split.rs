use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{Error, Result};

/// Stratified split; deterministic per seed.
///
/// The test set holds `round(test_fraction · n)` samples, allocated to classes
/// by largest remainder so each class deviates from its parent share by at
/// most one sample.
pub fn train_test_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Input(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = ds.len();
    let n_test = (test_fraction * n as f64).round() as usize;
    if n_test == 0 || n_test == n {
        return Err(Error::Input(format!(
            "test fraction {test_fraction} leaves an empty split for {n} samples"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_class: Vec<Vec<usize>> = (0..ds.classes).map(|c| ds.indices_of(c)).collect();
    for idx in &mut per_class {
        idx.shuffle(&mut rng);
    }

    let exact: Vec<f64> = per_class
        .iter()
        .map(|idx| idx.len() as f64 * n_test as f64 / n as f64)
        .collect();
    let mut quota: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
    let mut remaining = n_test - quota.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..ds.classes).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &c in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        if quota[c] < per_class[c].len() {
            quota[c] += 1;
            remaining -= 1;
        }
    }

    let mut train_idx = Vec::with_capacity(n - n_test);
    let mut test_idx = Vec::with_capacity(n_test);
    for (idx, &q) in per_class.iter().zip(&quota) {
        test_idx.extend_from_slice(&idx[..q]);
        train_idx.extend_from_slice(&idx[q..]);
    }
    train_idx.shuffle(&mut rng);
    test_idx.shuffle(&mut rng);
    Ok((ds.subset(&train_idx), ds.subset(&test_idx)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Matrix;

    fn toy(n: usize) -> Dataset {
        let rows: Vec<[f64; 1]> = (0..n).map(|i| [i as f64]).collect();
        let y = (0..n).map(|i| i % 2).collect();
        Dataset::new(Matrix::from_rows(&rows), y, 2).unwrap()
    }

    #[test]
    fn sizes_follow_fraction() {
        let (tr, te) = train_test_split(&toy(10), 0.2, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
    }

    #[test]
    fn halves_are_balanced() {
        let (tr, te) = train_test_split(&toy(100), 0.5, 4).unwrap();
        assert_eq!(tr.class_counts(), vec![25, 25]);
        assert_eq!(te.class_counts(), vec![25, 25]);
    }

    #[test]
    fn rejects_bad_fraction() {
        assert!(train_test_split(&toy(10), 0.0, 1).is_err());
        assert!(train_test_split(&toy(10), 1.0, 1).is_err());
        assert!(train_test_split(&toy(10), 0.01, 1).is_err());
    }
}
