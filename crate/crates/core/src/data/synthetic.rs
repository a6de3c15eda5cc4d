use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::nn::Matrix;

/// Two-class, two-dimensional toy problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    /// Isotropic Gaussians at ∓(2, 2).
    LinearlySeparable,
    /// Same means with a much wider spread.
    Overlapping,
    /// Concentric rings: class 0 at radius 0.5, class 1 at radius 1.0.
    Circles,
    /// Two interlocking half circles.
    Moons,
}

pub(crate) const CLUSTER_CENTER: f64 = 2.0;
pub(crate) const INNER_RADIUS: f64 = 0.5;
pub(crate) const OUTER_RADIUS: f64 = 1.0;

impl SyntheticKind {
    pub const ALL: [SyntheticKind; 4] = [
        SyntheticKind::LinearlySeparable,
        SyntheticKind::Overlapping,
        SyntheticKind::Circles,
        SyntheticKind::Moons,
    ];

    /// Noise level used when none is configured: cluster σ for the Gaussian
    /// kinds, radial σ for circles, coordinate σ for moons.
    pub fn default_noise(self) -> f64 {
        match self {
            SyntheticKind::LinearlySeparable => 0.5,
            SyntheticKind::Overlapping => 1.5,
            SyntheticKind::Circles => 0.1,
            SyntheticKind::Moons => 0.1,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            SyntheticKind::LinearlySeparable => "ls",
            SyntheticKind::Overlapping => "ol",
            SyntheticKind::Circles => "circ",
            SyntheticKind::Moons => "moon",
        }
    }
}

impl std::str::FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ls" | "linearly_separable" | "lin_sep" => Ok(SyntheticKind::LinearlySeparable),
            "ol" | "overlapping" | "over" => Ok(SyntheticKind::Overlapping),
            "circ" | "circles" => Ok(SyntheticKind::Circles),
            "moon" | "moons" => Ok(SyntheticKind::Moons),
            other => Err(Error::Config(format!("unknown synthetic dataset {other:?}"))),
        }
    }
}

/// Generates a balanced two-class dataset of `n` points; deterministic per seed.
pub fn gen_synthetic(kind: SyntheticKind, n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::Input(format!(
            "synthetic datasets need an even n >= 4, got {n}"
        )));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::Input(format!("noise must be finite and >= 0, got {noise}")));
    }
    let half = n / 2;
    match kind {
        SyntheticKind::LinearlySeparable | SyntheticKind::Overlapping => {
            let c = CLUSTER_CENTER;
            gen_gaussian_classes(&[vec![-c, -c], vec![c, c]], &[noise, noise], half, seed)
        }
        SyntheticKind::Circles => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let radial = gaussian(noise)?;
            let mut rows = Vec::with_capacity(n);
            for class in 0..2 {
                let r0 = if class == 0 { INNER_RADIUS } else { OUTER_RADIUS };
                for _ in 0..half {
                    let angle = rng.gen_range(0.0..2.0 * PI);
                    let r = r0 + radial.sample(&mut rng);
                    rows.push(([r * angle.cos(), r * angle.sin()], class));
                }
            }
            finish(rows, &mut rng)
        }
        SyntheticKind::Moons => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let jitter = gaussian(noise)?;
            let mut rows = Vec::with_capacity(n);
            for class in 0..2 {
                for _ in 0..half {
                    let t = rng.gen_range(0.0..=PI);
                    let (x, y) = if class == 0 {
                        (t.cos(), t.sin())
                    } else {
                        (1.0 - t.cos(), 0.5 - t.sin())
                    };
                    let p = [x + jitter.sample(&mut rng), y + jitter.sample(&mut rng)];
                    rows.push((p, class));
                }
            }
            finish(rows, &mut rng)
        }
    }
}

/// Gaussian classes with per-class means and shared per-feature standard
/// deviations; `per_class` samples each, shuffled.
pub fn gen_gaussian_classes(
    means: &[Vec<f64>],
    sigmas: &[f64],
    per_class: usize,
    seed: u64,
) -> Result<Dataset> {
    if means.len() < 2 {
        return Err(Error::Input("need at least two class means".into()));
    }
    let dim = sigmas.len();
    if dim == 0 || means.iter().any(|m| m.len() != dim) {
        return Err(Error::Input("means and sigmas must share a positive dimension".into()));
    }
    if per_class == 0 {
        return Err(Error::Input("need at least one sample per class".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = sigmas.iter().map(|&s| gaussian(s)).collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<(Vec<f64>, usize)> = Vec::with_capacity(per_class * means.len());
    for (class, mean) in means.iter().enumerate() {
        for _ in 0..per_class {
            let x = mean
                .iter()
                .zip(&noise)
                .map(|(m, dist)| m + dist.sample(&mut rng))
                .collect();
            rows.push((x, class));
        }
    }
    rows.shuffle(&mut rng);
    let y = rows.iter().map(|r| r.1).collect();
    let x = Matrix::from_rows(&rows.into_iter().map(|r| r.0).collect::<Vec<_>>());
    Dataset::new(x, y, means.len())
}

fn gaussian(sigma: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, sigma).map_err(|e| Error::Input(format!("invalid noise level {sigma}: {e}")))
}

fn finish(mut rows: Vec<([f64; 2], usize)>, rng: &mut ChaCha8Rng) -> Result<Dataset> {
    rows.shuffle(rng);
    let y = rows.iter().map(|r| r.1).collect();
    let x = Matrix::from_rows(&rows.iter().map(|r| r.0).collect::<Vec<_>>());
    Dataset::new(x, y, 2)
}
