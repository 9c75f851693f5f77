use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::PlantError;
use crate::rng::Rng;
use crate::spectral::Vector;

/// Resampling budget for the truncated Gaussian before falling back to a
/// radial rescale.
const TRUNCATION_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    None,
    /// Uniform in the ball of radius `c`.
    BoundedUniform { c: f64 },
    /// `N(0, σ² I)`, unbounded.
    Gaussian { sigma: f64 },
    /// `N(0, σ² I)` conditioned on `‖η‖ ≤ c`.
    TruncatedGaussian { sigma: f64, c: f64 },
}

impl NoiseModel {
    /// Bound `C` on `‖η‖`. Gaussian noise has none, so `3σ√n` stands in.
    pub fn effective_bound(&self, n: usize) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::BoundedUniform { c } => c,
            NoiseModel::Gaussian { sigma } => 3.0 * sigma * (n as f64).sqrt(),
            NoiseModel::TruncatedGaussian { c, .. } => c,
        }
    }

    /// Gaussian with `σ`, or no noise when `σ = 0`.
    pub fn gaussian_or_none(sigma: f64) -> Self {
        if sigma == 0.0 {
            NoiseModel::None
        } else {
            NoiseModel::Gaussian { sigma }
        }
    }

    /// Per-coordinate scale, used to label sweep rows.
    pub fn sigma(&self) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::BoundedUniform { c } => c,
            NoiseModel::Gaussian { sigma } | NoiseModel::TruncatedGaussian { sigma, .. } => sigma,
        }
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        let valid = match *self {
            NoiseModel::None => true,
            NoiseModel::BoundedUniform { c } => ok(c),
            NoiseModel::Gaussian { sigma } => ok(sigma),
            NoiseModel::TruncatedGaussian { sigma, c } => ok(sigma) && ok(c),
        };
        if valid {
            Ok(())
        } else {
            Err(PlantError::Format(format!("invalid noise model {self:?}")))
        }
    }
}

fn gaussian(n: usize, sigma: f64, rng: &mut Rng) -> Vector {
    Vector::from_fn(n, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        sigma * z
    })
}

pub fn sample_noise(model: &NoiseModel, n: usize, rng: &mut Rng) -> Vector {
    match *model {
        NoiseModel::None => Vector::zeros(n),
        NoiseModel::BoundedUniform { c } => {
            let mut dir = gaussian(n, 1.0, rng);
            let norm = dir.norm();
            if norm == 0.0 {
                return Vector::zeros(n);
            }
            dir /= norm;
            let radius = c * rng.random::<f64>().powf(1.0 / n as f64);
            dir * radius
        }
        NoiseModel::Gaussian { sigma } => gaussian(n, sigma, rng),
        NoiseModel::TruncatedGaussian { sigma, c } => {
            for _ in 0..TRUNCATION_ATTEMPTS {
                let eta = gaussian(n, sigma, rng);
                if eta.norm() <= c {
                    return eta;
                }
            }
            let eta = gaussian(n, sigma, rng);
            let norm = eta.norm();
            eta * (c * rng.random::<f64>() / norm)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;

    #[test]
    fn none_is_zero() {
        let mut rng = rng_from(&[0]);
        assert_eq!(sample_noise(&NoiseModel::None, 3, &mut rng), Vector::zeros(3));
    }

    #[test]
    fn bounded_uniform_stays_in_ball_and_centres() {
        let mut rng = rng_from(&[1]);
        let model = NoiseModel::BoundedUniform { c: 0.1 };
        let mut mean = Vector::zeros(4);
        for _ in 0..10_000 {
            let eta = sample_noise(&model, 4, &mut rng);
            assert!(eta.norm() <= 0.1);
            mean += eta;
        }
        mean /= 10_000.0;
        assert!(mean.norm() < 0.02);
    }

    #[test]
    fn gaussian_coordinate_spread() {
        let mut rng = rng_from(&[2]);
        let model = NoiseModel::Gaussian { sigma: 0.01 };
        let n = 128;
        let samples = 10_000;
        let mut sum = Vector::zeros(n);
        let mut sq = Vector::zeros(n);
        for _ in 0..samples {
            let eta = sample_noise(&model, n, &mut rng);
            sq += eta.component_mul(&eta);
            sum += eta;
        }
        for i in 0..n {
            let mean = sum[i] / samples as f64;
            let std = (sq[i] / samples as f64 - mean * mean).sqrt();
            assert!((0.009..=0.011).contains(&std), "coordinate {i}: {std}");
        }
        assert!((model.effective_bound(n) - 0.03 * 128f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn truncated_respects_bound() {
        let mut rng = rng_from(&[3]);
        let model = NoiseModel::TruncatedGaussian { sigma: 0.1, c: 0.05 };
        for _ in 0..2000 {
            assert!(sample_noise(&model, 8, &mut rng).norm() <= 0.05);
        }
    }

    #[test]
    fn json_shape() {
        let json = serde_json::to_string(&NoiseModel::Gaussian { sigma: 0.01 }).unwrap();
        assert_eq!(json, r#"{"kind":"gaussian","sigma":0.01}"#);
        let back: NoiseModel = serde_json::from_str(r#"{"kind":"none"}"#).unwrap();
        assert_eq!(back, NoiseModel::None);
    }
}
