use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{LtiPlant, NoiseModel, PlantError};
use crate::rng::Rng;
use crate::spectral::{invariant_split, Matrix};

const MAX_ATTEMPTS: usize = 200;

/// Recipe for a synthetic plant `A = V Λ V⁻¹` with real, distinct eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSpec {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    /// Moduli of the `k` unstable eigenvalues, each in `(1, ∞)`.
    pub unstable_range: (f64, f64),
    /// Moduli of the `n − k` stable eigenvalues, each in `(0, 1)`.
    pub stable_range: (f64, f64),
    /// Largest accepted condition number of `V`.
    pub cond_limit: f64,
    /// Smallest spacing between any two eigenvalue moduli.
    pub min_gap: f64,
    /// Smallest spacing between two unstable moduli; never below `min_gap`.
    pub unstable_gap: f64,
    /// Strength of the non-orthogonal part of `V`.
    pub coupling: f64,
    pub noise: NoiseModel,
}

impl Default for PlantSpec {
    fn default() -> Self {
        PlantSpec::new(8, 1, 1, NoiseModel::None)
    }
}

impl PlantSpec {
    pub fn new(n: usize, k: usize, m: usize, noise: NoiseModel) -> Self {
        PlantSpec {
            n,
            k,
            m,
            unstable_range: (1.1, 1.5),
            stable_range: (0.05, 0.6),
            cond_limit: 1e3,
            min_gap: 1e-3,
            unstable_gap: 1e-3,
            coupling: 0.1,
            noise,
        }
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        let fail = |msg: String| Err(PlantError::GenerationFailed(msg));
        if self.k == 0 || self.k >= self.n {
            return fail(format!("need 0 < k < n, got k = {}, n = {}", self.k, self.n));
        }
        if self.m == 0 {
            return fail("need m ≥ 1".into());
        }
        let (ul, uh) = self.unstable_range;
        let (sl, sh) = self.stable_range;
        if !(1.0 < ul && ul <= uh && uh.is_finite()) {
            return fail(format!("unstable range {:?} must lie above 1", self.unstable_range));
        }
        if !(0.0 < sl && sl <= sh && sh < 1.0) {
            return fail(format!("stable range {:?} must lie inside (0, 1)", self.stable_range));
        }
        if ul * sl >= 1.0 {
            return fail("no draw can satisfy |λ_1||λ_(k+1)| < 1".into());
        }
        for (count, lo, hi, gap) in [(self.k, ul, uh, self.unstable_spacing()), (self.n - self.k, sl, sh, self.min_gap)] {
            if (count as f64 - 1.0) * gap > hi - lo {
                return fail(format!("{count} moduli with spacing {gap} do not fit in [{lo}, {hi}]"));
            }
        }
        if !(self.cond_limit >= 1.0) {
            return fail("cond_limit must be at least 1".into());
        }
        Ok(())
    }

    fn unstable_spacing(&self) -> f64 {
        self.unstable_gap.max(self.min_gap)
    }
}

/// `count` values in `[lo, hi]` with pairwise spacing at least `gap`,
/// returned in decreasing order.
fn spaced_moduli(count: usize, lo: f64, hi: f64, gap: f64, rng: &mut Rng) -> Vec<f64> {
    let slack = (hi - lo) - (count.saturating_sub(1)) as f64 * gap;
    let mut offsets: Vec<f64> = (0..count).map(|_| rng.random::<f64>() * slack).collect();
    offsets.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = offsets.iter().enumerate().map(|(i, u)| lo + u + i as f64 * gap).collect();
    out.reverse();
    out
}

fn gaussian_matrix(r: usize, c: usize, rng: &mut Rng) -> Matrix {
    Matrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

fn condition_number(x: &Matrix) -> f64 {
    let sv = x.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

pub fn random_plant(spec: &PlantSpec, rng: &mut Rng) -> Result<LtiPlant, PlantError> {
    spec.validate()?;
    let n = spec.n;
    for _ in 0..MAX_ATTEMPTS {
        let unstable = spaced_moduli(spec.k, spec.unstable_range.0, spec.unstable_range.1, spec.unstable_spacing(), rng);
        let stable = spaced_moduli(n - spec.k, spec.stable_range.0, spec.stable_range.1, spec.min_gap, rng);
        if unstable[0] * stable[0] >= 1.0 {
            continue;
        }
        let eigenvalues: Vec<f64> = unstable
            .iter()
            .chain(&stable)
            .map(|&r| if rng.random_bool(0.5) { r } else { -r })
            .collect();

        let h = gaussian_matrix(n, n, rng).qr().q();
        let shear = Matrix::identity(n, n) + gaussian_matrix(n, n, rng) * (spec.coupling / (n as f64).sqrt());
        let v = h * shear;
        if condition_number(&v) > spec.cond_limit {
            continue;
        }
        let Some(v_inv) = v.clone().try_inverse() else { continue };
        let lambda = Matrix::from_diagonal(&nalgebra::DVector::from_vec(eigenvalues));
        let a = &v * lambda * v_inv;
        let b = gaussian_matrix(n, spec.m, rng);
        let Ok(truth) = invariant_split(&a, spec.k) else { continue };
        let mut plant = LtiPlant::new(a, b, spec.noise)?;
        plant.truth = Some(truth);
        return Ok(plant);
    }
    Err(PlantError::GenerationFailed(format!("no admissible plant after {MAX_ATTEMPTS} attempts")))
}
