use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Result, SpectralError};

const COINCIDE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VandermondeNorm {
    /// `‖Λ⁻¹‖₂` for the inverse-power Vandermonde matrix.
    pub exact_norm: f64,
    /// `k^{k/2 + 3/2} / gap`
    pub closed_form_bound: f64,
    pub gap: f64,
}

fn check_lambdas(lambdas: &[Complex64]) -> Result<()> {
    for (i, z) in lambdas.iter().enumerate() {
        if z.norm() == 0.0 {
            return Err(SpectralError::ZeroEigenvalue(i));
        }
    }
    for i in 0..lambdas.len() {
        for j in i + 1..lambdas.len() {
            let scale = lambdas[i].norm().max(lambdas[j].norm());
            if (lambdas[i] - lambdas[j]).norm() <= COINCIDE_TOL * scale {
                return Err(SpectralError::DegenerateEigenvalues(i, j));
            }
        }
    }
    Ok(())
}

/// `|∏_{m1 ≠ m2} (λ_{m1}⁻¹ − λ_{m2}⁻¹)|` over ordered pairs; one for a single
/// eigenvalue.
pub fn inverse_eigen_gap(lambdas: &[Complex64]) -> Result<f64> {
    check_lambdas(lambdas)?;
    let inv: Vec<Complex64> = lambdas.iter().map(|z| z.inv()).collect();
    let mut gap = 1.0;
    for (i, a) in inv.iter().enumerate() {
        for (j, b) in inv.iter().enumerate() {
            if i != j {
                gap *= (a - b).norm();
            }
        }
    }
    Ok(gap)
}

pub fn vandermonde_inverse_norm(lambdas: &[Complex64]) -> Result<VandermondeNorm> {
    let gap = inverse_eigen_gap(lambdas)?;
    let k = lambdas.len();
    let vander = DMatrix::from_fn(k, k, |i, j| lambdas[i].inv().powi(j as i32));
    let sigma_min = vander
        .singular_values()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let kf = k as f64;
    Ok(VandermondeNorm {
        exact_norm: 1.0 / sigma_min,
        closed_form_bound: kf.powf(kf / 2.0 + 1.5) / gap,
        gap,
    })
}
