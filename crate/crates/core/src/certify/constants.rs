use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CertifyError, Result};
use crate::spectral::{gelfand_constant, inverse_eigen_gap, spectral_norm, Matrix, SpectralSplit};

/// Slack added to each spectral radius in the Gelfand constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GelfandEps {
    /// For `A` and `M1`.
    pub eps1: f64,
    /// For `M2`.
    pub eps2: f64,
    /// For `N2`.
    pub eps4: f64,
    pub horizon: usize,
}

impl Default for GelfandEps {
    fn default() -> Self {
        GelfandEps { eps1: 0.05, eps2: 0.05, eps4: 0.05, horizon: 256 }
    }
}

/// Inputs to the constant calculators besides the plant itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    /// Noise bound `C`.
    pub noise_c: f64,
    /// Failure probability `θ`.
    pub theta: f64,
    pub eps: GelfandEps,
    pub tau: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    pub gap: f64,
    pub theta: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub zeta_a: f64,
    pub zeta_m1: f64,
    pub zeta_m2: f64,
    pub zeta_n2: f64,
    /// `max(ζ_{ε1}(A), ζ_{ε2}(M2), ζ_{ε4}(N2))`
    pub zeta_bar: f64,
    pub c_delta: f64,
    pub c_gamma: f64,
    pub c_b: f64,
    /// `√(2/π)·√((|λ_i|² − 1)/|λ_i|²)` for each unstable mode.
    pub cz_gaussian: Vec<f64>,
    pub xi: f64,
    pub norm_a: f64,
    pub norm_b: f64,
    pub lambda_1: f64,
    pub lambda_k: f64,
    pub lambda_k1: f64,
    pub eps: GelfandEps,
}

/// `|∏_{m1 ≠ m2} (λ_{m1}⁻¹ − λ_{m2}⁻¹)|` over ordered pairs of unstable modes.
pub fn gap(unstable: &[Complex64]) -> Result<f64> {
    Ok(inverse_eigen_gap(unstable)?)
}

pub fn cz_gaussian(modulus: f64) -> f64 {
    (2.0 / PI).sqrt() * ((modulus * modulus - 1.0) / (modulus * modulus)).sqrt()
}

/// `ζ1(M1)·ζ2(M2)·(2−ξ)√(2ξ)‖A‖/(1−ξ) · 2|λ_{k+1}| / (|λ1| + ε1 − |λ_{k+1}| − ε2)`
#[allow(clippy::too_many_arguments)]
pub fn c_delta(zeta_m1: f64, zeta_m2: f64, xi: f64, norm_a: f64, lambda_1: f64, lambda_k1: f64, eps1: f64, eps2: f64) -> f64 {
    zeta_m1 * zeta_m2 * (2.0 - xi) * (2.0 * xi).sqrt() * norm_a / (1.0 - xi) * 2.0 * lambda_k1
        / (lambda_1 + eps1 - lambda_k1 - eps2)
}

/// `ζ4(N2)·C / (γ'(1−ξ)) · 1/(1 − (|λ_{k+1}| + ε4))` with `γ' = γ − ε`.
pub fn c_gamma(zeta_n2: f64, c: f64, gamma: f64, epsilon: f64, xi: f64, lambda_k1: f64, eps4: f64) -> f64 {
    zeta_n2 * c / ((gamma - epsilon) * (1.0 - xi)) / (1.0 - (lambda_k1 + eps4))
}

/// `(ζ1(A)²(3τ‖A‖ + ‖B‖ + τC + 1) + (τ+1)C_Δ)·√m/α`
#[allow(clippy::too_many_arguments)]
pub fn c_b(zeta_a: f64, tau: usize, norm_a: f64, norm_b: f64, c: f64, c_delta: f64, m: usize, alpha: f64) -> f64 {
    let tau = tau as f64;
    (zeta_a * zeta_a * (3.0 * tau * norm_a + norm_b + tau * c + 1.0) + (tau + 1.0) * c_delta) * (m as f64).sqrt() / alpha
}

pub fn compute_constants(a: &Matrix, b: &Matrix, truth: &SpectralSplit, params: &TheoryParams) -> Result<TheoryConstants> {
    let k = truth.k;
    let eps = params.eps;
    let unstable: Vec<Complex64> = truth.eigenvalues[..k].to_vec();
    let gap = gap(&unstable)?;
    let lambda_1 = truth.modulus(1);
    let lambda_k = truth.modulus(k);
    let lambda_k1 = truth.modulus(k + 1);
    let norm_a = spectral_norm(a);
    let norm_b = spectral_norm(b);
    let xi = truth.xi;
    if !(xi < 1.0) {
        return Err(CertifyError::InvalidSpectrum(format!("subspaces are degenerate (xi = {xi})")));
    }

    let zeta_a = gelfand_constant(a, eps.eps1, eps.horizon).zeta;
    let zeta_m1 = gelfand_constant(&truth.m1, eps.eps1, eps.horizon).zeta;
    let zeta_m2 = gelfand_constant(&truth.m2, eps.eps2, eps.horizon).zeta;
    let zeta_n2 = gelfand_constant(&truth.n2, eps.eps4, eps.horizon).zeta;

    let c_delta = c_delta(zeta_m1, zeta_m2, xi, norm_a, lambda_1, lambda_k1, eps.eps1, eps.eps2);
    let c_gamma = c_gamma(zeta_n2, params.noise_c, params.gamma, params.epsilon, xi, lambda_k1, eps.eps4);
    let c_b = c_b(zeta_a, params.tau, norm_a, norm_b, params.noise_c, c_delta, b.ncols(), params.alpha);

    Ok(TheoryConstants {
        gap,
        theta: params.theta,
        c: params.noise_c,
        zeta_a,
        zeta_m1,
        zeta_m2,
        zeta_n2,
        zeta_bar: zeta_a.max(zeta_m2).max(zeta_n2),
        c_delta,
        c_gamma,
        c_b,
        cz_gaussian: (1..=k).map(|i| cz_gaussian(truth.modulus(i))).collect(),
        xi,
        norm_a,
        norm_b,
        lambda_1,
        lambda_k,
        lambda_k1,
        eps,
    })
}

/// Smallest integer horizon strictly above all three stage-1 conditions that
/// make the projector error fall below `eps`.
#[allow(clippy::too_many_arguments)]
pub fn theory_t_bound(
    n: usize,
    k: usize,
    eps: f64,
    gap: f64,
    theta: f64,
    c: f64,
    lambda_k: f64,
    lambda_k1: f64,
) -> Result<u64> {
    if !(lambda_k > 1.0 && 1.0 > lambda_k1 && lambda_k1 > 0.0) {
        return Err(CertifyError::InvalidSpectrum(format!("need |λ_k| = {lambda_k} > 1 > |λ_(k+1)| = {lambda_k1} > 0")));
    }
    if !(gap > 0.0 && theta > 0.0 && eps > 0.0 && c > 0.0) || k == 0 || k >= n {
        return Err(CertifyError::InvalidSpectrum("gap, theta, eps, C must be positive and 0 < k < n".into()));
    }
    let kf = k as f64;
    let base = kf.powf((kf + 7.0) / 2.0) * (n - k) as f64 * c / (1.0 - lambda_k1);
    let log_k = lambda_k.ln();
    let t1 = 2.0 * (8.0 * 2f64.sqrt() * base / (PI.sqrt() * theta * gap)).ln() / log_k;
    let t2 = 2.0 * (4.0 * 2f64.sqrt() * base / (PI.sqrt() * theta * gap * eps)).ln() / log_k;
    let t3 = log_k;
    let max = t1.max(t2).max(t3);
    Ok((max.floor() + 1.0).max(1.0) as u64)
}
