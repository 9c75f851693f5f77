use serde::{Deserialize, Serialize};

use super::{CertifyError, Result};
use crate::lts0n::{stage1_estimate_subspace, RANK_TOL};
use crate::spectral::{projector_distance, spectral_norm, Matrix, SpectralSplit};

/// Absolute slack allowed on the inequality.
pub const DK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DavisKahan {
    /// `‖Π̂1 − Π1‖`
    pub lhs: f64,
    /// `√(2k)‖D2‖ / (σ_k(D1) − σ_{k+1}(D))`
    pub rhs: f64,
    pub sigma_k_d1: f64,
    pub sigma_k1_d: f64,
    pub holds: bool,
}

fn sorted_singular_values(x: &Matrix) -> Vec<f64> {
    let mut sv: Vec<f64> = x.singular_values().iter().cloned().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Checks the projector perturbation bound for the data matrix `d`, split as
/// `D = Q1 D1 + Q2 D2` along the invariant subspaces.
pub fn davis_kahan_check(truth: &SpectralSplit, d: &Matrix) -> Result<DavisKahan> {
    let k = truth.k;
    let d1 = &truth.r1 * d;
    let d2 = &truth.r2 * d;
    let sigma_k_d1 = sorted_singular_values(&d1).get(k - 1).copied().unwrap_or(0.0);
    let sv_d = sorted_singular_values(d);
    let sigma_k1_d = sv_d.get(k).copied().unwrap_or(0.0);
    let sep = sigma_k_d1 - sigma_k1_d;
    // A separation at rounding level is no separation.
    let floor = RANK_TOL * sv_d.first().copied().unwrap_or(0.0);
    if !(sep > floor) {
        return Err(CertifyError::GapViolated { sigma_k_d1, sigma_k1_d });
    }
    let stage1 = stage1_estimate_subspace(d, k)?;
    let lhs = projector_distance(&stage1.pi1_hat, &truth.pi1());
    let rhs = (2.0 * k as f64).sqrt() * spectral_norm(&d2) / sep;
    Ok(DavisKahan { lhs, rhs, sigma_k_d1, sigma_k1_d, holds: lhs <= rhs + DK_TOL })
}
