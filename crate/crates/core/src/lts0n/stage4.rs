use super::{m1_tau, Result};
use crate::spectral::{dlyap_solve, lqr_gain, spectral_norm, spectral_radius, weighted_norm, Matrix};

/// Scale of the Lyapunov right-hand side `G = 2.01·I`; any `σ_min(G) > 2`
/// works for the certificate.
pub const LYAPUNOV_WEIGHT: f64 = 2.01;

#[derive(Debug, Clone)]
pub struct Stage4Result {
    pub k1_hat: Matrix,
    /// `ρ(M̂1^τ + B̂_τ K̂1)`
    pub closed_loop_rho: f64,
    pub lyapunov_h: Matrix,
    /// `‖Aclᵀ H Acl + G − H‖₂`
    pub lyapunov_residual: f64,
    /// `‖M̂1^τ + B̂_τ K̂1‖_H`
    pub weighted_norm_u: f64,
    /// Condition number of `H`.
    pub h_condition: f64,
}

pub fn stage4_synthesize(m1_hat: &Matrix, btau_hat: &Matrix, tau: usize, lqr_weights: (f64, f64)) -> Result<Stage4Result> {
    let k = m1_hat.nrows();
    let m = btau_hat.ncols();
    let f = m1_tau(m1_hat, tau);
    let (q, r) = lqr_weights;
    let k1_hat = lqr_gain(&f, btau_hat, &(Matrix::identity(k, k) * q), &(Matrix::identity(m, m) * r))?;
    let acl = &f + btau_hat * &k1_hat;
    let closed_loop_rho = spectral_radius(&acl);
    let g = Matrix::identity(k, k) * LYAPUNOV_WEIGHT;
    let lyapunov_h = dlyap_solve(&acl, &g)?;
    let lyapunov_residual = spectral_norm(&(acl.transpose() * &lyapunov_h * &acl + &g - &lyapunov_h));
    let weighted_norm_u = weighted_norm(&acl, &lyapunov_h)?;
    let sv = lyapunov_h.singular_values();
    let h_condition = sv.max() / sv.min();
    Ok(Stage4Result { k1_hat, closed_loop_rho, lyapunov_h, lyapunov_residual, weighted_norm_u, h_condition })
}
