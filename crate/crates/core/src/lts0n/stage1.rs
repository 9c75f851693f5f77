use super::{Lts0nError, Result, RANK_TOL};
use crate::spectral::{normalize_column_signs, projector, Matrix};

#[derive(Debug, Clone)]
pub struct Stage1Result {
    /// `D = [x_1, …, x_T]`.
    pub d: Matrix,
    /// Nonincreasing singular values of `D`.
    pub singular_values: Vec<f64>,
    /// Top `k̂` left singular vectors.
    pub p1_hat: Matrix,
    pub pi1_hat: Matrix,
}

impl Stage1Result {
    /// `σ_{k̂+1}(D) / σ_k̂(D)`, a data-only proxy for the projector error,
    /// floored at the rank tolerance.
    pub fn epsilon_hat(&self) -> f64 {
        let k = self.p1_hat.ncols();
        let next = self.singular_values.get(k).copied().unwrap_or(0.0);
        (next / self.singular_values[k - 1]).max(RANK_TOL)
    }
}

/// Dominant `k̂`-dimensional left singular subspace of the data matrix.
pub fn stage1_estimate_subspace(d: &Matrix, k_hat: usize) -> Result<Stage1Result> {
    if k_hat == 0 || k_hat > d.ncols() || k_hat > d.nrows() {
        return Err(Lts0nError::InvalidConfig(format!(
            "k_hat = {k_hat} does not fit a {}x{} data matrix",
            d.nrows(),
            d.ncols()
        )));
    }
    if !d.iter().all(|v| v.is_finite()) {
        return Err(Lts0nError::Spectral(crate::spectral::SpectralError::NonFinite));
    }
    let svd = d.clone().svd(true, false);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let sigma_1 = singular_values[0];
    let sigma_k = singular_values[k_hat - 1];
    if !(sigma_k > RANK_TOL * sigma_1) || sigma_1 == 0.0 {
        return Err(Lts0nError::RankDeficient { sigma_k, sigma_1 });
    }
    let u = svd.u.expect("requested U");
    let mut p1_hat = Matrix::from_fn(d.nrows(), k_hat, |r, c| u[(r, order[c])]);
    normalize_column_signs(&mut p1_hat);
    let pi1_hat = projector(&p1_hat)?;
    Ok(Stage1Result { d: d.clone(), singular_values, p1_hat, pi1_hat })
}
