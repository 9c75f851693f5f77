use super::{Lts0nError, Result, GRAM_COND_LIMIT};
use crate::spectral::{Matrix, Vector};

#[derive(Debug, Clone)]
pub struct Stage2Result {
    pub m1_hat: Matrix,
    /// `Σ_t ŷ_t ŷ_tᵀ`
    pub gram: Matrix,
    /// Noise-driven residual `M̂1 − P̂1ᵀAP̂1` in closed form, when the noise
    /// realizations are known.
    pub varpi: Option<Matrix>,
}

/// Least-squares fit of `ŷ_{t+1} ≈ M̂1 ŷ_t` with `ŷ_t = P̂1ᵀx_t` over every
/// consecutive pair of columns of `states`.
pub fn stage2_least_squares(states: &Matrix, p1_hat: &Matrix) -> Result<Stage2Result> {
    if states.nrows() != p1_hat.nrows() || states.ncols() < 2 {
        return Err(Lts0nError::InvalidConfig(format!(
            "states {:?} and basis {:?} do not match",
            states.shape(),
            p1_hat.shape()
        )));
    }
    let y = p1_hat.transpose() * states;
    let pairs = y.ncols() - 1;
    let y_now = y.columns(0, pairs);
    let y_next = y.columns(1, pairs);
    let gram = y_now * y_now.transpose();
    let cross = y_next * y_now.transpose();

    // Condition of the equilibrated Gram matrix; a spread in the scale of
    // the coordinates alone is not a solvability problem.
    let d = gram.diagonal().map(|g| if g > 0.0 { 1.0 / g.sqrt() } else { 0.0 });
    let scaled = Matrix::from_fn(gram.nrows(), gram.ncols(), |i, j| gram[(i, j)] * d[i] * d[j]);
    let sv = scaled.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(cond <= GRAM_COND_LIMIT) {
        return Err(Lts0nError::SingularGram { cond });
    }
    let chol = scaled.cholesky().ok_or(Lts0nError::SingularGram { cond })?;
    // G = D⁻¹SD⁻¹, so M̂ G = C  ⇔  S (M̂D⁻¹)ᵀ = D Cᵀ
    let dm = Matrix::from_diagonal(&d);
    let m1_hat = chol.solve(&(&dm * cross.transpose())).transpose() * &dm;
    Ok(Stage2Result { m1_hat, gram, varpi: None })
}

/// `(Σ_t P̂1ᵀη_t x_tᵀP̂1)(Σ^{(k)})^{-2}` over the same pairs as the fit, with
/// `sigma` the top singular values of the data matrix.
pub fn explicit_varpi(states: &Matrix, noise: &[Vector], p1_hat: &Matrix, sigma: &[f64]) -> Matrix {
    let k = p1_hat.ncols();
    let pairs = states.ncols() - 1;
    let mut acc = Matrix::zeros(k, k);
    for (t, eta) in noise.iter().enumerate().take(pairs) {
        let eta_hat = p1_hat.transpose() * eta;
        let y_t = p1_hat.transpose() * states.column(t);
        acc += eta_hat * y_t.transpose();
    }
    for (j, mut col) in acc.column_iter_mut().enumerate() {
        col /= sigma[j] * sigma[j];
    }
    acc
}
