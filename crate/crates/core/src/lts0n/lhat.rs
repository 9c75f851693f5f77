use crate::spectral::{matrix_power, spectral_radius, Matrix, SpectralSplit};

/// The true τ-hop closed-loop map written in the orthonormal frame
/// `P = [P1 P2]`, split into its four blocks.
#[derive(Debug, Clone)]
pub struct LhatDiagnostic {
    pub l_hat: Matrix,
    pub l11: Matrix,
    pub l12: Matrix,
    pub l21: Matrix,
    pub l22: Matrix,
    /// Top-right block of `Pᵀ A^τ P`.
    pub delta_tau: Matrix,
    pub rho: f64,
}

/// `L̂ = Pᵀ (A^τ + A^{τ−1} B K̂1 P̂1ᵀ) P`.
pub fn closed_loop_matrix_lhat(
    a: &Matrix,
    b: &Matrix,
    truth: &SpectralSplit,
    p1_hat: &Matrix,
    k1_hat: &Matrix,
    tau: usize,
) -> LhatDiagnostic {
    let k = truth.k;
    let n = truth.n();
    let frame = truth.frame();
    let a_tau_1 = matrix_power(a, tau.saturating_sub(1));
    let a_tau = a * &a_tau_1;
    let map = &a_tau + &a_tau_1 * b * k1_hat * p1_hat.transpose();
    let l_hat = frame.transpose() * map * &frame;
    let open = frame.transpose() * a_tau * &frame;
    let block = |r: usize, c: usize, nr: usize, nc: usize| l_hat.view((r, c), (nr, nc)).into_owned();
    LhatDiagnostic {
        l11: block(0, 0, k, k),
        l12: block(0, k, k, n - k),
        l21: block(k, 0, n - k, k),
        l22: block(k, k, n - k, n - k),
        delta_tau: open.view((0, k), (k, n - k)).into_owned(),
        rho: spectral_radius(&l_hat),
        l_hat,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::invariant_split;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_gain_is_open_loop_power() {
        let a = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 0.5]);
        let b = Matrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let truth = invariant_split(&a, 1).unwrap();
        let d = closed_loop_matrix_lhat(&a, &b, &truth, &truth.p1, &Matrix::zeros(1, 1), 2);
        assert_abs_diff_eq!(d.rho, 4.0, epsilon = 1e-10);
        assert_abs_diff_eq!(d.l21[(0, 0)], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.l11[(0, 0)], 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.l22[(0, 0)], 0.25, epsilon = 1e-12);
        // A² = [[4, 2.5], [0, 0.25]]
        assert_abs_diff_eq!(d.delta_tau[(0, 0)].abs(), 2.5, epsilon = 1e-12);
    }

    #[test]
    fn scalar_blocks_by_hand() {
        // τ = 1: L̂ = Pᵀ(A + B K e1ᵀ)P with P = I.
        let a = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 0.5]);
        let b = Matrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let truth = invariant_split(&a, 1).unwrap();
        let k = Matrix::from_element(1, 1, -1.5);
        let d = closed_loop_matrix_lhat(&a, &b, &truth, &truth.p1, &k, 1);
        let s = truth.p1[(0, 0)].signum() * truth.p2[(1, 0)].signum();
        assert_abs_diff_eq!(d.l11[(0, 0)], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d.l12[(0, 0)], s * 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.l21[(0, 0)], s * -1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d.l22[(0, 0)], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn decoupled_exact_gain() {
        let a = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let b = Matrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let truth = invariant_split(&a, 1).unwrap();
        let k = Matrix::from_element(1, 1, -1.618_033_988_749_895);
        let d = closed_loop_matrix_lhat(&a, &b, &truth, &truth.p1, &k, 1);
        assert_abs_diff_eq!(d.l12.amax(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.rho, 0.5, epsilon = 1e-12);
    }
}
