use super::{spectral_norm, symmetrize, Matrix, Result, SpectralError, ORTHONORMAL_TOL};

fn orthonormality_deviation(p: &Matrix) -> f64 {
    let gram = p.transpose() * p;
    let k = gram.nrows();
    (gram - Matrix::identity(k, k)).amax()
}

fn ensure_orthonormal(p: &Matrix) -> Result<()> {
    let deviation = orthonormality_deviation(p);
    if deviation > ORTHONORMAL_TOL {
        return Err(SpectralError::NotOrthonormal { deviation });
    }
    Ok(())
}

/// Orthogonal projector `P Pᵀ` onto the column space of an orthonormal basis.
pub fn projector(p: &Matrix) -> Result<Matrix> {
    ensure_orthonormal(p)?;
    Ok(symmetrize(&(p * p.transpose())))
}

/// Spectral-norm distance between two projectors. For equal-rank projectors
/// this is the sine of the largest principal angle.
pub fn projector_distance(pi_a: &Matrix, pi_b: &Matrix) -> f64 {
    spectral_norm(&(pi_a - pi_b))
}

#[derive(Debug, Clone)]
pub struct BasisAlignment {
    /// Orthogonal `k×k` rotation with `P·W ≈ P̂`.
    pub rotation: Matrix,
    /// `‖P·W − P̂‖₂`
    pub delta: f64,
}

/// Orthogonal Procrustes: the rotation of `p` that best matches `p_hat`.
pub fn basis_align(p: &Matrix, p_hat: &Matrix) -> Result<BasisAlignment> {
    if p.shape() != p_hat.shape() {
        return Err(SpectralError::DimensionMismatch(format!(
            "bases are {:?} and {:?}",
            p.shape(),
            p_hat.shape()
        )));
    }
    ensure_orthonormal(p)?;
    ensure_orthonormal(p_hat)?;
    let svd = (p.transpose() * p_hat).svd(true, true);
    let rotation = svd.u.expect("requested U") * svd.v_t.expect("requested V^T");
    let delta = spectral_norm(&(p * &rotation - p_hat));
    Ok(BasisAlignment { rotation, delta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn col(v: &[f64]) -> Matrix {
        Matrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn axis_projector() {
        let pi = projector(&col(&[1.0, 0.0])).unwrap();
        assert_eq!(pi, Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn tilted_projector_by_hand() {
        let phi = PI / 6.0;
        let pi = projector(&col(&[phi.cos(), phi.sin()])).unwrap();
        let r3 = 3f64.sqrt() / 4.0;
        let expected = Matrix::from_row_slice(2, 2, &[0.75, r3, r3, 0.25]);
        assert_abs_diff_eq!((pi - expected).amax(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn full_basis_is_identity() {
        let pi = projector(&Matrix::identity(4, 4)).unwrap();
        assert_abs_diff_eq!((pi - Matrix::identity(4, 4)).amax(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_non_orthonormal() {
        assert!(matches!(
            projector(&col(&[1.0, 1.0])),
            Err(SpectralError::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn distances() {
        let e1 = projector(&col(&[1.0, 0.0])).unwrap();
        let e2 = projector(&col(&[0.0, 1.0])).unwrap();
        let phi = PI / 6.0;
        let tilt = projector(&col(&[phi.cos(), phi.sin()])).unwrap();
        assert_abs_diff_eq!(projector_distance(&e1, &e1), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(projector_distance(&e1, &tilt), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(projector_distance(&tilt, &e1), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(projector_distance(&e1, &e2), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn alignment_examples() {
        let e1 = col(&[1.0, 0.0]);
        let same = basis_align(&e1, &e1).unwrap();
        assert_abs_diff_eq!(same.rotation[(0, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(same.delta, 0.0, epsilon = 1e-15);

        let flipped = basis_align(&e1, &col(&[-1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(flipped.rotation[(0, 0)], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(flipped.delta, 0.0, epsilon = 1e-15);

        let phi = PI / 6.0;
        let tilted = basis_align(&e1, &col(&[phi.cos(), phi.sin()])).unwrap();
        assert_abs_diff_eq!(tilted.delta, 2.0 * (phi / 2.0).sin(), epsilon = 1e-12);
        assert_abs_diff_eq!(tilted.delta, 0.517_638_090_205_041_5, epsilon = 1e-12);
    }
}
