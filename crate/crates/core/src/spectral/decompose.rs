use nalgebra::Schur;
use num_complex::Complex64;

use super::{
    ensure_finite, ensure_square, modulus, normalize_column_signs, Matrix, Result,
    SpectralError, EIGVEC_COND_LIMIT, MODULUS_TIE_TOL,
};

/// Eigenvalues sorted by strictly decreasing modulus with matching unit
/// right eigenvectors (as columns).
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<Complex64>,
    pub vectors: Matrix,
}

impl EigenDecomposition {
    pub fn moduli(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(modulus).collect()
    }
}

pub fn eig_sorted(a: &Matrix) -> Result<EigenDecomposition> {
    let n = ensure_square(a)?;
    ensure_finite(a)?;

    let schur = Schur::try_new(a.clone(), f64::EPSILON, 10_000)
        .ok_or(SpectralError::NoConvergence("real Schur decomposition"))?;
    let mut eigenvalues: Vec<Complex64> = schur.complex_eigenvalues().iter().cloned().collect();
    eigenvalues.sort_by(|x, y| modulus(y).total_cmp(&modulus(x)));

    for pair in eigenvalues.windows(2) {
        let (a_mod, b_mod) = (modulus(&pair[0]), modulus(&pair[1]));
        if a_mod - b_mod <= MODULUS_TIE_TOL {
            return Err(SpectralError::DistinctModulusViolated { a: a_mod, b: b_mod });
        }
    }
    if let Some(z) = eigenvalues.iter().find(|z| (modulus(z) - 1.0).abs() <= MODULUS_TIE_TOL) {
        return Err(SpectralError::ModulusOnUnitCircle { modulus: modulus(z) });
    }
    // Distinct moduli leave no room for a conjugate pair, so the spectrum is
    // real and the real Schur factor is upper triangular.
    let (q, t) = schur.unpack();
    let scale = t.amax().max(1.0);
    let triangular = (1..n).all(|i| t[(i, i - 1)].abs() <= 1e-12 * scale);

    let mut vectors = Matrix::zeros(n, n);
    for (col, lambda) in eigenvalues.iter().enumerate() {
        let lambda = lambda.re;
        let v = if triangular {
            triangular_eigenvector(&t, lambda).map(|y| &q * y)
        } else {
            None
        }
        .unwrap_or_else(|| null_vector(a, lambda));
        let norm = v.norm();
        vectors.set_column(col, &(v / norm));
    }
    normalize_column_signs(&mut vectors);

    let sv = vectors.singular_values();
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= EIGVEC_COND_LIMIT) {
        return Err(SpectralError::NonDiagonalizable { cond });
    }

    Ok(EigenDecomposition { eigenvalues, vectors })
}

/// Back substitution on an upper-triangular Schur factor.
fn triangular_eigenvector(t: &Matrix, lambda: f64) -> Option<nalgebra::DVector<f64>> {
    let n = t.nrows();
    let pos = (0..n)
        .min_by(|&i, &j| (t[(i, i)] - lambda).abs().total_cmp(&(t[(j, j)] - lambda).abs()))?;
    let lambda = t[(pos, pos)];
    let mut y = nalgebra::DVector::zeros(n);
    y[pos] = 1.0;
    for j in (0..pos).rev() {
        let mut acc = 0.0;
        for l in (j + 1)..=pos {
            acc += t[(j, l)] * y[l];
        }
        let denom = t[(j, j)] - lambda;
        if denom == 0.0 {
            return None;
        }
        y[j] = -acc / denom;
    }
    y.iter().all(|v| v.is_finite()).then_some(y)
}

fn null_vector(a: &Matrix, lambda: f64) -> nalgebra::DVector<f64> {
    let n = a.nrows();
    let shifted = a - Matrix::identity(n, n) * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .expect("non-empty");
    v_t.row(idx).transpose()
}

/// Ground-truth geometry of the unstable/stable split of a plant matrix.
///
/// `p1`/`p2` are the orthogonal frame of `E_u ⊕ E_u^⊥`; `q1`/`q2` are
/// orthonormal bases of the invariant pair `E_u ⊕ E_s` with `[r1; r2]` the
/// inverse of `[q1 q2]`. `q1` and `p1` coincide by construction.
#[derive(Debug, Clone)]
pub struct SpectralSplit {
    pub eigenvalues: Vec<Complex64>,
    pub k: usize,
    pub p1: Matrix,
    pub p2: Matrix,
    pub m1: Matrix,
    pub m2: Matrix,
    pub delta: Matrix,
    pub q1: Matrix,
    pub q2: Matrix,
    pub r1: Matrix,
    pub r2: Matrix,
    pub n1: Matrix,
    pub n2: Matrix,
    pub xi: f64,
}

impl SpectralSplit {
    pub fn n(&self) -> usize {
        self.p1.nrows()
    }

    pub fn unstable_moduli(&self) -> Vec<f64> {
        self.eigenvalues[..self.k].iter().map(modulus).collect()
    }

    /// `|λ_i|` for the 1-based index `i`.
    pub fn modulus(&self, i: usize) -> f64 {
        modulus(&self.eigenvalues[i - 1])
    }

    /// Orthogonal projector onto the unstable subspace.
    pub fn pi1(&self) -> Matrix {
        &self.p1 * self.p1.transpose()
    }

    /// The full orthogonal frame `[P1 P2]`.
    pub fn frame(&self) -> Matrix {
        let n = self.n();
        let mut p = Matrix::zeros(n, n);
        p.columns_mut(0, self.k).copy_from(&self.p1);
        p.columns_mut(self.k, n - self.k).copy_from(&self.p2);
        p
    }
}

pub fn invariant_split(a: &Matrix, k: usize) -> Result<SpectralSplit> {
    let eig = eig_sorted(a)?;
    let n = a.nrows();
    if k == 0 || k >= n {
        return Err(SpectralError::BadInstabilityIndex { k, n });
    }
    let moduli = eig.moduli();
    if !(moduli[k - 1] > 1.0 && moduli[k] < 1.0) {
        return Err(SpectralError::BadInstabilityIndex { k, n });
    }

    let v_unstable = eig.vectors.columns(0, k).into_owned();
    let v_stable = eig.vectors.columns(k, n - k).into_owned();

    // QR of [V_u | I] yields a full orthogonal frame whose first k columns
    // span E_u.
    let mut stacked = Matrix::zeros(n, k + n);
    stacked.columns_mut(0, k).copy_from(&v_unstable);
    stacked.columns_mut(k, n).fill_with_identity();
    let mut frame = stacked.qr().q();
    normalize_column_signs(&mut frame);
    let p1 = frame.columns(0, k).into_owned();
    let p2 = frame.columns(k, n - k).into_owned();

    let mut q2 = v_stable.qr().q();
    normalize_column_signs(&mut q2);
    let q1 = p1.clone();

    let mut q = Matrix::zeros(n, n);
    q.columns_mut(0, k).copy_from(&q1);
    q.columns_mut(k, n - k).copy_from(&q2);
    let r = q
        .clone()
        .try_inverse()
        .ok_or(SpectralError::NonDiagonalizable { cond: f64::INFINITY })?;
    let r1 = r.rows(0, k).into_owned();
    let r2 = r.rows(k, n - k).into_owned();

    let p1t = p1.transpose();
    let p2t = p2.transpose();
    let m1 = &p1t * a * &p1;
    let delta = &p1t * a * &p2;
    let m2 = &p2t * a * &p2;
    let n1 = &r1 * a * &q1;
    let n2 = &r2 * a * &q2;

    let cross = &p2t * &q2;
    let smin = cross.singular_values().iter().cloned().fold(f64::INFINITY, f64::min);
    let xi = (1.0 - smin).clamp(0.0, 1.0);

    Ok(SpectralSplit {
        eigenvalues: eig.eigenvalues,
        k,
        p1,
        p2,
        m1,
        m2,
        delta,
        q1,
        q2,
        r1,
        r2,
        n1,
        n2,
        xi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mat(rows: usize, cols: usize, data: &[f64]) -> Matrix {
        Matrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn diagonal_spectrum_sorted() {
        let eig = eig_sorted(&mat(2, 2, &[0.5, 0.0, 0.0, 2.0])).unwrap();
        assert_abs_diff_eq!(eig.eigenvalues[0].re, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig.eigenvalues[1].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(eig.vectors[(1, 0)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn triangular_spectrum_on_diagonal() {
        let eig = eig_sorted(&mat(2, 2, &[2.0, 1.0, 0.0, 0.5])).unwrap();
        assert_abs_diff_eq!(eig.eigenvalues[0].re, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig.eigenvalues[1].re, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn rotation_pair_is_a_modulus_tie() {
        let (c, s) = (0.3_f64.cos() * 0.9, 0.3_f64.sin() * 0.9);
        let err = eig_sorted(&mat(2, 2, &[c, -s, s, c])).unwrap_err();
        assert!(matches!(err, SpectralError::DistinctModulusViolated { .. }));
    }

    #[test]
    fn unit_modulus_rejected() {
        let err = eig_sorted(&mat(2, 2, &[1.0, 0.0, 0.0, 0.3])).unwrap_err();
        assert!(matches!(err, SpectralError::ModulusOnUnitCircle { .. }));
    }

    #[test]
    fn jordan_block_rejected() {
        // repeated eigenvalue: caught by the modulus tie before anything else
        let err = eig_sorted(&mat(2, 2, &[0.5, 1.0, 0.0, 0.5])).unwrap_err();
        assert!(matches!(err, SpectralError::DistinctModulusViolated { .. }));
    }

    #[test]
    fn split_of_decoupled_diagonal() {
        let s = invariant_split(&mat(2, 2, &[2.0, 0.0, 0.0, 0.5]), 1).unwrap();
        assert_abs_diff_eq!(s.p1[(0, 0)].abs(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.m1[(0, 0)], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.delta[(0, 0)], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.m2[(0, 0)], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.xi, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.q2[(1, 0)].abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn split_of_upper_triangular() {
        let s = invariant_split(&mat(2, 2, &[2.0, 1.0, 0.0, 0.5]), 1).unwrap();
        assert_abs_diff_eq!(s.p1[(0, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.m1[(0, 0)], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.delta[(0, 0)].abs(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.m2[(0, 0)], 0.5, epsilon = 1e-12);
        // stable eigenvector of [[2,1],[0,.5]] is (1, -1.5) up to scale
        let expected = nalgebra::DVector::from_vec(vec![1.0, -1.5]).normalize();
        let dot = (s.q2.column(0).transpose() * &expected)[(0, 0)];
        assert_abs_diff_eq!(dot.abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn split_of_lower_triangular() {
        let s = invariant_split(&mat(2, 2, &[0.5, 0.0, 1.0, 2.0]), 1).unwrap();
        assert_abs_diff_eq!(s.p1[(1, 0)].abs(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.m1[(0, 0)], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn bad_instability_index() {
        let a = mat(3, 3, &[2.0, 0.0, 0.0, 0.0, 1.5, 0.0, 0.0, 0.0, 0.5]);
        assert!(matches!(
            invariant_split(&a, 1),
            Err(SpectralError::BadInstabilityIndex { .. })
        ));
        assert!(matches!(
            invariant_split(&a, 3),
            Err(SpectralError::BadInstabilityIndex { .. })
        ));
        assert!(invariant_split(&a, 2).is_ok());
    }
}
