use nalgebra::Schur;

use super::{spectral_norm, Matrix};

/// `X^t` by repeated squaring; `X^0 = I`.
pub fn matrix_power(x: &Matrix, t: usize) -> Matrix {
    let n = x.nrows();
    let mut result = Matrix::identity(n, n);
    let mut base = x.clone();
    let mut e = t;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(x: &Matrix) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    match Schur::try_new(x.clone(), f64::EPSILON, 10_000) {
        Some(schur) => schur
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max),
        // Gelfand fallback: ‖X^(2^j)‖^(1/2^j) converges to ρ from above.
        None => {
            let mut p = x.clone();
            let mut exponent = 1.0;
            let mut log_scale = 0.0;
            for _ in 0..30 {
                let norm = spectral_norm(&p);
                if norm == 0.0 {
                    return 0.0;
                }
                p /= norm;
                log_scale = 2.0 * (log_scale + norm.ln());
                p = &p * &p;
                exponent *= 2.0;
            }
            ((log_scale / 2.0 + spectral_norm(&p).ln() / 2.0) / (exponent / 2.0)).exp()
        }
    }
}

/// Finite-horizon Gelfand constant: the smallest `ζ` with
/// `‖X^t‖ ≤ ζ (ρ(X) + ε)^t` for every `0 ≤ t ≤ horizon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GelfandEstimate {
    pub epsilon: f64,
    pub horizon: usize,
    pub zeta: f64,
    pub rho: f64,
}

impl GelfandEstimate {
    /// `ζ (ρ + ε)^t`
    pub fn envelope(&self, t: usize) -> f64 {
        self.zeta * (self.rho + self.epsilon).powi(t as i32)
    }
}

pub fn gelfand_constant(x: &Matrix, epsilon: f64, horizon: usize) -> GelfandEstimate {
    assert!(epsilon > 0.0, "epsilon must be positive");
    assert!(horizon >= 1, "horizon must be at least one step");
    let rho = spectral_radius(x);
    let base = rho + epsilon;
    // Track X^t / base^t directly so unstable X does not overflow.
    let scaled_step = x / base;
    let n = x.nrows();
    let mut power = Matrix::identity(n, n);
    let mut zeta: f64 = 1.0;
    for _ in 1..=horizon {
        power = &power * &scaled_step;
        zeta = zeta.max(spectral_norm(&power));
    }
    GelfandEstimate { epsilon, horizon, zeta, rho }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mat(rows: usize, cols: usize, data: &[f64]) -> Matrix {
        Matrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn powers() {
        assert_eq!(matrix_power(&mat(1, 1, &[2.0]), 3), mat(1, 1, &[8.0]));
        let x = mat(2, 2, &[3.0, 1.0, 4.0, 1.0]);
        assert_eq!(matrix_power(&x, 0), Matrix::identity(2, 2));
        assert_eq!(matrix_power(&mat(2, 2, &[1.0, 1.0, 0.0, 1.0]), 5), mat(2, 2, &[1.0, 5.0, 0.0, 1.0]));
    }

    #[test]
    fn radii() {
        assert_abs_diff_eq!(spectral_radius(&mat(2, 2, &[2.0, 0.0, 0.0, 0.5])), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spectral_radius(&mat(2, 2, &[0.0, 1.0, 0.0, 0.0])), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spectral_radius(&mat(2, 2, &[0.0, 1.0, -1.0, 0.0])), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gelfand_scalar_is_one() {
        let g = gelfand_constant(&mat(1, 1, &[0.9]), 0.1, 64);
        assert_abs_diff_eq!(g.zeta, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gelfand_nilpotent() {
        let g = gelfand_constant(&mat(2, 2, &[0.0, 1.0, 0.0, 0.0]), 0.5, 8);
        assert_abs_diff_eq!(g.zeta, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn gelfand_jordan_block_envelope() {
        let x = mat(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let g = gelfand_constant(&x, 1.0, 64);
        assert!(g.zeta.is_finite() && g.zeta >= 1.0);
        for t in 0..=64 {
            assert!(spectral_norm(&matrix_power(&x, t)) <= g.envelope(t) * (1.0 + 1e-12));
        }
    }
}
