//! Dense spectral machinery shared by the learner and by the evaluation oracle.
//!
//! Everything here is a pure function of its inputs. Complex arithmetic only
//! shows up while sorting eigenvalues; any spectrum that survives
//! [`eig_sorted`] is real (a complex-conjugate pair shares its modulus and is
//! rejected), so every basis and projector downstream is a real matrix.

mod control;
mod decompose;
mod gelfand;
mod projector;
mod vandermonde;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

pub use control::{dlyap_solve, lqr_gain, riccati_residual, weighted_norm};
pub use decompose::{eig_sorted, invariant_split, EigenDecomposition, SpectralSplit};
pub use gelfand::{gelfand_constant, matrix_power, spectral_radius, GelfandEstimate};
pub use projector::{basis_align, projector, projector_distance, BasisAlignment};
pub use vandermonde::{inverse_eigen_gap, vandermonde_inverse_norm, VandermondeNorm};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Two eigenvalue moduli closer than this are treated as tied.
pub const MODULUS_TIE_TOL: f64 = 1e-9;
/// Orthonormality tolerance for bases handed to the projector helpers.
pub const ORTHONORMAL_TOL: f64 = 1e-9;
/// Eigenvector matrices worse conditioned than this are rejected.
pub const EIGVEC_COND_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("eigenvector matrix condition number {cond:.3e} exceeds {EIGVEC_COND_LIMIT:e}")]
    NonDiagonalizable { cond: f64 },
    #[error("eigenvalue moduli {a} and {b} are within {MODULUS_TIE_TOL:e}")]
    DistinctModulusViolated { a: f64, b: f64 },
    #[error("eigenvalue modulus {modulus} lies on the unit circle")]
    ModulusOnUnitCircle { modulus: f64 },
    #[error("instability index {k} does not separate the spectrum (n = {n})")]
    BadInstabilityIndex { k: usize, n: usize },
    #[error("basis is not orthonormal (max deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },
    #[error("closed-loop matrix is not Schur stable (spectral radius {rho})")]
    NotSchurStable { rho: f64 },
    #[error("pair is not stabilizable: {0}")]
    Unstabilizable(String),
    #[error("eigenvalues {0} and {1} coincide")]
    DegenerateEigenvalues(usize, usize),
    #[error("eigenvalue {0} is zero")]
    ZeroEigenvalue(usize),
    #[error("{0} did not converge")]
    NoConvergence(&'static str),
}

pub type Result<T> = std::result::Result<T, SpectralError>;

/// Largest singular value.
pub fn spectral_norm(x: &Matrix) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.singular_values().iter().cloned().fold(0.0, f64::max)
}

pub(crate) fn ensure_square(x: &Matrix) -> Result<usize> {
    if x.nrows() != x.ncols() {
        return Err(SpectralError::NotSquare { rows: x.nrows(), cols: x.ncols() });
    }
    Ok(x.nrows())
}

pub(crate) fn ensure_finite(x: &Matrix) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SpectralError::NonFinite)
    }
}

/// Flip the sign of each column so that its largest-magnitude entry is positive.
pub(crate) fn normalize_column_signs(m: &mut Matrix) {
    for mut col in m.column_iter_mut() {
        let pivot = col
            .iter()
            .cloned()
            .fold(0.0_f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
}

pub(crate) fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Sorted-by-modulus helper used in a couple of places.
pub(crate) fn modulus(z: &Complex64) -> f64 {
    z.norm()
}
