//! Evaluates the constants and error bounds of the analysis against what a
//! run actually measured, using an oracle decomposition of the plant.

mod constants;
mod davis_kahan;
mod report;

use thiserror::Error;

use crate::lts0n::Lts0nError;
use crate::spectral::SpectralError;

pub use constants::{
    c_b, c_delta, c_gamma, compute_constants, cz_gaussian, gap, theory_t_bound, GelfandEps, TheoryConstants,
    TheoryParams,
};
pub use davis_kahan::{davis_kahan_check, DavisKahan, DK_TOL};
pub use report::{error_report, ultimate_boundedness_check, CertOptions, CertReport, Premises, BOUND_TOL};

#[derive(Debug, Error)]
pub enum CertifyError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("singular gap violated: sigma_k(D1) = {sigma_k_d1:.3e} <= sigma_(k+1)(D) = {sigma_k1_d:.3e}")]
    GapViolated { sigma_k_d1: f64, sigma_k1_d: f64 },
    #[error("plant has no oracle decomposition")]
    NoTruth,
    #[error("learner assumed k_hat = {k_hat} but the plant has k = {k}")]
    IndexMismatch { k: usize, k_hat: usize },
    #[error(transparent)]
    Learner(#[from] Lts0nError),
}

pub type Result<T> = std::result::Result<T, CertifyError>;
