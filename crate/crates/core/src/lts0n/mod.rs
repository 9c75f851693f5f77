//! The four-stage learner: unstable-subspace estimate, projected least
//! squares, stopping-time probing of the τ-hop input matrix, and controller
//! synthesis, followed by τ-hop closed-loop operation.

mod lhat;
mod run;
mod stage1;
mod stage2;
mod stage3;
mod stage4;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plant::{PlantError, TrajectoryLog, DEFAULT_GUARD};
use crate::spectral::{Matrix, SpectralError};

pub use lhat::{closed_loop_matrix_lhat, LhatDiagnostic};
pub use run::{run_lts0n, Lts0nRun, RunFailure, Stage};
pub use stage1::{stage1_estimate_subspace, Stage1Result};
pub use stage2::{explicit_varpi, stage2_least_squares, Stage2Result};
pub use stage3::{stage3_estimate_btau, ColumnStatus, Stage3Params, Stage3Result};
pub use stage4::{stage4_synthesize, Stage4Result, LYAPUNOV_WEIGHT};


/// `σ_k̂(D) < RANK_TOL · σ_1(D)` means the data never excited k̂ directions.
pub const RANK_TOL: f64 = 1e-12;
/// Largest accepted condition number of the stage-2 Gram matrix.
pub const GRAM_COND_LIMIT: f64 = 1e12;
/// States smaller than this cannot be probed proportionally.
pub const ZERO_STATE: f64 = 1e-300;

#[derive(Debug, Error)]
pub enum Lts0nError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("data matrix is rank deficient: sigma_k = {sigma_k:.3e}, sigma_1 = {sigma_1:.3e}")]
    RankDeficient { sigma_k: f64, sigma_1: f64 },
    #[error("least-squares Gram matrix is singular (condition {cond:.3e})")]
    SingularGram { cond: f64 },
    #[error("state vanished at probe time t = {t}")]
    ZeroState { t: usize },
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

impl Lts0nError {
    /// Takes the partial trajectory out of an overflow, if any.
    pub(crate) fn take_log(&mut self) -> Option<TrajectoryLog> {
        match self {
            Lts0nError::Plant(PlantError::Overflow { log, .. }) => Some(std::mem::take(log.as_mut())),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Lts0nError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Lts0nConfig {
    /// Stage-1 horizon.
    #[serde(rename = "T")]
    pub t_horizon: usize,
    /// Assumed instability index.
    pub k_hat: usize,
    pub tau: usize,
    /// Probe gain: `u = α‖x‖e_i`.
    pub alpha: f64,
    /// Stopping-ratio threshold; `GAMMA_OVER_EPSILON·ε` when absent.
    pub gamma: Option<f64>,
    /// Projector-error budget; estimated from the stage-1 singular values
    /// when absent.
    pub epsilon: Option<f64>,
    /// Basis-error budget; `√(2k̂)·ε` when absent.
    pub delta: Option<f64>,
    /// Cap on each stopping time; `50·T` when absent.
    pub omega_max: Option<usize>,
    /// `(q, r)` scales of the LQR weights `qI`, `rI`.
    pub lqr_weights: (f64, f64),
    /// Closed-loop steps after learning; `10·T` when absent.
    pub post_horizon: Option<usize>,
    pub guard: f64,
    pub seed: u64,
    /// Initial state; the origin when absent.
    pub x0: Option<Vec<f64>>,
    /// Noise bound used by the thresholds; the plant's own bound when absent.
    pub noise_bound: Option<f64>,
}

impl Default for Lts0nConfig {
    fn default() -> Self {
        Lts0nConfig {
            t_horizon: 40,
            k_hat: 1,
            tau: 3,
            alpha: 0.1,
            gamma: None,
            epsilon: None,
            delta: None,
            omega_max: None,
            lqr_weights: (1.0, 1.0),
            post_horizon: None,
            guard: DEFAULT_GUARD,
            seed: 0,
            x0: None,
            noise_bound: None,
        }
    }
}

impl Lts0nConfig {
    pub fn with_k_hat(k_hat: usize) -> Self {
        Lts0nConfig { k_hat, ..Default::default() }
    }

    /// Gate parameters once `ε` is known, either from the config or from
    /// the stage-1 estimate.
    pub fn gate(&self, epsilon_hat: f64) -> Gate {
        let epsilon = self.epsilon.unwrap_or(epsilon_hat);
        Gate {
            epsilon,
            gamma: self.gamma.unwrap_or(GAMMA_OVER_EPSILON * epsilon),
            delta: self.delta.unwrap_or_else(|| (2.0 * self.k_hat as f64).sqrt() * epsilon),
        }
    }

    pub fn omega_max(&self) -> usize {
        self.omega_max.unwrap_or(50 * self.t_horizon)
    }

    pub fn post_horizon(&self) -> usize {
        self.post_horizon.unwrap_or(10 * self.t_horizon)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Lts0nError::InvalidConfig(msg.to_string()));
        if self.k_hat < 1 || self.t_horizon < self.k_hat {
            return fail("need T ≥ k_hat ≥ 1");
        }
        if self.tau < 1 {
            return fail("need tau ≥ 1");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail("need alpha > 0");
        }
        let positive = |v: Option<f64>| v.is_none_or(|v| v > 0.0 && v.is_finite());
        if !(positive(self.epsilon) && positive(self.gamma) && positive(self.delta)) {
            return fail("gamma, epsilon and delta must be positive");
        }
        if let (Some(gamma), Some(epsilon)) = (self.gamma, self.epsilon) {
            if gamma <= epsilon {
                return fail("need gamma > epsilon");
            }
        }
        if self.omega_max() < 1 {
            return fail("need omega_max ≥ 1");
        }
        let (q, r) = self.lqr_weights;
        if !(q > 0.0 && r > 0.0 && q.is_finite() && r.is_finite()) {
            return fail("LQR weights must be positive");
        }
        if !(self.guard > 0.0) {
            return fail("guard must be positive");
        }
        if let Some(c) = self.noise_bound {
            if !(c >= 0.0 && c.is_finite()) {
                return fail("noise bound must be non-negative");
            }
        }
        Ok(())
    }
}

/// Default ratio `γ / ε`.
pub const GAMMA_OVER_EPSILON: f64 = 2.0;

/// Resolved thresholds of the stage-3 gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub epsilon: f64,
    pub gamma: f64,
    pub delta: f64,
}

/// `M̂1^τ` by repeated squaring.
pub fn m1_tau(m1_hat: &Matrix, tau: usize) -> Matrix {
    crate::spectral::matrix_power(m1_hat, tau)
}
