use serde::{Deserialize, Serialize};

use super::{compute_constants, davis_kahan_check, CertifyError, GelfandEps, Result, TheoryConstants, TheoryParams};
use crate::lts0n::{closed_loop_matrix_lhat, m1_tau, Lts0nConfig, Lts0nRun};
use crate::plant::{LtiPlant, TrajectoryLog};
use crate::spectral::{basis_align, matrix_power, projector_distance, spectral_norm};

/// Absolute slack on each bound comparison, so exact runs with zero bounds
/// pass despite round-off.
pub const BOUND_TOL: f64 = 1e-10;

/// Knobs of the certificate that are not part of the learner's config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertOptions {
    pub theta: f64,
    pub eps: GelfandEps,
    /// Trailing window of the boundedness test; `5·T` when absent.
    pub window: Option<usize>,
    /// Threshold of the boundedness test; `10·C·n` when absent.
    pub threshold: Option<f64>,
}

impl Default for CertOptions {
    fn default() -> Self {
        CertOptions { theta: 0.05, eps: GelfandEps::default(), window: None, threshold: None }
    }
}

impl CertOptions {
    pub fn window(&self, cfg: &Lts0nConfig) -> usize {
        self.window.unwrap_or(5 * cfg.t_horizon)
    }

    /// Noiseless runs have `C = 0`; there the threshold falls back to the
    /// state norm at hand-over, i.e. "no growth after learning".
    pub fn threshold(&self, noise_c: f64, n: usize, handover_norm: f64) -> f64 {
        self.threshold.unwrap_or(if noise_c > 0.0 { 10.0 * noise_c * n as f64 } else { handover_norm })
    }
}

/// Premises the bounds lean on, re-checked on the actual run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Premises {
    /// `C / ‖x_{t_i}‖ < δ` at each probe.
    pub noise_at_probe: Vec<bool>,
    /// `α‖B‖ < 1`
    pub alpha_b_below_one: bool,
    /// `|λ1||λ_{k+1}| < 1`
    pub spectral_product_below_one: bool,
    /// `σ_k(D1) > σ_{k+1}(D)`
    pub dk_precondition: bool,
    pub stable_system_detected: bool,
}

impl Premises {
    pub fn all_hold(&self) -> bool {
        self.noise_at_probe.iter().all(|&ok| ok)
            && self.alpha_b_below_one
            && self.spectral_product_below_one
            && self.dk_precondition
            && !self.stable_system_detected
    }

    /// Names of the premises that failed.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, ok) in self.noise_at_probe.iter().enumerate() {
            if !ok {
                out.push(format!("noise_at_probe[{i}]"));
            }
        }
        for (name, ok) in [
            ("alpha_b_below_one", self.alpha_b_below_one),
            ("spectral_product_below_one", self.spectral_product_below_one),
            ("dk_precondition", self.dk_precondition),
            ("no_stable_system_detected", !self.stable_system_detected),
        ] {
            if !ok {
                out.push(name.to_string());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub proj_err: f64,
    /// Procrustes distance between the true and learned bases.
    pub basis_err: f64,
    pub dk_lhs: Option<f64>,
    pub dk_rhs: Option<f64>,
    pub dk_holds: Option<bool>,
    pub m1_err: f64,
    pub m1_bound: f64,
    pub m1tau_err: f64,
    pub m1tau_bound: f64,
    pub btau_err: f64,
    pub btau_bound: f64,
    /// `‖M̂1 − P̂1ᵀAP̂1 − ϖ‖`, zero up to rounding.
    pub varpi_identity_err: Option<f64>,
    pub rho_lhat: f64,
    pub bounded: bool,
    pub m1_ok: bool,
    pub m1tau_ok: bool,
    pub btau_ok: bool,
    pub premises: Premises,
    pub window: usize,
    pub threshold: f64,
    pub constants: TheoryConstants,
}

impl CertReport {
    pub fn bounds_hold(&self) -> bool {
        self.m1_ok && self.m1tau_ok && self.btau_ok
    }
}

/// `true` iff `sup ‖x_t‖` over the last `window` states is at most
/// `threshold`. A window longer than the log covers the whole log.
pub fn ultimate_boundedness_check(log: &TrajectoryLog, window: usize, threshold: f64) -> bool {
    let start = log.norms.len().saturating_sub(window.max(1));
    log.norms[start..].iter().all(|&v| v <= threshold)
}

/// Pairs every measured estimation error of a run with its theoretical bound,
/// all evaluated at the measured basis error.
pub fn error_report(plant: &LtiPlant, run: &Lts0nRun, cfg: &Lts0nConfig, opts: &CertOptions) -> Result<CertReport> {
    let truth = plant.truth.as_ref().ok_or(CertifyError::NoTruth)?;
    if truth.k != cfg.k_hat {
        return Err(CertifyError::IndexMismatch { k: truth.k, k_hat: cfg.k_hat });
    }
    let tau = cfg.tau;
    let gate = run.stage3.gate.unwrap_or_else(|| cfg.gate(run.stage1.epsilon_hat()));
    let noise_c = run.noise_bound;
    let params = TheoryParams {
        noise_c,
        theta: opts.theta,
        eps: opts.eps,
        tau,
        alpha: cfg.alpha,
        gamma: gate.gamma,
        epsilon: gate.epsilon,
    };
    let constants = compute_constants(&plant.a, &plant.b, truth, &params)?;

    let p1_hat = &run.stage1.p1_hat;
    let proj_err = projector_distance(&run.stage1.pi1_hat, &truth.pi1());
    let align = basis_align(&truth.p1, p1_hat)?;
    let w = &align.rotation;
    let delta = align.delta;

    let m1_aligned = w.transpose() * &truth.m1 * w;
    let m1_err = spectral_norm(&(&m1_aligned - &run.stage2.m1_hat));
    let m1_bound = 3.0 * constants.norm_a * delta;

    let growth = (constants.lambda_1 + opts.eps.eps1).powi(tau as i32 - 1);
    let m1tau_aligned = w.transpose() * matrix_power(&truth.m1, tau) * w;
    let m1tau_err = spectral_norm(&(m1tau_aligned - m1_tau(&run.stage2.m1_hat, tau)));
    let m1tau_bound = 3.0 * tau as f64 * constants.norm_a * constants.zeta_a.powi(2) * growth * delta;

    let btau_true = w.transpose() * truth.p1.transpose() * matrix_power(&plant.a, tau - 1) * &plant.b;
    let btau_err = spectral_norm(&(btau_true - &run.stage3.btau_hat));
    let btau_bound = constants.c_b * growth * delta;

    let varpi_identity_err = run.stage2.varpi.as_ref().map(|varpi| {
        let projected = p1_hat.transpose() * &plant.a * p1_hat;
        spectral_norm(&(&run.stage2.m1_hat - projected - varpi))
    });

    let dk = davis_kahan_check(truth, &run.stage1.d);
    let (dk_lhs, dk_rhs, dk_holds) = match &dk {
        Ok(d) => (Some(d.lhs), Some(d.rhs), Some(d.holds)),
        Err(_) => (None, None, None),
    };

    let lhat = closed_loop_matrix_lhat(&plant.a, &plant.b, truth, p1_hat, &run.stage4.k1_hat, tau);

    let window = opts.window(cfg);
    let handover = run.log.norms[run.learning_steps];
    let threshold = opts.threshold(noise_c, plant.n(), handover);
    let bounded = ultimate_boundedness_check(&run.log, window, threshold);

    let premises = Premises {
        noise_at_probe: run.stage3.noise_premise.clone(),
        alpha_b_below_one: cfg.alpha * constants.norm_b < 1.0,
        spectral_product_below_one: constants.lambda_1 * constants.lambda_k1 < 1.0,
        dk_precondition: dk.is_ok(),
        stable_system_detected: run.stage3.stable_detected(),
    };

    Ok(CertReport {
        proj_err,
        basis_err: delta,
        dk_lhs,
        dk_rhs,
        dk_holds,
        m1_ok: m1_err <= m1_bound + BOUND_TOL,
        m1tau_ok: m1tau_err <= m1tau_bound + BOUND_TOL,
        btau_ok: btau_err <= btau_bound + BOUND_TOL,
        m1_err,
        m1_bound,
        m1tau_err,
        m1tau_bound,
        btau_err,
        btau_bound,
        varpi_identity_err,
        rho_lhat: lhat.rho,
        bounded,
        premises,
        window,
        threshold,
        constants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{Phase, TrajectoryLog};
    use crate::spectral::Vector;

    fn log_of(norms: &[f64]) -> TrajectoryLog {
        let mut log = TrajectoryLog::start(Vector::from_vec(vec![norms[0]]), Phase::ClosedLoop);
        for &v in &norms[1..] {
            log.push(Vector::zeros(1), Vector::zeros(1), Vector::from_vec(vec![v]), Phase::ClosedLoop);
        }
        log
    }

    #[test]
    fn boundedness_examples() {
        let decay: Vec<f64> = (0..30).map(|t| 0.5f64.powi(t)).collect();
        assert!(ultimate_boundedness_check(&log_of(&decay), 10, 1.0));
        let blow: Vec<f64> = (0..30).map(|t| 2f64.powi(t)).collect();
        assert!(!ultimate_boundedness_check(&log_of(&blow), 10, 1.0));
        // Only the trailing window counts.
        let mut spike = decay.clone();
        spike[0] = 100.0;
        assert!(ultimate_boundedness_check(&log_of(&spike), 10, 1.0));
        assert!(!ultimate_boundedness_check(&log_of(&spike), 100, 1.0));
    }
}
