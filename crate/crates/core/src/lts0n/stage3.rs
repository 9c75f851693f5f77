use serde::{Deserialize, Serialize};

use super::{m1_tau, Gate, Lts0nConfig, Lts0nError, Result, ZERO_STATE};
use crate::plant::{Phase, Simulator};
use crate::spectral::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnStatus {
    Probed,
    /// The wait hit its cap without the gate opening; the column was probed
    /// anyway.
    StableSystemDetected,
}

/// Gate and probe parameters for one pass of stage 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage3Params {
    pub tau: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub omega_max: usize,
    /// Noise bound `C`.
    pub noise_bound: f64,
}

impl Stage3Params {
    pub fn from_config(cfg: &Lts0nConfig, gate: Gate, noise_bound: f64) -> Self {
        Stage3Params {
            tau: cfg.tau,
            alpha: cfg.alpha,
            gamma: gate.gamma,
            epsilon: gate.epsilon,
            delta: gate.delta,
            omega_max: cfg.omega_max(),
            noise_bound,
        }
    }

    /// Both stopping predicates at state `x`: the off-subspace ratio and the
    /// noise-to-state ratio.
    pub fn gate(&self, x: &Vector, pi1_hat: &Matrix) -> (bool, bool) {
        let norm = x.norm();
        let ratio = (x - pi1_hat * x).norm() / norm;
        (ratio < (1.0 - self.epsilon) * self.gamma, self.noise_bound / norm < self.delta)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Stage3Result {
    pub btau_hat: Matrix,
    pub gate: Option<Gate>,
    /// Stopping times `ω_i`.
    pub omegas: Vec<usize>,
    /// Probe times `t_i`.
    pub probe_times: Vec<usize>,
    /// `‖x_{t_i}‖`
    pub probe_states: Vec<f64>,
    /// Off-subspace ratio `‖(I − Π̂1)x_{t_i}‖ / ‖x_{t_i}‖`.
    pub probe_ratios: Vec<f64>,
    /// Whether `C / ‖x_{t_i}‖ < δ` held at the probe.
    pub noise_premise: Vec<bool>,
    pub status: Vec<ColumnStatus>,
}

impl Stage3Result {
    pub fn stable_detected(&self) -> bool {
        self.status.contains(&ColumnStatus::StableSystemDetected)
    }
}

/// Estimates `B_τ` column by column on the running trajectory: wait for the
/// gate, kick with `α‖x‖e_i`, coast `τ − 1` steps, and compare against the
/// model prediction `M̂1^τ P̂1ᵀ x`.
pub fn stage3_estimate_btau(
    sim: &mut Simulator<'_>,
    p1_hat: &Matrix,
    m1_hat: &Matrix,
    params: &Stage3Params,
) -> Result<Stage3Result> {
    let m = sim.plant().m();
    let k = p1_hat.ncols();
    let pi1_hat = p1_hat * p1_hat.transpose();
    let m1_tau = m1_tau(m1_hat, params.tau);
    let gate = Gate { epsilon: params.epsilon, gamma: params.gamma, delta: params.delta };
    let mut out = Stage3Result { btau_hat: Matrix::zeros(k, m), gate: Some(gate), ..Default::default() };

    for i in 0..m {
        let mut omega = 0;
        let status = loop {
            let x = sim.state();
            if x.norm() < ZERO_STATE {
                return Err(Lts0nError::ZeroState { t: sim.t() });
            }
            let (ratio_ok, noise_ok) = params.gate(x, &pi1_hat);
            if ratio_ok && noise_ok {
                break ColumnStatus::Probed;
            }
            if omega == params.omega_max {
                break ColumnStatus::StableSystemDetected;
            }
            sim.advance(None, Phase::Stage3Wait)?;
            omega += 1;
        };

        let t_i = sim.t();
        let x_ti = sim.state().clone();
        let norm = x_ti.norm();
        let (_, noise_ok) = params.gate(&x_ti, &pi1_hat);
        let mut u = Vector::zeros(m);
        u[i] = params.alpha * norm;
        sim.advance(Some(u), Phase::Stage3Probe)?;
        for _ in 1..params.tau {
            sim.advance(None, Phase::Stage3Probe)?;
        }
        let predicted = &m1_tau * (p1_hat.transpose() * &x_ti);
        let observed = p1_hat.transpose() * sim.state();
        let b_i = (observed - predicted) / (params.alpha * norm);
        out.btau_hat.set_column(i, &b_i);

        out.omegas.push(omega);
        out.probe_times.push(t_i);
        out.probe_states.push(norm);
        out.probe_ratios.push((&x_ti - &pi1_hat * &x_ti).norm() / norm);
        out.noise_premise.push(noise_ok);
        out.status.push(status);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{LtiPlant, NoiseModel, DEFAULT_GUARD};
    use crate::rng::rng_from;
    use approx::assert_abs_diff_eq;

    fn params(tau: usize, omega_max: usize, noise_bound: f64) -> Stage3Params {
        Stage3Params { tau, alpha: 0.1, gamma: 0.1, epsilon: 0.01, delta: 0.05, omega_max, noise_bound }
    }

    #[test]
    fn noiseless_state_in_unstable_subspace_gives_exact_column() {
        let a = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 0.5]);
        let b = Matrix::from_row_slice(2, 2, &[1.0, 0.3, 0.4, -2.0]);
        let plant = LtiPlant::new(a, b.clone(), NoiseModel::None).unwrap();
        let mut sim = Simulator::new(&plant, Vector::from_vec(vec![1.0, 0.0]), rng_from(&[0]), DEFAULT_GUARD).unwrap();
        let p1 = Matrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let m1 = Matrix::from_element(1, 1, 2.0);
        // The first probe kicks the state off E_u; wait long enough for it to return.
        let mut p = params(1, 1000, 0.0);
        p.gamma = 1e-9;
        p.epsilon = 1e-10;
        let s3 = stage3_estimate_btau(&mut sim, &p1, &m1, &p).unwrap();
        assert_eq!(s3.omegas[0], 0);
        assert_abs_diff_eq!(s3.btau_hat[(0, 0)], b[(0, 0)], epsilon = 1e-12);
        assert_abs_diff_eq!(s3.btau_hat[(0, 1)], b[(0, 1)], epsilon = 1e-6);
        assert_eq!(s3.status, vec![ColumnStatus::Probed; 2]);
    }

    #[test]
    fn probe_times_follow_waits() {
        let a = Matrix::from_row_slice(2, 2, &[1.5, 0.0, 0.0, 0.3]);
        let b = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        let plant = LtiPlant::new(a, b, NoiseModel::BoundedUniform { c: 1e-3 }).unwrap();
        let mut sim = Simulator::new(&plant, Vector::from_vec(vec![0.01, 0.01]), rng_from(&[1]), DEFAULT_GUARD).unwrap();
        let p1 = Matrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let m1 = Matrix::from_element(1, 1, 1.5);
        let p = params(2, 500, 1e-3);
        let s3 = stage3_estimate_btau(&mut sim, &p1, &m1, &p).unwrap();
        assert_eq!(s3.probe_times[0], s3.omegas[0]);
        assert_eq!(s3.probe_times[1], s3.omegas[0] + s3.omegas[1] + p.tau);
        assert!(s3.omegas[0] > 0);
        assert!(s3.noise_premise.iter().all(|&ok| ok));
    }

    #[test]
    fn decaying_state_is_flagged_stable() {
        let plant = LtiPlant::new(Matrix::from_element(1, 1, 0.5), Matrix::identity(1, 1), NoiseModel::BoundedUniform { c: 0.01 })
            .unwrap();
        let mut sim = Simulator::new(&plant, Vector::from_vec(vec![0.05]), rng_from(&[2]), DEFAULT_GUARD).unwrap();
        let s3 = stage3_estimate_btau(&mut sim, &Matrix::identity(1, 1), &Matrix::from_element(1, 1, 0.5), &params(1, 100, 0.01))
            .unwrap();
        assert_eq!(s3.status, vec![ColumnStatus::StableSystemDetected]);
        assert_eq!(s3.omegas, vec![100]);
    }
}
