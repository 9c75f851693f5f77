use serde::{Deserialize, Serialize};

use super::{
    explicit_varpi, stage1_estimate_subspace, stage2_least_squares, stage3_estimate_btau, stage4_synthesize,
    Lts0nConfig, Lts0nError, Stage1Result, Stage2Result, Stage3Params, Stage3Result, Stage4Result,
};
use crate::plant::{drive_tau_hop, LtiPlant, Phase, Simulator, TrajectoryLog};
use crate::rng::rng_from;
use crate::spectral::Vector;

/// Salt separating the trajectory stream from other streams of one seed.
const TRAJECTORY_SALT: u64 = 0x7472_616a;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Setup,
    Stage1,
    Stage2,
    Stage3,
    Stage4,
    ClosedLoop,
}

#[derive(Debug, Clone)]
pub struct Lts0nRun {
    pub log: TrajectoryLog,
    pub stage1: Stage1Result,
    pub stage2: Stage2Result,
    pub stage3: Stage3Result,
    pub stage4: Stage4Result,
    /// Time index at which the τ-hop controller takes over.
    pub learning_steps: usize,
    pub noise_bound: f64,
}

/// A failed run with everything computed before the failure.
#[derive(Debug)]
pub struct RunFailure {
    pub stage: Stage,
    pub error: Lts0nError,
    pub log: TrajectoryLog,
    pub stage1: Option<Stage1Result>,
    pub stage2: Option<Stage2Result>,
    pub stage3: Option<Stage3Result>,
    pub stage4: Option<Stage4Result>,
    /// Set once learning finished, i.e. for closed-loop failures.
    pub learning_steps: Option<usize>,
    pub noise_bound: f64,
}

impl RunFailure {
    /// The learned run up to the failure, when all four stages completed.
    /// Its log ends at the step that tripped the guard.
    pub fn learned_run(&self) -> Option<Lts0nRun> {
        Some(Lts0nRun {
            log: self.log.clone(),
            stage1: self.stage1.clone()?,
            stage2: self.stage2.clone()?,
            stage3: self.stage3.clone()?,
            stage4: self.stage4.clone()?,
            learning_steps: self.learning_steps?,
            noise_bound: self.noise_bound,
        })
    }
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?} failed: {}", self.stage, self.error)
    }
}

impl std::error::Error for RunFailure {}

struct Partial {
    stage1: Option<Stage1Result>,
    stage2: Option<Stage2Result>,
    stage3: Option<Stage3Result>,
    stage4: Option<Stage4Result>,
    learning_steps: Option<usize>,
    noise_bound: f64,
}

/// Runs the four learning stages and then the τ-hop closed loop on one
/// continuous trajectory of `plant`.
///
/// Stage 1 takes `T + 1` open-loop steps: the data matrix is `[x_1 … x_T]`
/// and the least-squares pairs run over `t = 0..=T`, which touches
/// `x_{T+1}`.
pub fn run_lts0n(plant: &LtiPlant, cfg: &Lts0nConfig) -> Result<Lts0nRun, Box<RunFailure>> {
    let noise_bound = cfg.noise_bound.unwrap_or_else(|| plant.noise_bound());
    let mut partial = Partial { stage1: None, stage2: None, stage3: None, stage4: None, learning_steps: None, noise_bound };
    let fail = |stage: Stage, mut error: Lts0nError, log: Option<TrajectoryLog>, partial: Partial| {
        let learning_steps = partial.learning_steps;
        let noise_bound = partial.noise_bound;
        let log = error.take_log().or(log).unwrap_or_default();
        Box::new(RunFailure {
            stage,
            error,
            log,
            stage1: partial.stage1,
            stage2: partial.stage2,
            stage3: partial.stage3,
            stage4: partial.stage4,
            learning_steps,
            noise_bound,
        })
    };

    if let Err(e) = cfg.validate() {
        return Err(fail(Stage::Setup, e, None, partial));
    }
    let n = plant.n();
    if cfg.k_hat > n {
        let e = Lts0nError::InvalidConfig(format!("k_hat = {} exceeds n = {n}", cfg.k_hat));
        return Err(fail(Stage::Setup, e, None, partial));
    }
    let x0 = match &cfg.x0 {
        Some(v) if v.len() == n => Vector::from_column_slice(v),
        Some(v) => {
            let e = Lts0nError::InvalidConfig(format!("x0 has {} entries, n = {n}", v.len()));
            return Err(fail(Stage::Setup, e, None, partial));
        }
        None => Vector::zeros(n),
    };
    let mut sim = match Simulator::new(plant, x0, rng_from(&[cfg.seed, TRAJECTORY_SALT]), cfg.guard) {
        Ok(sim) => sim,
        Err(e) => return Err(fail(Stage::Setup, e.into(), None, partial)),
    };

    let t_horizon = cfg.t_horizon;
    for _ in 0..=t_horizon {
        if let Err(e) = sim.advance(None, Phase::Stage1) {
            return Err(fail(Stage::Stage1, e.into(), None, partial));
        }
    }
    let d = sim.log().state_matrix(1, t_horizon);
    let stage1 = match stage1_estimate_subspace(&d, cfg.k_hat) {
        Ok(s) => s,
        Err(e) => return Err(fail(Stage::Stage1, e, Some(sim.into_log()), partial)),
    };

    let states = sim.log().state_matrix(0, t_horizon + 1);
    let mut stage2 = match stage2_least_squares(&states, &stage1.p1_hat) {
        Ok(s) => s,
        Err(e) => {
            partial.stage1 = Some(stage1);
            return Err(fail(Stage::Stage2, e, Some(sim.into_log()), partial));
        }
    };
    if plant.truth.is_some() {
        stage2.varpi = Some(explicit_varpi(&states, &sim.log().noise, &stage1.p1_hat, &stage1.singular_values));
    }
    partial.stage1 = Some(stage1);
    partial.stage2 = Some(stage2);
    let (s1, s2) = (partial.stage1.as_ref().unwrap(), partial.stage2.as_ref().unwrap());

    let params = Stage3Params::from_config(cfg, cfg.gate(s1.epsilon_hat()), noise_bound);
    let stage3 = match stage3_estimate_btau(&mut sim, &s1.p1_hat, &s2.m1_hat, &params) {
        Ok(s) => s,
        Err(e) => return Err(fail(Stage::Stage3, e, Some(sim.into_log()), partial)),
    };

    let stage4 = match stage4_synthesize(&s2.m1_hat, &stage3.btau_hat, cfg.tau, cfg.lqr_weights) {
        Ok(s) => s,
        Err(e) => {
            partial.stage3 = Some(stage3);
            return Err(fail(Stage::Stage4, e, Some(sim.into_log()), partial));
        }
    };

    let learning_steps = sim.t();
    if let Err(e) = drive_tau_hop(&mut sim, &stage4.k1_hat, &s1.p1_hat, cfg.tau, cfg.post_horizon()) {
        partial.stage3 = Some(stage3);
        partial.stage4 = Some(stage4);
        partial.learning_steps = Some(learning_steps);
        return Err(fail(Stage::ClosedLoop, e.into(), None, partial));
    }

    Ok(Lts0nRun {
        log: sim.into_log(),
        stage1: partial.stage1.unwrap(),
        stage2: partial.stage2.unwrap(),
        stage3,
        stage4,
        learning_steps,
        noise_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::NoiseModel;
    use crate::spectral::Matrix;

    fn demo_plant(noise: NoiseModel) -> LtiPlant {
        LtiPlant::new(
            Matrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 0.5]),
            Matrix::from_column_slice(2, 1, &[1.0, 0.0]),
            noise,
        )
        .unwrap()
        .with_truth(1)
        .unwrap()
    }

    #[test]
    fn phases_are_contiguous() {
        let plant = demo_plant(NoiseModel::Gaussian { sigma: 0.001 });
        let cfg = Lts0nConfig { t_horizon: 30, tau: 2, seed: 3, ..Lts0nConfig::with_k_hat(1) };
        let run = run_lts0n(&plant, &cfg).unwrap();
        let phases = &run.log.phases;
        assert!(phases[..=30].iter().all(|&p| p == Phase::Stage1));
        assert!(phases[run.learning_steps..].iter().all(|&p| p == Phase::ClosedLoop));
        assert_eq!(run.log.len(), run.learning_steps + cfg.post_horizon());
        let waits: usize = run.stage3.omegas.iter().sum();
        assert_eq!(run.learning_steps, cfg.t_horizon + 1 + waits + cfg.tau * plant.m());
    }

    #[test]
    fn deterministic_for_a_seed() {
        let plant = demo_plant(NoiseModel::Gaussian { sigma: 0.01 });
        let cfg = Lts0nConfig { t_horizon: 20, seed: 11, ..Lts0nConfig::with_k_hat(1) };
        let a = run_lts0n(&plant, &cfg).unwrap();
        let b = run_lts0n(&plant, &cfg).unwrap();
        assert_eq!(a.log.states, b.log.states);
    }

    #[test]
    fn bad_config_fails_in_setup() {
        let plant = demo_plant(NoiseModel::None);
        let cfg = Lts0nConfig { tau: 0, ..Default::default() };
        let err = run_lts0n(&plant, &cfg).unwrap_err();
        assert_eq!(err.stage, Stage::Setup);
    }

    #[test]
    fn zero_noise_from_origin_is_rank_deficient() {
        let plant = demo_plant(NoiseModel::None);
        let err = run_lts0n(&plant, &Lts0nConfig::with_k_hat(1)).unwrap_err();
        assert_eq!(err.stage, Stage::Stage1);
        assert!(matches!(err.error, Lts0nError::RankDeficient { .. }));
        assert_eq!(err.log.len(), Lts0nConfig::default().t_horizon + 1);
    }
}
