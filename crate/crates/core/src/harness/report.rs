use serde::{Deserialize, Serialize};

use super::{record_lts0n, RunMeta, RunStatus};
use crate::certify::{error_report, CertOptions, CertReport};
use crate::lts0n::{ColumnStatus, Gate, Lts0nConfig, Lts0nRun, RunFailure, Stage, Stage1Result, Stage2Result, Stage3Result, Stage4Result};
use crate::plant::LtiPlant;
use crate::spectral::Matrix;

fn rows(x: &Matrix) -> Vec<Vec<f64>> {
    x.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

/// Whatever the stages produced before the run ended; matrices row-major.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub singular_values: Option<Vec<f64>>,
    pub epsilon_hat: Option<f64>,
    pub p1_hat: Option<Vec<Vec<f64>>>,
    pub m1_hat: Option<Vec<Vec<f64>>>,
    pub gate: Option<Gate>,
    pub omegas: Option<Vec<usize>>,
    pub probe_times: Option<Vec<usize>>,
    pub column_status: Option<Vec<ColumnStatus>>,
    pub btau_hat: Option<Vec<Vec<f64>>>,
    pub k1_hat: Option<Vec<Vec<f64>>>,
    pub closed_loop_rho: Option<f64>,
}

impl StageSummary {
    fn new(
        s1: Option<&Stage1Result>,
        s2: Option<&Stage2Result>,
        s3: Option<&Stage3Result>,
        s4: Option<&Stage4Result>,
    ) -> Self {
        StageSummary {
            singular_values: s1.map(|s| s.singular_values.clone()),
            epsilon_hat: s1.map(|s| s.epsilon_hat()),
            p1_hat: s1.map(|s| rows(&s.p1_hat)),
            m1_hat: s2.map(|s| rows(&s.m1_hat)),
            gate: s3.and_then(|s| s.gate),
            omegas: s3.map(|s| s.omegas.clone()),
            probe_times: s3.map(|s| s.probe_times.clone()),
            column_status: s3.map(|s| s.status.clone()),
            btau_hat: s3.map(|s| rows(&s.btau_hat)),
            k1_hat: s4.map(|s| rows(&s.k1_hat)),
            closed_loop_rho: s4.map(|s| s.closed_loop_rho),
        }
    }
}

/// JSON report of a single run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: Lts0nConfig,
    pub status: RunStatus,
    pub failed_stage: Option<Stage>,
    pub error: Option<String>,
    pub noise_bound: f64,
    pub learning_steps: Option<usize>,
    pub steps_to_stabilize: Option<usize>,
    pub max_norm: f64,
    pub rho_lhat: Option<f64>,
    pub stages: StageSummary,
    /// Present when the plant carries an oracle and learning completed.
    pub cert: Option<CertReport>,
    pub cert_error: Option<String>,
}

impl RunReport {
    pub fn new(plant: &LtiPlant, cfg: &Lts0nConfig, outcome: &Result<Lts0nRun, Box<RunFailure>>, window: usize) -> Self {
        let meta = RunMeta {
            seed: cfg.seed,
            n: plant.n(),
            k: plant.truth.as_ref().map_or(cfg.k_hat, |t| t.k),
            m: plant.m(),
            sigma: plant.noise.sigma(),
        };
        let record = record_lts0n(meta, plant, cfg, outcome, window);
        let (stages, learned, failed_stage, error, noise_bound) = match outcome {
            Ok(run) => (
                StageSummary::new(Some(&run.stage1), Some(&run.stage2), Some(&run.stage3), Some(&run.stage4)),
                Some(run.clone()),
                None,
                None,
                run.noise_bound,
            ),
            Err(f) => (
                StageSummary::new(f.stage1.as_ref(), f.stage2.as_ref(), f.stage3.as_ref(), f.stage4.as_ref()),
                f.learned_run(),
                Some(f.stage),
                Some(f.error.to_string()),
                f.noise_bound,
            ),
        };
        let (cert, cert_error) = match (&learned, &plant.truth) {
            (Some(run), Some(_)) => match error_report(plant, run, cfg, &CertOptions::default()) {
                Ok(report) => (Some(report), None),
                Err(e) => (None, Some(e.to_string())),
            },
            _ => (None, None),
        };
        RunReport {
            config: cfg.clone(),
            status: record.status,
            failed_stage,
            error,
            noise_bound,
            learning_steps: learned.as_ref().map(|r| r.learning_steps),
            steps_to_stabilize: record.steps_to_stabilize,
            max_norm: record.max_norm,
            rho_lhat: record.rho_lhat,
            stages,
            cert,
            cert_error,
        }
    }
}
