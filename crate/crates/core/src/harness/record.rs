use serde::{Deserialize, Serialize};

use super::BaselineRun;
use crate::certify::{error_report, CertOptions, CertReport};
use crate::lts0n::{closed_loop_matrix_lhat, Lts0nConfig, Lts0nError, Lts0nRun, RunFailure};
use crate::plant::{LtiPlant, PlantError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lts0n,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Stabilized,
    /// Ran to the end without settling below the threshold.
    NotStabilized,
    /// The state crossed the overflow guard.
    Blowup,
    /// A regression had no usable solution.
    IllConditioned,
    Failed,
    GenerationFailed,
}

/// Identifies one run of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMeta {
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub sigma: f64,
    pub status: RunStatus,
    pub steps_to_stabilize: Option<usize>,
    /// Time of the first feedback input.
    pub first_action: Option<usize>,
    pub max_norm: f64,
    pub rho_lhat: Option<f64>,
    /// Compact certificate verdict, empty without an oracle.
    pub cert: String,
    pub detail: String,
}

impl RunRecord {
    fn new(method: Method, meta: RunMeta, status: RunStatus) -> Self {
        RunRecord {
            method,
            seed: meta.seed,
            n: meta.n,
            k: meta.k,
            m: meta.m,
            sigma: meta.sigma,
            status,
            steps_to_stabilize: None,
            first_action: None,
            max_norm: f64::NAN,
            rho_lhat: None,
            cert: String::new(),
            detail: String::new(),
        }
    }

    pub fn generation_failed(method: Method, meta: RunMeta, detail: String) -> Self {
        RunRecord { detail, ..RunRecord::new(method, meta, RunStatus::GenerationFailed) }
    }

    pub fn stabilized(&self) -> bool {
        self.status == RunStatus::Stabilized
    }
}

/// `10·C`, or the hand-over norm when the plant is noiseless.
pub fn stabilization_threshold(noise_c: f64, handover_norm: f64) -> f64 {
    if noise_c > 0.0 {
        10.0 * noise_c
    } else {
        handover_norm
    }
}

/// First time `t ≥ start + window − 1` whose trailing `window` of norms
/// lies inside the feedback phase and stays at or below `threshold`.
pub fn steps_to_stabilize(norms: &[f64], start: usize, window: usize, threshold: f64) -> Option<usize> {
    let window = window.max(1);
    let mut run = 0;
    for (t, &v) in norms.iter().enumerate().skip(start) {
        run = if v <= threshold { run + 1 } else { 0 };
        if run >= window {
            return Some(t);
        }
    }
    None
}

fn cert_summary(report: &CertReport) -> String {
    let verdict = |ok: bool| if ok { "ok" } else { "violated" };
    let failed: Vec<&str> = [("m1", report.m1_ok), ("m1tau", report.m1tau_ok), ("btau", report.btau_ok)]
        .into_iter()
        .filter(|(_, ok)| !ok)
        .map(|(name, _)| name)
        .collect();
    let bounds = if failed.is_empty() { "ok".to_string() } else { format!("violated({})", failed.join("+")) };
    let violations = report.premises.violations();
    let premises = if violations.is_empty() { "ok".to_string() } else { violations.join("+") };
    format!("bounds:{bounds};bounded:{};premises:{premises}", verdict(report.bounded))
}

fn status_of(error: &Lts0nError) -> RunStatus {
    match error {
        Lts0nError::Plant(PlantError::Overflow { .. }) => RunStatus::Blowup,
        Lts0nError::SingularGram { .. } | Lts0nError::RankDeficient { .. } => RunStatus::IllConditioned,
        _ => RunStatus::Failed,
    }
}

/// Summarizes one learner run. The certificate and `ρ(L̂)` are filled in
/// when the plant carries an oracle with `k = k̂`.
pub fn record_lts0n(
    meta: RunMeta,
    plant: &LtiPlant,
    cfg: &Lts0nConfig,
    outcome: &Result<Lts0nRun, Box<RunFailure>>,
    window: usize,
) -> RunRecord {
    let (learned, log, status, detail) = match outcome {
        Ok(run) => (Some(run.clone()), &run.log, RunStatus::NotStabilized, String::new()),
        Err(failure) => (failure.learned_run(), &failure.log, status_of(&failure.error), failure.to_string()),
    };
    let mut record = RunRecord { detail, ..RunRecord::new(Method::Lts0n, meta, status) };
    record.max_norm = log.max_norm();
    let Some(run) = learned else { return record };
    record.first_action = Some(run.learning_steps);

    if let Some(truth) = plant.truth.as_ref().filter(|t| t.k == cfg.k_hat) {
        record.rho_lhat =
            Some(closed_loop_matrix_lhat(&plant.a, &plant.b, truth, &run.stage1.p1_hat, &run.stage4.k1_hat, cfg.tau).rho);
        if let Ok(report) = error_report(plant, &run, cfg, &CertOptions::default()) {
            record.cert = cert_summary(&report);
        }
    }
    if outcome.is_ok() {
        let threshold = stabilization_threshold(run.noise_bound, log.norms[run.learning_steps]);
        record.steps_to_stabilize = steps_to_stabilize(&log.norms, run.learning_steps, window, threshold);
        if record.steps_to_stabilize.is_some() {
            record.status = RunStatus::Stabilized;
        }
    }
    record
}

pub fn record_baseline(meta: RunMeta, plant: &LtiPlant, run: &BaselineRun, window: usize) -> RunRecord {
    let mut record = RunRecord { detail: run.detail.clone(), ..RunRecord::new(Method::Baseline, meta, run.status) };
    record.max_norm = run.log.max_norm();
    record.rho_lhat = run.closed_loop_rho;
    record.first_action = run.closed_loop_start;
    if let (RunStatus::NotStabilized, Some(start)) = (run.status, run.closed_loop_start) {
        let threshold = stabilization_threshold(plant.noise_bound(), run.log.norms[start]);
        record.steps_to_stabilize = steps_to_stabilize(&run.log.norms, start, window, threshold);
        if record.steps_to_stabilize.is_some() {
            record.status = RunStatus::Stabilized;
        }
    }
    record
}
