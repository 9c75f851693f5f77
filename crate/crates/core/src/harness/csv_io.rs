//! CSV schemas. Trajectories use `t,norm_x,phase,u_norm`; sweeps write one
//! `run` row per record followed by one `summary` row per group. Floats are
//! written in shortest round-trip form, so every row parses back exactly.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Method, Result, RunRecord, RunStatus, Summary};
use crate::plant::{Phase, TrajectoryLog};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: usize,
    pub norm_x: f64,
    pub phase: Phase,
    /// `‖u_t‖`, zero on the final state.
    pub u_norm: f64,
}

pub fn write_trajectory_csv<W: Write>(log: &TrajectoryLog, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for (t, (&norm_x, &phase)) in log.norms.iter().zip(&log.phases).enumerate() {
        writer.serialize(TrajectoryRow { t, norm_x, phase, u_norm: log.input_norm(t) })?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Vec<TrajectoryRow>> {
    Ok(csv::Reader::from_reader(input).deserialize().collect::<std::result::Result<_, _>>()?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Run,
    Summary,
}

/// Union of run and summary columns; fields foreign to a row kind are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kind: RowKind,
    pub method: Method,
    pub n: usize,
    pub sigma: f64,
    pub k: usize,
    pub m: usize,
    pub seed: Option<u64>,
    pub status: Option<RunStatus>,
    pub steps_to_stabilize: Option<usize>,
    pub first_action: Option<usize>,
    pub max_norm: Option<f64>,
    pub rho_lhat: Option<f64>,
    pub cert: String,
    pub detail: String,
    pub runs: Option<usize>,
    pub stabilized: Option<usize>,
    pub mean_steps: Option<f64>,
    pub std_steps: Option<f64>,
    pub median_steps: Option<f64>,
}

impl From<&RunRecord> for SweepRow {
    fn from(r: &RunRecord) -> Self {
        SweepRow {
            kind: RowKind::Run,
            method: r.method,
            n: r.n,
            sigma: r.sigma,
            k: r.k,
            m: r.m,
            seed: Some(r.seed),
            status: Some(r.status),
            steps_to_stabilize: r.steps_to_stabilize,
            first_action: r.first_action,
            max_norm: Some(r.max_norm).filter(|v| !v.is_nan()),
            rho_lhat: r.rho_lhat,
            cert: r.cert.clone(),
            detail: r.detail.clone(),
            runs: None,
            stabilized: None,
            mean_steps: None,
            std_steps: None,
            median_steps: None,
        }
    }
}

impl From<&Summary> for SweepRow {
    fn from(s: &Summary) -> Self {
        SweepRow {
            kind: RowKind::Summary,
            method: s.method,
            n: s.n,
            sigma: s.sigma,
            k: s.k,
            m: s.m,
            seed: None,
            status: None,
            steps_to_stabilize: None,
            first_action: None,
            max_norm: None,
            rho_lhat: None,
            cert: String::new(),
            detail: String::new(),
            runs: Some(s.runs),
            stabilized: Some(s.stabilized),
            mean_steps: s.mean_steps,
            std_steps: s.std_steps,
            median_steps: s.median_steps,
        }
    }
}

pub fn write_sweep_csv<W: Write>(records: &[RunRecord], summaries: &[Summary], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for r in records {
        writer.serialize(SweepRow::from(r))?;
    }
    for s in summaries {
        writer.serialize(SweepRow::from(s))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    Ok(csv::Reader::from_reader(input).deserialize().collect::<std::result::Result<_, _>>()?)
}
