//! The unknown plant `x_{t+1} = A x_t + B u_t + η_t`, its noise models, and
//! trajectory simulation.

mod generate;
mod io;
mod noise;
mod simulate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{invariant_split, Matrix, SpectralError, SpectralSplit, Vector};

pub use generate::{random_plant, PlantSpec};
pub use io::PlantFile;
pub use noise::{sample_noise, NoiseModel};
pub use simulate::{run_tau_hop_closed_loop, simulate_open_loop, step, Simulator};
pub(crate) use simulate::drive_tau_hop;

/// Default overflow guard on `‖x_t‖`.
pub const DEFAULT_GUARD: f64 = 1e12;

#[derive(Debug, Error)]
pub enum PlantError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("state norm {norm:.3e} exceeded the guard at t = {t}")]
    Overflow { t: usize, norm: f64, log: Box<TrajectoryLog> },
    #[error("plant generation failed: {0}")]
    GenerationFailed(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("plant file: {0}")]
    Format(String),
}

impl PlantError {
    /// The partial trajectory carried by an overflow.
    pub fn partial_log(&self) -> Option<&TrajectoryLog> {
        match self {
            PlantError::Overflow { log, .. } => Some(log),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LtiPlant {
    pub a: Matrix,
    pub b: Matrix,
    pub noise: NoiseModel,
    /// Oracle decomposition, present for synthetic plants.
    pub truth: Option<SpectralSplit>,
}

impl LtiPlant {
    pub fn new(a: Matrix, b: Matrix, noise: NoiseModel) -> Result<Self, PlantError> {
        if a.nrows() != a.ncols() || b.nrows() != a.nrows() || b.ncols() == 0 {
            return Err(PlantError::DimensionMismatch(format!(
                "A is {:?}, B is {:?}",
                a.shape(),
                b.shape()
            )));
        }
        noise.validate()?;
        Ok(LtiPlant { a, b, noise, truth: None })
    }

    /// Attaches the oracle split for instability index `k`.
    pub fn with_truth(mut self, k: usize) -> Result<Self, PlantError> {
        self.truth = Some(invariant_split(&self.a, k)?);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// Noise bound `C` used by the learner's thresholds.
    pub fn noise_bound(&self) -> f64 {
        self.noise.effective_bound(self.n())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Stage1,
    Stage3Wait,
    Stage3Probe,
    ClosedLoop,
    /// Open-loop probing of the full-identification baseline.
    Excitation,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Stage1 => "stage1",
            Phase::Stage3Wait => "stage3-wait",
            Phase::Stage3Probe => "stage3-probe",
            Phase::ClosedLoop => "closed-loop",
            Phase::Excitation => "excitation",
        }
    }
}

/// Trajectory `x_0..x_H` with the inputs and noise realizations that produced
/// it. `phases[t]` labels the step taken from `x_t`; the last entry repeats
/// the phase of the final step.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryLog {
    pub states: Vec<Vector>,
    pub inputs: Vec<Vector>,
    pub noise: Vec<Vector>,
    pub norms: Vec<f64>,
    pub phases: Vec<Phase>,
}

impl TrajectoryLog {
    pub fn start(x0: Vector, phase: Phase) -> Self {
        let norm = x0.norm();
        TrajectoryLog {
            states: vec![x0],
            inputs: Vec::new(),
            noise: Vec::new(),
            norms: vec![norm],
            phases: vec![phase],
        }
    }

    /// Number of steps taken.
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn last_state(&self) -> &Vector {
        self.states.last().expect("log always holds x_0")
    }

    pub(crate) fn push(&mut self, u: Vector, eta: Vector, x_next: Vector, phase: Phase) {
        let t = self.inputs.len();
        self.phases[t] = phase;
        self.inputs.push(u);
        self.noise.push(eta);
        self.norms.push(x_next.norm());
        self.states.push(x_next);
        self.phases.push(phase);
    }

    /// `‖u_t‖`, zero for the final state.
    pub fn input_norm(&self, t: usize) -> f64 {
        self.inputs.get(t).map_or(0.0, |u| u.norm())
    }

    pub fn max_norm(&self) -> f64 {
        self.norms.iter().cloned().fold(0.0, f64::max)
    }

    /// States `x_from..=x_to` stacked as columns.
    pub fn state_matrix(&self, from: usize, to: usize) -> Matrix {
        Matrix::from_columns(&self.states[from..=to])
    }
}
