use rand::{Rng as _, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{HarnessError, Result, RunStatus};
use crate::plant::{LtiPlant, Phase, PlantError, Simulator, TrajectoryLog, DEFAULT_GUARD};
use crate::rng::Rng;
use crate::spectral::{lqr_gain, spectral_radius, Matrix, Vector};

/// Largest accepted condition number of the equilibrated regressor.
pub const BASELINE_COND_LIMIT: f64 = 1e12;

/// Naive strategy: excite the plant in open loop, fit the full `(A, B)` by
/// least squares, and close the loop with an LQR gain on the fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Excitation steps beyond the `n + m` unknowns of each row.
    pub margin: usize,
    /// Standard deviation of the Gaussian excitation inputs.
    pub input_scale: f64,
    /// Closed-loop steps after the fit.
    pub post_horizon: usize,
    /// Total steps; at least `n + m·n`. Derived from the other fields when
    /// absent.
    pub horizon_cap: Option<usize>,
    pub lqr_weights: (f64, f64),
    pub guard: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            margin: 10,
            input_scale: 1.0,
            post_horizon: 1600,
            horizon_cap: None,
            lqr_weights: (1.0, 1.0),
            guard: DEFAULT_GUARD,
        }
    }
}

impl BaselineConfig {
    pub fn excitation_steps(&self, n: usize, m: usize) -> usize {
        n + m + self.margin
    }

    pub fn horizon(&self, n: usize, m: usize) -> usize {
        self.horizon_cap
            .unwrap_or_else(|| (self.excitation_steps(n, m) + self.post_horizon).max(n + m * n))
    }

    fn validate(&self, n: usize, m: usize) -> Result<()> {
        let fail = |msg: String| Err(HarnessError::InvalidConfig(msg));
        let horizon = self.horizon(n, m);
        if horizon < n + m * n {
            return fail(format!("horizon cap {horizon} is below n + m·n = {}", n + m * n));
        }
        if horizon <= self.excitation_steps(n, m) {
            return fail(format!("horizon cap {horizon} leaves no closed-loop steps"));
        }
        if !(self.input_scale > 0.0 && self.input_scale.is_finite()) {
            return fail("input scale must be positive".into());
        }
        let (q, r) = self.lqr_weights;
        if !(q > 0.0 && r > 0.0 && q.is_finite() && r.is_finite()) {
            return fail("LQR weights must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BaselineRun {
    pub log: TrajectoryLog,
    /// `Blowup`, `IllConditioned`, `Failed`, or `NotStabilized` for a run
    /// that reached the horizon.
    pub status: RunStatus,
    pub excitation_steps: usize,
    /// Time of the first feedback input.
    pub closed_loop_start: Option<usize>,
    pub a_hat: Option<Matrix>,
    pub b_hat: Option<Matrix>,
    pub gain: Option<Matrix>,
    /// `ρ(A + BK)` on the true plant.
    pub closed_loop_rho: Option<f64>,
    pub detail: String,
}

/// Least-squares `[Â B̂]` from `x_{t+1} ≈ A x_t + B u_t`. Rows of the
/// regressor are scaled to unit norm first, since states and inputs differ
/// by many orders of magnitude on an unstable plant.
fn fit_full(log: &TrajectoryLog, n: usize, m: usize) -> std::result::Result<(Matrix, Matrix), String> {
    let steps = log.len();
    let z = Matrix::from_fn(n + m, steps, |r, t| if r < n { log.states[t][r] } else { log.inputs[t][r - n] });
    let y = Matrix::from_fn(n, steps, |r, t| log.states[t + 1][r]);
    let scales: Vec<f64> = z.row_iter().map(|row| row.norm()).collect();
    if scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err("regressor has a zero or non-finite row".into());
    }
    let zs = Matrix::from_fn(n + m, steps, |r, t| z[(r, t)] / scales[r]);
    let svd = zs.transpose().svd(true, true);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    let cond = max / min;
    if !(cond <= BASELINE_COND_LIMIT) {
        return Err(format!("regressor condition {cond:.3e}"));
    }
    let theta_scaled = svd.solve(&y.transpose(), 0.0).map_err(|e| e.to_string())?.transpose();
    let theta = Matrix::from_fn(n, n + m, |r, c| theta_scaled[(r, c)] / scales[c]);
    Ok((theta.columns(0, n).into_owned(), theta.columns(n, m).into_owned()))
}

/// Runs the full-identification baseline on one trajectory from the origin.
pub fn baseline_full_id(plant: &LtiPlant, cfg: &BaselineConfig, rng: &mut Rng) -> Result<BaselineRun> {
    let (n, m) = (plant.n(), plant.m());
    cfg.validate(n, m)?;
    let excitation_steps = cfg.excitation_steps(n, m);
    let horizon = cfg.horizon(n, m);
    let noise_rng = Rng::seed_from_u64(rng.random());
    let mut sim = Simulator::new(plant, Vector::zeros(n), noise_rng, cfg.guard)?;
    let mut out = BaselineRun {
        log: TrajectoryLog::default(),
        status: RunStatus::NotStabilized,
        excitation_steps,
        closed_loop_start: None,
        a_hat: None,
        b_hat: None,
        gain: None,
        closed_loop_rho: None,
        detail: String::new(),
    };
    let blowup = |mut out: BaselineRun, e: PlantError| -> Result<BaselineRun> {
        match e {
            PlantError::Overflow { t, norm, log } => {
                out.log = *log;
                out.status = RunStatus::Blowup;
                out.detail = format!("overflow at t = {t}, norm {norm:.3e}");
                Ok(out)
            }
            other => Err(other.into()),
        }
    };

    for _ in 0..excitation_steps {
        let u = Vector::from_fn(m, |_, _| {
            let z: f64 = StandardNormal.sample(rng);
            cfg.input_scale * z
        });
        if let Err(e) = sim.advance(Some(u), Phase::Excitation) {
            return blowup(out, e);
        }
    }
    let (a_hat, b_hat) = match fit_full(sim.log(), n, m) {
        Ok(fit) => fit,
        Err(detail) => {
            out.log = sim.into_log();
            out.status = RunStatus::IllConditioned;
            out.detail = detail;
            return Ok(out);
        }
    };
    let (q, r) = cfg.lqr_weights;
    let gain = match lqr_gain(&a_hat, &b_hat, &(Matrix::identity(n, n) * q), &(Matrix::identity(m, m) * r)) {
        Ok(gain) => gain,
        Err(e) => {
            out.log = sim.into_log();
            out.status = RunStatus::Failed;
            out.detail = e.to_string();
            return Ok(out);
        }
    };
    out.closed_loop_rho = Some(spectral_radius(&(&plant.a + &plant.b * &gain)));
    out.closed_loop_start = Some(sim.t());
    for _ in excitation_steps..horizon {
        let u = &gain * sim.state();
        if let Err(e) = sim.advance(Some(u), Phase::ClosedLoop) {
            out.a_hat = Some(a_hat);
            out.b_hat = Some(b_hat);
            out.gain = Some(gain);
            return blowup(out, e);
        }
    }
    out.log = sim.into_log();
    out.a_hat = Some(a_hat);
    out.b_hat = Some(b_hat);
    out.gain = Some(gain);
    Ok(out)
}
