use super::{sample_noise, LtiPlant, Phase, PlantError, TrajectoryLog};
use crate::rng::Rng;
use crate::spectral::{Matrix, Vector};

/// `A x + B u + η` with a fresh noise draw.
pub fn step(plant: &LtiPlant, x: &Vector, u: &Vector, rng: &mut Rng) -> Result<Vector, PlantError> {
    step_with_noise(plant, x, u, rng).map(|(x_next, _)| x_next)
}

fn step_with_noise(
    plant: &LtiPlant,
    x: &Vector,
    u: &Vector,
    rng: &mut Rng,
) -> Result<(Vector, Vector), PlantError> {
    if x.len() != plant.n() || u.len() != plant.m() {
        return Err(PlantError::DimensionMismatch(format!(
            "x has {} entries and u has {}, plant is n = {}, m = {}",
            x.len(),
            u.len(),
            plant.n(),
            plant.m()
        )));
    }
    let eta = sample_noise(&plant.noise, plant.n(), rng);
    let x_next = &plant.a * x + &plant.b * u + &eta;
    Ok((x_next, eta))
}

/// One continuous trajectory of a plant. The learner only sees states and
/// chooses inputs; the log also keeps the noise for oracle checks.
#[derive(Debug)]
pub struct Simulator<'a> {
    plant: &'a LtiPlant,
    rng: Rng,
    log: TrajectoryLog,
    guard: f64,
}

impl<'a> Simulator<'a> {
    pub fn new(plant: &'a LtiPlant, x0: Vector, rng: Rng, guard: f64) -> Result<Self, PlantError> {
        if x0.len() != plant.n() {
            return Err(PlantError::DimensionMismatch(format!(
                "x0 has {} entries, plant has n = {}",
                x0.len(),
                plant.n()
            )));
        }
        Ok(Simulator { plant, rng, log: TrajectoryLog::start(x0, Phase::Stage1), guard })
    }

    pub fn plant(&self) -> &LtiPlant {
        self.plant
    }

    pub fn state(&self) -> &Vector {
        self.log.last_state()
    }

    /// Current time index.
    pub fn t(&self) -> usize {
        self.log.len()
    }

    pub fn log(&self) -> &TrajectoryLog {
        &self.log
    }

    pub fn into_log(self) -> TrajectoryLog {
        self.log
    }

    /// Applies `u` (zero when `None`) and records the step under `phase`.
    /// Overflow moves the trajectory so far into the error.
    pub fn advance(&mut self, u: Option<Vector>, phase: Phase) -> Result<&Vector, PlantError> {
        let u = u.unwrap_or_else(|| Vector::zeros(self.plant.m()));
        let (x_next, eta) = step_with_noise(self.plant, self.log.last_state(), &u, &mut self.rng)?;
        let norm = x_next.norm();
        self.log.push(u, eta, x_next, phase);
        if !(norm <= self.guard) {
            let t = self.log.len();
            return Err(PlantError::Overflow { t, norm, log: Box::new(std::mem::take(&mut self.log)) });
        }
        Ok(self.state())
    }
}

/// `steps` zero-input steps from `x0`.
pub fn simulate_open_loop(
    plant: &LtiPlant,
    x0: Vector,
    steps: usize,
    rng: Rng,
    guard: f64,
) -> Result<TrajectoryLog, PlantError> {
    let mut sim = Simulator::new(plant, x0, rng, guard)?;
    for _ in 0..steps {
        sim.advance(None, Phase::Stage1)?;
    }
    Ok(sim.into_log())
}

/// τ-hop feedback `u = K₁ P̂₁ᵀ x` applied at every `τ`-th step of `sim`,
/// counted from the current time; zero input in between.
pub(crate) fn drive_tau_hop(
    sim: &mut Simulator<'_>,
    k1: &Matrix,
    p1_hat: &Matrix,
    tau: usize,
    horizon: usize,
) -> Result<(), PlantError> {
    let gain = k1 * p1_hat.transpose();
    for s in 0..horizon {
        let u = (s % tau == 0).then(|| &gain * sim.state());
        sim.advance(u, Phase::ClosedLoop)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn run_tau_hop_closed_loop(
    plant: &LtiPlant,
    x0: Vector,
    k1: &Matrix,
    p1_hat: &Matrix,
    tau: usize,
    horizon: usize,
    rng: Rng,
    guard: f64,
) -> Result<TrajectoryLog, PlantError> {
    if tau == 0 {
        return Err(PlantError::DimensionMismatch("tau must be at least 1".into()));
    }
    if k1.shape() != (plant.m(), p1_hat.ncols()) || p1_hat.nrows() != plant.n() {
        return Err(PlantError::DimensionMismatch(format!(
            "K1 is {:?} and P1_hat is {:?} for n = {}, m = {}",
            k1.shape(),
            p1_hat.shape(),
            plant.n(),
            plant.m()
        )));
    }
    let mut sim = Simulator::new(plant, x0, rng, guard)?;
    drive_tau_hop(&mut sim, k1, p1_hat, tau, horizon)?;
    Ok(sim.into_log())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{NoiseModel, DEFAULT_GUARD};
    use crate::rng::rng_from;
    use approx::assert_abs_diff_eq;

    fn plant(a: &[f64], n: usize, b: &[f64], m: usize, noise: NoiseModel) -> LtiPlant {
        LtiPlant::new(Matrix::from_row_slice(n, n, a), Matrix::from_row_slice(n, m, b), noise).unwrap()
    }

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    #[test]
    fn single_steps() {
        let mut rng = rng_from(&[0]);
        let p = plant(&[1.0, 0.0, 0.0, 1.0], 2, &[1.0, 0.0, 0.0, 1.0], 2, NoiseModel::None);
        assert_eq!(step(&p, &v(&[0.0, 0.0]), &v(&[1.0, 0.0]), &mut rng).unwrap(), v(&[1.0, 0.0]));
        let p = plant(&[2.0], 1, &[1.0], 1, NoiseModel::None);
        assert_eq!(step(&p, &v(&[1.0]), &v(&[0.0]), &mut rng).unwrap(), v(&[2.0]));
        let p = plant(&[2.0, 1.0, 0.0, 0.5], 2, &[1.0, 0.0], 1, NoiseModel::None);
        assert_eq!(step(&p, &v(&[1.0, 1.0]), &v(&[0.0]), &mut rng).unwrap(), v(&[3.0, 0.5]));
        assert!(matches!(step(&p, &v(&[1.0]), &v(&[0.0]), &mut rng), Err(PlantError::DimensionMismatch(_))));
    }

    #[test]
    fn open_loop_powers() {
        let p = plant(&[2.0, 0.0, 0.0, 0.5], 2, &[1.0, 0.0], 1, NoiseModel::None);
        let log = simulate_open_loop(&p, v(&[1.0, 1.0]), 3, rng_from(&[0]), DEFAULT_GUARD).unwrap();
        let expected = [[1.0, 1.0], [2.0, 0.5], [4.0, 0.25], [8.0, 0.125]];
        assert_eq!(log.states.len(), 4);
        for (x, e) in log.states.iter().zip(expected) {
            assert_eq!(x, &v(&e));
        }
        for (x, norm) in log.states.iter().zip(&log.norms) {
            assert_abs_diff_eq!(x.norm(), *norm, epsilon = 1e-12);
        }
    }

    #[test]
    fn stable_decays_without_overflow() {
        let p = plant(&[0.5], 1, &[1.0], 1, NoiseModel::None);
        let log = simulate_open_loop(&p, v(&[1.0]), 50, rng_from(&[0]), DEFAULT_GUARD).unwrap();
        assert!(log.norms[50] < 1e-15);
    }

    #[test]
    fn overflow_carries_partial_log() {
        let p = plant(&[10.0], 1, &[1.0], 1, NoiseModel::None);
        let err = simulate_open_loop(&p, v(&[1.0]), 13, rng_from(&[0]), 1e12).unwrap_err();
        match err {
            PlantError::Overflow { t, log, .. } => {
                assert_eq!(t, 13);
                assert_eq!(log.states.len(), 14);
            }
            other => panic!("expected overflow, got {other:?}"),
        }
        assert!(simulate_open_loop(&p, v(&[1.0]), 12, rng_from(&[0]), 1e12).is_ok());
    }

    #[test]
    fn scalar_closed_loop_decay() {
        let p = plant(&[2.0], 1, &[1.0], 1, NoiseModel::None);
        let k = Matrix::from_element(1, 1, -1.618);
        let log = run_tau_hop_closed_loop(&p, v(&[1.0]), &k, &Matrix::identity(1, 1), 1, 20, rng_from(&[0]), DEFAULT_GUARD)
            .unwrap();
        for (t, norm) in log.norms.iter().enumerate() {
            assert_abs_diff_eq!(*norm, 0.382f64.powi(t as i32), epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_gain_matches_open_loop() {
        let p = plant(&[1.1, 0.2, 0.0, 0.7], 2, &[1.0, 0.5], 1, NoiseModel::Gaussian { sigma: 0.1 });
        let x0 = v(&[0.3, -0.2]);
        let open = simulate_open_loop(&p, x0.clone(), 30, rng_from(&[9]), DEFAULT_GUARD).unwrap();
        let closed = run_tau_hop_closed_loop(
            &p,
            x0,
            &Matrix::zeros(1, 1),
            &Matrix::from_column_slice(2, 1, &[1.0, 0.0]),
            2,
            30,
            rng_from(&[9]),
            DEFAULT_GUARD,
        )
        .unwrap();
        assert_eq!(open.states, closed.states);
    }

    #[test]
    fn tau_hop_schedule() {
        let p = plant(&[2.0], 1, &[1.0], 1, NoiseModel::None);
        let k = Matrix::from_element(1, 1, -3.618);
        let log = run_tau_hop_closed_loop(&p, v(&[1.0]), &k, &Matrix::identity(1, 1), 2, 10, rng_from(&[0]), DEFAULT_GUARD)
            .unwrap();
        for t in 0..10 {
            assert_eq!(log.input_norm(t) > 0.0, t % 2 == 0, "t = {t}");
        }
        assert!(log.phases.iter().all(|&ph| ph == Phase::ClosedLoop));
    }
}
