//! `lts`: plant generation, single runs, seed sweeps, the full-identification
//! baseline and bound checks.
//!
//! Exit codes: 0 ok, 2 generation or domain error, 3 run failure, 64 usage.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lts0n::certify::{error_report, CertOptions};
use lts0n::harness::{
    baseline_full_id, record_baseline, run_sweep, write_sweep_csv, write_trajectory_csv, ExperimentConfig, HarnessError,
    PlantSource, RunMeta, RunReport, SeedRange, DEFAULT_POST_HORIZON_FACTOR,
};
use lts0n::lts0n::{run_lts0n, Lts0nConfig};
use lts0n::par::Execution;
use lts0n::plant::{random_plant, LtiPlant, NoiseModel, PlantError, PlantFile, PlantSpec};
use lts0n::rng::rng_from;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Run(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Domain(_) => 2,
            CliError::Run(_) => 3,
        }
    }
}

impl From<PlantError> for CliError {
    fn from(e: PlantError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "lts", version, about = "Learn to stabilize an unknown noisy linear system from one trajectory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random plant and write it as JSON.
    Gen(GenArgs),
    /// Run the learner on one plant; writes trajectory.csv and report.json.
    Run(RunArgs),
    /// Sweep over n, sigma and seeds; writes one aggregate CSV.
    Sweep(SweepArgs),
    /// Run the full-identification baseline on one plant.
    Baseline(BaselineArgs),
    /// Run the learner and compare every error against its bound.
    CheckBounds(RunArgs),
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// Experiment config JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Gaussian noise scale; 0 for a noiseless plant.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Learner flags shared by `run`, `check-bounds` and `sweep`.
#[derive(Debug, Args, Default)]
struct LearnerFlags {
    #[arg(long = "T", value_parser = clap::value_parser!(u64).range(1..))]
    t_horizon: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    tau: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long = "omega-max", value_parser = clap::value_parser!(u64).range(1..))]
    omega_max: Option<u64>,
    #[arg(long = "post-horizon")]
    post_horizon: Option<u64>,
    #[arg(long = "k-hat", value_parser = clap::value_parser!(u64).range(1..))]
    k_hat: Option<u64>,
    #[arg(long)]
    guard: Option<f64>,
    /// Trailing window of the stabilization metric.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    window: Option<u64>,
}

impl LearnerFlags {
    fn apply(&self, exp: &mut ExperimentConfig) {
        let lts = &mut exp.lts;
        if let Some(v) = self.t_horizon {
            lts.t_horizon = v as usize;
        }
        if let Some(v) = self.tau {
            lts.tau = v as usize;
        }
        if let Some(v) = self.alpha {
            lts.alpha = v;
        }
        lts.gamma = self.gamma.or(lts.gamma);
        lts.epsilon = self.epsilon.or(lts.epsilon);
        lts.delta = self.delta.or(lts.delta);
        if let Some(v) = self.omega_max {
            lts.omega_max = Some(v as usize);
        }
        if let Some(v) = self.post_horizon {
            lts.post_horizon = Some(v as usize);
        }
        if let Some(v) = self.guard {
            lts.guard = v;
        }
        if let Some(v) = self.k_hat {
            exp.k_hat = Some(v as usize);
        }
        if let Some(v) = self.window {
            exp.window = Some(v as usize);
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Plant JSON; otherwise the config's plant.
    #[arg(long)]
    plant: Option<PathBuf>,
    #[command(flatten)]
    learner: LearnerFlags,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; the config's, or the current directory.
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Comma-separated state dimensions.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Comma-separated noise scales.
    #[arg(long, value_delimiter = ',')]
    sigma: Option<Vec<f64>>,
    /// Inclusive seed range `a..b`.
    #[arg(long)]
    seeds: Option<SeedRange>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Also run the baseline on every plant.
    #[arg(long)]
    baseline: bool,
    /// Run on one thread without rayon.
    #[arg(long)]
    sequential: bool,
    #[command(flatten)]
    learner: LearnerFlags,
    /// Aggregate CSV; `sweep.csv` in the output directory by default.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    plant: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Total steps, at least n + m·n.
    #[arg(long = "horizon-cap")]
    horizon_cap: Option<usize>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    window: Option<u64>,
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
}

fn load_config(arg: &ConfigArg) -> Result<ExperimentConfig> {
    match &arg.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
        }
        None => Ok(ExperimentConfig::default()),
    }
}

fn out_dir(flag: &Option<PathBuf>, exp: &ExperimentConfig) -> Result<PathBuf> {
    let dir = flag.clone().or_else(|| exp.out_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// The plant of a single run: `--plant`, else the config's file, else a
/// plant generated from the config's spec with `seed`.
fn resolve_plant(flag: &Option<PathBuf>, exp: &ExperimentConfig, seed: u64) -> Result<(LtiPlant, Option<u64>)> {
    let file = flag.clone().or(match &exp.plant {
        PlantSource::File { file } => Some(file.clone()),
        PlantSource::Spec(_) => None,
    });
    match (file, &exp.plant) {
        (Some(path), _) => {
            let pf = PlantFile::load(&path)?;
            Ok((pf.to_plant()?, pf.seed))
        }
        (None, PlantSource::Spec(spec)) => Ok((random_plant(spec, &mut rng_from(&[seed]))?, Some(seed))),
        (None, PlantSource::File { .. }) => unreachable!("file sources resolve above"),
    }
}

fn learner_config(exp: &ExperimentConfig, plant: &LtiPlant, seed: u64) -> Result<Lts0nConfig> {
    let k = exp.k_hat.or(plant.truth.as_ref().map(|t| t.k)).ok_or_else(|| {
        CliError::Usage("plant has no instability index; pass --k-hat".into())
    })?;
    let post_horizon = exp.lts.post_horizon.unwrap_or(DEFAULT_POST_HORIZON_FACTOR * exp.lts.t_horizon);
    let cfg = Lts0nConfig { k_hat: k, seed, post_horizon: Some(post_horizon), ..exp.lts.clone() };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn gen(args: GenArgs) -> Result<()> {
    let exp = load_config(&args.config)?;
    let template = match exp.plant {
        PlantSource::Spec(spec) => spec,
        PlantSource::File { .. } => PlantSpec::default(),
    };
    if !(args.sigma >= 0.0 && args.sigma.is_finite()) {
        return Err(CliError::Domain(format!("sigma {} must be non-negative", args.sigma)));
    }
    let spec = PlantSpec { n: args.n, k: args.k, m: args.m, noise: NoiseModel::gaussian_or_none(args.sigma), ..template };
    let plant = random_plant(&spec, &mut rng_from(&[args.seed]))?;
    PlantFile::from_plant(&plant, Some(args.seed)).save(&args.out)?;
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), value)?;
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let mut exp = load_config(&args.config)?;
    args.learner.apply(&mut exp);
    let seed = args.seed.unwrap_or(exp.lts.seed);
    let (plant, _) = resolve_plant(&args.plant, &exp, seed)?;
    let cfg = learner_config(&exp, &plant, seed)?;
    let dir = out_dir(&args.out_dir, &exp)?;

    let outcome = run_lts0n(&plant, &cfg);
    let log = match &outcome {
        Ok(run) => &run.log,
        Err(f) => &f.log,
    };
    write_trajectory_csv(log, BufWriter::new(File::create(dir.join("trajectory.csv"))?))?;
    let report = RunReport::new(&plant, &cfg, &outcome, exp.window());
    write_json(&dir.join("report.json"), &report)?;
    println!(
        "status {:?}; steps_to_stabilize {}; max_norm {:.4e}",
        report.status,
        report.steps_to_stabilize.map_or("-".to_string(), |s| s.to_string()),
        report.max_norm
    );
    match outcome {
        Ok(_) => Ok(()),
        Err(f) => Err(CliError::Run(f.to_string())),
    }
}

fn check_bounds(args: RunArgs) -> Result<()> {
    let mut exp = load_config(&args.config)?;
    args.learner.apply(&mut exp);
    let seed = args.seed.unwrap_or(exp.lts.seed);
    let (plant, _) = resolve_plant(&args.plant, &exp, seed)?;
    if plant.truth.is_none() {
        return Err(CliError::Domain("plant carries no oracle decomposition".into()));
    }
    let cfg = learner_config(&exp, &plant, seed)?;
    let outcome = run_lts0n(&plant, &cfg);
    let run = match &outcome {
        Ok(run) => run.clone(),
        Err(f) => f.learned_run().ok_or_else(|| CliError::Run(f.to_string()))?,
    };
    let opts = CertOptions { window: exp.window, ..Default::default() };
    let report = error_report(&plant, &run, &cfg, &opts).map_err(|e| CliError::Domain(e.to_string()))?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    for (name, err, bound, ok) in [
        ("m1", report.m1_err, report.m1_bound, report.m1_ok),
        ("m1_tau", report.m1tau_err, report.m1tau_bound, report.m1tau_ok),
        ("b_tau", report.btau_err, report.btau_bound, report.btau_ok),
    ] {
        eprintln!("{name:>7}: {err:.3e} <= {bound:.3e} {}", if ok { "ok" } else { "VIOLATED" });
    }
    let violations = report.premises.violations();
    if !violations.is_empty() {
        eprintln!("premises failed: {}", violations.join(", "));
    }
    if report.bounds_hold() {
        Ok(())
    } else {
        Err(CliError::Run("measured error exceeds its bound".into()))
    }
}

fn sweep(args: SweepArgs) -> Result<()> {
    let mut exp = load_config(&args.config)?;
    args.learner.apply(&mut exp);
    if let Some(n) = args.n {
        exp.n = n;
    }
    if let Some(sigma) = args.sigma {
        exp.sigma = sigma;
    }
    if let Some(seeds) = args.seeds {
        exp.seeds = seeds;
    }
    if let PlantSource::Spec(spec) = &mut exp.plant {
        spec.k = args.k.unwrap_or(spec.k);
        spec.m = args.m.unwrap_or(spec.m);
    }
    exp.baseline |= args.baseline;
    if exp.seeds.is_empty() {
        return Err(CliError::Usage(format!("empty seed range {}..{}", exp.seeds.start, exp.seeds.end)));
    }
    if exp.n.is_empty() || exp.sigma.is_empty() {
        return Err(CliError::Usage("sweep axes must be nonempty".into()));
    }
    let out = match args.out {
        Some(path) => path,
        None => out_dir(&args.out_dir, &exp)?.join("sweep.csv"),
    };
    let exec = if args.sequential { Execution::Sequential } else { Execution::available() };
    let result = run_sweep(&exp, exec)?;
    write_sweep_csv(&result.records, &result.summaries, BufWriter::new(File::create(&out)?))?;
    for s in &result.summaries {
        println!(
            "{:?} n={} sigma={} stabilized {}/{} median {}",
            s.method,
            s.n,
            s.sigma,
            s.stabilized,
            s.runs,
            s.median_steps.map_or("-".to_string(), |v| v.to_string())
        );
    }
    Ok(())
}

fn baseline(args: BaselineArgs) -> Result<()> {
    let mut exp = load_config(&args.config)?;
    if args.horizon_cap.is_some() {
        exp.baseline_config.horizon_cap = args.horizon_cap;
    }
    if let Some(w) = args.window {
        exp.window = Some(w as usize);
    }
    let seed = args.seed.unwrap_or(exp.lts.seed);
    let (plant, _) = resolve_plant(&args.plant, &exp, seed)?;
    let dir = out_dir(&args.out_dir, &exp)?;
    let run = baseline_full_id(&plant, &exp.baseline_config, &mut rng_from(&[seed]))
        .map_err(|e| match e {
            HarnessError::InvalidConfig(msg) => CliError::Usage(msg),
            other => other.into(),
        })?;
    let meta = RunMeta {
        seed,
        n: plant.n(),
        k: plant.truth.as_ref().map_or(0, |t| t.k),
        m: plant.m(),
        sigma: plant.noise.sigma(),
    };
    let record = record_baseline(meta, &plant, &run, exp.window());
    write_trajectory_csv(&run.log, BufWriter::new(File::create(dir.join("baseline.csv"))?))?;
    write_json(&dir.join("baseline.json"), &record)?;
    println!("status {:?}; max_norm {:.4e}", record.status, record.max_norm);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(64) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Baseline(a) => baseline(a),
        Command::CheckBounds(a) => check_bounds(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
