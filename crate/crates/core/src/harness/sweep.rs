use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{
    baseline_full_id, record_baseline, record_lts0n, BaselineConfig, HarnessError, Method, Result, RunMeta, RunRecord,
};
use crate::lts0n::{run_lts0n, Lts0nConfig};
use crate::par::{self, Execution};
use crate::plant::{random_plant, LtiPlant, NoiseModel, PlantFile, PlantSpec};
use crate::rng::{derive_seed, rng_from};

/// Sweep runs take this many multiples of `T` in closed loop by default;
/// hand-over norms of 1e5 to 1e8 need far longer than one window to settle.
pub const DEFAULT_POST_HORIZON_FACTOR: usize = 40;

const PLANT_SALT: u64 = 0x706c_616e;
const BASELINE_SALT: u64 = 0x6261_7365;

/// Where the plant of an experiment comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlantSource {
    File { file: PathBuf },
    /// Template for generated plants; sweeps override `n` and the noise.
    Spec(PlantSpec),
}

impl Default for PlantSource {
    fn default() -> Self {
        PlantSource::Spec(PlantSpec::default())
    }
}

/// Inclusive seed range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRange {
    pub start: u64,
    pub end: u64,
}

impl SeedRange {
    pub fn iter(&self) -> impl Iterator<Item = u64> {
        self.start..=self.end
    }

    pub fn is_empty(&self) -> bool {
        self.start > self.end
    }
}

impl std::str::FromStr for SeedRange {
    type Err = String;

    /// `"a..b"` (inclusive) or a single seed.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parse = |v: &str| v.trim().parse::<u64>().map_err(|e| format!("bad seed {v:?}: {e}"));
        match s.split_once("..") {
            Some((a, b)) => Ok(SeedRange { start: parse(a)?, end: parse(b.trim_start_matches('='))? }),
            None => parse(s).map(|v| SeedRange { start: v, end: v }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub plant: PlantSource,
    pub lts: Lts0nConfig,
    /// Assumed instability index; the plant's `k` when absent.
    pub k_hat: Option<usize>,
    pub n: Vec<usize>,
    pub sigma: Vec<f64>,
    pub seeds: SeedRange,
    pub baseline: bool,
    pub baseline_config: BaselineConfig,
    /// Trailing window of the stabilization metric; `5·T` when absent.
    pub window: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            plant: PlantSource::default(),
            lts: Lts0nConfig::default(),
            k_hat: None,
            n: vec![8],
            sigma: vec![0.01],
            seeds: SeedRange { start: 1, end: 20 },
            baseline: false,
            baseline_config: BaselineConfig::default(),
            window: None,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn window(&self) -> usize {
        self.window.unwrap_or(5 * self.lts.t_horizon)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(HarnessError::InvalidConfig(msg));
        if self.n.is_empty() || self.sigma.is_empty() {
            return fail("sweep axes must be nonempty".into());
        }
        if self.seeds.is_empty() {
            return fail(format!("empty seed range {}..{}", self.seeds.start, self.seeds.end));
        }
        if let Some(&s) = self.sigma.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return fail(format!("sigma {s} must be non-negative"));
        }
        if self.window == Some(0) {
            return fail("window must be positive".into());
        }
        if let PlantSource::File { file } = &self.plant {
            if !file.is_file() {
                return fail(format!("plant file {} does not exist", file.display()));
            }
        }
        self.lts.validate()?;
        Ok(())
    }

    /// Learner config for one run: `k̂`, a seed hashed from the run key, and
    /// the sweep's post-horizon unless the learner config sets one.
    pub fn run_config(&self, k: usize, key: &[u64]) -> Lts0nConfig {
        Lts0nConfig {
            k_hat: self.k_hat.unwrap_or(k),
            seed: derive_seed(key),
            post_horizon: Some(self.lts.post_horizon.unwrap_or(DEFAULT_POST_HORIZON_FACTOR * self.lts.t_horizon)),
            ..self.lts.clone()
        }
    }
}

/// Statistics of `steps_to_stabilize` over the stabilized runs of a group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub method: Method,
    pub n: usize,
    pub sigma: f64,
    pub k: usize,
    pub m: usize,
    pub runs: usize,
    pub stabilized: usize,
    pub mean_steps: Option<f64>,
    /// Sample standard deviation; zero for a single run.
    pub std_steps: Option<f64>,
    pub median_steps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub records: Vec<RunRecord>,
    pub summaries: Vec<Summary>,
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 { values[mid] } else { 0.5 * (values[mid - 1] + values[mid]) })
}

/// One summary per `(method, n, σ)`, in that order.
pub fn summarize(records: &[RunRecord]) -> Vec<Summary> {
    let mut groups: BTreeMap<(Method, usize, u64), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.method, r.n, r.sigma.to_bits())).or_default().push(r);
    }
    groups
        .into_values()
        .map(|group| {
            let first = group[0];
            let mut steps: Vec<f64> =
                group.iter().filter(|r| r.stabilized()).filter_map(|r| r.steps_to_stabilize).map(|s| s as f64).collect();
            let count = steps.len();
            let mean = (count > 0).then(|| steps.iter().sum::<f64>() / count as f64);
            let std = mean.map(|mu| {
                if count < 2 {
                    0.0
                } else {
                    (steps.iter().map(|s| (s - mu).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
                }
            });
            Summary {
                method: first.method,
                n: first.n,
                sigma: first.sigma,
                k: first.k,
                m: first.m,
                runs: group.len(),
                stabilized: count,
                mean_steps: mean,
                std_steps: std,
                median_steps: median(&mut steps),
            }
        })
        .collect()
}

fn load_file_plant(cfg: &ExperimentConfig) -> Result<Option<LtiPlant>> {
    match &cfg.plant {
        PlantSource::File { file } => Ok(Some(PlantFile::load(file)?.to_plant()?)),
        PlantSource::Spec(_) => Ok(None),
    }
}

fn run_job(cfg: &ExperimentConfig, fixed: Option<&LtiPlant>, n: usize, sigma: f64, seed: u64) -> Vec<RunRecord> {
    let key = [seed, n as u64, sigma.to_bits()];
    let template = match &cfg.plant {
        PlantSource::Spec(spec) => spec.clone(),
        PlantSource::File { .. } => PlantSpec::default(),
    };
    let meta = RunMeta { seed, n, k: template.k, m: template.m, sigma };
    let plant = match fixed {
        Some(p) => Ok(p.clone()),
        None => {
            let spec = PlantSpec { n, noise: NoiseModel::gaussian_or_none(sigma), ..template };
            random_plant(&spec, &mut rng_from(&[seed, n as u64, sigma.to_bits(), PLANT_SALT]))
        }
    };
    let mut methods = vec![Method::Lts0n];
    if cfg.baseline {
        methods.push(Method::Baseline);
    }
    let plant = match plant {
        Ok(p) => p,
        Err(e) => return methods.into_iter().map(|m| RunRecord::generation_failed(m, meta, e.to_string())).collect(),
    };
    let k = plant.truth.as_ref().map_or(meta.k, |t| t.k);
    let meta = RunMeta { n: plant.n(), m: plant.m(), k, ..meta };
    let run_cfg = cfg.run_config(k, &key);
    let window = cfg.window();

    let mut out = vec![record_lts0n(meta, &plant, &run_cfg, &run_lts0n(&plant, &run_cfg), window)];
    if cfg.baseline {
        let mut rng = rng_from(&[seed, n as u64, sigma.to_bits(), BASELINE_SALT]);
        out.push(match baseline_full_id(&plant, &cfg.baseline_config, &mut rng) {
            Ok(run) => record_baseline(meta, &plant, &run, window),
            Err(e) => RunRecord {
                status: super::RunStatus::Failed,
                ..RunRecord::generation_failed(Method::Baseline, meta, e.to_string())
            },
        });
    }
    out
}

/// Runs every `(n, σ, seed)` of the grid, optionally with the baseline on
/// the same plant. Per-run failures become rows; only an invalid config
/// aborts. Rows come back sorted, so the output does not depend on
/// scheduling.
pub fn run_sweep(cfg: &ExperimentConfig, exec: Execution) -> Result<SweepOutput> {
    cfg.validate()?;
    let fixed = load_file_plant(cfg)?;
    let jobs: Vec<(usize, f64, u64)> = match &fixed {
        Some(p) => cfg.seeds.iter().map(|s| (p.n(), p.noise.sigma(), s)).collect(),
        None => cfg
            .n
            .iter()
            .flat_map(|&n| cfg.sigma.iter().flat_map(move |&sigma| cfg.seeds.iter().map(move |s| (n, sigma, s))))
            .collect(),
    };
    let results = par::with_thread_cap(|| {
        par::map(&jobs, exec, |&(n, sigma, seed)| run_job(cfg, fixed.as_ref(), n, sigma, seed))
    });
    let mut records: Vec<RunRecord> = results.into_iter().flatten().collect();
    records.sort_by(|a, b| {
        (a.method, a.n).cmp(&(b.method, b.n)).then(a.sigma.total_cmp(&b.sigma)).then(a.seed.cmp(&b.seed))
    });
    let summaries = summarize(&records);
    Ok(SweepOutput { records, summaries })
}
