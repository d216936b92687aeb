//! Experiment orchestration: optimiser comparisons per wind day, reward
//! sweeps, aggregate statistics and CSV export.
//!
//! A sweep is the cross product days × optimisers × rewards × seeds. Every
//! cell owns its objective and optimiser state and runs on the rayon pool;
//! the report is assembled afterwards in cell order, so results do not
//! depend on the thread count.
//!
//! Seeds are split with [`split_seed`]: the run seed XOR a 64-bit FNV-1a hash
//! of the cell labels.

mod kde;
mod output;

use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::env::{metrics, rollout, EnvConfig, EnvError, EpisodeTrace, RewardKind};
use crate::launch::LaunchConfig;
use crate::optimize::{converged_stats, run_method, Method, Objective, OptimizeError, OptimizerSettings, Trace};
use crate::policy::{Controller, ControllerSpec, PolicyError};
use crate::windfield::{
    read_grid, synthesize_grid, GridAxes, NoiseSpec, SyntheticWindSpec, WindError, WindField, WindVector,
};

pub use kde::{kde_2d, KdeGrid, KdeSpec};
pub use output::{write_experiment, write_windcone_csv, ExperimentFiles, REPORT_CSV_HEADER, WINDCONE_CSV_HEADER};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Wind(#[from] WindError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over the labels, separated by a 0x1f byte.
pub fn label_hash(labels: &[&str]) -> u64 {
    let mut h = FNV_OFFSET;
    for (i, label) in labels.iter().enumerate() {
        if i > 0 {
            h ^= 0x1f;
            h = h.wrapping_mul(FNV_PRIME);
        }
        for b in label.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h
}

/// `seed ^ fnv1a(labels)`.
pub fn split_seed(seed: u64, labels: &[&str]) -> u64 {
    seed ^ label_hash(labels)
}

/// Grid geometry used for synthetic days.
#[derive(Debug, Clone, PartialEq)]
pub struct DayGeometry {
    pub center_lon: f64,
    pub center_lat: f64,
    pub step_deg: f64,
    pub nodes: usize,
    pub time_step_h: f64,
    pub times: usize,
    pub pressure_min: f64,
    pub pressure_max: f64,
    pub pressure_step: f64,
}

impl Default for DayGeometry {
    /// ±12° at 0.4°, 72 h at 6 h, 2000–17500 Pa every 500 Pa.
    fn default() -> Self {
        Self {
            center_lon: 0.0,
            center_lat: 1.0,
            step_deg: 0.4,
            nodes: 61,
            time_step_h: 6.0,
            times: 13,
            pressure_min: 2000.0,
            pressure_max: 17_500.0,
            pressure_step: 500.0,
        }
    }
}

impl DayGeometry {
    pub fn axes(&self) -> Result<GridAxes, HarnessError> {
        if !(self.pressure_step > 0.0) || !(self.pressure_min < self.pressure_max) {
            return Err(HarnessError::Usage("pressure levels need a positive step and min < max".into()));
        }
        let count = ((self.pressure_max - self.pressure_min) / self.pressure_step + 1e-9).floor() as usize + 1;
        let levels = (0..count).map(|k| self.pressure_min + self.pressure_step * k as f64).collect();
        let axes = GridAxes::centered(
            self.center_lon,
            self.center_lat,
            self.step_deg,
            self.nodes,
            self.time_step_h,
            self.times,
            levels,
        );
        axes.validate()?;
        Ok(axes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DaySource {
    Synthetic { spec: SyntheticWindSpec, geometry: DayGeometry },
    File(PathBuf),
}

/// One wind day plus the forecast-error noise applied to it. The noise seed
/// is replaced by a per-day seed when the day is loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct DaySpec {
    pub label: String,
    pub source: DaySource,
    pub forecast_noise: NoiseSpec,
}

impl DaySpec {
    /// Synthetic day `seed`: `template` with its seeds set from `seed`.
    pub fn synthetic(seed: u64, template: &SyntheticWindSpec, geometry: DayGeometry, forecast_noise: NoiseSpec) -> Self {
        let spec = SyntheticWindSpec { seed, noise: template.noise.with_seed(split_seed(seed, &["speed"])), ..*template };
        Self { label: format!("day{seed}"), source: DaySource::Synthetic { spec, geometry }, forecast_noise }
    }

    pub fn file(path: impl Into<PathBuf>, forecast_noise: NoiseSpec) -> Self {
        let path = path.into();
        let label = path.file_stem().map_or_else(|| "grid".to_string(), |s| s.to_string_lossy().into_owned());
        Self { label, source: DaySource::File(path), forecast_noise }
    }

    /// Builds the wind field. Forecast noise and episode seeds are split
    /// from `seed` and the day label.
    pub fn load(&self, seed: u64) -> Result<Day, HarnessError> {
        let grid = match &self.source {
            DaySource::Synthetic { spec, geometry } => synthesize_grid(spec, geometry.axes()?)?,
            DaySource::File(path) => read_grid(path)?,
        };
        let noise = self.forecast_noise.with_seed(split_seed(seed, &[&self.label, "forecast"]));
        Ok(Day {
            label: self.label.clone(),
            field: WindField::new(Arc::new(grid), noise)?,
            episode_seed: split_seed(seed, &[&self.label, "episode"]),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Day {
    pub label: String,
    pub field: WindField,
    /// Seed for every rollout on this day (lapse-rate draw).
    pub episode_seed: u64,
}

/// Episode return as a function of the launch configuration on one day.
pub struct LaunchObjective<'a> {
    day: &'a Day,
    cfg: EnvConfig,
    controller: &'a dyn Controller,
}

impl Objective for LaunchObjective<'_> {
    fn evaluate(&self, config: &LaunchConfig) -> Result<f64, String> {
        rollout(&self.cfg, *config, &self.day.field, self.controller, self.day.episode_seed)
            .map(|t| t.total_return)
            .map_err(|e| e.to_string())
    }
}

pub fn launch_objective<'a>(
    day: &'a Day,
    reward_kind: RewardKind,
    controller: &'a dyn Controller,
    cfg: &EnvConfig,
) -> LaunchObjective<'a> {
    LaunchObjective { day, cfg: EnvConfig { reward_kind, ..cfg.clone() }, controller }
}

/// One wind vector of a [`wind_cone`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeVector {
    pub level: usize,
    pub pressure_pa: f64,
    pub wind: WindVector,
}

/// Winds at the observation pressure levels at a fixed location and grid
/// time (hours).
pub fn wind_cone(
    field: &WindField,
    x_km: f64,
    y_km: f64,
    t_hours: f64,
    cfg: &EnvConfig,
) -> Result<Vec<ConeVector>, HarnessError> {
    cfg.observation_pressures()
        .iter()
        .enumerate()
        .map(|(level, &p)| {
            Ok(ConeVector { level, pressure_pa: p, wind: field.sample(x_km, y_km, p, t_hours)? })
        })
        .collect()
}

/// Launch sampling for reward sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub launches: usize,
    pub radius_km: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { launches: 16, radius_km: 400.0 }
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub kind: RewardKind,
    pub tw_fraction: f64,
    pub reach_ratio: f64,
    pub traces: Vec<EpisodeTrace>,
}

/// Launches at `r ~ U(0, radius)`, `θ ~ U(0, 2π)`, no delay. The same
/// launches are used for every reward kind.
pub fn sweep_launches(spec: &SweepSpec, seed: u64) -> Vec<LaunchConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..spec.launches)
        .map(|_| {
            let r = rng.gen_range(0.0..=spec.radius_km);
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            LaunchConfig::new(r * theta.cos(), r * theta.sin(), 0.0)
        })
        .collect()
}

/// Rolls the controller out from polar-uniform launches under each reward
/// kind and scores the episodes with [`metrics`].
pub fn reward_sweep(
    day: &Day,
    kinds: &[RewardKind],
    controller: &dyn Controller,
    cfg: &EnvConfig,
    spec: &SweepSpec,
    seed: u64,
) -> Result<Vec<SweepResult>, HarnessError> {
    if spec.launches == 0 {
        return Err(HarnessError::Usage("a reward sweep needs at least one launch".into()));
    }
    if !(spec.radius_km >= 0.0 && spec.radius_km.is_finite()) {
        return Err(HarnessError::Usage(format!("sweep radius must be >= 0, got {}", spec.radius_km)));
    }
    let launches = sweep_launches(spec, seed);
    kinds
        .iter()
        .map(|&kind| {
            let cfg = EnvConfig { reward_kind: kind, ..cfg.clone() };
            let traces = launches
                .par_iter()
                .map(|&l| rollout(&cfg, l, &day.field, controller, day.episode_seed))
                .collect::<Result<Vec<_>, _>>()?;
            let (tw_fraction, reach_ratio) = metrics(&traces, cfg.region_radius(), cfg.horizon)?;
            Ok(SweepResult { kind, tw_fraction, reach_ratio, traces })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub days: Vec<DaySpec>,
    pub optimizers: Vec<Method>,
    pub rewards: Vec<RewardKind>,
    pub controller: ControllerSpec,
    pub budget: usize,
    pub seeds_per_cell: usize,
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
    pub env: EnvConfig,
    pub optimizer: OptimizerSettings,
    pub sweep: SweepSpec,
    pub kde: KdeSpec,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let usage = |m: &str| Err(HarnessError::Usage(m.to_string()));
        if self.days.is_empty() {
            return usage("experiment needs at least one day");
        }
        if self.optimizers.is_empty() {
            return usage("experiment needs at least one optimizer");
        }
        if self.rewards.is_empty() {
            return usage("experiment needs at least one reward kind");
        }
        if self.seeds_per_cell == 0 {
            return usage("seeds per cell must be at least 1");
        }
        let mut labels: Vec<&str> = self.days.iter().map(|d| d.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return usage("day labels must be unique");
        }
        for &m in &self.optimizers {
            let min = self.optimizer.min_budget(m);
            if self.budget < min {
                return Err(HarnessError::Usage(format!("{m} needs a budget of at least {min}, got {}", self.budget)));
            }
        }
        if self.sweep.launches == 0 {
            return usage("sweep launches must be at least 1");
        }
        self.env.validate()?;
        self.kde.validate()
    }

    /// Seed of cell `(day, method, reward, index)`.
    pub fn cell_seed(&self, day: &str, method: Method, reward: RewardKind, index: usize) -> u64 {
        split_seed(self.seed, &[day, method.label(), reward.label(), &index.to_string()])
    }
}

/// One optimiser run.
#[derive(Debug, Clone)]
pub struct Cell {
    pub day: String,
    pub method: Method,
    pub reward: RewardKind,
    pub index: usize,
    pub seed: u64,
    pub trace: Trace,
}

impl Cell {
    pub fn failed(&self) -> bool {
        self.trace.error.is_some() || self.trace.is_empty()
    }
}

/// Aggregate over the days × seeds of one (optimiser, reward) pair. Means
/// cover the cells that did not fail and are NaN when all failed.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: Method,
    pub reward: RewardKind,
    pub cells: usize,
    pub failures: usize,
    pub mean_converged_max: f64,
    pub mean_converge_index: f64,
    pub tw_fraction: f64,
    pub reach_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub days: Vec<Day>,
    pub cells: Vec<Cell>,
    /// Per day, per reward kind in spec order.
    pub sweeps: Vec<Vec<SweepResult>>,
    pub report: AggregateReport,
}

impl ExperimentResult {
    pub fn cells_for(&self, method: Method, reward: RewardKind) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(move |c| c.method == method && c.reward == reward)
    }
}

/// Runs every cell and the reward sweeps, then aggregates.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult, HarnessError> {
    spec.validate()?;
    thread_pool(spec.threads)?.install(|| run_in_pool(spec))
}

/// Worker pool with `threads` threads; 0 uses every available core.
pub fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Usage(format!("cannot start worker pool: {e}")))
}

fn run_in_pool(spec: &ExperimentSpec) -> Result<ExperimentResult, HarnessError> {
    let controller = spec.controller.build()?;
    let controller: &dyn Controller = controller.as_ref();
    let days = spec.days.par_iter().map(|d| d.load(spec.seed)).collect::<Result<Vec<_>, _>>()?;

    let mut jobs = Vec::new();
    for day in &days {
        for &method in &spec.optimizers {
            for &reward in &spec.rewards {
                for index in 0..spec.seeds_per_cell {
                    jobs.push((day, method, reward, index));
                }
            }
        }
    }
    let cells = jobs
        .par_iter()
        .map(|&(day, method, reward, index)| {
            let seed = spec.cell_seed(&day.label, method, reward, index);
            let objective = launch_objective(day, reward, controller, &spec.env);
            let bounds = spec.env.launch_bounds;
            let trace = run_method(method, &objective, &bounds, spec.budget, &spec.optimizer, seed)?;
            Ok(Cell { day: day.label.clone(), method, reward, index, seed, trace })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;

    let sweeps = days
        .par_iter()
        .map(|day| {
            let seed = split_seed(spec.seed, &[&day.label, "sweep"]);
            reward_sweep(day, &spec.rewards, controller, &spec.env, &spec.sweep, seed)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let report = aggregate(spec, &cells, &sweeps)?;
    Ok(ExperimentResult { days, cells, sweeps, report })
}

fn aggregate(spec: &ExperimentSpec, cells: &[Cell], sweeps: &[Vec<SweepResult>]) -> Result<AggregateReport, HarnessError> {
    let mut rows = Vec::new();
    for &method in &spec.optimizers {
        for (k, &reward) in spec.rewards.iter().enumerate() {
            let group: Vec<&Cell> = cells.iter().filter(|c| c.method == method && c.reward == reward).collect();
            let ok: Vec<&Cell> = group.iter().copied().filter(|c| !c.failed()).collect();
            let mut sum_max = 0.0;
            let mut sum_index = 0.0;
            for c in &ok {
                let stats = converged_stats(&c.trace)?;
                sum_max += stats.converged_max;
                sum_index += stats.converge_index as f64;
            }
            let n = ok.len() as f64;
            let traces: Vec<EpisodeTrace> = sweeps.iter().flat_map(|s| s[k].traces.iter().cloned()).collect();
            let (tw_fraction, reach_ratio) = metrics(&traces, spec.env.region_radius(), spec.env.horizon)?;
            rows.push(ReportRow {
                method,
                reward,
                cells: group.len(),
                failures: group.len() - ok.len(),
                mean_converged_max: sum_max / n,
                mean_converge_index: sum_index / n,
                tw_fraction,
                reach_ratio,
            });
        }
    }
    Ok(AggregateReport { rows })
}

#[cfg(test)]
mod tests;
