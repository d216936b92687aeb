//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, unknown and repeated keys
//! are errors. Every key has a default (see [`KEYS`]); [`RunConfig::resolve`]
//! parses and validates all of them before anything runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::balloon::BalloonConfig;
use crate::env::{ActionRanges, EnvConfig, RewardKind, RewardParams};
use crate::harness::{DayGeometry, DaySpec, ExperimentSpec, KdeSpec, SweepSpec};
use crate::launch::Bounds;
use crate::optimize::{BoParams, Method, OptimizerSettings, PsoParams, PsoSchedule};
use crate::policy::ControllerSpec;
use crate::windfield::{NoiseSpec, SyntheticWindSpec};

/// Environment variable that overrides the `threads` key.
pub const THREADS_ENV: &str = "STRATOKEEPER_THREADS";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown config key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

pub struct KeyDoc {
    pub key: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

const fn k(key: &'static str, default: &'static str, help: &'static str) -> KeyDoc {
    KeyDoc { key, default, help }
}

pub const KEYS: &[KeyDoc] = &[
    k("seed", "0", "run seed; every other seed is split from it"),
    k("threads", "0", "worker threads, 0 = all cores"),
    // environment
    k("reward", "step", "reward kind for simulate/optimize: step, tanh or exp"),
    k("region_radius_km", "50", "station-keeping radius"),
    k("reward_cliff", "0.4", "reward just outside the region"),
    k("reward_decay_rho_km", "50", "distance where the decaying tail starts"),
    k("reward_decay_tau_km", "100", "half-life distance of the tail"),
    k("reward_exp_rate", "0.01", "per-km rate of the exp reward"),
    k("decision_period_s", "180", "seconds between controller decisions"),
    k("physics_dt_s", "10", "physics step"),
    k("horizon", "960", "decision steps per episode"),
    k("obs_pressure_lo", "5000", "lowest observed pressure level, Pa"),
    k("obs_pressure_hi", "14000", "highest observed pressure level, Pa"),
    k("action_altitude_min", "14000", "target altitude at action -1, m"),
    k("action_altitude_max", "21000", "target altitude at action +1, m"),
    k("action_time_factor_min", "1", "time factor at action -1"),
    k("action_time_factor_max", "5", "time factor at action +1"),
    k("launch_altitude", "14000", "altitude the episode starts at, m"),
    k("floor_altitude", "10000", "episode ends below this altitude, m"),
    k("lapse_scale_min", "0.95", "lower bound of the per-episode lapse-rate scale"),
    k("lapse_scale_max", "1.05", "upper bound of the per-episode lapse-rate scale"),
    k("bounds_x_km", "400", "launch box half-width in x"),
    k("bounds_y_km", "400", "launch box half-width in y"),
    k("bounds_t_h", "24", "largest launch delay"),
    // balloon
    k("payload_mass_kg", "1.5", "payload mass"),
    k("drag_coefficient", "0.47", "envelope drag coefficient"),
    k("initial_sand_kg", "0.5", "ballast at launch"),
    k("free_lift_rate", "4", "sea-level ascent rate that fixes the helium, m/s"),
    k("burst_altitude", "22000", "altitude at which the envelope bursts, m"),
    k("max_vent_rate", "5", "helium vented per step at most, mol"),
    k("max_ballast_rate", "0.05", "sand dropped per step at most, kg"),
    // wind days
    k("wind_files", "", "comma-separated grid files; replaces the synthetic days when set"),
    k("days", "0-19", "synthetic day seeds, e.g. 0-19 or 1,4,7"),
    k("synth_base_speed", "10", "synthetic wind speed, m/s"),
    k("synth_twist_turns", "1", "direction turns across the grid pressure range"),
    k("synth_time_drift", "0.05", "direction drift, rad/h"),
    k("synth_speed_noise", "1", "amplitude of the synthetic speed modulation noise"),
    k("forecast_noise", "0", "forecast-error noise added to every wind sample, m/s"),
    k("noise_spatial_scale_km", "200", "noise lattice spacing in x and y"),
    k("noise_pressure_scale_pa", "3000", "noise lattice spacing in pressure"),
    k("noise_time_scale_h", "12", "noise lattice spacing in time"),
    k("grid_center_lon", "0", "grid centre (the target), degrees"),
    k("grid_center_lat", "1", "grid centre (the target), degrees"),
    k("grid_step_deg", "0.4", "horizontal grid spacing"),
    k("grid_nodes", "61", "nodes per horizontal axis"),
    k("grid_time_step_h", "6", "grid time spacing"),
    k("grid_times", "13", "grid time nodes"),
    k("grid_pressure_min", "2000", "lowest grid pressure level, Pa"),
    k("grid_pressure_max", "17500", "highest grid pressure level, Pa"),
    k("grid_pressure_step", "500", "grid pressure spacing, Pa"),
    // controller
    k("controller", "greedy", "greedy, hold or mlp"),
    k("greedy_speed_weight", "1", "greedy: weight of wind speed inside the region"),
    k("greedy_float_threshold", "1", "greedy: float within this many levels of the best"),
    k("hold_altitude", "14000", "hold: altitude to keep, m"),
    k("mlp_weights", "", "mlp: path of the actor weights file"),
    // optimisers
    k("methods", "bo,pso,uniform", "optimisers compared by experiment"),
    k("rewards", "step,tanh,exp", "reward kinds compared by experiment"),
    k("budget", "60", "objective evaluations per optimiser run"),
    k("seeds_per_cell", "1", "optimiser seeds per (day, method, reward)"),
    k("bo_initial_samples", "4", "uniform samples before the first GP fit"),
    k("bo_refit_every", "5", "BO iterations between hyperparameter fits"),
    k("bo_candidates", "2048", "random acquisition candidates"),
    k("bo_jittered_best", "10", "best inputs jittered as extra candidates"),
    k("bo_pattern_iters", "50", "pattern-search iterations on the best candidate"),
    k("gp_restarts", "8", "hyperparameter search starts"),
    k("gp_max_evals", "200", "likelihood evaluations per start"),
    k("pso_swarm_size", "12", "particles"),
    k("pso_schedule", "decaying", "decaying or constant"),
    // outputs
    k("sweep_launches", "16", "launches per day in the reward sweep"),
    k("sweep_radius_km", "400", "sweep launch radius"),
    k("kde_bandwidth_km", "15", "KDE bandwidth"),
    k("kde_extent_km", "400", "KDE grid half-width"),
    k("kde_resolution", "201", "KDE nodes per axis"),
];

fn lookup(key: &str) -> Option<&'static KeyDoc> {
    KEYS.iter().find(|d| d.key == key)
}

/// `--help` text listing every key with its default.
pub fn keys_help() -> String {
    let width = KEYS.iter().map(|d| d.key.len() + d.default.len()).max().unwrap_or(0) + 4;
    let mut out = String::from("Config keys (key = default):\n");
    for d in KEYS {
        let lhs = format!("{} = {}", d.key, d.default);
        out.push_str(&format!("  {lhs:<width$} {}\n", d.help));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<&'static str, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { values: KEYS.iter().map(|d| (d.key, d.default.to_string())).collect() }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = key.trim();
            let doc = lookup(key).ok_or_else(|| ConfigError::UnknownKey { line, key: key.to_string() })?;
            if let Some(first) = seen.insert(doc.key, line) {
                return Err(ConfigError::Parse { line, message: format!("`{key}` already set on line {first}") });
            }
            cfg.values.insert(doc.key, value.trim().to_string());
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.to_path_buf(), message: e.to_string() })?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), ConfigError> {
        let doc = lookup(key).ok_or_else(|| ConfigError::UnknownKey { line: 0, key: key.to_string() })?;
        self.values.insert(doc.key, value.into());
        Ok(())
    }

    /// Applies the value of [`THREADS_ENV`], if any.
    pub fn apply_threads_override(&mut self, value: Option<&str>) -> Result<(), ConfigError> {
        if let Some(v) = value {
            self.set("threads", v.trim())?;
        }
        Ok(())
    }

    /// All keys with their current values, in [`KEYS`] order.
    pub fn entries(&self) -> Vec<(String, String)> {
        KEYS.iter().map(|d| (d.key.to_string(), self.values[d.key].clone())).collect()
    }

    fn raw(&self, key: &'static str) -> &str {
        &self.values[key]
    }

    fn num<T: FromStr>(&self, key: &'static str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key).parse().map_err(|e: T::Err| ConfigError::Invalid { key: key.into(), message: e.to_string() })
    }

    fn list<T: FromStr<Err = String>>(&self, key: &'static str) -> Result<Vec<T>, ConfigError> {
        let items = self
            .raw(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|message| ConfigError::Invalid { key: key.into(), message }))
            .collect::<Result<Vec<T>, _>>()?;
        if items.is_empty() {
            return Err(invalid(key, "list must not be empty"));
        }
        Ok(items)
    }

    fn day_seeds(&self) -> Result<Vec<u64>, ConfigError> {
        let mut seeds = Vec::new();
        for item in self.raw("days").split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let parse = |s: &str| s.trim().parse::<u64>().map_err(|e| invalid("days", &format!("`{s}`: {e}")));
            match item.split_once('-') {
                Some((a, b)) => {
                    let (a, b) = (parse(a)?, parse(b)?);
                    if a > b {
                        return Err(invalid("days", &format!("empty range `{item}`")));
                    }
                    seeds.extend(a..=b);
                }
                None => seeds.push(parse(item)?),
            }
        }
        if seeds.is_empty() {
            return Err(invalid("days", "no day seeds"));
        }
        Ok(seeds)
    }

    /// Parses and validates every key.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let threads: usize = self.num("threads")?;
        let reward_kind: RewardKind = self.raw("reward").parse().map_err(|m: String| invalid("reward", &m))?;
        let env = EnvConfig {
            reward_kind,
            reward: RewardParams {
                region_radius: self.num("region_radius_km")?,
                cliff: self.num("reward_cliff")?,
                decay_rho: self.num("reward_decay_rho_km")?,
                decay_tau: self.num("reward_decay_tau_km")?,
                exp_rate: self.num("reward_exp_rate")?,
            },
            decision_period_s: self.num("decision_period_s")?,
            physics_dt_s: self.num("physics_dt_s")?,
            horizon: self.num("horizon")?,
            obs_pressure_lo: self.num("obs_pressure_lo")?,
            obs_pressure_hi: self.num("obs_pressure_hi")?,
            actions: ActionRanges {
                altitude: (self.num("action_altitude_min")?, self.num("action_altitude_max")?),
                time_factor: (self.num("action_time_factor_min")?, self.num("action_time_factor_max")?),
            },
            launch_altitude: self.num("launch_altitude")?,
            floor_altitude: self.num("floor_altitude")?,
            lapse_scale_range: (self.num("lapse_scale_min")?, self.num("lapse_scale_max")?),
            launch_bounds: Bounds {
                x_max: self.num("bounds_x_km")?,
                y_max: self.num("bounds_y_km")?,
                t_max: self.num("bounds_t_h")?,
            },
            balloon: BalloonConfig {
                payload_mass: self.num("payload_mass_kg")?,
                drag_coefficient: self.num("drag_coefficient")?,
                initial_sand: self.num("initial_sand_kg")?,
                free_lift_rate: self.num("free_lift_rate")?,
                burst_altitude: self.num("burst_altitude")?,
                max_vent_rate: self.num("max_vent_rate")?,
                max_ballast_rate: self.num("max_ballast_rate")?,
            },
        };
        env.validate().map_err(|e| invalid("environment", &e.to_string()))?;

        let geometry = DayGeometry {
            center_lon: self.num("grid_center_lon")?,
            center_lat: self.num("grid_center_lat")?,
            step_deg: self.num("grid_step_deg")?,
            nodes: self.num("grid_nodes")?,
            time_step_h: self.num("grid_time_step_h")?,
            times: self.num("grid_times")?,
            pressure_min: self.num("grid_pressure_min")?,
            pressure_max: self.num("grid_pressure_max")?,
            pressure_step: self.num("grid_pressure_step")?,
        };
        geometry.axes().map_err(|e| invalid("grid", &e.to_string()))?;
        let noise_scales = NoiseSpec {
            seed: 0,
            amplitude: 0.0,
            spatial_scale_km: self.num("noise_spatial_scale_km")?,
            pressure_scale_pa: self.num("noise_pressure_scale_pa")?,
            time_scale_h: self.num("noise_time_scale_h")?,
        };
        let forecast_noise = NoiseSpec { amplitude: self.num("forecast_noise")?, ..noise_scales };
        forecast_noise.validate().map_err(|e| invalid("forecast_noise", &e.to_string()))?;
        let turns: f64 = self.num("synth_twist_turns")?;
        let synthetic = SyntheticWindSpec {
            seed: 0,
            base_speed: self.num("synth_base_speed")?,
            direction_twist: turns * std::f64::consts::TAU / (geometry.pressure_max - geometry.pressure_min),
            time_drift: self.num("synth_time_drift")?,
            noise: NoiseSpec { amplitude: self.num("synth_speed_noise")?, ..noise_scales },
        };
        synthetic.validate().map_err(|e| invalid("synth", &e.to_string()))?;

        let files: Vec<&str> = self.raw("wind_files").split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        let days = if files.is_empty() {
            self.day_seeds()?
                .into_iter()
                .map(|s| DaySpec::synthetic(s, &synthetic, geometry.clone(), forecast_noise))
                .collect()
        } else {
            files.iter().map(|f| DaySpec::file(f, forecast_noise)).collect()
        };

        let controller = match self.raw("controller") {
            "greedy" => ControllerSpec::Greedy {
                speed_weight: self.num("greedy_speed_weight")?,
                float_threshold: self.num("greedy_float_threshold")?,
            },
            "hold" => ControllerSpec::HoldAltitude { altitude: self.num("hold_altitude")? },
            "mlp" => {
                let path = self.raw("mlp_weights");
                if path.is_empty() {
                    return Err(invalid("mlp_weights", "required when controller = mlp"));
                }
                ControllerSpec::Mlp(PathBuf::from(path))
            }
            other => return Err(invalid("controller", &format!("unknown controller `{other}` (expected greedy, hold or mlp)"))),
        };

        let mut bo = BoParams {
            initial_samples: self.num("bo_initial_samples")?,
            refit_every: self.num("bo_refit_every")?,
            candidates: self.num("bo_candidates")?,
            jittered_best: self.num("bo_jittered_best")?,
            pattern_iters: self.num("bo_pattern_iters")?,
            ..BoParams::default()
        };
        bo.hyper.starts = self.num("gp_restarts")?;
        bo.hyper.max_evals = self.num("gp_max_evals")?;
        if bo.initial_samples < 3 || bo.refit_every == 0 || bo.candidates == 0 || bo.hyper.starts == 0 {
            return Err(invalid("bo", "need bo_initial_samples ≥ 3 and positive refit interval, candidates and restarts"));
        }
        let pso = PsoParams {
            swarm_size: self.num("pso_swarm_size")?,
            schedule: self.raw("pso_schedule").parse::<PsoSchedule>().map_err(|m| invalid("pso_schedule", &m))?,
        };
        if pso.swarm_size < 2 {
            return Err(invalid("pso_swarm_size", "must be at least 2"));
        }

        let resolved = Resolved {
            seed: self.num("seed")?,
            threads,
            experiment: ExperimentSpec {
                days,
                optimizers: self.list::<Method>("methods")?,
                rewards: self.list::<RewardKind>("rewards")?,
                controller,
                budget: self.num("budget")?,
                seeds_per_cell: self.num("seeds_per_cell")?,
                seed: self.num("seed")?,
                threads,
                env,
                optimizer: OptimizerSettings { bo, pso },
                sweep: SweepSpec { launches: self.num("sweep_launches")?, radius_km: self.num("sweep_radius_km")? },
                kde: KdeSpec {
                    extent_km: self.num("kde_extent_km")?,
                    resolution: self.num("kde_resolution")?,
                    bandwidth_km: self.num("kde_bandwidth_km")?,
                },
            },
        };
        resolved.experiment.validate().map_err(|e| invalid("experiment", &e.to_string()))?;
        Ok(resolved)
    }
}

fn invalid(key: &str, message: &str) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), message: message.to_string() }
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub seed: u64,
    pub threads: usize,
    pub experiment: ExperimentSpec,
}

impl Resolved {
    pub fn env(&self) -> &EnvConfig {
        &self.experiment.env
    }

    /// The day used by single-run commands.
    pub fn first_day(&self) -> &DaySpec {
        &self.experiment.days[0]
    }
}
