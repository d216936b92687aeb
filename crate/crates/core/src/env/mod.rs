//! The station-keeping decision process.
//!
//! An [`Env`] owns one balloon flying through a shared [`WindField`]. Each
//! decision step decodes a normalised action into a desired ascent rate,
//! drops sand or vents helium to realise it, integrates the dynamics for one
//! decision period and scores the new distance to the target.

mod action;
mod observation;
mod reward;
mod trace;

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use action::{decode_action, desired_ascent_rate, encode_altitude, Action, ActionRanges, DecodedAction};
pub use observation::{
    bearing_error, heading_to_target, idx, observation_pressures, wrap_angle, Observation, ObservationInputs,
    HISTORY, OBS_LEN, WIND_LEVELS,
};
pub use reward::{reward, RewardKind, RewardParams};
pub use trace::{write_episode_csv, EpisodeTrace, StepRecord, EPISODE_CSV_HEADER};

use crate::atmosphere::{AtmosphereError, AtmosphereModel};
use crate::balloon::{
    advance, ballast_for_ascent, envelope_geometry, vent_for_ascent, BalloonConfig, BalloonError, BalloonParams,
    BalloonState, WindSource,
};
use crate::launch::{Bounds, LaunchConfig};
use crate::policy::Controller;
use crate::windfield::{Axis, WindError, WindField};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("launch outside bounds: {0}")]
    Constraint(String),
    #[error("{0}")]
    Usage(String),
    #[error("invalid environment config: {0}")]
    Config(String),
    #[error(transparent)]
    Balloon(#[from] BalloonError),
    #[error(transparent)]
    Wind(#[from] WindError),
    #[error(transparent)]
    Atmosphere(#[from] AtmosphereError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub reward_kind: RewardKind,
    pub reward: RewardParams,
    pub decision_period_s: f64,
    pub physics_dt_s: f64,
    pub horizon: usize,
    pub obs_pressure_lo: f64,
    pub obs_pressure_hi: f64,
    pub actions: ActionRanges,
    pub launch_altitude: f64,
    pub floor_altitude: f64,
    /// Per-episode lapse-rate scale is drawn uniformly from this interval.
    pub lapse_scale_range: (f64, f64),
    pub launch_bounds: Bounds,
    pub balloon: BalloonConfig,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            reward_kind: RewardKind::Step,
            reward: RewardParams::default(),
            decision_period_s: 180.0,
            physics_dt_s: 10.0,
            horizon: 960,
            obs_pressure_lo: 5000.0,
            obs_pressure_hi: 14_000.0,
            actions: ActionRanges::default(),
            launch_altitude: 14_000.0,
            floor_altitude: 10_000.0,
            lapse_scale_range: (0.95, 1.05),
            launch_bounds: Bounds::default(),
            balloon: BalloonConfig::default(),
        }
    }
}

impl EnvConfig {
    pub fn region_radius(&self) -> f64 {
        self.reward.region_radius
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: String| Err(EnvError::Config(m));
        let r = &self.reward;
        if !(r.region_radius > 0.0) {
            return bad(format!("region radius must be positive, got {}", r.region_radius));
        }
        if !(r.decay_tau > 0.0) || !r.decay_rho.is_finite() || !(r.cliff >= 0.0) || !r.exp_rate.is_finite() {
            return bad("reward decay parameters must be finite with positive half-life".into());
        }
        if !(self.obs_pressure_lo < self.obs_pressure_hi) || !(self.obs_pressure_lo > 0.0) {
            return bad("obs_pressure_lo must be positive and below obs_pressure_hi".into());
        }
        if self.horizon < 1 {
            return bad("horizon must be at least 1".into());
        }
        if !(self.decision_period_s > 0.0) || !(self.physics_dt_s > 0.0) {
            return bad("decision period and physics step must be positive".into());
        }
        let (lo, hi) = self.lapse_scale_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("lapse scale range [{lo}, {hi}] must be positive and ordered"));
        }
        let (a_lo, a_hi) = self.actions.altitude;
        let (f_lo, f_hi) = self.actions.time_factor;
        if !(a_lo < a_hi) || !(f_lo > 0.0 && f_lo < f_hi) {
            return bad("action ranges must be ordered with a positive time factor".into());
        }
        self.launch_bounds.validate().map_err(EnvError::Config)?;
        Ok(())
    }

    pub fn observation_pressures(&self) -> [f64; WIND_LEVELS] {
        observation_pressures(self.obs_pressure_lo, self.obs_pressure_hi)
    }

    pub fn step_reward(&self, distance_km: f64) -> f64 {
        reward(distance_km, self.reward_kind, &self.reward)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Horizon,
    Burst,
    Floor,
    Resources,
    /// The balloon left the horizontal or temporal extent of the wind grid.
    Domain,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Horizon => "horizon",
            Termination::Burst => "burst",
            Termination::Floor => "floor",
            Termination::Resources => "resources",
            Termination::Domain => "domain",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub distance_km: f64,
    pub helium: f64,
    pub sand: f64,
    pub vented: f64,
    pub dropped: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub terminated: Option<Termination>,
    pub info: StepInfo,
}

struct EpisodeWind<'a> {
    field: &'a WindField,
    launch_time_h: f64,
}

impl WindSource<f64> for EpisodeWind<'_> {
    fn wind_at(&self, x_km: f64, y_km: f64, pressure: f64, t_s: f64) -> Result<(f64, f64), WindError> {
        let w = self.field.sample(x_km, y_km, pressure, self.launch_time_h + t_s / 3600.0)?;
        Ok((w.u, w.v))
    }
}

/// One episode's mutable simulator.
pub struct Env<'a> {
    cfg: &'a EnvConfig,
    wind: EpisodeWind<'a>,
    atmosphere: AtmosphereModel<f64>,
    params: BalloonParams<f64>,
    state: BalloonState<f64>,
    initial_helium: f64,
    initial_sand: f64,
    steps: usize,
    previous_reward: f64,
    altitude_history: [f64; HISTORY],
    ascent_history: [f64; HISTORY],
    float_history: [f64; HISTORY],
    terminated: Option<Termination>,
    vent_saturations: u64,
    last_observation: Observation,
}

impl<'a> Env<'a> {
    /// Launches at `(x0, y0)` km, `Δt` hours after the grid's time origin, at
    /// the configured launch altitude with zero ascent rate and horizontal
    /// velocity equal to the local wind. `seed` draws the lapse-rate scale.
    pub fn new(cfg: &'a EnvConfig, field: &'a WindField, launch: LaunchConfig, seed: u64) -> Result<Self, EnvError> {
        cfg.validate()?;
        if let Some(v) = cfg.launch_bounds.violation(&launch) {
            return Err(EnvError::Constraint(v));
        }
        let (lo, hi) = cfg.lapse_scale_range;
        let scale = if lo == hi { lo } else { ChaCha8Rng::seed_from_u64(seed).gen_range(lo..=hi) };
        let atmosphere = AtmosphereModel::with_lapse_scale(scale)?;
        let balloon = cfg.balloon.resolve(&atmosphere)?;
        let wind = EpisodeWind { field, launch_time_h: field.grid().axes().time_origin + launch.dt_h };

        let air = atmosphere.properties_at(cfg.launch_altitude)?;
        let (u, v) = wind.wind_at(launch.x_km, launch.y_km, air.pressure, 0.0)?;
        let state = BalloonState {
            x: launch.x_km,
            y: launch.y_km,
            h: cfg.launch_altitude,
            h_dot: 0.0,
            vx: u,
            vy: v,
            n_h: balloon.initial_helium,
            m_s: balloon.initial_sand,
            t: 0.0,
        };
        let mut env = Self {
            cfg,
            wind,
            atmosphere,
            params: balloon.params,
            state,
            initial_helium: balloon.initial_helium,
            initial_sand: balloon.initial_sand,
            steps: 0,
            previous_reward: 0.0,
            altitude_history: [cfg.launch_altitude; HISTORY],
            ascent_history: [0.0; HISTORY],
            float_history: [0.0; HISTORY],
            terminated: None,
            vent_saturations: 0,
            last_observation: Observation::zeros(),
        };
        env.last_observation = env.observe()?;
        Ok(env)
    }

    pub fn state(&self) -> &BalloonState<f64> {
        &self.state
    }

    /// Replaces the kinematic/resource state; used to probe arbitrary states.
    pub fn set_state(&mut self, state: BalloonState<f64>) {
        self.state = state;
    }

    pub fn params(&self) -> &BalloonParams<f64> {
        &self.params
    }

    pub fn atmosphere(&self) -> &AtmosphereModel<f64> {
        &self.atmosphere
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn terminated(&self) -> Option<Termination> {
        self.terminated
    }

    /// Steps on which no balancing helium amount was found and the vent
    /// saturated.
    pub fn vent_saturations(&self) -> u64 {
        self.vent_saturations
    }

    pub fn last_observation(&self) -> &Observation {
        &self.last_observation
    }

    fn time_h(&self) -> f64 {
        self.wind.launch_time_h + self.state.t / 3600.0
    }

    pub fn observe(&self) -> Result<Observation, EnvError> {
        let s = &self.state;
        let t_h = self.time_h();
        let heading = heading_to_target(s.x, s.y);
        let mut levels = [(0.0, 0.0); WIND_LEVELS];
        for (slot, p) in levels.iter_mut().zip(self.cfg.observation_pressures()) {
            let w = self.wind.field.sample(s.x, s.y, p, t_h)?;
            *slot = (w.speed(), bearing_error(w.u, w.v, heading));
        }
        let air = self.atmosphere.properties_at(s.h)?;
        let geometry = envelope_geometry(s.n_h, &air)?;
        let local = self.wind.field.sample(s.x, s.y, air.pressure, t_h)?;
        let fraction = |now: f64, initial: f64| if initial > 0.0 { now / initial } else { 0.0 };
        Ok(Observation::build(&ObservationInputs {
            levels,
            altitude: s.h,
            ascent_rate: s.h_dot,
            drag_area: geometry.drag_area,
            volume: geometry.volume,
            helium: s.n_h,
            total_mass: s.total_mass(&self.params),
            sand: s.m_s,
            local_speed: local.speed(),
            local_bearing: bearing_error(local.u, local.v, heading),
            distance_km: s.distance(),
            heading,
            hour_of_day: t_h,
            sand_fraction: fraction(s.m_s, self.initial_sand),
            helium_fraction: fraction(s.n_h, self.initial_helium),
            previous_reward: self.previous_reward,
            altitude_history: self.altitude_history,
            ascent_history: self.ascent_history,
            float_history: self.float_history,
        }))
    }

    fn burst(&self) -> Result<bool, EnvError> {
        let air = self.atmosphere.properties_at(self.state.h)?;
        Ok(envelope_geometry(self.state.n_h, &air)?.volume >= self.params.burst_volume)
    }

    fn resources_exhausted(&self) -> bool {
        let s = &self.state;
        let p = &self.params;
        let static_lift = s.n_h * (p.molar_mass_air - p.molar_mass_helium);
        s.m_s <= 0.0 && static_lift <= p.payload_mass + s.m_s && s.h_dot < -2.0
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome, EnvError> {
        if let Some(reason) = self.terminated {
            return Err(EnvError::Usage(format!("step called on an episode that ended ({reason})")));
        }
        let action = action.clamped();
        let decoded = decode_action(&action, &self.cfg.actions);
        let before = self.state;
        let desired = desired_ascent_rate(&decoded, before.h, self.cfg.decision_period_s);

        let mut vented = 0.0;
        let mut dropped = 0.0;
        if !decoded.is_float() {
            let air = self.atmosphere.properties_at(before.h)?;
            if desired > before.h_dot {
                dropped = ballast_for_ascent(desired, &before, &air, &self.params)?.dropped;
                self.state.m_s = (self.state.m_s - dropped).max(0.0);
            } else if desired < before.h_dot {
                let decision = vent_for_ascent(desired, &before, &air, &self.params);
                if decision.saturated {
                    self.vent_saturations += 1;
                }
                vented = decision.vented;
                self.state.n_h = (self.state.n_h - vented).max(0.0);
            }
        }

        let mut termination = None;
        let end = before.t + self.cfg.decision_period_s;
        while self.state.t < end - 1e-9 {
            let chunk = self.cfg.physics_dt_s.min(end - self.state.t);
            match advance(&self.state, &self.wind, &self.atmosphere, &self.params, chunk, self.cfg.physics_dt_s) {
                Ok(next) => self.state = next,
                Err(BalloonError::Wind(WindError::OutOfBounds { axis, .. })) if axis != Axis::Pressure => {
                    termination = Some(Termination::Domain);
                    break;
                }
                Err(e) => return Err(e.into()),
            }
            if self.state.h < self.cfg.floor_altitude {
                termination = Some(Termination::Floor);
                break;
            }
            if self.burst()? {
                termination = Some(Termination::Burst);
                break;
            }
        }

        self.steps += 1;
        let distance = self.state.distance();
        let r = self.cfg.step_reward(distance);
        self.previous_reward = r;
        self.altitude_history = [before.h, self.altitude_history[0], self.altitude_history[1]];
        self.ascent_history = [before.h_dot, self.ascent_history[0], self.ascent_history[1]];
        self.float_history = [decoded.float_flag, self.float_history[0], self.float_history[1]];

        if termination.is_none() {
            if self.steps >= self.cfg.horizon {
                termination = Some(Termination::Horizon);
            } else if self.resources_exhausted() {
                termination = Some(Termination::Resources);
            }
        }
        if termination != Some(Termination::Domain) {
            match self.observe() {
                Ok(obs) => self.last_observation = obs,
                Err(EnvError::Wind(WindError::OutOfBounds { axis, .. })) if axis != Axis::Pressure => {
                    termination = termination.or(Some(Termination::Domain));
                }
                Err(e) => return Err(e),
            }
        }
        self.terminated = termination;
        Ok(StepOutcome {
            observation: self.last_observation,
            reward: r,
            terminated: termination,
            info: StepInfo { distance_km: distance, helium: self.state.n_h, sand: self.state.m_s, vented, dropped },
        })
    }
}

/// Runs one episode under `controller`. Deterministic in all inputs.
pub fn rollout(
    cfg: &EnvConfig,
    launch: LaunchConfig,
    field: &WindField,
    controller: &dyn Controller,
    seed: u64,
) -> Result<EpisodeTrace, EnvError> {
    let mut env = Env::new(cfg, field, launch, seed)?;
    let mut observation = *env.last_observation();
    let mut records = Vec::with_capacity(cfg.horizon);
    loop {
        let action = controller.act(&observation, cfg).clamped();
        let outcome = env.step(action)?;
        let s = env.state();
        records.push(StepRecord {
            step: env.steps(),
            t_s: s.t,
            x_km: s.x,
            y_km: s.y,
            h_m: s.h,
            d_km: outcome.info.distance_km,
            reward: outcome.reward,
            action,
        });
        if let Some(reason) = outcome.terminated {
            return Ok(EpisodeTrace::new(records, reason));
        }
        observation = outcome.observation;
    }
}

/// `(time-within-region fraction, reach ratio)` over `traces`, with the
/// configured horizon as the per-episode denominator.
pub fn metrics(traces: &[EpisodeTrace], region_radius: f64, horizon: usize) -> Result<(f64, f64), EnvError> {
    if traces.is_empty() {
        return Err(EnvError::Usage("metrics need at least one trace".into()));
    }
    if horizon == 0 {
        return Err(EnvError::Usage("horizon must be positive".into()));
    }
    let mut inside = 0usize;
    let mut reached = 0usize;
    for trace in traces {
        let n = trace.records.iter().filter(|r| r.d_km < region_radius).count();
        inside += n;
        if n > 0 {
            reached += 1;
        }
    }
    let n = traces.len() as f64;
    Ok((inside as f64 / (n * horizon as f64), reached as f64 / n))
}
