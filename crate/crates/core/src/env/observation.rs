//! The 77-feature observation vector.
//!
//! | index   | feature                                           | scale      |
//! |---------|---------------------------------------------------|------------|
//! | 0..50   | per level (ascending pressure): speed, bearing err | /30, /π    |
//! | 50      | altitude                                           | /21000     |
//! | 51      | ascent rate                                        | /10        |
//! | 52      | drag area                                          | /20        |
//! | 53      | envelope volume                                    | /100       |
//! | 54      | helium mols                                        | /200       |
//! | 55      | total mass                                         | /5         |
//! | 56      | sand mass                                          | /1         |
//! | 57      | wind speed at the balloon                          | /30        |
//! | 58, 59  | sin, cos of bearing error at the balloon           | 1          |
//! | 60      | distance to target (km)                            | /400       |
//! | 61, 62  | sin, cos of heading to target                      | 1          |
//! | 63, 64  | sin, cos of local time of day                      | 1          |
//! | 65      | sand fraction of initial                           | 1          |
//! | 66      | helium fraction of initial                         | 1          |
//! | 67      | previous reward                                    | 1          |
//! | 68..71  | altitudes at t-1, t-2, t-3                         | /21000     |
//! | 71..74  | ascent rates at t-1, t-2, t-3                      | /10        |
//! | 74..77  | float actions at t-1, t-2, t-3                     | 1          |
//!
//! Bearing error is the signed angle from the balloon-to-target direction to
//! the wind direction, wrapped to `(-π, π]`. At the target itself the heading
//! is defined as angle 0, i.e. `(sin, cos) = (0, 1)`.

use std::f64::consts::{PI, TAU};
use std::ops::Deref;

pub const OBS_LEN: usize = 77;
pub const WIND_LEVELS: usize = 25;
pub const HISTORY: usize = 3;

pub const SPEED_SCALE: f64 = 30.0;
pub const ANGLE_SCALE: f64 = PI;
pub const ALTITUDE_SCALE: f64 = 21_000.0;
pub const ASCENT_SCALE: f64 = 10.0;
pub const AREA_SCALE: f64 = 20.0;
pub const VOLUME_SCALE: f64 = 100.0;
pub const HELIUM_SCALE: f64 = 200.0;
pub const MASS_SCALE: f64 = 5.0;
pub const SAND_SCALE: f64 = 1.0;
pub const DISTANCE_SCALE: f64 = 400.0;

pub mod idx {
    pub const WIND: usize = 0;
    pub const ALTITUDE: usize = 50;
    pub const ASCENT: usize = 51;
    pub const AREA: usize = 52;
    pub const VOLUME: usize = 53;
    pub const HELIUM: usize = 54;
    pub const TOTAL_MASS: usize = 55;
    pub const SAND: usize = 56;
    pub const LOCAL_SPEED: usize = 57;
    pub const LOCAL_BEARING_SIN: usize = 58;
    pub const LOCAL_BEARING_COS: usize = 59;
    pub const DISTANCE: usize = 60;
    pub const HEADING_SIN: usize = 61;
    pub const HEADING_COS: usize = 62;
    pub const TIME_SIN: usize = 63;
    pub const TIME_COS: usize = 64;
    pub const SAND_FRACTION: usize = 65;
    pub const HELIUM_FRACTION: usize = 66;
    pub const PREV_REWARD: usize = 67;
    pub const ALTITUDE_HISTORY: usize = 68;
    pub const ASCENT_HISTORY: usize = 71;
    pub const FLOAT_HISTORY: usize = 74;
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Angle of the direction from the balloon to the target; 0 at the target.
pub fn heading_to_target(x_km: f64, y_km: f64) -> f64 {
    if x_km == 0.0 && y_km == 0.0 {
        0.0
    } else {
        (-y_km).atan2(-x_km)
    }
}

/// Signed angle from the target heading to the wind direction.
pub fn bearing_error(u: f64, v: f64, heading: f64) -> f64 {
    if u == 0.0 && v == 0.0 {
        return 0.0;
    }
    wrap_angle(v.atan2(u) - heading)
}

/// Raw (unscaled) quantities an observation is built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationInputs {
    /// (speed m/s, bearing error rad) per observation level.
    pub levels: [(f64, f64); WIND_LEVELS],
    pub altitude: f64,
    pub ascent_rate: f64,
    pub drag_area: f64,
    pub volume: f64,
    pub helium: f64,
    pub total_mass: f64,
    pub sand: f64,
    pub local_speed: f64,
    pub local_bearing: f64,
    pub distance_km: f64,
    pub heading: f64,
    pub hour_of_day: f64,
    pub sand_fraction: f64,
    pub helium_fraction: f64,
    pub previous_reward: f64,
    /// Most recent first.
    pub altitude_history: [f64; HISTORY],
    pub ascent_history: [f64; HISTORY],
    pub float_history: [f64; HISTORY],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    values: [f64; OBS_LEN],
}

impl Deref for Observation {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

impl Observation {
    pub fn from_values(values: [f64; OBS_LEN]) -> Self {
        Self { values }
    }

    pub fn zeros() -> Self {
        Self { values: [0.0; OBS_LEN] }
    }

    pub fn build(inp: &ObservationInputs) -> Self {
        let mut v = [0.0; OBS_LEN];
        for (i, &(speed, bearing)) in inp.levels.iter().enumerate() {
            v[idx::WIND + 2 * i] = speed / SPEED_SCALE;
            v[idx::WIND + 2 * i + 1] = bearing / ANGLE_SCALE;
        }
        v[idx::ALTITUDE] = inp.altitude / ALTITUDE_SCALE;
        v[idx::ASCENT] = inp.ascent_rate / ASCENT_SCALE;
        v[idx::AREA] = inp.drag_area / AREA_SCALE;
        v[idx::VOLUME] = inp.volume / VOLUME_SCALE;
        v[idx::HELIUM] = inp.helium / HELIUM_SCALE;
        v[idx::TOTAL_MASS] = inp.total_mass / MASS_SCALE;
        v[idx::SAND] = inp.sand / SAND_SCALE;
        v[idx::LOCAL_SPEED] = inp.local_speed / SPEED_SCALE;
        v[idx::LOCAL_BEARING_SIN] = inp.local_bearing.sin();
        v[idx::LOCAL_BEARING_COS] = inp.local_bearing.cos();
        v[idx::DISTANCE] = inp.distance_km / DISTANCE_SCALE;
        v[idx::HEADING_SIN] = inp.heading.sin();
        v[idx::HEADING_COS] = inp.heading.cos();
        let day_angle = TAU * inp.hour_of_day.rem_euclid(24.0) / 24.0;
        v[idx::TIME_SIN] = day_angle.sin();
        v[idx::TIME_COS] = day_angle.cos();
        v[idx::SAND_FRACTION] = inp.sand_fraction;
        v[idx::HELIUM_FRACTION] = inp.helium_fraction;
        v[idx::PREV_REWARD] = inp.previous_reward;
        for k in 0..HISTORY {
            v[idx::ALTITUDE_HISTORY + k] = inp.altitude_history[k] / ALTITUDE_SCALE;
            v[idx::ASCENT_HISTORY + k] = inp.ascent_history[k] / ASCENT_SCALE;
            v[idx::FLOAT_HISTORY + k] = inp.float_history[k];
        }
        // Non-finite inputs are zeroed so the vector stays finite.
        for x in v.iter_mut() {
            if !x.is_finite() {
                *x = 0.0;
            }
        }
        Self { values: v }
    }

    pub fn values(&self) -> &[f64; OBS_LEN] {
        &self.values
    }

    pub fn level_speed(&self, level: usize) -> f64 {
        self.values[idx::WIND + 2 * level] * SPEED_SCALE
    }

    pub fn level_bearing_error(&self, level: usize) -> f64 {
        self.values[idx::WIND + 2 * level + 1] * ANGLE_SCALE
    }

    pub fn altitude(&self) -> f64 {
        self.values[idx::ALTITUDE] * ALTITUDE_SCALE
    }

    pub fn ascent_rate(&self) -> f64 {
        self.values[idx::ASCENT] * ASCENT_SCALE
    }

    pub fn distance_km(&self) -> f64 {
        self.values[idx::DISTANCE] * DISTANCE_SCALE
    }

    pub fn heading(&self) -> (f64, f64) {
        (self.values[idx::HEADING_SIN], self.values[idx::HEADING_COS])
    }

    pub fn altitude_history(&self) -> [f64; HISTORY] {
        std::array::from_fn(|k| self.values[idx::ALTITUDE_HISTORY + k] * ALTITUDE_SCALE)
    }

    pub fn ascent_history(&self) -> [f64; HISTORY] {
        std::array::from_fn(|k| self.values[idx::ASCENT_HISTORY + k] * ASCENT_SCALE)
    }

    pub fn float_history(&self) -> [f64; HISTORY] {
        std::array::from_fn(|k| self.values[idx::FLOAT_HISTORY + k])
    }
}

/// Observation pressures, equally spaced and ascending.
pub fn observation_pressures(lo: f64, hi: f64) -> [f64; WIND_LEVELS] {
    std::array::from_fn(|i| lo + (hi - lo) * i as f64 / (WIND_LEVELS - 1) as f64)
}
