use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{gradient_noise, GridAxes, NoiseSpec, WindError, WindGrid, WindVector};

/// Parameters of a seeded synthetic wind day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticWindSpec {
    pub seed: u64,
    /// m/s
    pub base_speed: f64,
    /// rad/Pa; direction rotates with pressure.
    pub direction_twist: f64,
    /// rad/h
    pub time_drift: f64,
    pub noise: NoiseSpec,
}

impl SyntheticWindSpec {
    pub fn validate(&self) -> Result<(), WindError> {
        if !(self.base_speed >= 0.0 && self.base_speed.is_finite()) {
            return Err(WindError::InvalidSpec(format!("base_speed must be >= 0, got {}", self.base_speed)));
        }
        if !self.direction_twist.is_finite() || !self.time_drift.is_finite() {
            return Err(WindError::InvalidSpec("twist and drift must be finite".into()));
        }
        self.noise.validate()
    }

    /// Direction at zero twist and drift, drawn from the seed.
    pub fn base_direction(&self) -> f64 {
        ChaCha8Rng::seed_from_u64(self.seed).gen_range(0.0..TAU)
    }
}

/// Wind whose direction is `θ0 + twist (p - p_mid) + drift t` and whose speed
/// is modulated by `1 + 0.3 n` with `n` the spec's gradient noise (zero when
/// the noise amplitude is zero).
pub fn synthesize_grid(spec: &SyntheticWindSpec, axes: GridAxes) -> Result<WindGrid, WindError> {
    spec.validate()?;
    axes.validate()?;
    let theta0 = spec.base_direction();
    let (p_lo, p_hi) = axes.pressure_range();
    let p_mid = 0.5 * (p_lo + p_hi);
    let t0 = axes.time_origin;
    let projection = axes.clone();
    WindGrid::from_fn(axes, |at| {
        let theta = theta0 + spec.direction_twist * (at.pressure - p_mid) + spec.time_drift * (at.time - t0);
        let modulation = if spec.noise.amplitude > 0.0 {
            let (x, y) = projection.project(at.lon, at.lat);
            gradient_noise(&spec.noise, x, y, at.pressure, at.time)
        } else {
            0.0
        };
        let speed = spec.base_speed * (1.0 + 0.3 * modulation);
        WindVector::new(speed * theta.cos(), speed * theta.sin())
    })
}
