use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use super::{gradient_noise, GridPoint, NoiseSpec, WindError, WindGrid, WindVector};

/// A grid plus forecast-error noise, addressed in tangent-plane kilometres
/// relative to the grid centre.
#[derive(Debug)]
pub struct WindField {
    grid: Arc<WindGrid>,
    noise: NoiseSpec,
    pressure_clamps: AtomicU64,
}

impl Clone for WindField {
    fn clone(&self) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            noise: self.noise,
            pressure_clamps: AtomicU64::new(0),
        }
    }
}

impl WindField {
    pub fn new(grid: Arc<WindGrid>, noise: NoiseSpec) -> Result<Self, WindError> {
        noise.validate()?;
        Ok(Self { grid, noise, pressure_clamps: AtomicU64::new(0) })
    }

    pub fn grid(&self) -> &WindGrid {
        &self.grid
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    /// Number of queries whose pressure had to be clamped into the grid.
    pub fn pressure_clamp_count(&self) -> u64 {
        self.pressure_clamps.load(Ordering::Relaxed)
    }

    /// `grid + amplitude * (n_u, n_v)` where the noise seeds are `seed` and
    /// `seed ^ 1`. Noise coordinates are tangent-plane km from the grid centre.
    pub fn perturbed_sample(grid: &WindGrid, noise: &NoiseSpec, at: GridPoint) -> Result<WindVector, WindError> {
        let base = grid.quadrilinear_sample(at)?;
        if noise.amplitude == 0.0 {
            return Ok(base);
        }
        let (x, y) = grid.axes().project(at.lon, at.lat);
        let nu = gradient_noise(noise, x, y, at.pressure, at.time);
        let nv = gradient_noise(&noise.with_seed(noise.seed ^ 1), x, y, at.pressure, at.time);
        Ok(WindVector::new(base.u + noise.amplitude * nu, base.v + noise.amplitude * nv))
    }

    /// Wind at a target-relative position. Pressure is clamped into the grid
    /// (and counted); horizontal or time excursions are errors.
    pub fn sample(&self, x_km: f64, y_km: f64, pressure: f64, time_h: f64) -> Result<WindVector, WindError> {
        let axes = self.grid.axes();
        let (lon, lat) = axes.unproject(x_km, y_km);
        let (p_lo, p_hi) = axes.pressure_range();
        let clamped = pressure.clamp(p_lo, p_hi);
        if clamped != pressure {
            self.pressure_clamps.fetch_add(1, Ordering::Relaxed);
        }
        Self::perturbed_sample(&self.grid, &self.noise, GridPoint { lon, lat, pressure: clamped, time: time_h })
    }

    /// Whether a horizontal position and time are inside the grid.
    pub fn contains(&self, x_km: f64, y_km: f64, time_h: f64) -> bool {
        let axes = self.grid.axes();
        let (lon, lat) = axes.unproject(x_km, y_km);
        let (lon0, lon1) = axes.lon_range();
        let (lat0, lat1) = axes.lat_range();
        let (t0, t1) = axes.time_range();
        (lon0..=lon1).contains(&lon) && (lat0..=lat1).contains(&lat) && (t0..=t1).contains(&time_h)
    }
}
