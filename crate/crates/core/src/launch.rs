//! Launch configurations and the box they are searched over.

use std::fmt;

/// `(x0, y0, Δt)`: target-relative launch offsets in km and launch delay in
/// hours.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LaunchConfig {
    pub x_km: f64,
    pub y_km: f64,
    pub dt_h: f64,
}

impl LaunchConfig {
    pub fn new(x_km: f64, y_km: f64, dt_h: f64) -> Self {
        Self { x_km, y_km, dt_h }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x_km, self.y_km, self.dt_h]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl fmt::Display for LaunchConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} km, {} km, {} h)", self.x_km, self.y_km, self.dt_h)
    }
}

/// `|x0| <= x_max`, `|y0| <= y_max`, `0 <= Δt <= t_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub x_max: f64,
    pub y_max: f64,
    pub t_max: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Self { x_max: 400.0, y_max: 400.0, t_max: 24.0 }
    }
}

impl Bounds {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [("x_max", self.x_max), ("y_max", self.y_max), ("t_max", self.t_max)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    pub fn lower(&self) -> [f64; 3] {
        [-self.x_max, -self.y_max, 0.0]
    }

    pub fn upper(&self) -> [f64; 3] {
        [self.x_max, self.y_max, self.t_max]
    }

    /// Describes the first violated bound, if any.
    pub fn violation(&self, c: &LaunchConfig) -> Option<String> {
        if !(c.x_km.abs() <= self.x_max) {
            return Some(format!("|x0| = {} exceeds x_max = {}", c.x_km.abs(), self.x_max));
        }
        if !(c.y_km.abs() <= self.y_max) {
            return Some(format!("|y0| = {} exceeds y_max = {}", c.y_km.abs(), self.y_max));
        }
        if !(c.dt_h >= 0.0) {
            return Some(format!("launch delay {} h is negative", c.dt_h));
        }
        if !(c.dt_h <= self.t_max) {
            return Some(format!("launch delay {} h exceeds t_max = {}", c.dt_h, self.t_max));
        }
        None
    }

    pub fn contains(&self, c: &LaunchConfig) -> bool {
        self.violation(c).is_none()
    }

    pub fn clamp(&self, c: LaunchConfig) -> LaunchConfig {
        LaunchConfig {
            x_km: c.x_km.clamp(-self.x_max, self.x_max),
            y_km: c.y_km.clamp(-self.y_max, self.y_max),
            dt_h: c.dt_h.clamp(0.0, self.t_max),
        }
    }

    /// Maps into `[-1, 1] x [-1, 1] x [0, 1]`.
    pub fn normalize(&self, c: &LaunchConfig) -> [f64; 3] {
        [c.x_km / self.x_max, c.y_km / self.y_max, c.dt_h / self.t_max]
    }

    pub fn denormalize(&self, u: [f64; 3]) -> LaunchConfig {
        LaunchConfig::new(u[0] * self.x_max, u[1] * self.y_max, u[2] * self.t_max)
    }
}
