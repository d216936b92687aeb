//! Gridded 4-D wind data over (longitude, latitude, pressure, time).
//!
//! [`WindGrid`] holds `u`/`v` components on a regular lon/lat/time lattice
//! with an irregular pressure axis and interpolates them quadrilinearly.
//! [`WindField`] wraps a grid with a forecast-error noise model and the local
//! tangent-plane projection used by the simulator.

mod field;
mod grid;
mod io;
mod noise;
mod synth;

use thiserror::Error;

pub use field::WindField;
pub use grid::{GridAxes, GridPoint, WindGrid, WindVector};
pub use io::{read_grid, read_grid_from, write_grid, write_grid_to};
pub use noise::{gradient_noise, NoiseSpec};
pub use synth::{synthesize_grid, SyntheticWindSpec};

/// Kilometres per degree of latitude on the tangent plane.
pub const KM_PER_DEGREE: f64 = 111.32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Longitude,
    Latitude,
    Pressure,
    Time,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::Longitude => "longitude",
            Axis::Latitude => "latitude",
            Axis::Pressure => "pressure",
            Axis::Time => "time",
        })
    }
}

#[derive(Debug, Error)]
pub enum WindError {
    #[error("{axis} coordinate {value} outside grid range [{min}, {max}]")]
    OutOfBounds { axis: Axis, value: f64, min: f64, max: f64 },
    #[error("invalid grid axes: {0}")]
    InvalidAxes(String),
    #[error("invalid wind spec: {0}")]
    InvalidSpec(String),
    #[error("grid file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("grid file i/o: {0}")]
    Io(#[from] std::io::Error),
}
