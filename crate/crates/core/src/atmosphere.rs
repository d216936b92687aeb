//! US Standard Atmosphere 1976 layer model.
//!
//! Temperature is piecewise linear in geometric altitude, pressure follows the
//! barometric relations for gradient and isothermal layers, and density comes
//! from the ideal-gas law. Supported altitudes are `[0, 47000]` m.

use thiserror::Error;

use crate::scalar::Scalar;

/// Universal gas constant, J/(mol K).
pub const GAS_CONSTANT: f64 = 8.31446;
/// Molar mass of dry air, kg/mol.
pub const MOLAR_MASS_AIR: f64 = 0.0289644;
/// Standard gravity, m/s².
pub const GRAVITY: f64 = 9.80665;

pub const SEA_LEVEL_TEMPERATURE: f64 = 288.15;
pub const SEA_LEVEL_PRESSURE: f64 = 101_325.0;
pub const MIN_ALTITUDE: f64 = 0.0;
pub const MAX_ALTITUDE: f64 = 47_000.0;

/// (base altitude m, lapse rate K/m, base temperature K) of the standard layers.
const STANDARD_LAYERS: [(f64, f64, f64); 7] = [
    (0.0, -0.0065, 288.15),
    (11_000.0, 0.0, 216.65),
    (20_000.0, 0.001, 216.65),
    (32_000.0, 0.0028, 228.65),
    (47_000.0, 0.0, 270.65),
    (51_000.0, -0.0028, 270.65),
    (71_000.0, -0.002, 214.65),
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AtmosphereError {
    #[error("altitude {altitude} m is below the supported minimum of {min} m")]
    BelowRange { altitude: f64, min: f64 },
    #[error("altitude {altitude} m is above the supported maximum of {max} m")]
    AboveRange { altitude: f64, max: f64 },
    #[error("pressure {pressure} Pa is outside the supported range [{min}, {max}] Pa")]
    PressureOutOfRange { pressure: f64, min: f64, max: f64 },
    #[error("lapse-rate scale must be finite and positive, got {0}")]
    InvalidLapseScale(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtmosphereLayer<T> {
    pub base_altitude: T,
    pub base_temperature: T,
    pub lapse_rate: T,
    pub base_pressure: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirProperties<T> {
    pub temperature: T,
    pub pressure: T,
    pub density: T,
}

/// Immutable layer table.
#[derive(Debug, Clone, PartialEq)]
pub struct AtmosphereModel<T> {
    layers: Vec<AtmosphereLayer<T>>,
}

impl<T: Scalar> Default for AtmosphereModel<T> {
    fn default() -> Self {
        Self::standard()
    }
}

impl<T: Scalar> AtmosphereModel<T> {
    pub fn standard() -> Self {
        Self::with_lapse_scale(1.0).expect("unit scale is valid")
    }

    /// Standard table with every lapse rate multiplied by `scale`. Base
    /// temperatures and pressures are rebuilt by continuity from sea level.
    pub fn with_lapse_scale(scale: f64) -> Result<Self, AtmosphereError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(AtmosphereError::InvalidLapseScale(scale));
        }
        let mut layers: Vec<AtmosphereLayer<T>> = Vec::with_capacity(STANDARD_LAYERS.len());
        let mut pressure = T::lit(SEA_LEVEL_PRESSURE);
        for &(base, lapse, table_temperature) in STANDARD_LAYERS.iter() {
            if let Some(prev) = layers.last() {
                pressure = prev.pressure_in_layer(T::lit(base));
            }
            // Sum of scaled lapse segments; the table value itself at unit
            // scale so the published constants come out exactly.
            let temperature = if scale == 1.0 {
                T::lit(table_temperature)
            } else {
                T::lit(SEA_LEVEL_TEMPERATURE + scale * (table_temperature - SEA_LEVEL_TEMPERATURE))
            };
            layers.push(AtmosphereLayer {
                base_altitude: T::lit(base),
                base_temperature: temperature,
                lapse_rate: T::lit(lapse * scale),
                base_pressure: pressure,
            });
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[AtmosphereLayer<T>] {
        &self.layers
    }

    fn check_range(&self, altitude: T) -> Result<(), AtmosphereError> {
        let h = altitude.as_f64();
        if !(h >= MIN_ALTITUDE) {
            return Err(AtmosphereError::BelowRange { altitude: h, min: MIN_ALTITUDE });
        }
        if h > MAX_ALTITUDE {
            return Err(AtmosphereError::AboveRange { altitude: h, max: MAX_ALTITUDE });
        }
        Ok(())
    }

    fn layer_for(&self, altitude: T) -> &AtmosphereLayer<T> {
        // Last layer whose base is at or below the altitude.
        self.layers
            .iter()
            .rev()
            .find(|layer| layer.base_altitude <= altitude)
            .unwrap_or(&self.layers[0])
    }

    pub fn temperature_at(&self, altitude: T) -> Result<T, AtmosphereError> {
        self.check_range(altitude)?;
        Ok(self.layer_for(altitude).temperature_in_layer(altitude))
    }

    pub fn pressure_at(&self, altitude: T) -> Result<T, AtmosphereError> {
        self.check_range(altitude)?;
        Ok(self.layer_for(altitude).pressure_in_layer(altitude))
    }

    pub fn density_at(&self, altitude: T) -> Result<T, AtmosphereError> {
        self.properties_at(altitude).map(|air| air.density)
    }

    pub fn properties_at(&self, altitude: T) -> Result<AirProperties<T>, AtmosphereError> {
        self.check_range(altitude)?;
        let layer = self.layer_for(altitude);
        let temperature = layer.temperature_in_layer(altitude);
        let pressure = layer.pressure_in_layer(altitude);
        Ok(AirProperties {
            temperature,
            pressure,
            density: ideal_gas_density(pressure, temperature),
        })
    }

    /// Inverse of [`pressure_at`](Self::pressure_at) on the supported range.
    pub fn altitude_at_pressure(&self, pressure: T) -> Result<T, AtmosphereError> {
        let top = self.pressure_at(T::lit(MAX_ALTITUDE))?;
        let bottom = self.layers[0].base_pressure;
        if !(pressure >= top && pressure <= bottom) {
            return Err(AtmosphereError::PressureOutOfRange {
                pressure: pressure.as_f64(),
                min: top.as_f64(),
                max: bottom.as_f64(),
            });
        }
        let layer = self
            .layers
            .iter()
            .rev()
            .find(|layer| layer.base_pressure >= pressure)
            .unwrap_or(&self.layers[0]);
        let g_m_over_r = T::lit(GRAVITY * MOLAR_MASS_AIR / GAS_CONSTANT);
        let altitude = if layer.lapse_rate == T::zero() {
            layer.base_altitude
                - layer.base_temperature / g_m_over_r * (pressure / layer.base_pressure).ln()
        } else {
            let exponent = -layer.lapse_rate / g_m_over_r;
            let temperature = layer.base_temperature * (pressure / layer.base_pressure).powf(exponent);
            layer.base_altitude + (temperature - layer.base_temperature) / layer.lapse_rate
        };
        Ok(altitude.max(T::zero()).min(T::lit(MAX_ALTITUDE)))
    }
}

impl<T: Scalar> AtmosphereLayer<T> {
    fn temperature_in_layer(&self, altitude: T) -> T {
        self.base_temperature + (altitude - self.base_altitude) * self.lapse_rate
    }

    fn pressure_in_layer(&self, altitude: T) -> T {
        let g_m = T::lit(GRAVITY * MOLAR_MASS_AIR);
        let r = T::lit(GAS_CONSTANT);
        if self.lapse_rate == T::zero() {
            self.base_pressure
                * (-g_m * (altitude - self.base_altitude) / (r * self.base_temperature)).exp()
        } else {
            let ratio = self.temperature_in_layer(altitude) / self.base_temperature;
            self.base_pressure * ratio.powf(-g_m / (r * self.lapse_rate))
        }
    }
}

/// ρ = P M_air / (R T).
#[inline]
pub fn ideal_gas_density<T: Scalar>(pressure: T, temperature: T) -> T {
    pressure * T::lit(MOLAR_MASS_AIR) / (T::lit(GAS_CONSTANT) * temperature)
}
