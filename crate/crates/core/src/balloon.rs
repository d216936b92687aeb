//! Latex balloon point-mass dynamics.
//!
//! Forces are buoyancy `ρ V g`, quadratic drag against the air-relative
//! velocity and weight of payload, helium and sand. The envelope follows the
//! ideal-gas law at ambient temperature, so its volume is `n R T / P` and its
//! cross-section is that of the equivalent sphere.
//!
//! Altitude control works by inverting the force balance at a desired ascent
//! rate: dropping sand ([`ballast_for_ascent`]) or venting helium
//! ([`vent_for_ascent`]). Both resources only ever decrease.

use std::f64::consts::PI;

use thiserror::Error;

use crate::atmosphere::{AirProperties, AtmosphereError, AtmosphereModel, GAS_CONSTANT, GRAVITY, MOLAR_MASS_AIR};
use crate::scalar::Scalar;
use crate::windfield::WindError;

pub const MOLAR_MASS_HELIUM: f64 = 0.0040026;

#[derive(Debug, Error)]
pub enum BalloonError {
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Atmosphere(#[from] AtmosphereError),
    #[error(transparent)]
    Wind(#[from] WindError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalloonParams<T> {
    /// Payload plus envelope, kg.
    pub payload_mass: T,
    pub drag_coefficient: T,
    pub molar_mass_helium: T,
    pub molar_mass_air: T,
    /// m³
    pub burst_volume: T,
    /// mol per decision step
    pub max_vent_rate: T,
    /// kg per decision step
    pub max_ballast_rate: T,
}

impl<T: Scalar> BalloonParams<T> {
    pub fn validate(&self) -> Result<(), BalloonError> {
        let fields = [
            ("payload_mass", self.payload_mass),
            ("drag_coefficient", self.drag_coefficient),
            ("molar_mass_helium", self.molar_mass_helium),
            ("molar_mass_air", self.molar_mass_air),
            ("burst_volume", self.burst_volume),
            ("max_vent_rate", self.max_vent_rate),
            ("max_ballast_rate", self.max_ballast_rate),
        ];
        for (name, value) in fields {
            if !(value > T::zero() && value.is_finite()) {
                return Err(BalloonError::Domain(format!("{name} must be positive, got {value}")));
            }
        }
        Ok(())
    }
}

/// Kinematic and resource state. Horizontal position is in km relative to
/// the target; everything else is SI.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BalloonState<T> {
    pub x: T,
    pub y: T,
    pub h: T,
    pub h_dot: T,
    pub vx: T,
    pub vy: T,
    /// Helium, mol.
    pub n_h: T,
    /// Sand, kg.
    pub m_s: T,
    /// Seconds since launch.
    pub t: T,
}

impl<T: Scalar> BalloonState<T> {
    pub fn total_mass(&self, params: &BalloonParams<T>) -> T {
        params.payload_mass + self.n_h * params.molar_mass_helium + self.m_s
    }

    /// Distance to the target, km.
    pub fn distance(&self) -> T {
        self.x.hypot(self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeGeometry<T> {
    pub volume: T,
    pub drag_area: T,
}

/// V = n R T / P.
pub fn envelope_volume<T: Scalar>(n_h: T, temperature: T, pressure: T) -> Result<T, BalloonError> {
    if !(temperature > T::zero()) || !(pressure > T::zero()) {
        return Err(BalloonError::Domain(format!(
            "temperature and pressure must be positive, got T={temperature} P={pressure}"
        )));
    }
    if !(n_h >= T::zero()) {
        return Err(BalloonError::Domain(format!("helium amount must be >= 0, got {n_h}")));
    }
    Ok(n_h * T::lit(GAS_CONSTANT) * temperature / pressure)
}

/// A = π (3V / 4π)^(2/3).
pub fn drag_area<T: Scalar>(volume: T) -> Result<T, BalloonError> {
    if !(volume >= T::zero()) {
        return Err(BalloonError::Domain(format!("volume must be >= 0, got {volume}")));
    }
    let pi = T::lit(PI);
    Ok(pi * (T::lit(3.0) * volume / (T::lit(4.0) * pi)).powf(T::lit(2.0 / 3.0)))
}

pub fn envelope_geometry<T: Scalar>(n_h: T, air: &AirProperties<T>) -> Result<EnvelopeGeometry<T>, BalloonError> {
    let volume = envelope_volume(n_h, air.temperature, air.pressure)?;
    Ok(EnvelopeGeometry { volume, drag_area: drag_area(volume)? })
}

/// Acceleration `(ax, ay, az)` in m/s² for an air-relative velocity
/// `(vx - u, vy - v, h_dot)`.
pub fn acceleration<T: Scalar>(
    state: &BalloonState<T>,
    wind: (T, T),
    air: &AirProperties<T>,
    params: &BalloonParams<T>,
) -> Result<[T; 3], BalloonError> {
    let geometry = envelope_geometry(state.n_h, air)?;
    let mass = state.total_mass(params);
    let g = T::lit(GRAVITY);
    let rel = [state.vx - wind.0, state.vy - wind.1, state.h_dot];
    let speed = (rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2]).sqrt();
    let drag = T::lit(0.5) * air.density * params.drag_coefficient * geometry.drag_area * speed;
    let lift = air.density * geometry.volume * g;
    Ok([
        -drag * rel[0] / mass,
        -drag * rel[1] / mass,
        (lift - drag * rel[2] - mass * g) / mass,
    ])
}

/// Supplies horizontal wind to the integrator.
pub trait WindSource<T> {
    fn wind_at(&self, x_km: T, y_km: T, pressure: T, t_s: T) -> Result<(T, T), WindError>;
}

impl<T, F> WindSource<T> for F
where
    F: Fn(T, T, T, T) -> Result<(T, T), WindError>,
{
    fn wind_at(&self, x_km: T, y_km: T, pressure: T, t_s: T) -> Result<(T, T), WindError> {
        self(x_km, y_km, pressure, t_s)
    }
}

/// Still air everywhere.
#[derive(Debug, Clone, Copy, Default)]
pub struct CalmWind;

impl<T: Scalar> WindSource<T> for CalmWind {
    fn wind_at(&self, _: T, _: T, _: T, _: T) -> Result<(T, T), WindError> {
        Ok((T::zero(), T::zero()))
    }
}

/// (x km, y km, h, vx, vy, h_dot)
type Kinematics<T> = [T; 6];

fn derivative<T: Scalar>(
    k: &Kinematics<T>,
    t: T,
    base: &BalloonState<T>,
    wind: &impl WindSource<T>,
    atmosphere: &AtmosphereModel<T>,
    params: &BalloonParams<T>,
) -> Result<Kinematics<T>, BalloonError> {
    let air = atmosphere.properties_at(k[2])?;
    let w = wind.wind_at(k[0], k[1], air.pressure, t)?;
    let state = BalloonState { x: k[0], y: k[1], h: k[2], vx: k[3], vy: k[4], h_dot: k[5], t, ..*base };
    let a = acceleration(&state, w, &air, params)?;
    let per_km = T::lit(1e-3);
    Ok([k[3] * per_km, k[4] * per_km, k[5], a[0], a[1], a[2]])
}

fn rk4_with_first_stage<T: Scalar>(
    state: &BalloonState<T>,
    k1: &Kinematics<T>,
    wind: &impl WindSource<T>,
    atmosphere: &AtmosphereModel<T>,
    params: &BalloonParams<T>,
    dt: T,
) -> Result<BalloonState<T>, BalloonError> {
    let y0: Kinematics<T> = [state.x, state.y, state.h, state.vx, state.vy, state.h_dot];
    let half = dt * T::lit(0.5);
    let axpy = |y: &Kinematics<T>, k: &Kinematics<T>, s: T| -> Kinematics<T> {
        std::array::from_fn(|i| y[i] + k[i] * s)
    };
    let k2 = derivative(&axpy(&y0, k1, half), state.t + half, state, wind, atmosphere, params)?;
    let k3 = derivative(&axpy(&y0, &k2, half), state.t + half, state, wind, atmosphere, params)?;
    let k4 = derivative(&axpy(&y0, &k3, dt), state.t + dt, state, wind, atmosphere, params)?;
    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    let y1: Kinematics<T> = std::array::from_fn(|i| y0[i] + sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]));
    Ok(BalloonState {
        x: y1[0],
        y: y1[1],
        h: y1[2],
        vx: y1[3],
        vy: y1[4],
        h_dot: y1[5],
        t: state.t + dt,
        ..*state
    })
}

/// One classical Runge-Kutta step of length `dt` seconds. Resources are
/// carried through unchanged.
pub fn integrate_step<T: Scalar>(
    state: &BalloonState<T>,
    wind: &impl WindSource<T>,
    atmosphere: &AtmosphereModel<T>,
    params: &BalloonParams<T>,
    dt: T,
) -> Result<BalloonState<T>, BalloonError> {
    if !(dt > T::zero()) {
        return Err(BalloonError::Domain(format!("time step must be positive, got {dt}")));
    }
    let y0: Kinematics<T> = [state.x, state.y, state.h, state.vx, state.vy, state.h_dot];
    let k1 = derivative(&y0, state.t, state, wind, atmosphere, params)?;
    rk4_with_first_stage(state, &k1, wind, atmosphere, params, dt)
}

/// Largest step for which `rate * step` stays at this bound. Quadratic drag
/// relaxes the air-relative velocity at roughly `rate = ρ c_d A |v| / m`,
/// which makes fixed 10 s steps unstable at balloon scales.
const STIFFNESS_BOUND: f64 = 1.0;

/// Integrates over `duration` seconds with classical RK4 sub-steps no longer
/// than `max_step`, shortened further wherever drag is stiff.
pub fn advance<T: Scalar>(
    state: &BalloonState<T>,
    wind: &impl WindSource<T>,
    atmosphere: &AtmosphereModel<T>,
    params: &BalloonParams<T>,
    duration: T,
    max_step: T,
) -> Result<BalloonState<T>, BalloonError> {
    if !(duration > T::zero()) || !(max_step > T::zero()) {
        return Err(BalloonError::Domain("duration and step must be positive".into()));
    }
    let end = state.t + duration;
    let mut current = *state;
    let min_step = max_step * T::lit(1e-3);
    while end - current.t > min_step * T::lit(1e-3) {
        let air = atmosphere.properties_at(current.h)?;
        let w = wind.wind_at(current.x, current.y, air.pressure, current.t)?;
        let a = acceleration(&current, w, &air, params)?;
        let k1: Kinematics<T> = [current.vx * T::lit(1e-3), current.vy * T::lit(1e-3), current.h_dot, a[0], a[1], a[2]];

        let geometry = envelope_geometry(current.n_h, &air)?;
        let rel = [current.vx - w.0, current.vy - w.1, current.h_dot];
        let rel_speed = (rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2]).sqrt();
        // Velocities head for the terminal speed set by the net static force,
        // so the rate is taken at whichever of the two speeds is larger.
        let mass = current.total_mass(params);
        let drag_scale = air.density * params.drag_coefficient * geometry.drag_area;
        let static_force = (air.density * geometry.volume - mass).abs() * T::lit(GRAVITY);
        let terminal = (T::lit(2.0) * static_force / drag_scale).sqrt();
        let rate = drag_scale * rel_speed.max(terminal) / mass;

        let remaining = end - current.t;
        let stable = if rate > T::zero() { T::lit(STIFFNESS_BOUND) / rate } else { max_step };
        let mut step = max_step.min(stable).max(min_step);
        if step >= remaining {
            step = remaining;
        } else {
            // Equal pieces over what is left.
            let pieces = (remaining / step).ceil();
            step = remaining / pieces;
        }
        current = rk4_with_first_stage(&current, &k1, wind, atmosphere, params, step)?;
    }
    current.t = end;
    Ok(current)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallastDecision<T> {
    /// Sand mass that would balance forces at the desired rate (may be
    /// negative when unreachable).
    pub target_sand: T,
    /// Sand actually dropped this step.
    pub dropped: T,
}

/// `m_s,calc = ρV − ρ c_d A |ḣ_d| ḣ_d / (2g) − m_p − m_h`; the drop is
/// clamped to `[0, max_ballast_rate]` and to the sand on board.
pub fn ballast_for_ascent<T: Scalar>(
    desired_rate: T,
    state: &BalloonState<T>,
    air: &AirProperties<T>,
    params: &BalloonParams<T>,
) -> Result<BallastDecision<T>, BalloonError> {
    let geometry = envelope_geometry(state.n_h, air)?;
    let g = T::lit(GRAVITY);
    let helium = state.n_h * params.molar_mass_helium;
    let drag_mass =
        air.density * params.drag_coefficient * geometry.drag_area * desired_rate.abs() * desired_rate / (T::lit(2.0) * g);
    let target_sand = air.density * geometry.volume - drag_mass - params.payload_mass - helium;
    let dropped = (state.m_s - target_sand)
        .max(T::zero())
        .min(params.max_ballast_rate)
        .min(state.m_s);
    Ok(BallastDecision { target_sand, dropped })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VentDecision<T> {
    /// Helium amount that balances forces at the desired rate.
    pub target_mols: T,
    pub vented: T,
    /// No root was found and the vent was saturated.
    pub saturated: bool,
}

/// Net upward force at the desired rate if the envelope held `n` mols:
/// `g(ρRT/P − M_he) n − ½ρ|ḣ_d|ḣ_d c_d π(3RT/4πP)^(2/3) n^(2/3) − (m_p + m_s) g`.
pub fn vent_residual<T: Scalar>(
    n: T,
    desired_rate: T,
    sand: T,
    air: &AirProperties<T>,
    params: &BalloonParams<T>,
) -> T {
    let g = T::lit(GRAVITY);
    let pi = T::lit(PI);
    let molar_volume = T::lit(GAS_CONSTANT) * air.temperature / air.pressure;
    let lift = g * (air.density * molar_volume - params.molar_mass_helium) * n;
    let area_coeff = pi * (T::lit(3.0) * molar_volume / (T::lit(4.0) * pi)).powf(T::lit(2.0 / 3.0));
    let drag = T::lit(0.5) * air.density * desired_rate.abs() * desired_rate * params.drag_coefficient * area_coeff
        * n.powf(T::lit(2.0 / 3.0));
    lift - drag - (params.payload_mass + sand) * g
}

/// Helium amount whose force balance gives `desired_rate`, by bisection on
/// `(0, upper]`. The upper end starts at `initial_upper` and doubles until
/// the residual turns positive. `None` if no bracket is found.
pub fn balancing_mols<T: Scalar>(
    desired_rate: T,
    sand: T,
    initial_upper: T,
    air: &AirProperties<T>,
    params: &BalloonParams<T>,
) -> Option<T> {
    let weight = (params.payload_mass + sand) * T::lit(GRAVITY);
    let tolerance = T::lit(1e-6) * weight;
    let f = |n: T| vent_residual(n, desired_rate, sand, air, params);

    let mut hi = initial_upper.max(T::lit(1e-6));
    let mut doublings = 0;
    while f(hi) < T::zero() {
        hi = hi * T::lit(2.0);
        doublings += 1;
        if doublings > 64 || !hi.is_finite() {
            return None;
        }
    }
    let mut lo = T::zero();
    let mut mid = hi;
    for _ in 0..300 {
        mid = T::lit(0.5) * (lo + hi);
        let r = f(mid);
        if r.abs() <= tolerance {
            return Some(mid);
        }
        if r < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (f(mid).abs() <= tolerance).then_some(mid)
}

/// Helium to vent so the balloon settles at `desired_rate`; clamped to
/// `[0, max_vent_rate]` and never more than is on board.
pub fn vent_for_ascent<T: Scalar>(
    desired_rate: T,
    state: &BalloonState<T>,
    air: &AirProperties<T>,
    params: &BalloonParams<T>,
) -> VentDecision<T> {
    match balancing_mols(desired_rate, state.m_s, state.n_h, air, params) {
        Some(target_mols) => VentDecision {
            target_mols,
            vented: (state.n_h - target_mols).max(T::zero()).min(params.max_vent_rate),
            saturated: false,
        },
        None => VentDecision {
            target_mols: T::zero(),
            vented: params.max_vent_rate.min(state.n_h),
            saturated: true,
        },
    }
}

/// Free-standing balloon description that resolves to parameters plus an
/// initial resource load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalloonConfig {
    pub payload_mass: f64,
    pub drag_coefficient: f64,
    pub initial_sand: f64,
    /// Ascent rate at sea level that fixes the initial helium, m/s.
    pub free_lift_rate: f64,
    /// Altitude at which the initial envelope reaches burst volume, m.
    pub burst_altitude: f64,
    pub max_vent_rate: f64,
    pub max_ballast_rate: f64,
}

impl Default for BalloonConfig {
    fn default() -> Self {
        Self {
            payload_mass: 1.5,
            drag_coefficient: 0.47,
            initial_sand: 0.5,
            free_lift_rate: 4.0,
            burst_altitude: 22_000.0,
            max_vent_rate: 5.0,
            max_ballast_rate: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedBalloon<T> {
    pub params: BalloonParams<T>,
    pub initial_helium: T,
    pub initial_sand: T,
}

impl BalloonConfig {
    pub fn resolve<T: Scalar>(&self, atmosphere: &AtmosphereModel<T>) -> Result<ResolvedBalloon<T>, BalloonError> {
        if !(self.initial_sand >= 0.0) {
            return Err(BalloonError::Domain(format!("initial sand must be >= 0, got {}", self.initial_sand)));
        }
        let mut params = BalloonParams {
            payload_mass: T::lit(self.payload_mass),
            drag_coefficient: T::lit(self.drag_coefficient),
            molar_mass_helium: T::lit(MOLAR_MASS_HELIUM),
            molar_mass_air: T::lit(MOLAR_MASS_AIR),
            burst_volume: T::one(),
            max_vent_rate: T::lit(self.max_vent_rate),
            max_ballast_rate: T::lit(self.max_ballast_rate),
        };
        params.validate()?;
        let sand = T::lit(self.initial_sand);
        let sea_level = atmosphere.properties_at(T::zero())?;
        let helium = balancing_mols(T::lit(self.free_lift_rate), sand, T::lit(100.0), &sea_level, &params)
            .ok_or_else(|| BalloonError::Domain("no helium load reaches the requested free lift".into()))?;
        let ceiling = atmosphere.properties_at(T::lit(self.burst_altitude))?;
        params.burst_volume = envelope_volume(helium, ceiling.temperature, ceiling.pressure)?;
        params.validate()?;
        Ok(ResolvedBalloon { params, initial_helium: helium, initial_sand: sand })
    }
}
