/// Normalised controller output, each component in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Action {
    pub u: [f64; 3],
}

impl Action {
    pub fn new(u0: f64, u1: f64, u2: f64) -> Self {
        Self { u: [u0, u1, u2] }
    }

    /// Components clamped into `[-1, 1]`; NaN becomes 0.
    pub fn clamped(&self) -> Self {
        Self { u: self.u.map(|c| if c.is_nan() { 0.0 } else { c.clamp(-1.0, 1.0) }) }
    }
}

/// Decoded action: desired altitude (m), time factor and float flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodedAction {
    pub altitude: f64,
    pub time_factor: f64,
    pub float_flag: f64,
}

impl DecodedAction {
    /// Float actions (`a2 > 0`) freeze the ascent rate and spend nothing.
    pub fn is_float(&self) -> bool {
        self.float_flag > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionRanges {
    pub altitude: (f64, f64),
    pub time_factor: (f64, f64),
}

impl Default for ActionRanges {
    fn default() -> Self {
        Self { altitude: (14_000.0, 21_000.0), time_factor: (1.0, 5.0) }
    }
}

fn affine(u: f64, (lo, hi): (f64, f64)) -> f64 {
    lo + (u + 1.0) / 2.0 * (hi - lo)
}

pub fn decode_action(action: &Action, ranges: &ActionRanges) -> DecodedAction {
    let u = action.clamped().u;
    DecodedAction {
        altitude: affine(u[0], ranges.altitude),
        time_factor: affine(u[1], ranges.time_factor),
        float_flag: u[2],
    }
}

/// Inverse of the altitude decoding, clamped to `[-1, 1]`.
pub fn encode_altitude(altitude: f64, ranges: &ActionRanges) -> f64 {
    let (lo, hi) = ranges.altitude;
    (2.0 * (altitude - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0)
}

/// `(a0 - h) / (a1 T)` unless the float flag is positive, in which case 0.
pub fn desired_ascent_rate(decoded: &DecodedAction, altitude: f64, period_s: f64) -> f64 {
    if decoded.is_float() {
        0.0
    } else {
        (decoded.altitude - altitude) / (decoded.time_factor * period_s)
    }
}
