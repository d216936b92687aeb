//! Seeded 4-D lattice gradient noise used to perturb wind forecasts.

use super::WindError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub seed: u64,
    /// m/s
    pub amplitude: f64,
    pub spatial_scale_km: f64,
    pub pressure_scale_pa: f64,
    pub time_scale_h: f64,
}

impl NoiseSpec {
    pub fn silent(seed: u64) -> Self {
        Self {
            seed,
            amplitude: 0.0,
            spatial_scale_km: 200.0,
            pressure_scale_pa: 3000.0,
            time_scale_h: 12.0,
        }
    }

    pub fn validate(&self) -> Result<(), WindError> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(WindError::InvalidSpec(format!("noise amplitude must be >= 0, got {}", self.amplitude)));
        }
        for (name, scale) in [
            ("spatial_scale_km", self.spatial_scale_km),
            ("pressure_scale_pa", self.pressure_scale_pa),
            ("time_scale_h", self.time_scale_h),
        ] {
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(WindError::InvalidSpec(format!("noise {name} must be positive, got {scale}")));
            }
        }
        Ok(())
    }

    /// Same scales, different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn corner_hash(seed: u64, corner: [i64; 4]) -> u64 {
    let mut h = mix(seed ^ 0x9e37_79b9_7f4a_7c15);
    for c in corner {
        h = mix(h ^ (c as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    }
    h
}

/// One of the 32 edge-midpoint gradients of the 4-cube, dotted with `d`.
#[inline]
fn gradient_dot(hash: u64, d: [f64; 4]) -> f64 {
    let h = (hash >> 32) as usize & 31;
    let zero_axis = h >> 3;
    let mut sum = 0.0;
    let mut bit = 0;
    for (axis, &component) in d.iter().enumerate() {
        if axis == zero_axis {
            continue;
        }
        sum += if (h >> bit) & 1 == 0 { component } else { -component };
        bit += 1;
    }
    sum
}

#[inline]
fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// Raw lattice noise at already-scaled coordinates.
pub(crate) fn lattice_noise(seed: u64, p: [f64; 4]) -> f64 {
    let cell = p.map(|c| c.floor());
    let frac = [p[0] - cell[0], p[1] - cell[1], p[2] - cell[2], p[3] - cell[3]];
    let base = cell.map(|c| c as i64);
    let w = frac.map(fade);

    let mut total = 0.0;
    for corner in 0..16usize {
        let mut weight = 1.0;
        let mut offset = [0.0; 4];
        let mut lattice = base;
        for axis in 0..4 {
            if (corner >> axis) & 1 == 1 {
                weight *= w[axis];
                offset[axis] = frac[axis] - 1.0;
                lattice[axis] += 1;
            } else {
                weight *= 1.0 - w[axis];
                offset[axis] = frac[axis];
            }
        }
        if weight == 0.0 {
            continue;
        }
        total += weight * gradient_dot(corner_hash(seed, lattice), offset);
    }
    // Edge gradients have norm sqrt(3); unit-gradient lattice noise in 4-D
    // is bounded by sqrt(4)/2 = 1.
    (total / 3f64.sqrt()).clamp(-1.0, 1.0)
}

/// Dimensionless noise in `[-1, 1]`, zero on the scaled integer lattice.
pub fn gradient_noise(spec: &NoiseSpec, x_km: f64, y_km: f64, pressure: f64, time_h: f64) -> f64 {
    lattice_noise(
        spec.seed,
        [
            x_km / spec.spatial_scale_km,
            y_km / spec.spatial_scale_km,
            pressure / spec.pressure_scale_pa,
            time_h / spec.time_scale_h,
        ],
    )
}
