use super::{Axis, WindError, KM_PER_DEGREE};

/// Horizontal wind in m/s; `u` eastward, `v` northward.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WindVector {
    pub u: f64,
    pub v: f64,
}

impl WindVector {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn speed(&self) -> f64 {
        self.u.hypot(self.v)
    }
}

/// A query location in grid coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub lon: f64,
    pub lat: f64,
    /// Pa
    pub pressure: f64,
    /// hours
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridAxes {
    pub lon_origin: f64,
    pub lat_origin: f64,
    pub lon_step: f64,
    pub lat_step: f64,
    pub nlon: usize,
    pub nlat: usize,
    pub time_origin: f64,
    pub time_step: f64,
    pub nt: usize,
    /// Strictly ascending, Pa.
    pub pressure_levels: Vec<f64>,
}

pub const MIN_GRID_PRESSURE: f64 = 2000.0;
pub const MAX_GRID_PRESSURE: f64 = 17_500.0;

impl GridAxes {
    /// Axes centred on `(lon_c, lat_c)` with `n` nodes per horizontal axis,
    /// starting at time 0.
    pub fn centered(
        lon_c: f64,
        lat_c: f64,
        step_deg: f64,
        n_horizontal: usize,
        time_step: f64,
        nt: usize,
        pressure_levels: Vec<f64>,
    ) -> Self {
        let half = (n_horizontal as f64 - 1.0) / 2.0 * step_deg;
        Self {
            lon_origin: lon_c - half,
            lat_origin: lat_c - half,
            lon_step: step_deg,
            lat_step: step_deg,
            nlon: n_horizontal,
            nlat: n_horizontal,
            time_origin: 0.0,
            time_step,
            nt,
            pressure_levels,
        }
    }

    pub fn validate(&self) -> Result<(), WindError> {
        let bad = |msg: String| Err(WindError::InvalidAxes(msg));
        for (name, step) in [
            ("lon_step", self.lon_step),
            ("lat_step", self.lat_step),
            ("time_step", self.time_step),
        ] {
            if !(step.is_finite() && step > 0.0) {
                return bad(format!("{name} must be positive, got {step}"));
            }
        }
        for (name, origin) in [
            ("lon_origin", self.lon_origin),
            ("lat_origin", self.lat_origin),
            ("time_origin", self.time_origin),
        ] {
            if !origin.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        for (name, count) in [
            ("nlon", self.nlon),
            ("nlat", self.nlat),
            ("nt", self.nt),
            ("np", self.pressure_levels.len()),
        ] {
            if count < 2 {
                return bad(format!("{name} must be at least 2, got {count}"));
            }
        }
        if self.pressure_levels.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("pressure levels must be strictly ascending".into());
        }
        let (lo, hi) = (self.pressure_levels[0], self.pressure_levels[self.pressure_levels.len() - 1]);
        if lo < MIN_GRID_PRESSURE || hi > MAX_GRID_PRESSURE {
            return bad(format!(
                "pressure levels must lie within [{MIN_GRID_PRESSURE}, {MAX_GRID_PRESSURE}] Pa"
            ));
        }
        Ok(())
    }

    pub fn np(&self) -> usize {
        self.pressure_levels.len()
    }

    pub fn node_count(&self) -> usize {
        self.nt * self.np() * self.nlat * self.nlon
    }

    pub fn lon_at(&self, i: usize) -> f64 {
        self.lon_origin + i as f64 * self.lon_step
    }

    pub fn lat_at(&self, j: usize) -> f64 {
        self.lat_origin + j as f64 * self.lat_step
    }

    pub fn time_at(&self, k: usize) -> f64 {
        self.time_origin + k as f64 * self.time_step
    }

    pub fn lon_range(&self) -> (f64, f64) {
        (self.lon_origin, self.lon_at(self.nlon - 1))
    }

    pub fn lat_range(&self) -> (f64, f64) {
        (self.lat_origin, self.lat_at(self.nlat - 1))
    }

    pub fn time_range(&self) -> (f64, f64) {
        (self.time_origin, self.time_at(self.nt - 1))
    }

    pub fn pressure_range(&self) -> (f64, f64) {
        (self.pressure_levels[0], self.pressure_levels[self.np() - 1])
    }

    /// Grid centre, used as the tangent-plane origin.
    pub fn center(&self) -> (f64, f64) {
        let (lon0, lon1) = self.lon_range();
        let (lat0, lat1) = self.lat_range();
        (0.5 * (lon0 + lon1), 0.5 * (lat0 + lat1))
    }

    /// Degrees to tangent-plane kilometres relative to the grid centre.
    pub fn project(&self, lon: f64, lat: f64) -> (f64, f64) {
        let (lon_c, lat_c) = self.center();
        (
            (lon - lon_c) * KM_PER_DEGREE * lat_c.to_radians().cos(),
            (lat - lat_c) * KM_PER_DEGREE,
        )
    }

    pub fn unproject(&self, x_km: f64, y_km: f64) -> (f64, f64) {
        let (lon_c, lat_c) = self.center();
        (
            lon_c + x_km / (KM_PER_DEGREE * lat_c.to_radians().cos()),
            lat_c + y_km / KM_PER_DEGREE,
        )
    }

    #[inline]
    pub(crate) fn index(&self, it: usize, ip: usize, ilat: usize, ilon: usize) -> usize {
        ((it * self.np() + ip) * self.nlat + ilat) * self.nlon + ilon
    }
}

/// Cell index and fractional offset along one axis.
#[inline]
fn locate_regular(axis: Axis, value: f64, origin: f64, step: f64, n: usize) -> Result<(usize, f64), WindError> {
    let max = origin + (n - 1) as f64 * step;
    let mut f = (value - origin) / step;
    let rounded = f.round();
    if (f - rounded).abs() < 1e-9 {
        f = rounded;
    }
    if !(f >= 0.0 && f <= (n - 1) as f64) {
        return Err(WindError::OutOfBounds { axis, value, min: origin, max });
    }
    let i = (f.floor() as usize).min(n - 2);
    Ok((i, f - i as f64))
}

#[inline]
fn locate_levels(value: f64, levels: &[f64]) -> Result<(usize, f64), WindError> {
    let n = levels.len();
    if !(value >= levels[0] && value <= levels[n - 1]) {
        return Err(WindError::OutOfBounds {
            axis: Axis::Pressure,
            value,
            min: levels[0],
            max: levels[n - 1],
        });
    }
    let upper = levels.partition_point(|&p| p <= value).clamp(1, n - 1);
    let i = upper - 1;
    Ok((i, (value - levels[i]) / (levels[i + 1] - levels[i])))
}

/// Wind components on the grid, indexed (time, pressure, lat, lon) with
/// longitude varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct WindGrid {
    axes: GridAxes,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl WindGrid {
    pub fn new(axes: GridAxes, u: Vec<f64>, v: Vec<f64>) -> Result<Self, WindError> {
        axes.validate()?;
        let n = axes.node_count();
        if u.len() != n || v.len() != n {
            return Err(WindError::InvalidAxes(format!(
                "expected {n} nodes, got u={} v={}",
                u.len(),
                v.len()
            )));
        }
        if let Some(i) = u.iter().chain(v.iter()).position(|x| !x.is_finite()) {
            return Err(WindError::InvalidAxes(format!("non-finite wind component at flat index {}", i % n)));
        }
        Ok(Self { axes, u, v })
    }

    /// Builds a grid by evaluating `f` at every node.
    pub fn from_fn(axes: GridAxes, mut f: impl FnMut(GridPoint) -> WindVector) -> Result<Self, WindError> {
        axes.validate()?;
        let n = axes.node_count();
        let mut u = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for it in 0..axes.nt {
            for ip in 0..axes.np() {
                for ilat in 0..axes.nlat {
                    for ilon in 0..axes.nlon {
                        let w = f(GridPoint {
                            lon: axes.lon_at(ilon),
                            lat: axes.lat_at(ilat),
                            pressure: axes.pressure_levels[ip],
                            time: axes.time_at(it),
                        });
                        u.push(w.u);
                        v.push(w.v);
                    }
                }
            }
        }
        Self::new(axes, u, v)
    }

    pub fn axes(&self) -> &GridAxes {
        &self.axes
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn node(&self, it: usize, ip: usize, ilat: usize, ilon: usize) -> WindVector {
        let i = self.axes.index(it, ip, ilat, ilon);
        WindVector::new(self.u[i], self.v[i])
    }

    /// Multilinear interpolation over the 16 enclosing nodes. Out-of-range
    /// coordinates are an error on every axis.
    pub fn quadrilinear_sample(&self, at: GridPoint) -> Result<WindVector, WindError> {
        let a = &self.axes;
        let (ilon, flon) = locate_regular(Axis::Longitude, at.lon, a.lon_origin, a.lon_step, a.nlon)?;
        let (ilat, flat) = locate_regular(Axis::Latitude, at.lat, a.lat_origin, a.lat_step, a.nlat)?;
        let (ip, fp) = locate_levels(at.pressure, &a.pressure_levels)?;
        let (it, ft) = locate_regular(Axis::Time, at.time, a.time_origin, a.time_step, a.nt)?;

        let mut u = 0.0;
        let mut v = 0.0;
        for (dt, wt) in [(0, 1.0 - ft), (1, ft)] {
            if wt == 0.0 {
                continue;
            }
            for (dp, wp) in [(0, 1.0 - fp), (1, fp)] {
                if wp == 0.0 {
                    continue;
                }
                for (dlat, wlat) in [(0, 1.0 - flat), (1, flat)] {
                    if wlat == 0.0 {
                        continue;
                    }
                    let base = a.index(it + dt, ip + dp, ilat + dlat, ilon);
                    let w = wt * wp * wlat;
                    if flon == 0.0 {
                        u += w * self.u[base];
                        v += w * self.v[base];
                    } else {
                        u += w * ((1.0 - flon) * self.u[base] + flon * self.u[base + 1]);
                        v += w * ((1.0 - flon) * self.v[base] + flon * self.v[base + 1]);
                    }
                }
            }
        }
        Ok(WindVector::new(u, v))
    }
}
