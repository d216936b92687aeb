use std::io::{self, Write};

use super::HarnessError;

/// Square evaluation grid centred on the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeSpec {
    /// Half-width of the grid, km.
    pub extent_km: f64,
    /// Nodes per axis.
    pub resolution: usize,
    pub bandwidth_km: f64,
}

impl Default for KdeSpec {
    fn default() -> Self {
        Self { extent_km: 400.0, resolution: 201, bandwidth_km: 15.0 }
    }
}

impl KdeSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.bandwidth_km > 0.0 && self.bandwidth_km.is_finite()) {
            return Err(HarnessError::Usage(format!("KDE bandwidth must be positive, got {}", self.bandwidth_km)));
        }
        if !(self.extent_km > 0.0 && self.extent_km.is_finite()) || self.resolution < 2 {
            return Err(HarnessError::Usage("KDE grid needs a positive extent and at least 2 nodes per axis".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KdeGrid {
    pub spec: KdeSpec,
    /// Row-major, `y` outer.
    pub density: Vec<f64>,
}

/// Kernel contributions below `exp(-CUTOFF²/2)` of the peak are skipped.
const CUTOFF: f64 = 8.0;

impl KdeGrid {
    pub fn coordinate(&self, i: usize) -> f64 {
        let s = &self.spec;
        -s.extent_km + 2.0 * s.extent_km * i as f64 / (s.resolution - 1) as f64
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.spec.extent_km / (self.spec.resolution - 1) as f64
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.density[iy * self.spec.resolution + ix]
    }

    /// Cell-area weighted sum of the density.
    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.spacing().powi(2)
    }

    pub fn write_csv(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(out, "x_km,y_km,density")?;
        let n = self.spec.resolution;
        for iy in 0..n {
            for ix in 0..n {
                writeln!(out, "{},{},{}", self.coordinate(ix), self.coordinate(iy), self.at(ix, iy))?;
            }
        }
        Ok(())
    }
}

/// Isotropic Gaussian KDE of `points` evaluated on the grid of `spec`.
/// Points are summed in sorted order so the result does not depend on the
/// input order.
pub fn kde_2d(points: &[(f64, f64)], spec: &KdeSpec) -> Result<KdeGrid, HarnessError> {
    spec.validate()?;
    if points.is_empty() {
        return Err(HarnessError::Usage("KDE needs at least one point".into()));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(HarnessError::Usage("KDE points must be finite".into()));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let n = spec.resolution;
    let h = spec.bandwidth_km;
    let mut grid = KdeGrid { spec: *spec, density: vec![0.0; n * n] };
    let step = grid.spacing();
    let reach = CUTOFF * h;
    let window = |c: f64| -> (usize, usize) {
        let lo = ((c - reach + spec.extent_km) / step).ceil().max(0.0);
        let hi = ((c + reach + spec.extent_km) / step).floor().min((n - 1) as f64);
        (lo as usize, hi as usize)
    };
    let mut wx = vec![0.0; n];
    let mut wy = vec![0.0; n];
    for &(px, py) in &sorted {
        if (px.abs() - spec.extent_km) > reach || (py.abs() - spec.extent_km) > reach {
            continue;
        }
        let (x0, x1) = window(px);
        let (y0, y1) = window(py);
        if x0 > x1 || y0 > y1 {
            continue;
        }
        for ix in x0..=x1 {
            let d = grid.coordinate(ix) - px;
            wx[ix] = (-d * d / (2.0 * h * h)).exp();
        }
        for iy in y0..=y1 {
            let d = grid.coordinate(iy) - py;
            wy[iy] = (-d * d / (2.0 * h * h)).exp();
        }
        for iy in y0..=y1 {
            let row = &mut grid.density[iy * n..(iy + 1) * n];
            for ix in x0..=x1 {
                row[ix] += wx[ix] * wy[iy];
            }
        }
    }
    let norm = 1.0 / (2.0 * std::f64::consts::PI * h * h * points.len() as f64);
    for d in &mut grid.density {
        *d *= norm;
    }
    Ok(grid)
}
