//! Text grid format.
//!
//! ```text
//! WINDGRID 1
//! axes lon0 lat0 dlon dlat nlon nlat t0 dt nt np
//! plevels p1 ... pnp
//! u v            (nt*np*nlat*nlon lines, time outermost, lon innermost)
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{GridAxes, WindError, WindGrid};

const MAGIC: &str = "WINDGRID 1";

pub fn write_grid(grid: &WindGrid, path: impl AsRef<Path>) -> Result<(), WindError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_grid_to(grid, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_grid_to(grid: &WindGrid, out: &mut impl Write) -> std::io::Result<()> {
    let a = grid.axes();
    writeln!(out, "{MAGIC}")?;
    writeln!(
        out,
        "axes {:.16e} {:.16e} {:.16e} {:.16e} {} {} {:.16e} {:.16e} {} {}",
        a.lon_origin, a.lat_origin, a.lon_step, a.lat_step, a.nlon, a.nlat, a.time_origin, a.time_step, a.nt,
        a.np()
    )?;
    write!(out, "plevels")?;
    for p in &a.pressure_levels {
        write!(out, " {p:.16e}")?;
    }
    writeln!(out)?;
    for (u, v) in grid.u().iter().zip(grid.v()) {
        writeln!(out, "{u:.16e} {v:.16e}")?;
    }
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> WindError {
    WindError::Parse { line, message: message.into() }
}

fn parse_f64(line: usize, token: &str) -> Result<f64, WindError> {
    let value: f64 = token.parse().map_err(|_| parse_err(line, format!("invalid number {token:?}")))?;
    if !value.is_finite() {
        return Err(parse_err(line, format!("non-finite value {token:?}")));
    }
    Ok(value)
}

fn parse_count(line: usize, token: &str) -> Result<usize, WindError> {
    token.parse().map_err(|_| parse_err(line, format!("invalid count {token:?}")))
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<WindGrid, WindError> {
    read_grid_from(BufReader::new(File::open(path)?))
}

pub fn read_grid_from(reader: impl BufRead) -> Result<WindGrid, WindError> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (n, magic) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    if magic?.trim_end() != MAGIC {
        return Err(parse_err(n, format!("bad magic, expected {MAGIC:?}")));
    }

    let (n, axes_line) = lines.next().ok_or_else(|| parse_err(2, "missing axes line"))?;
    let axes_line = axes_line?;
    let tokens: Vec<&str> = axes_line.split_whitespace().collect();
    if tokens.len() != 11 || tokens[0] != "axes" {
        return Err(parse_err(n, "expected `axes lon0 lat0 dlon dlat nlon nlat t0 dt nt np`"));
    }
    let lon_origin = parse_f64(n, tokens[1])?;
    let lat_origin = parse_f64(n, tokens[2])?;
    let lon_step = parse_f64(n, tokens[3])?;
    let lat_step = parse_f64(n, tokens[4])?;
    let nlon = parse_count(n, tokens[5])?;
    let nlat = parse_count(n, tokens[6])?;
    let time_origin = parse_f64(n, tokens[7])?;
    let time_step = parse_f64(n, tokens[8])?;
    let nt = parse_count(n, tokens[9])?;
    let np = parse_count(n, tokens[10])?;

    let (n, plevels) = lines.next().ok_or_else(|| parse_err(3, "missing plevels line"))?;
    let plevels = plevels?;
    let mut tokens = plevels.split_whitespace();
    if tokens.next() != Some("plevels") {
        return Err(parse_err(n, "expected `plevels p1 ... pnp`"));
    }
    let pressure_levels = tokens.map(|t| parse_f64(n, t)).collect::<Result<Vec<_>, _>>()?;
    if pressure_levels.len() != np {
        return Err(parse_err(
            n,
            format!("header declares {np} pressure levels but {} provided", pressure_levels.len()),
        ));
    }

    let axes = GridAxes {
        lon_origin,
        lat_origin,
        lon_step,
        lat_step,
        nlon,
        nlat,
        time_origin,
        time_step,
        nt,
        pressure_levels,
    };
    axes.validate().map_err(|e| parse_err(2, e.to_string()))?;

    let expected = axes.node_count();
    let mut u = Vec::with_capacity(expected);
    let mut v = Vec::with_capacity(expected);
    for (n, line) in lines.by_ref() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if u.len() == expected {
            return Err(parse_err(n, format!("more than the declared {expected} wind rows")));
        }
        let mut it = line.split_whitespace();
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(parse_err(n, "expected two values `u v`"));
        };
        u.push(parse_f64(n, a)?);
        v.push(parse_f64(n, b)?);
    }
    if u.len() != expected {
        return Err(parse_err(3 + u.len() + 1, format!("expected {expected} wind rows, found {}", u.len())));
    }
    WindGrid::new(axes, u, v)
}
