use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{kde_2d, wind_cone, ConeVector, ExperimentResult, ExperimentSpec, HarnessError};
use crate::optimize::write_trace_csv;

pub const REPORT_CSV_HEADER: &str =
    "optimizer,reward,cells,failures,mean_converged_max,mean_converge_index,tw_fraction,reach_ratio";
pub const WINDCONE_CSV_HEADER: &str = "level,pressure_pa,u,v";

/// Names of the files written by [`write_experiment`], relative to the run
/// directory, in write order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExperimentFiles {
    pub names: Vec<String>,
}

pub fn write_windcone_csv(cone: &[ConeVector], out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{WINDCONE_CSV_HEADER}")?;
    for c in cone {
        writeln!(out, "{},{},{},{}", c.level, c.pressure_pa, c.wind.u, c.wind.v)?;
    }
    Ok(())
}

fn io_error(path: &Path, e: io::Error) -> HarnessError {
    HarnessError::Io { path: path.to_path_buf(), message: e.to_string() }
}

struct RunDir {
    root: PathBuf,
    files: ExperimentFiles,
}

impl RunDir {
    fn write(
        &mut self,
        name: String,
        body: impl FnOnce(&mut BufWriter<File>) -> Result<(), HarnessError>,
    ) -> Result<(), HarnessError> {
        let path = self.root.join(&name);
        let file = File::create(&path).map_err(|e| io_error(&path, e))?;
        let mut out = BufWriter::new(file);
        body(&mut out)?;
        out.flush().map_err(|e| io_error(&path, e))?;
        self.files.names.push(name);
        Ok(())
    }
}

/// Writes `report.csv`, one trace CSV per cell, one KDE of sweep positions
/// per reward kind, one wind cone per day at the target and grid start, and
/// `meta.txt` with `config` (resolved `key = value` pairs), seeds and the
/// file list.
pub fn write_experiment(
    result: &ExperimentResult,
    spec: &ExperimentSpec,
    dir: &Path,
    config: &[(String, String)],
) -> Result<ExperimentFiles, HarnessError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut run = RunDir { root: dir.to_path_buf(), files: ExperimentFiles::default() };
    let io = |name: &str| {
        let path = dir.join(name);
        move |e: io::Error| io_error(&path, e)
    };

    run.write("report.csv".into(), |out| {
        let err = io("report.csv");
        writeln!(out, "{REPORT_CSV_HEADER}").map_err(&err)?;
        for r in &result.report.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.method,
                r.reward,
                r.cells,
                r.failures,
                r.mean_converged_max,
                r.mean_converge_index,
                r.tw_fraction,
                r.reach_ratio
            )
            .map_err(&err)?;
        }
        Ok(())
    })?;

    for c in &result.cells {
        let name = format!("trace_{}_{}_{}_{}.csv", c.day, c.method, c.reward, c.index);
        let err = io(&name);
        run.write(name, |out| write_trace_csv(&c.trace, out).map_err(err))?;
    }

    for (k, reward) in spec.rewards.iter().enumerate() {
        let points: Vec<(f64, f64)> = result
            .sweeps
            .iter()
            .flat_map(|s| s[k].traces.iter().flat_map(|t| t.positions()))
            .collect();
        if points.is_empty() {
            continue;
        }
        let grid = kde_2d(&points, &spec.kde)?;
        let name = format!("kde_{reward}.csv");
        let err = io(&name);
        run.write(name, |out| grid.write_csv(out).map_err(err))?;
    }

    for day in &result.days {
        let t0 = day.field.grid().axes().time_origin;
        let cone = wind_cone(&day.field, 0.0, 0.0, t0, &spec.env)?;
        let name = format!("windcone_{}.csv", day.label);
        let err = io(&name);
        run.write(name, |out| write_windcone_csv(&cone, out).map_err(err))?;
    }

    let mut names = run.files.names.clone();
    names.push("meta.txt".into());
    run.write("meta.txt".into(), |out| {
        let err = io("meta.txt");
        writeln!(out, "[config]").map_err(&err)?;
        for (k, v) in config {
            writeln!(out, "{k} = {v}").map_err(&err)?;
        }
        writeln!(out, "\n[days]").map_err(&err)?;
        for d in &result.days {
            writeln!(out, "{} episode_seed={} forecast_noise_seed={}", d.label, d.episode_seed, d.field.noise().seed)
                .map_err(&err)?;
        }
        writeln!(out, "\n[cells]").map_err(&err)?;
        for c in &result.cells {
            let status = c.trace.error.as_deref().unwrap_or("ok");
            writeln!(out, "{} {} {} {} seed={} evaluations={} status={}", c.day, c.method, c.reward, c.index, c.seed, c.trace.len(), status)
                .map_err(&err)?;
        }
        writeln!(out, "\n[files]").map_err(&err)?;
        for n in &names {
            writeln!(out, "{n}").map_err(&err)?;
        }
        Ok(())
    })?;
    Ok(run.files)
}
