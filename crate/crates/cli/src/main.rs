use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use stratokeeper::config::{keys_help, ConfigError, Resolved, RunConfig, THREADS_ENV};
use stratokeeper::env::{rollout, write_episode_csv, EnvError};
use stratokeeper::harness::{
    launch_objective, run_experiment, split_seed, wind_cone, write_experiment, write_windcone_csv, DaySource,
    HarnessError,
};
use stratokeeper::launch::LaunchConfig;
use stratokeeper::optimize::{run_method, write_trace_csv, Method};
use stratokeeper::windfield::{synthesize_grid, write_grid};

/// Balloon station-keeping simulation and launch-configuration search.
#[derive(Parser, Debug)]
#[command(name = "stratokeeper", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Roll out one episode on the first configured day.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Launch offsets and delay: X_KM,Y_KM,DT_H
        #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
        launch: [f64; 3],
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Optimise the launch configuration on the first configured day.
    Optimize {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        method: Method,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every (day, method, reward, seed) cell plus the reward sweeps.
    Experiment {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the first configured synthetic day as a grid file.
    SynthWind {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export the wind cone of the first configured day: X_KM,Y_KM,T_H with
    /// T_H counted from the start of the grid.
    ExportWindcone {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
        at: [f64; 3],
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got `{s}`"));
    }
    let mut out = [0.0; 3];
    for (slot, p) in out.iter_mut().zip(&parts) {
        *slot = p.parse::<f64>().map_err(|e| format!("`{p}`: {e}"))?;
        if !slot.is_finite() {
            return Err(format!("`{p}` is not finite"));
        }
    }
    Ok(out)
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Usage(m) => Failure::Config(m),
            HarnessError::Env(EnvError::Constraint(m) | EnvError::Config(m)) => Failure::Config(m),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Loads the config file, applies flag overrides and the thread-count
/// environment variable, then validates everything.
fn load_config(path: Option<&Path>, seed: Option<u64>, overrides: &[(&str, String)]) -> Result<(RunConfig, Resolved), Failure> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.set("seed", s.to_string())?;
    }
    for (k, v) in overrides {
        cfg.set(k, v.clone())?;
    }
    cfg.apply_threads_override(std::env::var(THREADS_ENV).ok().as_deref())?;
    let resolved = cfg.resolve()?;
    Ok((cfg, resolved))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn write_meta(dir: &Path, cfg: &RunConfig, extra: &[String], files: &[&str]) -> Result<(), Failure> {
    let path = dir.join("meta.txt");
    let mut out = create(&path)?;
    let mut text = String::from("[config]\n");
    for (k, v) in cfg.entries() {
        text.push_str(&format!("{k} = {v}\n"));
    }
    text.push_str("\n[run]\n");
    for line in extra {
        text.push_str(line);
        text.push('\n');
    }
    text.push_str("\n[files]\n");
    for f in files.iter().chain(std::iter::once(&"meta.txt")) {
        text.push_str(f);
        text.push('\n');
    }
    out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn make_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate { config, launch, seed, out } => {
            let (cfg, resolved) = load_config(config.as_deref(), seed, &[])?;
            let day = resolved.first_day().load(resolved.seed)?;
            let controller = resolved.experiment.controller.build().map_err(|e| Failure::Config(e.to_string()))?;
            let launch = LaunchConfig::from_array(launch);
            let trace = rollout(resolved.env(), launch, &day.field, controller.as_ref(), day.episode_seed)
                .map_err(HarnessError::from)?;
            make_dir(&out)?;
            let mut f = create(&out.join("episode.csv"))?;
            write_episode_csv(&trace, &mut f).and_then(|_| f.flush()).map_err(runtime)?;
            let extra = vec![
                format!("day = {}", day.label),
                format!("launch = {},{},{}", launch.x_km, launch.y_km, launch.dt_h),
                format!("episode_seed = {}", day.episode_seed),
                format!("steps = {}", trace.records.len()),
                format!("termination = {}", trace.termination),
                format!("return = {}", trace.total_return),
            ];
            write_meta(&out, &cfg, &extra, &["episode.csv"])?;
            println!("{} steps, termination {}, return {}", trace.records.len(), trace.termination, trace.total_return);
        }
        Command::Optimize { config, method, budget, seed, out } => {
            let mut overrides = vec![("methods", method.label().to_string())];
            if let Some(b) = budget {
                overrides.push(("budget", b.to_string()));
            }
            let (cfg, resolved) = load_config(config.as_deref(), seed, &overrides)?;
            let spec = &resolved.experiment;
            let day = resolved.first_day().load(resolved.seed)?;
            let controller = spec.controller.build().map_err(|e| Failure::Config(e.to_string()))?;
            let reward = spec.env.reward_kind;
            let objective = launch_objective(&day, reward, controller.as_ref(), &spec.env);
            let run_seed = split_seed(resolved.seed, &[&day.label, method.label(), reward.label()]);
            let trace = rayon_install(resolved.threads, || {
                run_method(method, &objective, &spec.env.launch_bounds, spec.budget, &spec.optimizer, run_seed)
            })?
            .map_err(|e| Failure::Config(e.to_string()))?;
            make_dir(&out)?;
            let mut f = create(&out.join("trace.csv"))?;
            write_trace_csv(&trace, &mut f).and_then(|_| f.flush()).map_err(runtime)?;
            let mut extra = vec![
                format!("day = {}", day.label),
                format!("method = {method}"),
                format!("reward = {reward}"),
                format!("optimizer_seed = {run_seed}"),
                format!("episode_seed = {}", day.episode_seed),
                format!("evaluations = {}", trace.len()),
            ];
            if let Some(best) = trace.best() {
                extra.push(format!(
                    "best = {},{},{} value {} at {}",
                    best.config.x_km, best.config.y_km, best.config.dt_h, best.value, best.iter
                ));
            }
            if let Some(err) = &trace.error {
                extra.push(format!("error = {err}"));
            }
            write_meta(&out, &cfg, &extra, &["trace.csv"])?;
            if let Some(err) = &trace.error {
                return Err(Failure::Runtime(format!("objective failed after {} evaluations: {err}", trace.len())));
            }
            if let Some(best) = trace.best() {
                println!("best {} = {} at evaluation {}", best.config, best.value, best.iter);
            }
        }
        Command::Experiment { config, seed, out } => {
            let (cfg, resolved) = load_config(config.as_deref(), seed, &[])?;
            let result = run_experiment(&resolved.experiment)?;
            let files = write_experiment(&result, &resolved.experiment, &out, &cfg.entries())?;
            let failures: usize = result.report.rows.iter().map(|r| r.failures).sum();
            println!("{} cells, {} failed, {} files", result.cells.len(), failures, files.names.len());
        }
        Command::SynthWind { config, seed, out } => {
            let (_, resolved) = load_config(config.as_deref(), seed, &[])?;
            let DaySource::Synthetic { spec, geometry } = &resolved.first_day().source else {
                return Err(Failure::Config("synth-wind needs synthetic days (wind_files must be empty)".into()));
            };
            let axes = geometry.axes()?;
            let grid = synthesize_grid(spec, axes).map_err(runtime)?;
            write_grid(&grid, &out).map_err(runtime)?;
        }
        Command::ExportWindcone { config, at, seed, out } => {
            let (_, resolved) = load_config(config.as_deref(), seed, &[])?;
            let day = resolved.first_day().load(resolved.seed)?;
            let t = day.field.grid().axes().time_origin + at[2];
            let cone = wind_cone(&day.field, at[0], at[1], t, resolved.env())?;
            let mut f = create(&out)?;
            write_windcone_csv(&cone, &mut f).and_then(|_| f.flush()).map_err(runtime)?;
        }
    }
    Ok(())
}

fn rayon_install<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R, Failure> {
    let pool = stratokeeper::harness::thread_pool(threads).map_err(Failure::from)?;
    Ok(pool.install(f))
}

fn main() -> ExitCode {
    let help = keys_help();
    let mut command = Cli::command().after_long_help(help.clone()).after_help(help.clone());
    for name in ["simulate", "optimize", "experiment", "synth-wind", "export-windcone"] {
        let h = help.clone();
        command = command.mut_subcommand(name, move |c| c.after_help(h.clone()).after_long_help(h));
    }
    let matches = match command.try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Config(m) | Failure::Runtime(m)) = &f;
            let kind = if f.code() == 2 { "config error" } else { "error" };
            eprintln!("stratokeeper: {kind}: {m}");
            ExitCode::from(f.code())
        }
    }
}
