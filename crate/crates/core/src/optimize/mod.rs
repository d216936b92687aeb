//! Black-box maximisers over the launch box: Bayesian optimisation with
//! expected improvement, particle swarm and uniform sampling.
//!
//! All three return a [`Trace`] of every evaluation in order. An objective
//! error truncates the trace and is kept in [`Trace::error`].

mod bo;
mod ei;
mod pso;
mod trace;
mod uniform;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::launch::{Bounds, LaunchConfig};

pub use bo::{bo_run, bo_run_with, propose_next, BoParams};
pub use ei::{expected_improvement, normal_cdf, normal_pdf};
pub use pso::{pso_coefficients, pso_run, PsoParams, PsoSchedule};
pub use trace::{converged_stats, converged_stats_of, write_trace_csv, ConvergenceStats, Sample, Trace, TRACE_CSV_HEADER};
pub use uniform::uniform_run;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("{0}")]
    Usage(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// A function of the launch configuration to maximise. Implementations must
/// be pure: optimisers may evaluate concurrently.
pub trait Objective: Sync {
    fn evaluate(&self, config: &LaunchConfig) -> Result<f64, String>;
}

impl<F> Objective for F
where
    F: Fn(&LaunchConfig) -> Result<f64, String> + Sync,
{
    fn evaluate(&self, config: &LaunchConfig) -> Result<f64, String> {
        self(config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Bo,
    Pso,
    Uniform,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Bo, Method::Pso, Method::Uniform];

    pub fn label(self) -> &'static str {
        match self {
            Method::Bo => "bo",
            Method::Pso => "pso",
            Method::Uniform => "uniform",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bo" => Ok(Method::Bo),
            "pso" => Ok(Method::Pso),
            "uniform" => Ok(Method::Uniform),
            other => Err(format!("unknown method `{other}` (expected bo, pso or uniform)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OptimizerSettings {
    pub bo: BoParams,
    pub pso: PsoParams,
}

impl OptimizerSettings {
    /// Smallest budget `method` accepts with these settings.
    pub fn min_budget(&self, method: Method) -> usize {
        match method {
            Method::Bo => self.bo.initial_samples,
            Method::Pso => self.pso.swarm_size,
            Method::Uniform => 1,
        }
    }
}

/// Dispatches to the optimiser named by `method`.
pub fn run_method(
    method: Method,
    objective: &dyn Objective,
    bounds: &Bounds,
    budget: usize,
    settings: &OptimizerSettings,
    seed: u64,
) -> Result<Trace, OptimizeError> {
    match method {
        Method::Bo => bo_run_with(objective, bounds, budget, &settings.bo, seed),
        Method::Pso => pso_run(objective, bounds, budget, &settings.pso, seed),
        Method::Uniform => uniform_run(objective, bounds, budget, seed),
    }
}

/// Evaluates each config in order, stopping at the first error. Runs in
/// parallel when `parallel` is set; results are always recorded in order.
fn evaluate_batch(
    objective: &dyn Objective,
    configs: &[LaunchConfig],
    parallel: bool,
    trace: &mut Trace,
) -> bool {
    use rayon::prelude::*;
    let values: Vec<Result<f64, String>> = if parallel {
        configs.par_iter().map(|c| objective.evaluate(c)).collect()
    } else {
        let mut out = Vec::with_capacity(configs.len());
        for c in configs {
            let v = objective.evaluate(c);
            let failed = v.is_err();
            out.push(v);
            if failed {
                break;
            }
        }
        out
    };
    for (c, v) in configs.iter().zip(values) {
        match v {
            Ok(v) if v.is_finite() => trace.push(*c, v),
            Ok(v) => {
                trace.fail(format!("objective returned {v} at {c}"));
                return false;
            }
            Err(e) => {
                trace.fail(format!("objective failed at {c}: {e}"));
                return false;
            }
        }
    }
    true
}
