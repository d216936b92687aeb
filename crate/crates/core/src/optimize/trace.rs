use std::io::{self, Write};

use super::{Method, OptimizeError};
use crate::launch::LaunchConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// 1-based evaluation index.
    pub iter: usize,
    pub config: LaunchConfig,
    pub value: f64,
    pub best_so_far: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub method: Method,
    pub samples: Vec<Sample>,
    pub error: Option<String>,
}

impl Trace {
    pub fn new(method: Method) -> Self {
        Self { method, samples: Vec::new(), error: None }
    }

    pub fn push(&mut self, config: LaunchConfig, value: f64) {
        let best_so_far = self.samples.last().map_or(value, |s| s.best_so_far.max(value));
        self.samples.push(Sample { iter: self.samples.len() + 1, config, value, best_so_far });
    }

    pub(crate) fn fail(&mut self, message: String) {
        self.error = Some(message);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn best_so_far(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.best_so_far).collect()
    }

    /// First sample attaining the final best value.
    pub fn best(&self) -> Option<&Sample> {
        let top = self.samples.last()?.best_so_far;
        self.samples.iter().find(|s| s.value == top)
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.value).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceStats {
    pub converged_max: f64,
    /// 1-based index where the best-so-far first comes within 1e-9 of the
    /// final maximum.
    pub converge_index: usize,
}

pub fn converged_stats_of(best_so_far: &[f64]) -> Result<ConvergenceStats, OptimizeError> {
    let &converged_max =
        best_so_far.last().ok_or_else(|| OptimizeError::Usage("convergence stats need a non-empty trace".into()))?;
    let converge_index = best_so_far.iter().position(|&b| b >= converged_max - 1e-9).unwrap_or(0) + 1;
    Ok(ConvergenceStats { converged_max, converge_index })
}

pub fn converged_stats(trace: &Trace) -> Result<ConvergenceStats, OptimizeError> {
    converged_stats_of(&trace.best_so_far())
}

pub const TRACE_CSV_HEADER: &str = "iter,x_km,y_km,dt_h,value,best_so_far";

pub fn write_trace_csv(trace: &Trace, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{TRACE_CSV_HEADER}")?;
    for s in &trace.samples {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            s.iter, s.config.x_km, s.config.y_km, s.config.dt_h, s.value, s.best_so_far
        )?;
    }
    Ok(())
}
