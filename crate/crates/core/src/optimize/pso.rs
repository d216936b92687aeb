use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::uniform::uniform_config;
use super::{evaluate_batch, Method, Objective, OptimizeError, Trace};
use crate::launch::{Bounds, LaunchConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsoSchedule {
    /// Inertia and acceleration coefficients vary with the evaluation index.
    Decaying,
    /// `(w, c1, c2) = (0.8, 1, 1)` throughout.
    Constant,
}

impl std::str::FromStr for PsoSchedule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "decaying" => Ok(PsoSchedule::Decaying),
            "constant" => Ok(PsoSchedule::Constant),
            other => Err(format!("unknown PSO schedule `{other}` (expected decaying or constant)")),
        }
    }
}

impl std::fmt::Display for PsoSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PsoSchedule::Decaying => "decaying",
            PsoSchedule::Constant => "constant",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsoParams {
    pub swarm_size: usize,
    pub schedule: PsoSchedule,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self { swarm_size: 12, schedule: PsoSchedule::Decaying }
    }
}

/// `(w, c1, c2)` at evaluation index `n` of a budget `total`:
/// `w = 0.4(n − N)/N² + 0.4`, `c1 = −3n/N + 3.5`, `c2 = 3n/N + 0.5`.
pub fn pso_coefficients(n: usize, total: usize, schedule: PsoSchedule) -> (f64, f64, f64) {
    match schedule {
        PsoSchedule::Constant => (0.8, 1.0, 1.0),
        PsoSchedule::Decaying => {
            let (n, big) = (n as f64, total as f64);
            (0.4 * (n - big) / (big * big) + 0.4, -3.0 * n / big + 3.5, 3.0 * n / big + 0.5)
        }
    }
}

/// Synchronous PSO in normalised coordinates: each generation is evaluated
/// as a batch, then personal and global bests are updated in particle order.
pub fn pso_run(
    objective: &dyn Objective,
    bounds: &Bounds,
    budget: usize,
    params: &PsoParams,
    seed: u64,
) -> Result<Trace, OptimizeError> {
    bounds.validate().map_err(OptimizeError::Usage)?;
    if params.swarm_size < 2 {
        return Err(OptimizeError::Usage(format!("swarm size must be at least 2, got {}", params.swarm_size)));
    }
    if budget < params.swarm_size {
        return Err(OptimizeError::Usage(format!(
            "budget {budget} is smaller than the swarm size {}",
            params.swarm_size
        )));
    }
    let lo = [-1.0, -1.0, 0.0];
    let hi = [1.0, 1.0, 1.0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions: Vec<[f64; 3]> =
        (0..params.swarm_size).map(|_| bounds.normalize(&uniform_config(bounds, &mut rng))).collect();
    let mut velocities: Vec<[f64; 3]> = (0..params.swarm_size)
        .map(|_| std::array::from_fn(|k| 0.1 * (hi[k] - lo[k]) * rng.gen_range(-1.0..1.0)))
        .collect();
    let mut personal: Vec<([f64; 3], f64)> = Vec::with_capacity(params.swarm_size);
    let mut global: Option<([f64; 3], f64)> = None;
    let mut trace = Trace::new(Method::Pso);

    while trace.len() < budget {
        let take = (budget - trace.len()).min(params.swarm_size);
        let configs: Vec<LaunchConfig> =
            positions[..take].iter().map(|p| bounds.clamp(bounds.denormalize(*p))).collect();
        let start = trace.len();
        if !evaluate_batch(objective, &configs, true, &mut trace) {
            break;
        }
        for (i, sample) in trace.samples[start..].iter().enumerate() {
            let here = (positions[i], sample.value);
            match personal.get_mut(i) {
                Some(p) if sample.value > p.1 => *p = here,
                Some(_) => {}
                None => personal.push(here),
            }
            if global.is_none_or(|g| sample.value > g.1) {
                global = Some(here);
            }
        }
        if trace.len() >= budget {
            break;
        }
        let (g, _) = global.expect("at least one evaluation");
        for i in 0..params.swarm_size {
            let (w, c1, c2) = pso_coefficients(trace.len() + i, budget, params.schedule);
            let (p, _) = personal[i];
            for k in 0..3 {
                let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
                let v = w * velocities[i][k] + c1 * r1 * (p[k] - positions[i][k]) + c2 * r2 * (g[k] - positions[i][k]);
                let x = positions[i][k] + v;
                if x < lo[k] || x > hi[k] {
                    positions[i][k] = x.clamp(lo[k], hi[k]);
                    velocities[i][k] = 0.0;
                } else {
                    positions[i][k] = x;
                    velocities[i][k] = v;
                }
            }
        }
    }
    Ok(trace)
}
