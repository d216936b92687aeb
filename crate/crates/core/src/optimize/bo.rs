use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::ei::expected_improvement;
use super::uniform::uniform_config;
use super::{evaluate_batch, Method, Objective, OptimizeError, Trace};
use crate::gp::{GpPosterior, HyperSearch, KernelParams, Point};
use crate::launch::{Bounds, LaunchConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoParams {
    pub initial_samples: usize,
    /// Hyperparameters are refitted on every this-many-th BO iteration and
    /// reused in between.
    pub refit_every: usize,
    pub candidates: usize,
    pub jittered_best: usize,
    pub pattern_iters: usize,
    pub hyper: HyperSearch,
}

impl Default for BoParams {
    fn default() -> Self {
        Self {
            initial_samples: 4,
            refit_every: 5,
            candidates: 2048,
            jittered_best: 10,
            pattern_iters: 50,
            hyper: HyperSearch::default(),
        }
    }
}

/// EI below this counts as zero; targets are standardised before fitting.
const EI_FLOOR: f64 = 1e-12;

/// Normalised box `[-1, 1]² × [0, 1]`.
const LO: [f64; 3] = [-1.0, -1.0, 0.0];
const HI: [f64; 3] = [1.0, 1.0, 1.0];

fn clamp_unit(u: [f64; 3]) -> [f64; 3] {
    std::array::from_fn(|k| u[k].clamp(LO[k], HI[k]))
}

fn random_unit(rng: &mut impl Rng) -> [f64; 3] {
    std::array::from_fn(|k| rng.gen_range(LO[k]..=HI[k]))
}

fn ei_at(posterior: &GpPosterior<f64>, u: &[f64; 3], f_best: f64) -> f64 {
    let (mean, var) = posterior.predict(u);
    expected_improvement(mean, var.sqrt(), f_best).unwrap_or(0.0)
}

/// Maximises EI over the box: `candidates` uniform points plus the best
/// training inputs jittered, then coordinate pattern search from the winner.
/// Returns a uniform random point when every candidate has negligible EI. The
/// posterior is over normalised inputs (see [`Bounds::normalize`]).
pub fn propose_next(
    posterior: &GpPosterior<f64>,
    bounds: &Bounds,
    params: &BoParams,
    rng: &mut impl Rng,
) -> LaunchConfig {
    bounds.clamp(bounds.denormalize(propose_unit(posterior, params, rng)))
}

fn propose_unit(posterior: &GpPosterior<f64>, params: &BoParams, rng: &mut impl Rng) -> Point<f64> {
    let f_best = posterior.targets().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut ranked: Vec<usize> = (0..posterior.len()).collect();
    ranked.sort_by(|&a, &b| posterior.targets()[b].total_cmp(&posterior.targets()[a]));

    let mut candidates: Vec<[f64; 3]> = (0..params.candidates).map(|_| random_unit(rng)).collect();
    for &i in ranked.iter().take(params.jittered_best) {
        let x = posterior.inputs()[i];
        candidates.push(clamp_unit(std::array::from_fn(|k| {
            x[k] + 0.05 * (HI[k] - LO[k]) / 2.0 * rng.gen_range(-1.0..=1.0)
        })));
    }
    let scores: Vec<f64> = candidates.par_iter().map(|u| ei_at(posterior, u, f_best)).collect();
    let (mut best, mut best_ei) = (candidates[0], scores[0]);
    for (u, &s) in candidates.iter().zip(&scores) {
        if s > best_ei {
            best = *u;
            best_ei = s;
        }
    }
    if !(best_ei > EI_FLOOR) {
        return random_unit(rng);
    }

    let mut step: [f64; 3] = std::array::from_fn(|k| 0.1 * (HI[k] - LO[k]) / 2.0);
    for _ in 0..params.pattern_iters {
        let mut improved = false;
        for k in 0..3 {
            for dir in [1.0, -1.0] {
                let mut trial = best;
                trial[k] = (trial[k] + dir * step[k]).clamp(LO[k], HI[k]);
                let s = ei_at(posterior, &trial, f_best);
                if s > best_ei {
                    best = trial;
                    best_ei = s;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step.iter_mut().for_each(|s| *s /= 2.0);
        }
    }
    best
}

/// Bayesian optimisation with the default parameters.
pub fn bo_run(objective: &dyn Objective, bounds: &Bounds, budget: usize, seed: u64) -> Result<Trace, OptimizeError> {
    bo_run_with(objective, bounds, budget, &BoParams::default(), seed)
}

/// Seeds with uniform samples, then repeatedly fits a GP to the
/// standardised returns, proposes the EI maximiser and evaluates it.
pub fn bo_run_with(
    objective: &dyn Objective,
    bounds: &Bounds,
    budget: usize,
    params: &BoParams,
    seed: u64,
) -> Result<Trace, OptimizeError> {
    bounds.validate().map_err(OptimizeError::Usage)?;
    if params.initial_samples < 3 || params.refit_every == 0 || params.candidates == 0 {
        return Err(OptimizeError::Usage("BO needs at least 3 initial samples, refit interval ≥ 1 and candidates".into()));
    }
    if budget < params.initial_samples {
        return Err(OptimizeError::Usage(format!(
            "BO budget {budget} is below the {} initial samples",
            params.initial_samples
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = Trace::new(Method::Bo);
    let seeds: Vec<LaunchConfig> = (0..params.initial_samples).map(|_| uniform_config(bounds, &mut rng)).collect();
    if !evaluate_batch(objective, &seeds, true, &mut trace) {
        return Ok(trace);
    }

    let mut hypers: Option<KernelParams<f64>> = None;
    let mut iteration = 0usize;
    while trace.len() < budget {
        let inputs: Vec<Point<f64>> = trace.samples.iter().map(|s| bounds.normalize(&s.config)).collect();
        let targets = standardise(&trace.values());
        if hypers.is_none() || iteration % params.refit_every == 0 {
            let hyper_seed = seed ^ (iteration as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            if let Ok((p, _)) = params.hyper.run(&inputs, &targets, hyper_seed) {
                hypers = Some(p);
            }
        }
        let config = match hypers.and_then(|p| GpPosterior::fit(&inputs, &targets, p).ok()) {
            Some(gp) => propose_next(&gp, bounds, params, &mut rng),
            None => bounds.clamp(bounds.denormalize(random_unit(&mut rng))),
        };
        if !evaluate_batch(objective, &[config], false, &mut trace) {
            break;
        }
        iteration += 1;
    }
    Ok(trace)
}

/// Zero mean, unit (population) standard deviation; constant data only
/// loses its mean.
fn standardise(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let scale = if sd > 0.0 { sd } else { 1.0 };
    values.iter().map(|v| (v - mean) / scale).collect()
}
