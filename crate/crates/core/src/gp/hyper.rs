//! Hyperparameter fitting by multi-start Nelder-Mead on the log marginal
//! likelihood, in log-parameter space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GpError, GpPosterior, KernelParams, Point, DIM};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperBounds {
    pub lengthscale: (f64, f64),
    pub signal_variance: (f64, f64),
    pub noise_variance: (f64, f64),
}

impl Default for HyperBounds {
    fn default() -> Self {
        Self { lengthscale: (1e-3, 1e2), signal_variance: (1e-6, 1e3), noise_variance: (1e-8, 1e2) }
    }
}

impl HyperBounds {
    fn linear_box(&self) -> [(f64, f64); DIM + 2] {
        let l = self.lengthscale;
        [l, l, l, self.signal_variance, self.noise_variance]
    }

    pub fn contains<T: Scalar>(&self, p: &KernelParams<T>) -> bool {
        let inside = |v: T, (a, b): (f64, f64)| v.as_f64() >= a && v.as_f64() <= b;
        p.lengthscales.iter().all(|&l| inside(l, self.lengthscale))
            && inside(p.signal_variance, self.signal_variance)
            && inside(p.noise_variance, self.noise_variance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperSearch {
    pub starts: usize,
    pub max_evals: usize,
    pub bounds: HyperBounds,
}

impl Default for HyperSearch {
    fn default() -> Self {
        Self { starts: 8, max_evals: 200, bounds: HyperBounds::default() }
    }
}

fn params_from_log<T: Scalar>(z: &[f64], bounds: &[(f64, f64); DIM + 2]) -> KernelParams<T> {
    let v: Vec<T> = z.iter().zip(bounds).map(|(&zi, &(a, b))| T::lit(zi.exp().clamp(a, b))).collect();
    KernelParams::new([v[0], v[1], v[2]], v[3], v[4])
}

impl HyperSearch {
    /// Best parameters and their log marginal likelihood. Start 0 is
    /// data-driven; the rest are drawn log-uniformly around it.
    pub fn run<T: Scalar>(&self, inputs: &[Point<T>], targets: &[T], seed: u64) -> Result<(KernelParams<T>, T), GpError> {
        if inputs.len() < 3 || inputs.len() != targets.len() {
            return Err(GpError::Data(format!(
                "hyperparameter fit needs at least 3 points, got {} inputs and {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        let n = targets.len() as f64;
        let mean = targets.iter().map(|y| y.as_f64()).sum::<f64>() / n;
        let var = targets.iter().map(|y| (y.as_f64() - mean).powi(2)).sum::<f64>() / n;
        let scale = if var > 0.0 { var } else { 1.0 };

        let linear_box = self.bounds.linear_box();
        let log_box = linear_box.map(|(a, b)| (a.ln(), b.ln()));
        let objective = |z: &[f64]| -> f64 {
            match GpPosterior::fit(inputs, targets, params_from_log::<T>(z, &linear_box)) {
                Ok(gp) => {
                    let lml = gp.log_marginal_likelihood().as_f64();
                    if lml.is_finite() {
                        -lml
                    } else {
                        f64::INFINITY
                    }
                }
                Err(_) => f64::INFINITY,
            }
        };

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best: Option<(Vec<f64>, f64)> = None;
        for start in 0..self.starts.max(1) {
            let z0: Vec<f64> = if start == 0 {
                vec![0.5f64.ln(), 0.5f64.ln(), 0.5f64.ln(), scale.ln(), (1e-2 * scale).ln()]
            } else {
                let mut z = Vec::with_capacity(DIM + 2);
                for _ in 0..DIM {
                    z.push(rng.gen_range(0.05f64.ln()..2.0f64.ln()));
                }
                z.push((scale * rng.gen_range(0.1f64..10.0)).ln());
                z.push((scale * 10f64.powf(rng.gen_range(-4.0..-1.0))).ln());
                z
            };
            let z0: Vec<f64> = z0.iter().zip(&log_box).map(|(&z, &(a, b))| z.clamp(a, b)).collect();
            let result = nelder_mead(objective, &z0, 1.0, self.max_evals);
            if result.value.is_finite() && best.as_ref().is_none_or(|(_, v)| result.value < *v) {
                best = Some((result.point, result.value));
            }
        }
        let (z, value) = best.ok_or(GpError::Numeric { condition: f64::INFINITY })?;
        Ok((params_from_log(&z, &linear_box), T::lit(-value)))
    }
}

/// Fits kernel parameters with the default search (8 starts × 200
/// evaluations within the default bounds).
pub fn optimize_hypers<T: Scalar>(inputs: &[Point<T>], targets: &[T], seed: u64) -> Result<KernelParams<T>, GpError> {
    HyperSearch::default().run(inputs, targets, seed).map(|(p, _)| p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Minimises `f` from `x0` with an initial simplex of edge `step` along each
/// axis. Stops after `max_evals` evaluations or when the simplex values agree
/// to 1e-12.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_evals: usize) -> NelderMeadResult {
    let d = x0.len();
    let mut evals = 0;
    let eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for i in 0..d {
        if evals >= max_evals {
            break;
        }
        let mut x = x0.to_vec();
        x[i] += step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    let point = |c: &[f64], toward: &[f64], t: f64| -> Vec<f64> { c.iter().zip(toward).map(|(a, b)| a + t * (b - a)).collect() };
    while simplex.len() == d + 1 && evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[d].1);
        if (worst - best).abs() <= 1e-12 * (1.0 + best.abs()) {
            break;
        }
        let mut centroid = vec![0.0; d];
        for (x, _) in &simplex[..d] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / d as f64;
            }
        }
        let worst_x = simplex[d].0.clone();
        let reflected = point(&centroid, &worst_x, -1.0);
        let fr = eval(&reflected, &mut evals);
        if fr < best {
            let expanded = point(&centroid, &worst_x, -2.0);
            let fe = if evals < max_evals { eval(&expanded, &mut evals) } else { f64::INFINITY };
            simplex[d] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (reflected, fr);
        } else {
            let (toward, f_toward) = if fr < worst { (&reflected, fr) } else { (&worst_x, worst) };
            let contracted = point(&centroid, toward, 0.5);
            let fc = if evals < max_evals { eval(&contracted, &mut evals) } else { f64::INFINITY };
            if fc < f_toward {
                simplex[d] = (contracted, fc);
            } else {
                let best_x = simplex[0].0.clone();
                for k in 1..=d {
                    if evals >= max_evals {
                        break;
                    }
                    let x = point(&best_x, &simplex[k].0, 0.5);
                    let v = eval(&x, &mut evals);
                    simplex[k] = (x, v);
                }
            }
        }
    }
    let (point, value) = simplex.into_iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty simplex");
    NelderMeadResult { point, value, evaluations: evals }
}
