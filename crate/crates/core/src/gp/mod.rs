//! Gaussian-process regression with a Matérn-5/2 ARD kernel.
//!
//! Inputs are 3-vectors (normalised launch configurations). Targets are
//! centred by their sample mean before fitting so the zero-mean prior sits at
//! the data mean; predictions add it back.

mod hyper;
pub mod linalg;

use thiserror::Error;

use crate::Scalar;
use linalg::{cholesky, solve_lower, solve_upper_transposed};

pub use hyper::{nelder_mead, optimize_hypers, HyperBounds, HyperSearch, NelderMeadResult};

pub const DIM: usize = 3;
pub type Point<T> = [T; DIM];

/// Diagonal jitter tried in order when `K + σ_n² I` fails to factor.
pub const JITTER_LADDER: [f64; 5] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpError {
    #[error("invalid data: {0}")]
    Data(String),
    #[error("invalid kernel parameters: {0}")]
    Params(String),
    #[error("covariance not positive definite at maximum jitter (condition estimate {condition:.3e})")]
    Numeric { condition: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams<T> {
    pub lengthscales: [T; DIM],
    pub signal_variance: T,
    pub noise_variance: T,
}

impl<T: Scalar> KernelParams<T> {
    pub fn new(lengthscales: [T; DIM], signal_variance: T, noise_variance: T) -> Self {
        Self { lengthscales, signal_variance, noise_variance }
    }

    pub fn isotropic(lengthscale: T, signal_variance: T, noise_variance: T) -> Self {
        Self::new([lengthscale; DIM], signal_variance, noise_variance)
    }

    /// Strictly positive, except the noise variance which may be zero.
    pub fn validate(&self) -> Result<(), GpError> {
        if self.lengthscales.iter().any(|l| !(*l > T::zero()) || !l.is_finite()) {
            return Err(GpError::Params(format!("lengthscales must be positive, got {:?}", self.lengthscales)));
        }
        if !(self.signal_variance > T::zero()) || !self.signal_variance.is_finite() {
            return Err(GpError::Params(format!("signal variance must be positive, got {}", self.signal_variance)));
        }
        if !(self.noise_variance >= T::zero()) || !self.noise_variance.is_finite() {
            return Err(GpError::Params(format!("noise variance must be non-negative, got {}", self.noise_variance)));
        }
        Ok(())
    }
}

/// Scaled distance `sqrt(Σ ((a_i - b_i)/ℓ_i)²)`.
pub fn scaled_distance<T: Scalar>(a: &Point<T>, b: &Point<T>, lengthscales: &[T; DIM]) -> T {
    let mut s = T::zero();
    for i in 0..DIM {
        let r = (a[i] - b[i]) / lengthscales[i];
        s += r * r;
    }
    s.sqrt()
}

/// `σ_f² (1 + √5 d + 5d²/3) exp(−√5 d)`.
pub fn matern52_distance<T: Scalar>(d: T, signal_variance: T) -> T {
    let r = T::lit(5.0).sqrt() * d;
    signal_variance * (T::one() + r + r * r / T::lit(3.0)) * (-r).exp()
}

pub fn matern52<T: Scalar>(a: &Point<T>, b: &Point<T>, params: &KernelParams<T>) -> T {
    matern52_distance(scaled_distance(a, b, &params.lengthscales), params.signal_variance)
}

/// Row-major Gram matrix `K` (without noise).
pub fn gram<T: Scalar>(inputs: &[Point<T>], params: &KernelParams<T>) -> Vec<T> {
    let n = inputs.len();
    let mut k = vec![T::zero(); n * n];
    for i in 0..n {
        k[i * n + i] = params.signal_variance;
        for j in 0..i {
            let v = matern52(&inputs[i], &inputs[j], params);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

#[derive(Debug, Clone)]
pub struct GpPosterior<T> {
    inputs: Vec<Point<T>>,
    targets: Vec<T>,
    mean: T,
    params: KernelParams<T>,
    /// Lower factor of `K + (σ_n² + jitter) I`.
    factor: Vec<T>,
    /// `(K + σ_n² I)⁻¹ (y − mean)`.
    alpha: Vec<T>,
    jitter: T,
}

impl<T: Scalar> GpPosterior<T> {
    pub fn fit(inputs: &[Point<T>], targets: &[T], params: KernelParams<T>) -> Result<Self, GpError> {
        if inputs.is_empty() || inputs.len() != targets.len() {
            return Err(GpError::Data(format!("{} inputs and {} targets", inputs.len(), targets.len())));
        }
        if inputs.iter().flatten().chain(targets).any(|v| !v.is_finite()) {
            return Err(GpError::Data("inputs and targets must be finite".into()));
        }
        params.validate()?;
        let n = inputs.len();
        let mean = targets.iter().fold(T::zero(), |s, &y| s + y) / T::lit(n as f64);
        let centred: Vec<T> = targets.iter().map(|&y| y - mean).collect();

        let mut k = gram(inputs, &params);
        for i in 0..n {
            k[i * n + i] += params.noise_variance;
        }
        let mut jitter = T::zero();
        let mut ladder = JITTER_LADDER.iter();
        let factor = loop {
            let failure = match cholesky(&k, n) {
                Ok(l) => break l,
                Err(failure) => failure,
            };
            let Some(&j) = ladder.next() else {
                let max_diag = (0..n).map(|i| k[i * n + i].as_f64()).fold(0.0, f64::max);
                let pivot = failure.pivot.as_f64().abs().max(f64::MIN_POSITIVE);
                return Err(GpError::Numeric { condition: max_diag / pivot });
            };
            let step = T::lit(j) - jitter;
            for i in 0..n {
                k[i * n + i] += step;
            }
            jitter = T::lit(j);
        };
        let alpha = solve_upper_transposed(&factor, n, &solve_lower(&factor, n, &centred));
        Ok(Self { inputs: inputs.to_vec(), targets: targets.to_vec(), mean, params, factor, alpha, jitter })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[Point<T>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[T] {
        &self.targets
    }

    pub fn target_mean(&self) -> T {
        self.mean
    }

    pub fn params(&self) -> &KernelParams<T> {
        &self.params
    }

    pub fn factor(&self) -> &[T] {
        &self.factor
    }

    /// Diagonal jitter that was added to make the factorisation succeed.
    pub fn jitter(&self) -> T {
        self.jitter
    }

    /// Predictive mean and latent variance at `x`.
    pub fn predict(&self, x: &Point<T>) -> (T, T) {
        let n = self.len();
        let k_star: Vec<T> = self.inputs.iter().map(|xi| matern52(xi, x, &self.params)).collect();
        let mean = self.mean + k_star.iter().zip(&self.alpha).fold(T::zero(), |s, (&k, &a)| s + k * a);
        let v = solve_lower(&self.factor, n, &k_star);
        let explained = v.iter().fold(T::zero(), |s, &vi| s + vi * vi);
        let variance = self.params.signal_variance - explained;
        let tol = T::lit(1e-12);
        let variance = if variance < T::zero() && variance > -tol { T::zero() } else { variance.max(T::zero()) };
        (mean, variance)
    }

    /// `−½ yᵀ(K+σ_n²I)⁻¹y − Σ log L_ii − (n/2) log 2π` over the centred targets.
    pub fn log_marginal_likelihood(&self) -> T {
        let n = self.len();
        let fit = self
            .targets
            .iter()
            .zip(&self.alpha)
            .fold(T::zero(), |s, (&y, &a)| s + (y - self.mean) * a);
        let log_det_half = (0..n).fold(T::zero(), |s, i| s + self.factor[i * n + i].ln());
        let two_pi = T::lit(std::f64::consts::TAU);
        -T::lit(0.5) * fit - log_det_half - T::lit(0.5 * n as f64) * two_pi.ln()
    }
}

#[cfg(test)]
mod tests;
