use super::OptimizeError;
use crate::Scalar;

pub fn normal_pdf<T: Scalar>(z: T) -> T {
    (-(z * z) / T::lit(2.0)).exp() / T::lit(std::f64::consts::TAU).sqrt()
}

pub fn normal_cdf<T: Scalar>(z: T) -> T {
    T::lit(0.5) * (-z / T::lit(std::f64::consts::SQRT_2)).erfc()
}

/// `E[max(Y − f*, 0)]` for `Y ~ N(mean, std²)`, with no exploration offset.
pub fn expected_improvement<T: Scalar>(mean: T, std: T, f_best: T) -> Result<T, OptimizeError> {
    if !(std >= T::zero()) {
        return Err(OptimizeError::Domain(format!("standard deviation must be non-negative, got {std}")));
    }
    let gain = mean - f_best;
    if std == T::zero() {
        return Ok(gain.max(T::zero()));
    }
    let z = gain / std;
    Ok((gain * normal_cdf(z) + std * normal_pdf(z)).max(T::zero()))
}
