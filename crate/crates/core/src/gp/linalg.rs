//! Dense lower-triangular factorisation and solves, row-major `n × n`.

use crate::Scalar;

/// Failure of an in-place Cholesky factorisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotPositiveDefinite<T> {
    pub row: usize,
    pub pivot: T,
}

/// Cholesky factor `L` with `L Lᵀ = a`. Only the lower triangle of `a` is read.
pub fn cholesky<T: Scalar>(a: &[T], n: usize) -> Result<Vec<T>, NotPositiveDefinite<T>> {
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > T::zero()) {
                    return Err(NotPositiveDefinite { row: i, pivot: sum });
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Solves `L x = b`.
pub fn solve_lower<T: Scalar>(l: &[T], n: usize, b: &[T]) -> Vec<T> {
    let mut x = b.to_vec();
    for i in 0..n {
        let mut sum = x[i];
        for k in 0..i {
            sum -= l[i * n + k] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    x
}

/// Solves `Lᵀ x = b`.
pub fn solve_upper_transposed<T: Scalar>(l: &[T], n: usize, b: &[T]) -> Vec<T> {
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let mut sum = x[i];
        for k in i + 1..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    x
}
