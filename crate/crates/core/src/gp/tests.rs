use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::*;

fn random_points(n: usize, seed: u64) -> Vec<Point<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.0..1.0)]).collect()
}

fn params(l: f64, sf: f64, sn: f64) -> KernelParams<f64> {
    KernelParams::isotropic(l, sf, sn)
}

/// Dense inverse and log-determinant by Gauss-Jordan with partial pivoting.
fn dense_inverse_and_logdet(a: &[f64], n: usize) -> (Vec<f64>, f64) {
    let mut m = a.to_vec();
    let mut inv: Vec<f64> = (0..n * n).map(|k| if k / n == k % n { 1.0 } else { 0.0 }).collect();
    let mut logdet = 0.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs())).unwrap();
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
                inv.swap(piv * n + k, col * n + k);
            }
        }
        let p = m[col * n + col];
        logdet += p.abs().ln();
        for k in 0..n {
            m[col * n + k] /= p;
            inv[col * n + k] /= p;
        }
        for i in 0..n {
            if i != col {
                let f = m[i * n + col];
                for k in 0..n {
                    m[i * n + k] -= f * m[col * n + k];
                    inv[i * n + k] -= f * inv[col * n + k];
                }
            }
        }
    }
    (inv, logdet)
}

#[test]
fn matern_reference_values() {
    let p = params(1.0, 1.0, 0.0);
    let x = [0.3, -0.2, 0.5];
    assert_eq!(matern52(&x, &x, &params(0.7, 2.5, 0.0)), 2.5);
    let one = [1.3, -0.2, 0.5];
    assert!((matern52(&x, &one, &p) - 0.52400).abs() < 1e-4);
    let s5 = 5f64.sqrt();
    let closed = (1.0 + s5 + 5.0 / 3.0) * (-s5).exp();
    assert!((matern52(&x, &one, &p) - closed).abs() < 1e-15);
}

#[test]
fn matern_is_symmetric_and_stationary() {
    let p = KernelParams::new([0.25, 0.5, 2.0], 1.5, 0.0);
    let pts = random_points(40, 1);
    for w in pts.windows(2) {
        assert_eq!(matern52(&w[0], &w[1], &p), matern52(&w[1], &w[0], &p));
    }
    // Dyadic coordinates keep the shifted differences exact.
    let a = [0.25, -0.5, 0.125];
    let b = [0.75, 0.5, 0.625];
    let delta = [2.0, -4.0, 0.5];
    let shift = |x: [f64; 3]| [x[0] + delta[0], x[1] + delta[1], x[2] + delta[2]];
    assert_eq!(matern52(&shift(a), &shift(b), &p), matern52(&a, &b, &p));
}

#[test]
fn gram_is_symmetric_and_positive_semidefinite() {
    let pts = random_points(30, 2);
    let p = KernelParams::new([0.4, 0.3, 0.8], 1.2, 0.0);
    let n = pts.len();
    let k = gram(&pts, &p);
    for i in 0..n {
        for j in 0..n {
            assert!((k[i * n + j] - k[j * n + i]).abs() <= 1e-12);
        }
    }
    // Pivots of an unjittered Cholesky-like elimination stay above -1e-10.
    let mut m = k.clone();
    for c in 0..n {
        let pivot = m[c * n + c];
        assert!(pivot >= -1e-10, "pivot {pivot}");
        if pivot <= 1e-300 {
            continue;
        }
        for i in c + 1..n {
            let f = m[i * n + c] / pivot;
            for j in c..n {
                m[i * n + j] -= f * m[c * n + j];
            }
        }
    }
}

#[test]
fn single_point_interpolates() {
    let x = [0.1, 0.2, 0.3];
    let gp = GpPosterior::fit(&[x], &[4.2], params(0.5, 1.0, 0.0)).unwrap();
    let (m, v) = gp.predict(&x);
    assert!((m - 4.2).abs() < 1e-9);
    assert!(v <= 1e-9);
}

#[test]
fn noise_free_fit_interpolates_sixteen_points() {
    let pts = random_points(16, 3);
    let ys: Vec<f64> = pts.iter().map(|p| (3.0 * p[0]).sin() + p[1] * p[2]).collect();
    let gp = GpPosterior::fit(&pts, &ys, params(0.6, 1.0, 0.0)).unwrap();
    for (p, y) in pts.iter().zip(&ys) {
        let (m, v) = gp.predict(p);
        assert!((m - y).abs() < 1e-8, "{m} vs {y}");
        assert!(v <= 1e-9);
    }
}

#[test]
fn duplicated_inputs_take_the_jitter_path() {
    let x = [0.0, 0.5, 0.5];
    let gp = GpPosterior::fit(&[x, x, [0.2, 0.1, 0.0]], &[1.0, 1.0, 2.0], params(0.5, 1.0, 0.0)).unwrap();
    assert!(gp.jitter() > 0.0);
    assert!((gp.predict(&x).0 - 1.0).abs() < 1e-3);
}

#[test]
fn factor_reproduces_the_gram_matrix() {
    let pts = random_points(5, 4);
    let p = KernelParams::new([0.3, 0.6, 0.9], 2.0, 1e-3);
    let gp = GpPosterior::fit(&pts, &[0.0; 5], p).unwrap();
    let n = 5;
    let mut k = gram(&pts, &p);
    for i in 0..n {
        k[i * n + i] += p.noise_variance;
    }
    let l = gp.factor();
    let (mut err, mut norm) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let r: f64 = (0..n).map(|m| l[i * n + m] * l[j * n + m]).sum();
            err += (r - k[i * n + j]).powi(2);
            norm += k[i * n + j].powi(2);
        }
    }
    assert!((err / norm).sqrt() <= 1e-8);
}

#[test]
fn far_prediction_reverts_to_the_prior() {
    let pts = random_points(10, 5);
    let ys: Vec<f64> = (0..10).map(|i| i as f64).collect();
    let gp = GpPosterior::fit(&pts, &ys, params(0.1, 3.0, 1e-4)).unwrap();
    let (m, v) = gp.predict(&[50.0, 50.0, 50.0]);
    assert!((m - 4.5).abs() < 1e-9);
    assert!((v - 3.0).abs() <= 0.03);
}

#[test]
fn variance_never_exceeds_the_signal_variance() {
    let pts = random_points(12, 6);
    let ys: Vec<f64> = pts.iter().map(|p| p[0] - p[2]).collect();
    let gp = GpPosterior::fit(&pts, &ys, params(0.4, 1.7, 1e-3)).unwrap();
    for q in random_points(200, 7) {
        let (_, v) = gp.predict(&q);
        assert!(v >= 0.0 && v <= 1.7 + 1e-9);
    }
}

#[test]
fn predictive_mean_is_linear_in_targets() {
    let pts = random_points(9, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let y1: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y2: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let sum: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a + b).collect();
    let p = params(0.5, 1.0, 1e-2);
    let g1 = GpPosterior::fit(&pts, &y1, p).unwrap();
    let g2 = GpPosterior::fit(&pts, &y2, p).unwrap();
    let gs = GpPosterior::fit(&pts, &sum, p).unwrap();
    for q in random_points(20, 10) {
        assert!((gs.predict(&q).0 - g1.predict(&q).0 - g2.predict(&q).0).abs() < 1e-9);
    }
}

#[test]
fn single_point_lml() {
    let gp = GpPosterior::fit(&[[0.0; 3]], &[0.0], params(1.0, 1.0, 0.0)).unwrap();
    assert!((gp.log_marginal_likelihood() + 0.9189385).abs() < 1e-6);
}

#[test]
fn lml_matches_dense_oracle() {
    let pts = random_points(8, 11);
    let ys: Vec<f64> = pts.iter().map(|p| (2.0 * p[0]).cos() + 0.5 * p[1]).collect();
    let p = KernelParams::new([0.5, 0.7, 1.1], 1.3, 1e-3);
    let gp = GpPosterior::fit(&pts, &ys, p).unwrap();
    let n = 8;
    let mut k = gram(&pts, &p);
    for i in 0..n {
        k[i * n + i] += p.noise_variance;
    }
    let (inv, logdet) = dense_inverse_and_logdet(&k, n);
    let mean = ys.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = ys.iter().map(|y| y - mean).collect();
    let quad: f64 = (0..n).map(|i| (0..n).map(|j| c[i] * inv[i * n + j] * c[j]).sum::<f64>()).sum();
    let oracle = -0.5 * quad - 0.5 * logdet - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
    assert!((gp.log_marginal_likelihood() - oracle).abs() < 1e-8);
}

#[test]
fn noise_variance_helps_on_noisy_data() {
    let pts: Vec<Point<f64>> = (0..40).map(|i| [-1.0 + i as f64 / 20.0, 0.0, 0.0]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let ys: Vec<f64> = pts.iter().map(|p| p[0].sin() + 0.3 * rng.sample::<f64, _>(StandardNormal)).collect();
    let lml = |sn| GpPosterior::fit(&pts, &ys, params(0.5, 1.0, sn)).unwrap().log_marginal_likelihood();
    assert!(lml(0.09) > lml(0.0));
}

#[test]
fn numeric_error_carries_a_condition_estimate() {
    let p = KernelParams::isotropic(1.0, 1.0, 0.0);
    let a = [1.0, 1.0, 1.0];
    let b = [-1.0, 1.0, 1.0];
    let gp = GpPosterior::fit(&[a, b], &[0.0, 1.0], p);
    assert!(gp.is_ok());
    let bad = KernelParams::isotropic(1.0, -1.0, 0.0);
    assert!(matches!(GpPosterior::fit(&[a], &[0.0], bad), Err(GpError::Params(_))));
    let err = GpError::Numeric { condition: 1e12 };
    assert!(err.to_string().contains("condition"));
}

#[test]
fn fit_rejects_bad_data() {
    let p = params(1.0, 1.0, 0.0);
    assert!(GpPosterior::fit(&[], &[], p).is_err());
    assert!(GpPosterior::fit(&[[0.0; 3]], &[1.0, 2.0], p).is_err());
    assert!(GpPosterior::fit(&[[f64::NAN, 0.0, 0.0]], &[1.0], p).is_err());
}

/// Draws `n` points with inputs `(x, 0, 0)` from a Matérn-5/2 GP with
/// lengthscale `l` in the active dimension.
fn prior_sample(n: usize, l: f64, seed: u64) -> (Vec<Point<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Point<f64>> = (0..n).map(|_| [rng.gen_range(-1.0..1.0), 0.0, 0.0]).collect();
    let noise = 1e-4;
    let mut k = gram(&pts, &params(l, 1.0, 0.0));
    for i in 0..n {
        k[i * n + i] += noise;
    }
    let chol = linalg::cholesky(&k, n).unwrap();
    let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let ys = (0..n).map(|i| (0..=i).map(|j| chol[i * n + j] * z[j]).sum()).collect();
    (pts, ys)
}

#[test]
fn recovers_a_known_lengthscale() {
    let hits = (0..10)
        .filter(|&seed| {
            let (pts, ys) = prior_sample(64, 0.3, 100 + seed);
            let fitted = optimize_hypers(&pts, &ys, seed).unwrap();
            (0.15..=0.6).contains(&fitted.lengthscales[0])
        })
        .count();
    assert!(hits >= 8, "{hits}/10");
}

#[test]
fn constant_targets_collapse_the_signal() {
    let pts = random_points(10, 14);
    let fitted = optimize_hypers(&pts, &[2.5; 10], 0).unwrap();
    assert!(fitted.signal_variance <= 1e-3, "{fitted:?}");
}

#[test]
fn fitted_params_respect_bounds() {
    for seed in 0..5 {
        let pts = random_points(12, seed);
        let ys: Vec<f64> = pts.iter().map(|p| 1e4 * p[0] + if p[1] > 0.0 { 1e3 } else { 0.0 }).collect();
        let fitted = optimize_hypers(&pts, &ys, seed).unwrap();
        assert!(HyperBounds::default().contains(&fitted), "{fitted:?}");
    }
    assert!(optimize_hypers(&random_points(2, 0), &[1.0, 2.0], 0).is_err());
}

#[test]
fn nelder_mead_finds_a_quadratic_minimum() {
    let r = nelder_mead(|x| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2), &[0.0, 0.0], 0.5, 400);
    assert!((r.point[0] - 1.0).abs() < 1e-4 && (r.point[1] + 2.0).abs() < 1e-4);
    assert!(r.evaluations <= 400);
    let capped = nelder_mead(|x| x[0] * x[0], &[5.0], 1.0, 7);
    assert!(capped.evaluations <= 7);
}

#[test]
fn works_in_single_precision() {
    let pts: Vec<Point<f32>> = vec![[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [1.0, 0.5, 0.2]];
    let gp = GpPosterior::fit(&pts, &[1.0f32, 2.0, 0.5], KernelParams::isotropic(0.5f32, 1.0, 1e-4)).unwrap();
    let (m, v) = gp.predict(&[0.5, 0.0, 0.0]);
    assert!((m - 2.0).abs() < 1e-2 && v >= 0.0);
    assert!(gp.log_marginal_likelihood().is_finite());
}
