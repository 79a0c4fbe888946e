//! Independent reference implementations used only to check the real ones.
//! Everything here trades speed for being obviously correct.

#![allow(dead_code)]

use sprinter_core::data::{ColMatrix, Dataset};
use sprinter_core::family::Family;
use sprinter_core::simulate::{derive_rng, sample_standard_normal};

use rand::Rng;

/// Golden-section minimizer of a unimodal function on [lo, hi].
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while (hi - lo) > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Objective of the 1-D offset MLE, evaluated directly.
pub fn objective_1d(family: Family, z: &[f64], y: &[f64], offset: &[f64], gamma: f64) -> f64 {
    let n = z.len() as f64;
    let mut acc = 0.0;
    for i in 0..z.len() {
        let t = offset[i] + z[i] * gamma;
        acc += family.cumulant(t) - family.clamp_theta(t) * y[i];
    }
    acc / n
}

/// Proximal-gradient (ISTA) reference for the elastic-net penalized GLM.
/// Slow and simple: thousands of tiny steps, no screening tricks. Operates
/// on the given matrix as-is (no internal standardization).
pub struct IstaFit {
    pub intercept: f64,
    pub beta: Vec<f64>,
}

pub fn ista_reference(
    family: Family,
    x: &ColMatrix,
    y: &[f64],
    offset: &[f64],
    lambda: f64,
    alpha: f64,
    iters: usize,
) -> IstaFit {
    let n = y.len();
    let p = x.n_cols();
    let nf = n as f64;
    // Lipschitz bound for the gradient: max curvature * spectral bound
    let bmax = match family.kind {
        sprinter_core::FamilyKind::Gaussian => 1.0,
        sprinter_core::FamilyKind::Binomial => 0.25,
        sprinter_core::FamilyKind::Poisson => 40.0,
    };
    let mut col_norm_sq = 0.0f64;
    for j in 0..p {
        col_norm_sq += x.col(j).iter().map(|v| v * v).sum::<f64>() / nf;
    }
    let step = 1.0 / (bmax * (col_norm_sq + 1.0));

    let mut beta = vec![0.0; p];
    let mut intercept = 0.0;
    for _ in 0..iters {
        // gradient of the mean NLL
        let mut grad = vec![0.0; p];
        let mut grad0 = 0.0;
        for i in 0..n {
            let mut t = intercept + offset[i];
            for j in 0..p {
                t += beta[j] * x.col(j)[i];
            }
            let r = family.mean(t) - y[i];
            grad0 += r;
            for j in 0..p {
                grad[j] += r * x.col(j)[i];
            }
        }
        intercept -= step * grad0 / nf;
        for j in 0..p {
            let g = grad[j] / nf + lambda * (1.0 - alpha) * beta[j];
            let v = beta[j] - step * g;
            let t = step * lambda * alpha;
            beta[j] = if v > t {
                v - t
            } else if v < -t {
                v + t
            } else {
                0.0
            };
        }
    }
    IstaFit { intercept, beta }
}

/// Penalized objective on the given scale.
pub fn penalized_objective(
    family: Family,
    x: &ColMatrix,
    y: &[f64],
    offset: &[f64],
    intercept: f64,
    beta: &[f64],
    lambda: f64,
    alpha: f64,
) -> f64 {
    let n = y.len() as f64;
    let mut nll = 0.0;
    for i in 0..y.len() {
        let mut t = intercept + offset[i];
        for j in 0..beta.len() {
            t += beta[j] * x.col(j)[i];
        }
        nll += family.cumulant(t) - family.clamp_theta(t) * y[i];
    }
    nll / n
        + lambda
            * beta
                .iter()
                .map(|&b| alpha * b.abs() + (1.0 - alpha) * 0.5 * b * b)
                .sum::<f64>()
}

/// Unpenalized 2-parameter logistic MLE (intercept, slope) by dense grid
/// search with two refinement passes.
pub fn grid_logistic_mle(z: &[f64], y: &[f64]) -> (f64, f64) {
    let family = Family::binomial();
    let nll = |c: f64, b: f64| -> f64 {
        let mut acc = 0.0;
        for i in 0..z.len() {
            let t = c + b * z[i];
            acc += family.cumulant(t) - family.clamp_theta(t) * y[i];
        }
        acc
    };
    let mut best = (0.0, 0.0, nll(0.0, 0.0));
    let mut c_range = (-10.0, 10.0);
    let mut b_range = (-10.0, 10.0);
    for _pass in 0..6 {
        let steps = 60;
        for ic in 0..=steps {
            let c = c_range.0 + (c_range.1 - c_range.0) * ic as f64 / steps as f64;
            for ib in 0..=steps {
                let b = b_range.0 + (b_range.1 - b_range.0) * ib as f64 / steps as f64;
                let v = nll(c, b);
                if v < best.2 {
                    best = (c, b, v);
                }
            }
        }
        let c_w = (c_range.1 - c_range.0) / steps as f64;
        let b_w = (b_range.1 - b_range.0) / steps as f64;
        c_range = (best.0 - 2.0 * c_w, best.0 + 2.0 * c_w);
        b_range = (best.1 - 2.0 * b_w, best.1 + 2.0 * b_w);
    }
    (best.0, best.1)
}

/// Random gaussian design with optional planted signal, for tests that do
/// not care about the study layouts.
pub fn gaussian_data<F: Fn(usize, &ColMatrix) -> f64>(
    n: usize,
    p: usize,
    seed: u64,
    signal: F,
) -> Dataset {
    let mut rng = derive_rng(seed, "test-data", 0);
    let mut x = ColMatrix::zeros(n, p);
    for j in 0..p {
        for i in 0..n {
            x.set(i, j, sample_standard_normal(&mut rng));
        }
    }
    let y: Vec<f64> = (0..n)
        .map(|i| signal(i, &x) + sample_standard_normal(&mut rng))
        .collect();
    Dataset::new(x, y).unwrap()
}

/// Random binomial dataset from a latent linear predictor.
pub fn binomial_data<F: Fn(usize, &ColMatrix) -> f64>(
    n: usize,
    p: usize,
    seed: u64,
    signal: F,
) -> Dataset {
    let mut rng = derive_rng(seed, "test-data-b", 0);
    let mut x = ColMatrix::zeros(n, p);
    for j in 0..p {
        for i in 0..n {
            x.set(i, j, sample_standard_normal(&mut rng));
        }
    }
    let fam = Family::binomial();
    let y: Vec<f64> = (0..n)
        .map(|i| f64::from(rng.random::<f64>() < fam.mean(signal(i, &x))))
        .collect();
    Dataset::new(x, y).unwrap()
}
