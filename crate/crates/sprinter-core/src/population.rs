//! Population-level verifiers for the quantities the screen estimates.
//!
//! Three baseline quantities are defined per candidate interaction `Z_j`:
//! the joint coefficient `gamma_check_j` from the (p+1)-dimensional
//! population MLE, the conditional coefficient `gamma_m_j` from the 1-D
//! problem around the best main-effects fit, and the linearly-conditional
//! covariance `cov_l_j = Cov(Z_j, Y - E_L(Y|X))`. They vanish together, and
//! in gaussian linear models satisfy exact closed-form identities in the
//! covariance matrices `Sigma = Cov(X)`, `Phi = Cov(X, Z)`, `Psi = Cov(Z)`:
//!
//! ```text
//! beta_m      = beta* + Sigma^-1 Phi gamma*
//! gamma_m_j   = Psi_jj^-1 [Psi_{j.} - Phi_{j.} Sigma^-1 Phi] gamma*
//! gamma_check = (1 - Psi_jj^-1 Phi_{j.} Sigma^-1 Phi_{.j})^-1 gamma_m_j
//! cov_l_j     = Psi_jj gamma_m_j
//! ```
//!
//! For gaussian predictors the moments come from the pair-product rule for
//! gaussian fourth moments (third moments vanish, so `Phi = 0`); for skewed
//! transforms they are estimated by Monte Carlo. Non-gaussian families get
//! Monte-Carlo score-equation solves with common random numbers.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{Family, FamilyKind};
use crate::linalg::{dot, ols_line, pairwise_sum, solve, Mat};
use crate::pairs::{all_pairs, PairIndex};
use crate::simulate::{derive_rng, sample_standard_normal};

/// Skewed marginal transforms used to create nonzero `Phi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkewKind {
    /// Standardized chi-square(1): `(W^2 - 1) / sqrt(2)`.
    ChiSquare,
    /// Standardized asymmetric two-point law (P(high) = 0.7). Squares are
    /// exactly linear in X, so the uniqueness denominator of every square
    /// pair collapses to zero.
    TwoPoint,
}

/// Law of the predictor vector.
#[derive(Debug, Clone)]
pub enum XLaw {
    GaussianIid { p: usize },
    GaussianCov { sigma: Mat },
    Skewed { p: usize, kind: SkewKind },
}

impl XLaw {
    pub fn p(&self) -> usize {
        match self {
            XLaw::GaussianIid { p } => *p,
            XLaw::GaussianCov { sigma } => sigma.rows,
            XLaw::Skewed { p, .. } => *p,
        }
    }
}

/// A population model: predictor law plus true coefficients.
#[derive(Debug, Clone)]
pub struct PopulationSpec {
    pub x_law: XLaw,
    pub beta_star: Vec<f64>,
    pub gamma_star: Vec<(PairIndex, f64)>,
    pub family: FamilyKind,
}

impl PopulationSpec {
    fn gamma_dense(&self, q: usize, p: usize) -> Vec<f64> {
        let mut g = vec![0.0; q];
        for &(pr, v) in &self.gamma_star {
            g[pr.flat(p)] = v;
        }
        g
    }
}

/// Output of the linear (gaussian-family) population calculator.
#[derive(Debug, Clone, Serialize)]
pub struct LinearPopulation {
    pub pairs: Vec<PairIndex>,
    pub beta_m: Vec<f64>,
    pub gamma_m: Vec<f64>,
    /// From an independent (p+1)-dimensional block solve per pair.
    pub gamma_check: Vec<f64>,
    /// From the direct covariance expansion `Cov(Z_j, Y) - Phi_{j.} beta_m`.
    pub cov_l: Vec<f64>,
    /// `Var(Z_j)`, exposed so the identity `cov_l = Psi_jj gamma_m` can be
    /// checked from independently computed pieces.
    pub psi_diag: Vec<f64>,
    /// Per-pair uniqueness denominator `1 - Psi_jj^-1 Phi_{j.} Sigma^-1 Phi_{.j}`.
    pub denom: Vec<f64>,
    /// Pairs whose denominator is numerically zero; their entries above are
    /// NaN and must be ignored.
    pub excluded: Vec<PairIndex>,
}

/// Second moments of the predictor law: `Sigma`, `Phi`, `Psi` and `E[Z]`.
struct Moments {
    sigma: Mat,
    phi: Mat,
    psi: Mat,
}

fn gaussian_moments(sigma: &Mat) -> Moments {
    let p = sigma.rows;
    let pairs: Vec<PairIndex> = all_pairs(p).collect();
    let q = pairs.len();
    // E[X_k X_a X_b] = 0, so Phi = Cov(X, Z) = 0
    let phi = Mat::zeros(p, q);
    // Cov(X_a X_b, X_c X_d) = S_ac S_bd + S_ad S_bc
    let mut psi = Mat::zeros(q, q);
    for (j, pj) in pairs.iter().enumerate() {
        for (l, pl) in pairs.iter().enumerate() {
            psi[(j, l)] = sigma[(pj.a, pl.a)] * sigma[(pj.b, pl.b)]
                + sigma[(pj.a, pl.b)] * sigma[(pj.b, pl.a)];
        }
    }
    Moments { sigma: sigma.clone(), phi, psi }
}

fn skewed_sample<R: Rng>(kind: SkewKind, rng: &mut R) -> f64 {
    match kind {
        SkewKind::ChiSquare => {
            let w = sample_standard_normal(rng);
            (w * w - 1.0) / std::f64::consts::SQRT_2
        }
        SkewKind::TwoPoint => {
            // P(high) = 0.7; levels chosen for mean 0, variance 1
            const PI_HIGH: f64 = 0.7;
            let hi = ((1.0 - PI_HIGH) / PI_HIGH).sqrt();
            let lo = -(PI_HIGH / (1.0 - PI_HIGH)).sqrt();
            if rng.random::<f64>() < PI_HIGH {
                hi
            } else {
                lo
            }
        }
    }
}

fn mc_moments(p: usize, kind: SkewKind, draws: usize, seed: u64) -> Moments {
    let pairs: Vec<PairIndex> = all_pairs(p).collect();
    let q = pairs.len();
    let mut rng = derive_rng(seed, "mc-moments", 0);
    let mut sum_x = vec![0.0; p];
    let mut sum_xx = Mat::zeros(p, p);
    let mut sum_z = vec![0.0; q];
    let mut sum_xz = Mat::zeros(p, q);
    let mut sum_zz = Mat::zeros(q, q);
    let mut x = vec![0.0; p];
    let mut z = vec![0.0; q];
    for _ in 0..draws {
        for v in x.iter_mut() {
            *v = skewed_sample(kind, &mut rng);
        }
        for (j, pr) in pairs.iter().enumerate() {
            z[j] = x[pr.a] * x[pr.b];
        }
        for a in 0..p {
            sum_x[a] += x[a];
            for b in 0..p {
                sum_xx[(a, b)] += x[a] * x[b];
            }
            for j in 0..q {
                sum_xz[(a, j)] += x[a] * z[j];
            }
        }
        for j in 0..q {
            sum_z[j] += z[j];
            for l in 0..q {
                sum_zz[(j, l)] += z[j] * z[l];
            }
        }
    }
    let m = draws as f64;
    let mean_x: Vec<f64> = sum_x.iter().map(|v| v / m).collect();
    let mean_z: Vec<f64> = sum_z.iter().map(|v| v / m).collect();
    let mut sigma = Mat::zeros(p, p);
    for a in 0..p {
        for b in 0..p {
            sigma[(a, b)] = sum_xx[(a, b)] / m - mean_x[a] * mean_x[b];
        }
    }
    let mut phi = Mat::zeros(p, q);
    for a in 0..p {
        for j in 0..q {
            phi[(a, j)] = sum_xz[(a, j)] / m - mean_x[a] * mean_z[j];
        }
    }
    let mut psi = Mat::zeros(q, q);
    for j in 0..q {
        for l in 0..q {
            psi[(j, l)] = sum_zz[(j, l)] / m - mean_z[j] * mean_z[l];
        }
    }
    Moments { sigma, phi, psi }
}

/// Closed-form (or Monte-Carlo-moment) population quantities for the
/// gaussian linear model, with the cross-identities computed by
/// independent routes so they can be checked against each other.
///
/// The near-singularity cutoff adapts to the moment source: 1e-8 for
/// analytic gaussian moments, 1e-2 for Monte-Carlo moments whose noise
/// floor is far above that.
pub fn linear_population_quantities(spec: &PopulationSpec) -> Result<LinearPopulation> {
    let singular_tol = match &spec.x_law {
        XLaw::Skewed { .. } => 1e-2,
        _ => 1e-8,
    };
    linear_population_quantities_with_tol(spec, singular_tol)
}

pub fn linear_population_quantities_with_tol(
    spec: &PopulationSpec,
    singular_tol: f64,
) -> Result<LinearPopulation> {
    if spec.family != FamilyKind::Gaussian {
        return Err(Error::InvalidInput(
            "linear_population_quantities handles the gaussian family".into(),
        ));
    }
    let p = spec.x_law.p();
    if spec.beta_star.len() != p {
        return Err(Error::Dimension("beta_star length != p".into()));
    }
    let pairs: Vec<PairIndex> = all_pairs(p).collect();
    let q = pairs.len();
    let gamma_star = spec.gamma_dense(q, p);
    let mom = match &spec.x_law {
        XLaw::GaussianIid { p } => gaussian_moments(&Mat::identity(*p)),
        XLaw::GaussianCov { sigma } => gaussian_moments(sigma),
        XLaw::Skewed { p, kind } => mc_moments(*p, *kind, 10_000_000, 424242),
    };
    let Moments { sigma, phi, psi } = mom;

    // beta_m = beta* + Sigma^-1 Phi gamma*
    let phi_gamma: Vec<f64> = (0..p)
        .map(|a| (0..q).map(|j| phi[(a, j)] * gamma_star[j]).sum())
        .collect();
    let correction = solve(&sigma, &phi_gamma)?;
    let beta_m: Vec<f64> = spec.beta_star.iter().zip(&correction).map(|(&b, &c)| b + c).collect();

    // Sigma^-1 Phi, column by column
    let mut sig_inv_phi = Mat::zeros(p, q);
    for j in 0..q {
        let col: Vec<f64> = (0..p).map(|a| phi[(a, j)]).collect();
        let s = solve(&sigma, &col)?;
        for a in 0..p {
            sig_inv_phi[(a, j)] = s[a];
        }
    }

    // Cov(X, Y) and Cov(Z_j, Y) under Y = X'beta* + Z'gamma* + eps
    let cov_zy: Vec<f64> = (0..q)
        .map(|j| {
            let t1: f64 = (0..p).map(|a| phi[(a, j)] * spec.beta_star[a]).sum();
            let t2: f64 = (0..q).map(|l| psi[(j, l)] * gamma_star[l]).sum();
            t1 + t2
        })
        .collect();

    let mut gamma_m = vec![0.0; q];
    let mut gamma_check = vec![0.0; q];
    let mut cov_l = vec![0.0; q];
    let mut psi_diag = vec![0.0; q];
    let mut denom = vec![0.0; q];
    let mut excluded = Vec::new();
    for j in 0..q {
        let phi_j: Vec<f64> = (0..p).map(|a| phi[(a, j)]).collect();
        // residual row: Psi_{j.} - Phi_{j.} Sigma^-1 Phi, applied to gamma*
        let resid_j: f64 = (0..q)
            .map(|l| {
                let cross: f64 = (0..p).map(|a| phi_j[a] * sig_inv_phi[(a, l)]).sum();
                (psi[(j, l)] - cross) * gamma_star[l]
            })
            .sum();
        let psi_jj = psi[(j, j)];
        psi_diag[j] = psi_jj;
        let self_cross: f64 = (0..p).map(|a| phi_j[a] * sig_inv_phi[(a, j)]).sum();
        denom[j] = 1.0 - self_cross / psi_jj;
        gamma_m[j] = resid_j / psi_jj;
        // direct covariance route for cov_l
        cov_l[j] = cov_zy[j] - dot(&phi_j, &beta_m);
        if denom[j].abs() < singular_tol {
            excluded.push(pairs[j]);
            gamma_check[j] = f64::NAN;
            continue;
        }
        // independent route: (p+1)-dimensional block solve
        let mut block = Mat::zeros(p + 1, p + 1);
        for a in 0..p {
            for b in 0..p {
                block[(a, b)] = sigma[(a, b)];
            }
            block[(a, p)] = phi_j[a];
            block[(p, a)] = phi_j[a];
        }
        block[(p, p)] = psi_jj;
        let mut rhs: Vec<f64> = (0..p)
            .map(|a| {
                let t1: f64 = (0..p).map(|b| sigma[(a, b)] * spec.beta_star[b]).sum();
                let t2: f64 = (0..q).map(|l| phi[(a, l)] * gamma_star[l]).sum();
                t1 + t2
            })
            .collect();
        rhs.push(cov_zy[j]);
        let sol = solve(&block, &rhs)?;
        gamma_check[j] = sol[p];
    }
    Ok(LinearPopulation { pairs, beta_m, gamma_m, gamma_check, cov_l, psi_diag, denom, excluded })
}

/// Monte-Carlo draws of X shared by every solve for one spec (common
/// random numbers). Rows are draws.
struct McDraws {
    x: Vec<f64>,
    p: usize,
    m: usize,
    /// b'(theta*) per draw: Y integrated out analytically.
    mu_star: Vec<f64>,
}

fn draw_mc(spec: &PopulationSpec, draws: usize, seed: u64) -> McDraws {
    let p = spec.x_law.p();
    let family = Family::new(spec.family);
    let batch = 1 << 16;
    let n_batches = draws.div_ceil(batch);
    let blocks: Vec<(Vec<f64>, Vec<f64>)> = (0..n_batches)
        .into_par_iter()
        .map(|bi| {
            let mut rng = derive_rng(seed, "mc-x", bi as u64);
            let lo = bi * batch;
            let hi = ((bi + 1) * batch).min(draws);
            let mut x = Vec::with_capacity((hi - lo) * p);
            let mut mu = Vec::with_capacity(hi - lo);
            for _ in lo..hi {
                let start = x.len();
                for _ in 0..p {
                    let v = match &spec.x_law {
                        XLaw::Skewed { kind, .. } => skewed_sample(*kind, &mut rng),
                        _ => sample_standard_normal(&mut rng),
                    };
                    x.push(v);
                }
                let row = &x[start..start + p];
                let mut theta = dot(row, &spec.beta_star);
                for &(pr, g) in &spec.gamma_star {
                    theta += g * row[pr.a] * row[pr.b];
                }
                mu.push(family.mean(theta));
            }
            (x, mu)
        })
        .collect();
    let mut x = Vec::with_capacity(draws * p);
    let mut mu_star = Vec::with_capacity(draws);
    for (xb, mb) in blocks {
        x.extend(xb);
        mu_star.extend(mb);
    }
    McDraws { x, p, m: draws, mu_star }
}

impl McDraws {
    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }
}

/// Newton solve of `E[(b'(u' w) - mu*) u] = 0` over Monte-Carlo draws,
/// where `u` maps a draw to the regressor vector of the problem.
fn mc_newton<FV>(
    family: Family,
    mc: &McDraws,
    dim: usize,
    regressors: FV,
    tol: f64,
) -> Result<(Vec<f64>, Mat, Vec<f64>)>
where
    FV: Fn(usize, &mut Vec<f64>),
{
    let mut w = vec![0.0; dim];
    let mut u = vec![0.0; dim];
    let mut last_score_norm = f64::INFINITY;
    for _iter in 0..60 {
        let mut score = vec![0.0; dim];
        let mut jac = Mat::zeros(dim, dim);
        for i in 0..mc.m {
            regressors(i, &mut u);
            let theta = dot(&u, &w);
            let (_, mu, var) = family.cumulant_mean_variance(theta);
            let r = mu - mc.mu_star[i];
            for a in 0..dim {
                score[a] += r * u[a];
                for b in a..dim {
                    jac[(a, b)] += var * u[a] * u[b];
                }
            }
        }
        let m = mc.m as f64;
        for a in 0..dim {
            score[a] /= m;
            for b in a..dim {
                jac[(a, b)] /= m;
                jac[(b, a)] = jac[(a, b)];
            }
        }
        let norm = score.iter().fold(0.0f64, |acc, &s| acc.max(s.abs()));
        if norm < tol {
            // variance of the score terms for delta-method standard errors
            let mut score_var = vec![0.0; dim];
            for i in 0..mc.m {
                regressors(i, &mut u);
                let theta = dot(&u, &w);
                let mu = family.mean(theta);
                let r = mu - mc.mu_star[i];
                for a in 0..dim {
                    let s = r * u[a] - score[a];
                    score_var[a] += s * s;
                }
            }
            for v in score_var.iter_mut() {
                *v /= m;
            }
            return Ok((w, jac, score_var));
        }
        if norm > 10.0 * last_score_norm + 1.0 {
            return Err(Error::Numerical(format!(
                "population Newton diverged (score norm {norm:.3e})"
            )));
        }
        last_score_norm = norm;
        let step = solve(&jac, &score)?;
        for a in 0..dim {
            w[a] -= step[a];
        }
    }
    Err(Error::Numerical("population Newton did not converge in 60 iterations".into()))
}

/// Monte-Carlo estimates of the three population quantities for one pair,
/// with delta-method standard errors.
#[derive(Debug, Clone, Serialize)]
pub struct GlmPopulationPoint {
    pub pair: PairIndex,
    pub gamma_m: f64,
    pub se_gamma_m: f64,
    pub gamma_check: f64,
    pub se_gamma_check: f64,
    pub cov_l: f64,
    pub se_cov_l: f64,
    /// `E[m_j Z_j^2]` evaluated at the solution; the exact identity
    /// `cov_l = gamma_m * E[m_j Z_j^2]` holds when `gamma_m != 0`.
    pub e_mj_z2: f64,
}

/// Solves the population score equations by Newton over Monte-Carlo
/// expectations with common random numbers.
pub fn glm_population_quantities(
    spec: &PopulationSpec,
    j: PairIndex,
    mc_draws: usize,
    seed: u64,
) -> Result<GlmPopulationPoint> {
    let p = spec.x_law.p();
    if p > 6 {
        return Err(Error::InvalidInput("glm population solves are limited to p <= 6".into()));
    }
    if spec.family == FamilyKind::Gaussian {
        return Err(Error::InvalidInput(
            "use linear_population_quantities for the gaussian family".into(),
        ));
    }
    let family = Family::new(spec.family);
    let mc = draw_mc(spec, mc_draws, seed);
    let m = mc.m as f64;

    // baseline: beta_m over the main effects alone
    let (beta_m, _, _) = mc_newton(family, &mc, p, |i, u| {
        u.clear();
        u.extend_from_slice(mc.row(i));
    }, 1e-11)?;

    // conditional 1-D solve for gamma_m around the baseline offset
    let offsets: Vec<f64> = (0..mc.m).map(|i| dot(mc.row(i), &beta_m)).collect();
    let zs: Vec<f64> = (0..mc.m).map(|i| {
        let r = mc.row(i);
        r[j.a] * r[j.b]
    }).collect();
    let mut gamma_m = 0.0;
    for _ in 0..60 {
        let mut s = 0.0;
        let mut h = 0.0;
        for i in 0..mc.m {
            let (_, mu, var) = family.cumulant_mean_variance(offsets[i] + zs[i] * gamma_m);
            s += zs[i] * (mu - mc.mu_star[i]);
            h += zs[i] * zs[i] * var;
        }
        s /= m;
        h /= m;
        let step = s / h.max(1e-300);
        gamma_m -= step;
        if step.abs() < 1e-12 {
            break;
        }
    }
    // se via delta method: sd(score terms) / (sqrt(M) * mean curvature)
    let (se_gamma_m, e_mj_z2) = {
        let mut var_terms = Vec::with_capacity(mc.m);
        let mut curv = 0.0;
        let mut mj_z2 = Vec::with_capacity(mc.m);
        for i in 0..mc.m {
            let t = offsets[i] + zs[i] * gamma_m;
            let (_, mu, var) = family.cumulant_mean_variance(t);
            var_terms.push(zs[i] * (mu - mc.mu_star[i]));
            curv += zs[i] * zs[i] * var;
            // m_j per draw: slope of b' between offset and offset + z gamma
            let base = family.mean(offsets[i]);
            let denom_ = zs[i] * gamma_m;
            let mj = if denom_.abs() > 1e-12 {
                (mu - base) / denom_
            } else {
                family.variance(offsets[i])
            };
            mj_z2.push(mj * zs[i] * zs[i]);
        }
        curv /= m;
        let mean_s = pairwise_sum(&var_terms) / m;
        let var_s =
            var_terms.iter().map(|&v| (v - mean_s) * (v - mean_s)).sum::<f64>() / m;
        (var_s.sqrt() / (m.sqrt() * curv.max(1e-300)), pairwise_sum(&mj_z2) / m)
    };

    // joint (p+1)-dimensional solve for gamma_check
    let (check, jac, score_var) = mc_newton(family, &mc, p + 1, |i, u| {
        u.clear();
        u.extend_from_slice(mc.row(i));
        let r = mc.row(i);
        u.push(r[j.a] * r[j.b]);
    }, 1e-11)?;
    let gamma_check = check[p];
    // sandwich se for the last coordinate: J^-1 S J^-1 / M, S diagonal proxy
    let se_gamma_check = {
        let jinv = crate::linalg::inverse(&jac)?;
        let mut v = 0.0;
        for a in 0..=p {
            v += jinv[(p, a)] * jinv[(p, a)] * score_var[a];
        }
        (v / m).sqrt()
    };

    // cov_l = E[Z_j (Y - b'(X beta_m))] with Y integrated out
    let cov_terms: Vec<f64> = (0..mc.m)
        .map(|i| zs[i] * (mc.mu_star[i] - family.mean(offsets[i])))
        .collect();
    let cov_l = pairwise_sum(&cov_terms) / m;
    let mean_c = cov_l;
    let var_c = cov_terms.iter().map(|&v| (v - mean_c) * (v - mean_c)).sum::<f64>() / m;
    let se_cov_l = (var_c / m).sqrt();

    Ok(GlmPopulationPoint {
        pair: j,
        gamma_m,
        se_gamma_m,
        gamma_check,
        se_gamma_check,
        cov_l,
        se_cov_l,
        e_mj_z2,
    })
}

/// Empirical error-decay report: the worst-case gap between the empirical
/// 1-D utilities and their population values, across a growing sample-size
/// grid with the oracle main-effects coefficients supplied.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub n_grid: Vec<usize>,
    /// Mean over seeds of `max_j |gamma_hat_j - gamma_m_j|` per n.
    pub max_errors: Vec<f64>,
    /// OLS slope of log(error) on log(n); -0.5 is the root-n rate.
    pub slope: f64,
    /// Threshold used for the selected-set size track: `eta_n = n^-kappa`.
    pub kappa: f64,
    /// Mean selected-set size per n at `eta_n`.
    pub set_sizes: Vec<f64>,
}

impl ConvergenceReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::from("      n   max|gamma_hat - gamma_m|   |selected|\n");
        for i in 0..self.n_grid.len() {
            out.push_str(&format!(
                "{:>7}   {:>24.6e}   {:>10.1}\n",
                self.n_grid[i], self.max_errors[i], self.set_sizes[i]
            ));
        }
        out.push_str(&format!("log-log slope: {:.3}\n", self.slope));
        out
    }
}

/// Runs the decay study for a gaussian spec. Step 1 is the oracle
/// `beta_m`, so the measured error isolates the 1-D estimation step.
pub fn empirical_convergence_check(
    spec: &PopulationSpec,
    n_grid: &[usize],
    seeds: &[u64],
    kappa: f64,
) -> Result<ConvergenceReport> {
    let p = spec.x_law.p();
    let pop = linear_population_quantities(spec)?;
    let pairs: Vec<PairIndex> = all_pairs(p).collect();
    let results: Vec<(f64, f64)> = n_grid
        .par_iter()
        .map(|&n| {
            let eta = (n as f64).powf(-kappa);
            let per_seed: Vec<(f64, f64)> = seeds
                .par_iter()
                .map(|&seed| {
                    let mut rng = derive_rng(seed, "convergence", n as u64);
                    // draw raw X columns (iid standard normal designs only)
                    let mut cols: Vec<Vec<f64>> = vec![vec![0.0; n]; p];
                    for col in cols.iter_mut() {
                        for v in col.iter_mut() {
                            *v = sample_standard_normal(&mut rng);
                        }
                    }
                    let mut theta = vec![0.0; n];
                    for (a, col) in cols.iter().enumerate() {
                        if spec.beta_star[a] != 0.0 {
                            for (t, &v) in theta.iter_mut().zip(col) {
                                *t += spec.beta_star[a] * v;
                            }
                        }
                    }
                    for &(pr, g) in &spec.gamma_star {
                        for i in 0..n {
                            theta[i] += g * cols[pr.a][i] * cols[pr.b][i];
                        }
                    }
                    let y: Vec<f64> = theta
                        .iter()
                        .map(|&t| t + sample_standard_normal(&mut rng))
                        .collect();
                    // oracle offset: X beta_m
                    let offset: Vec<f64> = (0..n)
                        .map(|i| {
                            (0..p).map(|a| pop.beta_m[a] * cols[a][i]).sum::<f64>()
                        })
                        .collect();
                    let mut worst: f64 = 0.0;
                    let mut selected = 0usize;
                    let mut z = vec![0.0; n];
                    for (flat, pr) in pairs.iter().enumerate() {
                        for i in 0..n {
                            z[i] = cols[pr.a][i] * cols[pr.b][i];
                        }
                        let num: f64 =
                            z.iter().zip(&y).zip(&offset).map(|((&zi, &yi), &oi)| zi * (yi - oi)).sum();
                        let den: f64 = z.iter().map(|&v| v * v).sum();
                        let gamma_hat = num / den;
                        worst = worst.max((gamma_hat - pop.gamma_m[flat]).abs());
                        if gamma_hat.abs() > eta {
                            selected += 1;
                        }
                    }
                    (worst, selected as f64)
                })
                .collect();
            let k = per_seed.len() as f64;
            (
                per_seed.iter().map(|v| v.0).sum::<f64>() / k,
                per_seed.iter().map(|v| v.1).sum::<f64>() / k,
            )
        })
        .collect();
    let max_errors: Vec<f64> = results.iter().map(|v| v.0).collect();
    let set_sizes: Vec<f64> = results.iter().map(|v| v.1).collect();
    let log_n: Vec<f64> = n_grid.iter().map(|&n| (n as f64).ln()).collect();
    let log_e: Vec<f64> = max_errors.iter().map(|&e| e.ln()).collect();
    let (slope, _) = ols_line(&log_n, &log_e);
    Ok(ConvergenceReport {
        n_grid: n_grid.to_vec(),
        max_errors,
        slope,
        kappa,
        set_sizes,
    })
}
