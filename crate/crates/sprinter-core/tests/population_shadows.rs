//! Empirical shadows of the population-level screening guarantees: with a
//! clear gap in the population utilities the empirical top-m contains the
//! population top-h, and under graded signals the set retained at the
//! shrinking threshold eta_n grows with n.

mod common;

use sprinter_core::data::{ColMatrix, Dataset};
use sprinter_core::family::{Family, FamilyKind};
use sprinter_core::pairs::PairIndex;
use sprinter_core::population::{
    glm_population_quantities, linear_population_quantities, PopulationSpec, XLaw,
};
use sprinter_core::screen::{screen, SelectionRule};
use sprinter_core::simulate::{derive_rng, sample_standard_normal};

fn gaussian_design(spec: &PopulationSpec, n: usize, seed: u64) -> Dataset {
    let p = spec.x_law.p();
    let mut rng = derive_rng(seed, "shadow", 0);
    let mut x = ColMatrix::zeros(n, p);
    for j in 0..p {
        for i in 0..n {
            x.set(i, j, sample_standard_normal(&mut rng));
        }
    }
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let mut t = 0.0;
            for (a, &b) in spec.beta_star.iter().enumerate() {
                t += b * x.get(i, a);
            }
            for &(pr, g) in &spec.gamma_star {
                t += g * x.get(i, pr.a) * x.get(i, pr.b);
            }
            t + sample_standard_normal(&mut rng)
        })
        .collect();
    Dataset::new(x, y).unwrap()
}

#[test]
fn population_top_h_is_inside_empirical_top_m() {
    // three planted pairs with well-separated weights: the population
    // top-h set must be contained in the empirical top-m for m >= h
    let p = 8;
    let spec = PopulationSpec {
        x_law: XLaw::GaussianIid { p },
        beta_star: vec![0.0; p],
        gamma_star: vec![
            (PairIndex::new(0, 1), 2.0),
            (PairIndex::new(2, 3), 1.5),
            (PairIndex::new(4, 5), 1.0),
        ],
        family: FamilyKind::Gaussian,
    };
    let pop = linear_population_quantities(&spec).unwrap();
    let mut ranked: Vec<(usize, f64)> =
        pop.gamma_m.iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    let h = 3;
    let top_h: std::collections::BTreeSet<usize> =
        ranked[..h].iter().map(|&(f, _)| f).collect();

    for seed in 0..10u64 {
        let data = gaussian_design(&spec, 4000, 100 + seed);
        let (xs, _) = data.standardized();
        // oracle offset: beta_m = 0 here
        let offset = vec![0.0; data.n()];
        for m in [h, h + 2, h + 10] {
            let res = screen(
                Family::gaussian(),
                &xs,
                &data.y,
                &offset,
                SelectionRule::TopM(m),
                Some(1),
            )
            .unwrap();
            let kept: std::collections::BTreeSet<usize> =
                res.selected.iter().map(|&(pr, _)| pr.flat(p)).collect();
            assert!(
                top_h.is_subset(&kept),
                "seed {seed} m {m}: population top-{h} not retained"
            );
        }
    }
}

#[test]
fn threshold_set_grows_with_n_under_graded_signals() {
    // a dense ladder of signal weights straddling the shrinking threshold
    // eta_n = n^-kappa: as n grows, more population signals clear it, so
    // the retained set grows despite the shrinking estimation noise
    let p = 16;
    let kappa = 0.25;
    let mut gamma_star = Vec::new();
    let mut k = 0usize;
    'outer: for a in 0..p {
        for b in (a + 1)..p {
            if (a, b) == (0, 1) || k >= 30 {
                // skip nothing special; just cap at 30 pairs
            }
            if k >= 30 {
                break 'outer;
            }
            gamma_star.push((PairIndex::new(a, b), 0.8 * ((k + 1) as f64).powf(-0.7)));
            k += 1;
        }
    }
    let spec = PopulationSpec {
        x_law: XLaw::GaussianIid { p },
        beta_star: vec![0.0; p],
        gamma_star,
        family: FamilyKind::Gaussian,
    };
    // below n ~ 1000 estimation noise swamps the population crossings
    let n_grid = [1000usize, 4000, 16000];
    let mut sizes = Vec::new();
    for &n in &n_grid {
        let eta = (n as f64).powf(-kappa);
        let mut total = 0usize;
        let seeds = 6;
        for seed in 0..seeds {
            let data = gaussian_design(&spec, n, 200 + seed);
            let (xs, _) = data.standardized();
            let offset = vec![0.0; n];
            let res = screen(
                Family::gaussian(),
                &xs,
                &data.y,
                &offset,
                SelectionRule::Threshold(eta),
                Some(1),
            )
            .unwrap();
            total += res.selected.len();
        }
        sizes.push(total as f64 / seeds as f64);
    }
    println!("threshold sets at eta_n = n^-{kappa}: {sizes:?}");
    // growth dominates the noise jitter
    for w in sizes.windows(2) {
        assert!(w[1] >= w[0] - 1.5, "selected-set sizes collapsed: {sizes:?}");
    }
    assert!(
        sizes.last().unwrap() > &(sizes[0] + 5.0),
        "no growth observed: {sizes:?}"
    );
}

#[test]
fn purity_single_pure_interaction_ranks_first_across_seeds() {
    // gaussian design, Phi = 0, one true interaction outside every
    // main-effect span: the pure pair must attain the largest utility in
    // at least 95% of seeds
    use sprinter_core::pipeline::{sprinter_fit, SprinterConfig};
    let planted = PairIndex::new(4, 9);
    let mut wins = 0usize;
    let total = 50u64;
    for seed in 0..total {
        let spec = PopulationSpec {
            x_law: XLaw::GaussianIid { p: 20 },
            beta_star: vec![0.0; 20],
            gamma_star: vec![(planted, 2.0)],
            family: FamilyKind::Gaussian,
        };
        let data = gaussian_design(&spec, 2000, 500 + seed);
        let cfg = SprinterConfig { seed, workers: Some(1), ..Default::default() };
        let fitted = sprinter_fit(Family::gaussian(), &data, &cfg).unwrap();
        if fitted.screen.selected.first().map(|&(pr, _)| pr) == Some(planted) {
            wins += 1;
        }
    }
    assert!(
        wins as f64 >= 0.95 * total as f64,
        "pure pair ranked first in only {wins}/{total} seeds"
    );
}

#[test]
fn theorem_two_bound_holds_empirically() {
    // |gamma_m| >= c |cov_l| with c = 1 / E[m_j Z_j^2], checked on a
    // planted binomial spec by two Monte-Carlo routes
    let pair = PairIndex::new(0, 1);
    let spec = PopulationSpec {
        x_law: XLaw::GaussianIid { p: 2 },
        beta_star: vec![0.4, -0.2],
        gamma_star: vec![(pair, 0.8)],
        family: FamilyKind::Binomial,
    };
    let pt = glm_population_quantities(&spec, pair, 400_000, 31).unwrap();
    assert!(pt.e_mj_z2 > 0.0);
    let c = 1.0 / pt.e_mj_z2;
    assert!(
        pt.gamma_m.abs() >= c * pt.cov_l.abs() - 3.0 * pt.se_gamma_m,
        "bound violated: |gamma_m| {} < c|cov_l| {}",
        pt.gamma_m.abs(),
        c * pt.cov_l.abs()
    );
    // the identity behind the bound, up to Monte-Carlo error
    let gap = (pt.cov_l - pt.gamma_m * pt.e_mj_z2).abs();
    assert!(gap < 1e-3 * (1.0 + pt.cov_l.abs()), "identity gap {gap}");
}
