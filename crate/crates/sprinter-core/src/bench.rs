//! Screening throughput measurement. Not part of the test suite; run via
//! the CLI's bench command.

use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::data::{ColMatrix, Dataset};
use crate::error::Result;
use crate::family::{Family, FamilyKind};
use crate::screen::{default_m, screen, SelectionRule};
use crate::simulate::{derive_rng, sample_standard_normal};

#[derive(Debug, Clone, Serialize)]
pub struct ScreenBench {
    pub family: String,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub m: usize,
    pub workers: usize,
    pub seconds: f64,
    pub pairs_per_second: f64,
    pub peak_rss_mb: Option<f64>,
    pub newton_failures: usize,
}

/// Peak resident set size of this process in MiB (Linux). Falls back to
/// the current RSS on kernels that do not expose the high-water mark.
pub fn peak_rss_mb() -> Option<f64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let parse = |prefix: &str| -> Option<f64> {
        for line in status.lines() {
            if let Some(rest) = line.strip_prefix(prefix) {
                let kb: f64 = rest.trim().trim_end_matches("kB").trim().parse().ok()?;
                return Some(kb / 1024.0);
            }
        }
        None
    };
    parse("VmHWM:").or_else(|| parse("VmRSS:"))
}

/// Generates synthetic data and times one full screening pass.
pub fn bench_screen_throughput(
    n: usize,
    p: usize,
    kind: FamilyKind,
    workers: usize,
    seed: u64,
) -> Result<ScreenBench> {
    let family = Family::new(kind);
    let mut rng = derive_rng(seed, "bench", 0);
    let mut x = ColMatrix::zeros(n, p);
    for j in 0..p {
        for i in 0..n {
            x.set(i, j, sample_standard_normal(&mut rng));
        }
    }
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let t = 0.5 * x.get(i, 0) + 0.8 * x.get(i, 1) * x.get(i, 2);
            match kind {
                FamilyKind::Gaussian => t + sample_standard_normal(&mut rng),
                FamilyKind::Binomial => f64::from(rng.random::<f64>() < family.mean(t)),
                FamilyKind::Poisson => family.mean(t.min(10.0)).round(),
            }
        })
        .collect();
    let data = Dataset::new(x, y)?;
    let (xs, _) = data.standardized();
    let offset = vec![0.0; n];
    let m = default_m(n);

    let start = Instant::now();
    let res = screen(family, &xs, &data.y, &offset, SelectionRule::TopM(m), Some(workers))?;
    let seconds = start.elapsed().as_secs_f64();
    Ok(ScreenBench {
        family: kind.token().to_string(),
        n,
        p,
        q: res.n_scanned,
        m,
        workers,
        seconds,
        pairs_per_second: res.n_scanned as f64 / seconds,
        peak_rss_mb: peak_rss_mb(),
        newton_failures: res.newton_failures,
    })
}
