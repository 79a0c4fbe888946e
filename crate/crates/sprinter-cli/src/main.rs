//! Command-line interface: simulate, fit, screen, predict, benchmark.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sprinter_core::baselines::{fit_apl, fit_mel, fit_sis, APL_DEFAULT_P_CAP};
use sprinter_core::bench::bench_screen_throughput;
use sprinter_core::error::Error;
use sprinter_core::io::{
    categories_from_response, predictions_to_csv, read_dataset_csv, write_dataset_csv,
    write_screen_csv,
};
use sprinter_core::metrics::evaluate;
use sprinter_core::model_file::{config_hash, load_model, save_model, to_model_file, Provenance};
use sprinter_core::ordinal::{sprinter_ordinal, OrdinalSprinterConfig};
use sprinter_core::pipeline::{sprinter_fit, Selection, SprinterConfig, Tuning};
use sprinter_core::screen::default_m;
use sprinter_core::simulate::{simulate, SimDesign, Structure};
use sprinter_core::{Dataset, Family, FamilyKind, SelectionRule};

#[derive(Parser)]
#[command(
    name = "sprinter",
    about = "Reluctant pairwise-interaction selection for generalized linear models",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Gaussian,
    Binomial,
    Poisson,
    Ordinal,
}

impl FamilyArg {
    fn glm_kind(self) -> Option<FamilyKind> {
        match self {
            FamilyArg::Gaussian => Some(FamilyKind::Gaussian),
            FamilyArg::Binomial => Some(FamilyKind::Binomial),
            FamilyArg::Poisson => Some(FamilyKind::Poisson),
            FamilyArg::Ordinal => None,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StructureArg {
    Mixed,
    Hierarchical,
    AntiHierarchical,
}

impl From<StructureArg> for Structure {
    fn from(s: StructureArg) -> Structure {
        match s {
            StructureArg::Mixed => Structure::Mixed,
            StructureArg::Hierarchical => Structure::Hierarchical,
            StructureArg::AntiHierarchical => Structure::AntiHierarchical,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TuningArg {
    Sequential,
    Joint,
}

#[derive(Args)]
struct SelectionArgs {
    /// Screening budget: `auto` for floor(n / ln n) or an explicit count.
    #[arg(long, default_value = "auto", conflicts_with = "eta")]
    m: String,
    /// Threshold mode: keep every |gamma| strictly above this value.
    #[arg(long)]
    eta: Option<f64>,
    /// Drop square candidates x_a^2 from the screen.
    #[arg(long)]
    exclude_squares: bool,
}

impl SelectionArgs {
    fn resolve(&self) -> Result<Selection, Error> {
        if let Some(eta) = self.eta {
            if !(eta >= 0.0) {
                return Err(Error::InvalidInput("--eta must be >= 0".into()));
            }
            return Ok(Selection::Threshold(eta));
        }
        match self.m.as_str() {
            "auto" => Ok(Selection::AutoTopM),
            s => s.parse::<usize>().map(Selection::TopM).map_err(|_| {
                Error::InvalidInput(format!("--m must be 'auto' or an integer, got '{s}'"))
            }),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate train/eval CSVs from a planted-interaction design.
    Simulate {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, value_enum)]
        structure: StructureArg,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        gamma: f64,
        /// Predictor variance; defaults to 1 (0.5 for poisson).
        #[arg(long, value_name = "VAR")]
        x_var: Option<f64>,
        #[arg(long)]
        seed: u64,
        /// Output directory for train.csv and eval.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the full pipeline and save the model as JSON.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[command(flatten)]
        selection: SelectionArgs,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "sequential")]
        tuning: TuningArg,
        #[arg(long, default_value_t = 5)]
        cv: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "SPRINTER_WORKERS")]
        workers: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run steps 1-3 only and dump the screened pairs as CSV.
    Screen {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[command(flatten)]
        selection: SelectionArgs,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 5)]
        cv: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "SPRINTER_WORKERS")]
        workers: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict means for new data from a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Wall-clock / deviance / AUC comparison grid across methods.
    Benchmark {
        /// Comma-separated subset of sprinter,mel,apl,sis.
        #[arg(long, default_value = "sprinter,mel,apl,sis")]
        methods: String,
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// Comma-separated list of main-effect counts.
        #[arg(long, value_name = "P1,P2,...")]
        p_list: String,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, value_enum, default_value = "mixed")]
        structure: StructureArg,
        #[arg(long, default_value_t = 4.0)]
        beta: f64,
        #[arg(long, default_value_t = 4.0)]
        gamma: f64,
        #[arg(long, default_value_t = 5)]
        cv: usize,
        #[arg(long, env = "SPRINTER_WORKERS")]
        workers: Option<usize>,
        /// Output directory for results.csv and results.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Time one screening pass on synthetic data; emits a JSON line.
    BenchScreen {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long)]
        p: usize,
        #[arg(long, value_enum, default_value = "binomial")]
        family: FamilyArg,
        #[arg(long, env = "SPRINTER_WORKERS")]
        workers: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Population-identity and error-decay reports (JSON + table).
    Oracle {
        /// linear: closed-form identity checks; convergence: error decay.
        #[arg(long, default_value = "linear")]
        kind: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => 5,
        Error::FamilyMismatch(_) => 6,
        Error::Numerical(_) => 4,
        Error::InvalidInput(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn load_glm_dataset(path: &Path, kind: FamilyKind) -> Result<Dataset, Error> {
    let data = read_dataset_csv(path)?;
    Family::new(kind).validate_response(&data.y)?;
    Ok(data)
}

fn run(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Simulate { family, structure, n, p, beta, gamma, x_var, seed, out } => {
            let kind = family.glm_kind().ok_or_else(|| {
                Error::InvalidInput("simulate supports gaussian | binomial | poisson".into())
            })?;
            let mut design = SimDesign::new(kind, n, p, structure.into(), beta, gamma, seed);
            if let Some(v) = x_var {
                if v <= 0.0 {
                    return Err(Error::InvalidInput("--x-var must be positive".into()));
                }
                design.x_variance = v;
            }
            let sim = simulate(&design)?;
            std::fs::create_dir_all(&out)?;
            write_dataset_csv(&out.join("train.csv"), &sim.train)?;
            write_dataset_csv(&out.join("eval.csv"), &sim.eval)?;
            eprintln!(
                "wrote {} ({} x {}) and {} ({} rows)",
                out.join("train.csv").display(),
                sim.train.n(),
                sim.train.p() + 1,
                out.join("eval.csv").display(),
                sim.eval.n()
            );
            Ok(())
        }
        Command::Fit { data, family, selection, alpha, tuning, cv, seed, workers, out } => {
            let sel = selection.resolve()?;
            let dataset = read_dataset_csv(&data)?;
            let hash_input = format!(
                "fit family={} sel={sel:?} alpha={alpha} tuning={} cv={cv} seed={seed}",
                family_token(family),
                matches!(tuning, TuningArg::Joint) as u8,
            );
            let provenance = Provenance::new(seed, config_hash(&hash_input));
            let model = match family.glm_kind() {
                Some(kind) => {
                    Family::new(kind).validate_response(&dataset.y)?;
                    let config = SprinterConfig {
                        selection: sel,
                        alpha,
                        cv_folds: cv,
                        tuning: match tuning {
                            TuningArg::Sequential => Tuning::Sequential,
                            TuningArg::Joint => Tuning::Joint,
                        },
                        seed,
                        workers,
                        include_squares: !selection.exclude_squares,
                        ..SprinterConfig::default()
                    };
                    let fitted = sprinter_fit(Family::new(kind), &dataset, &config)?;
                    if fitted.degenerate {
                        eprintln!(
                            "note: screening selected no interactions; model is main-effects only"
                        );
                    }
                    fitted.model
                }
                None => {
                    let y = categories_from_response(&dataset.y)?;
                    let m = match sel {
                        Selection::AutoTopM => None,
                        Selection::TopM(m) => Some(m),
                        Selection::Threshold(_) => {
                            return Err(Error::InvalidInput(
                                "ordinal fits support top-m selection only".into(),
                            ))
                        }
                    };
                    let config = OrdinalSprinterConfig { m, alpha, cv_folds: cv, seed, workers };
                    let fitted = sprinter_ordinal(&dataset.x, &y, &config)?;
                    if fitted.degenerate {
                        eprintln!(
                            "note: screening selected no interactions; model is main-effects only"
                        );
                    }
                    fitted.model
                }
            };
            save_model(&out, &to_model_file(&model, provenance))?;
            eprintln!("wrote {}", out.display());
            Ok(())
        }
        Command::Screen { data, family, selection, alpha, cv, seed, workers, out } => {
            let kind = family.glm_kind().ok_or_else(|| {
                Error::InvalidInput("screen supports gaussian | binomial | poisson".into())
            })?;
            let dataset = load_glm_dataset(&data, kind)?;
            let fam = Family::new(kind);
            let rule = match selection.resolve()? {
                Selection::AutoTopM => SelectionRule::TopM(default_m(dataset.n())),
                Selection::TopM(m) => SelectionRule::TopM(m),
                Selection::Threshold(eta) => SelectionRule::Threshold(eta),
            };
            if let SelectionRule::TopM(m) = rule {
                let q = sprinter_core::PairIndex::count(dataset.p());
                if m > q {
                    eprintln!("warning: m = {m} exceeds the {q} candidates; clamping");
                }
            }
            let (xs, _) = dataset.standardized();
            let opts = sprinter_core::solver::FitOptions {
                alpha,
                ..sprinter_core::solver::FitOptions::default()
            };
            let (step1, _) =
                sprinter_core::solver::fit_cv_select(fam, &xs, &dataset.y, None, cv, seed, &opts)?;
            let offset = step1.predict_theta(&xs, None)?;
            let res = sprinter_core::screen::screen_with_squares(
                fam,
                &xs,
                &dataset.y,
                &offset,
                rule,
                workers,
                !selection.exclude_squares,
            )?;
            write_screen_csv(&out, &res)?;
            eprintln!(
                "scanned {} candidates, kept {}, {} newton failures; wrote {}",
                res.n_scanned,
                res.selected.len(),
                res.newton_failures,
                out.display()
            );
            Ok(())
        }
        Command::Predict { model, data, out } => {
            let (m, _) = load_model(&model)?;
            let dataset = read_dataset_csv(&data)?;
            let mu = m.predict_mean(&dataset.x)?;
            std::fs::write(&out, predictions_to_csv(&mu))?;
            eprintln!("wrote {} predictions to {}", mu.len(), out.display());
            Ok(())
        }
        Command::Benchmark {
            methods,
            family,
            p_list,
            reps,
            seed,
            n,
            structure,
            beta,
            gamma,
            cv,
            workers,
            out,
        } => {
            let kind = family.glm_kind().ok_or_else(|| {
                Error::InvalidInput("benchmark supports gaussian | binomial | poisson".into())
            })?;
            let methods: Vec<&str> = methods.split(',').map(str::trim).collect();
            for m in &methods {
                if !["sprinter", "mel", "apl", "sis"].contains(m) {
                    return Err(Error::InvalidInput(format!("unknown method '{m}'")));
                }
            }
            let p_values: Vec<usize> = p_list
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Error::InvalidInput(format!("bad p value '{s}'")))
                })
                .collect::<Result<_, _>>()?;
            run_benchmark(BenchmarkPlan {
                methods: methods.iter().map(|s| s.to_string()).collect(),
                kind,
                p_values,
                reps,
                seed,
                n,
                structure: structure.into(),
                beta,
                gamma,
                cv,
                workers,
                out,
            })
        }
        Command::BenchScreen { n, p, family, workers, seed } => {
            let kind = family.glm_kind().ok_or_else(|| {
                Error::InvalidInput("bench-screen supports gaussian | binomial | poisson".into())
            })?;
            let workers = workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |v| v.get()));
            let b = bench_screen_throughput(n, p, kind, workers, seed)?;
            println!("{}", serde_json::to_string(&b)?);
            Ok(())
        }
        Command::Oracle { kind, seed, out } => run_oracle(&kind, seed, out.as_deref()),
    }
}

fn family_token(f: FamilyArg) -> &'static str {
    match f {
        FamilyArg::Gaussian => "gaussian",
        FamilyArg::Binomial => "binomial",
        FamilyArg::Poisson => "poisson",
        FamilyArg::Ordinal => "ordinal",
    }
}

struct BenchmarkPlan {
    methods: Vec<String>,
    kind: FamilyKind,
    p_values: Vec<usize>,
    reps: usize,
    seed: u64,
    n: usize,
    structure: Structure,
    beta: f64,
    gamma: f64,
    cv: usize,
    workers: Option<usize>,
    out: PathBuf,
}

#[derive(Serialize)]
struct BenchRow {
    method: String,
    p: usize,
    rep: usize,
    seconds: Option<f64>,
    deviance: Option<f64>,
    auc: Option<f64>,
    skipped: bool,
}

fn run_benchmark(plan: BenchmarkPlan) -> Result<(), Error> {
    let fam = Family::new(plan.kind);
    let mut rows: Vec<BenchRow> = Vec::new();
    for &p in &plan.p_values {
        for rep in 0..plan.reps {
            let design_seed = plan
                .seed
                .wrapping_mul(1_000_003)
                .wrapping_add((p as u64) << 20)
                .wrapping_add(rep as u64);
            let design = SimDesign::new(
                plan.kind,
                plan.n,
                p,
                plan.structure,
                plan.beta,
                plan.gamma,
                design_seed,
            );
            let sim = simulate(&design)?;
            for method in &plan.methods {
                let start = Instant::now();
                let model = match method.as_str() {
                    "sprinter" => {
                        let config = SprinterConfig {
                            cv_folds: plan.cv,
                            seed: design_seed,
                            workers: plan.workers,
                            ..SprinterConfig::default()
                        };
                        Some(sprinter_fit(fam, &sim.train, &config)?.model)
                    }
                    "mel" => Some(fit_mel(fam, &sim.train, plan.cv, design_seed, 1.0)?.2),
                    "apl" => {
                        match fit_apl(fam, &sim.train, plan.cv, design_seed, 1.0, APL_DEFAULT_P_CAP)
                        {
                            Ok(apl) => Some(apl.model),
                            Err(Error::InvalidInput(msg)) => {
                                eprintln!("apl skipped at p = {p}: {msg}");
                                None
                            }
                            Err(e) => return Err(e),
                        }
                    }
                    "sis" => Some(
                        fit_sis(fam, &sim.train, default_m(plan.n), plan.cv, design_seed, 1.0)?
                            .model,
                    ),
                    _ => unreachable!("validated above"),
                };
                let seconds = start.elapsed().as_secs_f64();
                match model {
                    Some(model) => {
                        let metrics = evaluate(&model, &sim.eval)?;
                        rows.push(BenchRow {
                            method: method.clone(),
                            p,
                            rep,
                            seconds: Some(seconds),
                            deviance: Some(metrics.deviance),
                            auc: metrics.auc,
                            skipped: false,
                        });
                    }
                    None => rows.push(BenchRow {
                        method: method.clone(),
                        p,
                        rep,
                        seconds: None,
                        deviance: None,
                        auc: None,
                        skipped: true,
                    }),
                }
            }
        }
    }
    std::fs::create_dir_all(&plan.out)?;
    let mut csv = String::from("method,p,rep,seconds,deviance,auc\n");
    let fmt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.method,
            r.p,
            r.rep,
            fmt(r.seconds),
            fmt(r.deviance),
            fmt(r.auc)
        ));
    }
    std::fs::write(plan.out.join("results.csv"), csv)?;
    std::fs::write(plan.out.join("results.json"), serde_json::to_string_pretty(&rows)?)?;

    // mean +/- sd summary per (method, p) on stderr
    for &p in &plan.p_values {
        for method in &plan.methods {
            let cell: Vec<&BenchRow> = rows
                .iter()
                .filter(|r| r.p == p && &r.method == method && !r.skipped)
                .collect();
            if cell.is_empty() {
                eprintln!("{method:>9} p={p:<5} skipped");
                continue;
            }
            let mean = |f: &dyn Fn(&BenchRow) -> f64| {
                cell.iter().map(|r| f(r)).sum::<f64>() / cell.len() as f64
            };
            let t = mean(&|r| r.seconds.unwrap());
            let d = mean(&|r| r.deviance.unwrap());
            let td = (cell
                .iter()
                .map(|r| (r.seconds.unwrap() - t).powi(2))
                .sum::<f64>()
                / cell.len() as f64)
                .sqrt();
            eprintln!("{method:>9} p={p:<5} time {t:8.3}s +/- {td:6.3}  deviance {d:8.4}");
        }
    }
    eprintln!("wrote {}", plan.out.join("results.csv").display());
    Ok(())
}

fn run_oracle(kind: &str, seed: u64, out: Option<&Path>) -> Result<(), Error> {
    use sprinter_core::population::*;
    use sprinter_core::PairIndex;
    match kind {
        "linear" => {
            let spec = PopulationSpec {
                x_law: XLaw::GaussianIid { p: 6 },
                beta_star: vec![1.0, -0.5, 0.0, 0.0, 0.3, 0.0],
                gamma_star: vec![
                    (PairIndex::new(0, 3), 1.5),
                    (PairIndex::new(2, 2), -0.8),
                    (PairIndex::new(4, 5), 0.6),
                ],
                family: FamilyKind::Gaussian,
            };
            let pop = linear_population_quantities(&spec)?;
            let json = serde_json::to_string_pretty(&pop)?;
            if let Some(path) = out {
                std::fs::write(path, &json)?;
                eprintln!("wrote {}", path.display());
            } else {
                println!("{json}");
            }
            eprintln!("pair      gamma_m    gamma_check  cov_l      psi_jj");
            for (i, pr) in pop.pairs.iter().enumerate() {
                if pop.gamma_m[i].abs() > 1e-12 {
                    eprintln!(
                        "({},{})   {:>9.5}  {:>9.5}    {:>9.5}  {:>9.5}",
                        pr.a + 1,
                        pr.b + 1,
                        pop.gamma_m[i],
                        pop.gamma_check[i],
                        pop.cov_l[i],
                        pop.psi_diag[i]
                    );
                }
            }
            Ok(())
        }
        "convergence" => {
            let spec = PopulationSpec {
                x_law: XLaw::GaussianIid { p: 10 },
                beta_star: vec![1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                gamma_star: vec![(PairIndex::new(2, 3), 1.0), (PairIndex::new(4, 5), -0.7)],
                family: FamilyKind::Gaussian,
            };
            let seeds: Vec<u64> = (0..10).map(|i| seed.wrapping_add(i)).collect();
            let report =
                empirical_convergence_check(&spec, &[500, 1000, 2000, 4000, 8000], &seeds, 0.25)?;
            if let Some(path) = out {
                std::fs::write(path, report.to_json())?;
                eprintln!("wrote {}", path.display());
            } else {
                println!("{}", report.to_json());
            }
            eprint!("{}", report.to_table());
            Ok(())
        }
        other => Err(Error::InvalidInput(format!(
            "unknown oracle kind '{other}' (expected linear | convergence)"
        ))),
    }
}
