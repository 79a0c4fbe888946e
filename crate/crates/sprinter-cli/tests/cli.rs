//! End-to-end tests of the command-line surface: workflows, file formats
//! and exit codes.

use std::path::Path;
use std::process::Command;

fn sprinter() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sprinter"))
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).expect("readable output")
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let status = sprinter()
            .args([
                "simulate",
                "--family",
                "binomial",
                "--structure",
                "mixed",
                "--n",
                "100",
                "--p",
                "150",
                "--beta",
                "2",
                "--gamma",
                "4",
                "--seed",
                "7",
                "--out",
            ])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(read(&a.join("train.csv")), read(&b.join("train.csv")));
    assert_eq!(read(&a.join("eval.csv")), read(&b.join("eval.csv")));
    // dimensions: n rows + header, p+1 columns
    let train = read(&a.join("train.csv"));
    assert_eq!(train.lines().count(), 101);
    assert_eq!(train.lines().next().unwrap().split(',').count(), 151);
}

#[test]
fn fit_predict_round_trip_matches_in_process_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let status = sprinter()
        .args([
            "simulate", "--family", "gaussian", "--structure", "mixed", "--n", "80", "--p", "15",
            "--beta", "1", "--gamma", "2", "--seed", "3", "--out",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let model_path = dir.path().join("model.json");
    let status = sprinter()
        .args(["fit", "--data"])
        .arg(dir.path().join("train.csv"))
        .args(["--family", "gaussian", "--m", "auto", "--cv", "5", "--seed", "11", "--out"])
        .arg(&model_path)
        .status()
        .unwrap();
    assert!(status.success());

    let pred_path = dir.path().join("pred.csv");
    let status = sprinter()
        .args(["predict", "--model"])
        .arg(&model_path)
        .arg("--data")
        .arg(dir.path().join("eval.csv"))
        .arg("--out")
        .arg(&pred_path)
        .status()
        .unwrap();
    assert!(status.success());

    // cross-path check: CLI predictions equal in-process model predictions
    // to the 10-significant-digit precision of the CSV
    let eval = sprinter_core::io::read_dataset_csv(&dir.path().join("eval.csv")).unwrap();
    let (model, _) = sprinter_core::model_file::load_model(&model_path).unwrap();
    let mu = model.predict_mean(&eval.x).unwrap();
    let pred_text = read(&pred_path);
    let mut lines = pred_text.lines();
    assert_eq!(lines.next(), Some("mean"));
    for (line, &expect) in lines.zip(&mu) {
        let got: f64 = line.parse().unwrap();
        assert!(
            (got - expect).abs() <= 1e-9 * (1.0 + expect.abs()),
            "{got} vs {expect}"
        );
    }
    // and the deviance computed from file predictions matches evaluate()
    let metrics = sprinter_core::metrics::evaluate(&model, &eval).unwrap();
    let file_mu: Vec<f64> = pred_text.lines().skip(1).map(|l| l.parse().unwrap()).collect();
    let dev_file = sprinter_core::Family::gaussian().deviance(&file_mu, &eval.y).unwrap()
        / eval.n() as f64;
    assert!((dev_file - metrics.deviance).abs() < 1e-9);
}

#[test]
fn screen_csv_has_schema_and_auto_m() {
    let dir = tempfile::tempdir().unwrap();
    sprinter()
        .args([
            "simulate", "--family", "binomial", "--structure", "mixed", "--n", "100", "--p", "20",
            "--beta", "1", "--gamma", "3", "--seed", "5", "--out",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    let out = dir.path().join("screen.csv");
    let status = sprinter()
        .args(["screen", "--data"])
        .arg(dir.path().join("train.csv"))
        .args(["--family", "binomial", "--m", "auto", "--seed", "2", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = read(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("a,b,gamma_hat"));
    // auto m at n = 100 keeps 21 pairs
    assert_eq!(text.lines().count() - 1, 21);
    // sorted by |gamma| descending
    let gammas: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap())
        .collect();
    for w in gammas.windows(2) {
        assert!(w[0].abs() >= w[1].abs());
    }
}

#[test]
fn huge_eta_yields_degenerate_model_with_note() {
    let dir = tempfile::tempdir().unwrap();
    sprinter()
        .args([
            "simulate", "--family", "gaussian", "--structure", "mixed", "--n", "60", "--p", "12",
            "--beta", "1", "--gamma", "1", "--seed", "9", "--out",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    let model_path = dir.path().join("model.json");
    let output = sprinter()
        .args(["fit", "--data"])
        .arg(dir.path().join("train.csv"))
        .args(["--family", "gaussian", "--eta", "1e9", "--seed", "1", "--out"])
        .arg(&model_path)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("no interactions"), "stderr: {stderr}");
    let mf: serde_json::Value = serde_json::from_str(&read(&model_path)).unwrap();
    assert_eq!(mf["interactions"].as_array().unwrap().len(), 0);
}

#[test]
fn exit_codes_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    // 2: usage error (unknown flag)
    let s = sprinter().args(["fit", "--nonsense"]).output().unwrap();
    assert_eq!(s.status.code(), Some(2));

    // 5: missing input file
    let s = sprinter()
        .args(["fit", "--data", "/nonexistent/x.csv", "--family", "gaussian", "--out"])
        .arg(dir.path().join("m.json"))
        .output()
        .unwrap();
    assert_eq!(s.status.code(), Some(5), "stderr: {}", String::from_utf8_lossy(&s.stderr));

    // 3: malformed data (NaN cell)
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x1,y\nNaN,1\n").unwrap();
    let s = sprinter()
        .args(["fit", "--data"])
        .arg(&bad)
        .args(["--family", "gaussian", "--out"])
        .arg(dir.path().join("m.json"))
        .output()
        .unwrap();
    assert_eq!(s.status.code(), Some(3));

    // 6: family/response mismatch (binomial expects 0/1)
    let cont = dir.path().join("cont.csv");
    std::fs::write(&cont, "x1,y\n0.5,0.7\n-0.2,0.1\n1.0,0.9\n0.1,0.4\n").unwrap();
    let s = sprinter()
        .args(["fit", "--data"])
        .arg(&cont)
        .args(["--family", "binomial", "--out"])
        .arg(dir.path().join("m.json"))
        .output()
        .unwrap();
    assert_eq!(s.status.code(), Some(6), "stderr: {}", String::from_utf8_lossy(&s.stderr));
}

#[test]
fn benchmark_writes_fixed_schema_and_handles_apl_refusal() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    // p = 15 exceeds no caps; a single MEL rep keeps this fast
    let status = sprinter()
        .args([
            "benchmark",
            "--methods",
            "mel",
            "--family",
            "binomial",
            "--p-list",
            "15",
            "--reps",
            "1",
            "--n",
            "60",
            "--seed",
            "4",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = read(&out.join("results.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("method,p,rep,seconds,deviance,auc"));
    assert_eq!(csv.lines().count(), 2);
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "mel");
    assert_eq!(row[1], "15");
    assert!(row[3].parse::<f64>().is_ok());
    let json: serde_json::Value = serde_json::from_str(&read(&out.join("results.json"))).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 1);
}

#[test]
fn ordinal_fit_and_predict_work_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    // build a small ordinal dataset by discretizing a latent gaussian
    let sim_dir = dir.path();
    sprinter()
        .args([
            "simulate", "--family", "gaussian", "--structure", "mixed", "--n", "150", "--p", "12",
            "--beta", "1", "--gamma", "2", "--seed", "13", "--out",
        ])
        .arg(sim_dir)
        .status()
        .unwrap();
    let raw = sprinter_core::io::read_dataset_csv(&sim_dir.join("train.csv")).unwrap();
    let mut cats = raw.clone();
    for v in cats.y.iter_mut() {
        *v = match *v {
            x if x < -2.0 => 1.0,
            x if x < 0.0 => 2.0,
            x if x < 2.0 => 3.0,
            _ => 4.0,
        };
    }
    // ensure every category appears
    cats.y[0] = 1.0;
    cats.y[1] = 2.0;
    cats.y[2] = 3.0;
    cats.y[3] = 4.0;
    let cat_path = dir.path().join("ordinal.csv");
    sprinter_core::io::write_dataset_csv(&cat_path, &cats).unwrap();

    let model_path = dir.path().join("ord.json");
    let status = sprinter()
        .args(["fit", "--data"])
        .arg(&cat_path)
        .args(["--family", "ordinal", "--m", "8", "--seed", "2", "--out"])
        .arg(&model_path)
        .status()
        .unwrap();
    assert!(status.success());
    let mf: serde_json::Value = serde_json::from_str(&read(&model_path)).unwrap();
    assert_eq!(mf["family"], "ordinal");
    assert_eq!(mf["cutpoints"].as_array().unwrap().len(), 3);

    let pred_path = dir.path().join("ord_pred.csv");
    let status = sprinter()
        .args(["predict", "--model"])
        .arg(&model_path)
        .arg("--data")
        .arg(&cat_path)
        .arg("--out")
        .arg(&pred_path)
        .status()
        .unwrap();
    assert!(status.success());
    for line in read(&pred_path).lines().skip(1) {
        let v: f64 = line.parse().unwrap();
        assert!((1.0..=4.0).contains(&v), "expected category in [1,4], got {v}");
    }
}

#[test]
fn oracle_report_emits_json_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let output = sprinter()
        .args(["oracle", "--kind", "linear", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    let json: serde_json::Value = serde_json::from_str(&read(&out)).unwrap();
    assert!(json["gamma_m"].is_array());
    let table = String::from_utf8_lossy(&output.stderr);
    assert!(table.contains("gamma_m"), "table missing: {table}");
}

#[test]
fn workers_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    sprinter()
        .args([
            "simulate", "--family", "gaussian", "--structure", "mixed", "--n", "50", "--p", "12",
            "--beta", "1", "--gamma", "1", "--seed", "2", "--out",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    let out = dir.path().join("s.csv");
    let status = sprinter()
        .env("SPRINTER_WORKERS", "2")
        .args(["screen", "--data"])
        .arg(dir.path().join("train.csv"))
        .args(["--family", "gaussian", "--m", "5", "--seed", "1", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(read(&out).lines().count(), 6);
}
