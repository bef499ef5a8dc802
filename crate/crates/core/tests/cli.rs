use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use subspace_anomaly::detect::{run_detector, Method};
use subspace_anomaly::eval::{detector_seed, sweep_rank, trial_seed, SweepConfig};
use subspace_anomaly::io::{read_labels, read_matrix_csv};
use subspace_anomaly::traffic::{assemble_scenario, ScenarioConfig};
use subspace_anomaly::Matrix;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_subspace-anomaly"))
}

fn run(args: &[&str], out: &Path) -> Output {
    let output = bin().args(args).arg("--output").arg(out).output().unwrap();
    assert!(
        output.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

const SMALL: [&str; 10] = [
    "--m",
    "30",
    "--n",
    "60",
    "--t",
    "120",
    "--r-true",
    "5",
    "--master-seed",
    "4",
];

fn small_scenario() -> ScenarioConfig {
    ScenarioConfig {
        m: 30,
        n: 60,
        t: 120,
        r_true: 5,
        anomaly_count: 4,
        seed: trial_seed(4, 0),
        ..ScenarioConfig::default()
    }
}

#[test]
fn generate_writes_exact_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("sc");
    let mut args = vec!["generate"];
    args.extend(SMALL);
    run(&args, &dir);
    for f in [
        "Y.csv",
        "R.csv",
        "X.csv",
        "A.csv",
        "V.csv",
        "labels.csv",
        "config.echo",
    ] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let expected = assemble_scenario(&small_scenario()).unwrap();
    let y = read_matrix_csv(dir.join("Y.csv")).unwrap();
    assert_eq!(y, expected.y);
    assert_eq!(
        read_labels(dir.join("labels.csv")).unwrap(),
        expected.labels
    );
    // Y = R(X + A) + V holds for the written files
    let r = read_matrix_csv(dir.join("R.csv")).unwrap();
    let x = read_matrix_csv(dir.join("X.csv")).unwrap();
    let a = read_matrix_csv(dir.join("A.csv")).unwrap();
    let v = read_matrix_csv(dir.join("V.csv")).unwrap();
    let rebuilt = r.matmul(&x.add(&a).unwrap()).unwrap().add(&v).unwrap();
    assert_eq!(rebuilt, y);
}

#[test]
fn detect_default_scenario_reports_every_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = tmp.path().join("sc");
    run(&["generate"], &sc);
    let det = tmp.path().join("det");
    let out = run(
        &[
            "detect",
            "--input",
            sc.to_str().unwrap(),
            "--method",
            "pca",
            "--rank",
            "24",
        ],
        &det,
    );
    let report = fs::read_to_string(det.join("report.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[0], "snapshot,spe,q_beta,flag,label");
    assert_eq!(lines.len(), 641);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 5));
    assert!(String::from_utf8_lossy(&out.stdout).contains("detection rate"));
}

#[test]
fn detect_from_files_matches_library() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = tmp.path().join("sc");
    let mut args = vec!["generate"];
    args.extend(SMALL);
    run(&args, &sc);

    let scenario = assemble_scenario(&small_scenario()).unwrap();
    for method in Method::ALL {
        let det = tmp.path().join(format!("det-{method}"));
        let mut args = vec!["detect", "--input", sc.to_str().unwrap(), "--rank", "5"];
        args.extend(["--method", method.tag(), "--master-seed", "4"]);
        run(&args, &det);
        let cfg = subspace_anomaly::detect::DetectorConfig {
            method,
            rank: 5,
            seed: detector_seed(scenario.config.seed),
            ..Default::default()
        };
        let expected = run_detector(&scenario.y, &cfg).unwrap();
        let report = fs::read_to_string(det.join("report.csv")).unwrap();
        let flags: Vec<bool> = report
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(3).unwrap() == "1")
            .collect();
        assert_eq!(flags, expected.flags, "{method}");
        let spe: Vec<f64> = report
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert_eq!(spe, expected.spe, "{method}");
    }
}

#[test]
fn detect_accepts_plain_files() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = tmp.path().join("sc");
    let mut args = vec!["generate"];
    args.extend(SMALL);
    run(&args, &sc);
    let y = sc.join("Y.csv");
    let det = tmp.path().join("det");
    run(
        &["detect", "--input", y.to_str().unwrap(), "--rank", "5"],
        &det,
    );
    let report = fs::read_to_string(det.join("report.csv")).unwrap();
    // no labels: last column empty
    assert!(report.lines().skip(1).all(|l| l.ends_with(',')));
}

#[test]
fn sweep_single_point_all_methods() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sw");
    run(&["sweep", "--trials", "1", "--ranks", "24"], &out);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    let methods: Vec<&str> = rows.iter().map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(methods, ["pca", "rbad", "sspbad"]);
    let mean = fs::read_to_string(out.join("sweep_mean.csv")).unwrap();
    assert_eq!(mean.lines().count(), 4);

    // same numbers as the library
    let result = sweep_rank(&SweepConfig {
        ranks: vec![24],
        trials: 1,
        ..SweepConfig::default()
    })
    .unwrap();
    assert_eq!(csv, subspace_anomaly::cli::sweep_csv(&result));
}

#[test]
fn config_echo_reproduces_run() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("a");
    let mut args = vec![
        "sweep",
        "--trials",
        "2",
        "--ranks",
        "3,6",
        "--methods",
        "pca,sspbad",
    ];
    args.extend(SMALL);
    run(&args, &first);
    let echo = first.join("config.echo");
    let second = tmp.path().join("b");
    run(&["sweep", "--config", echo.to_str().unwrap()], &second);
    assert_eq!(
        fs::read(first.join("sweep.csv")).unwrap(),
        fs::read(second.join("sweep.csv")).unwrap()
    );
    let echo_a = fs::read_to_string(&echo).unwrap();
    let echo_b = fs::read_to_string(second.join("config.echo")).unwrap();
    assert_eq!(echo_a.replace("/a\n", "/b\n"), echo_b);
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(
        &cfg,
        "# small\nm = 30\nn = 60\nt = 120\nr_true = 5\nrank = 7\n",
    )
    .unwrap();
    let out = tmp.path().join("v");
    run(
        &[
            "variances",
            "--config",
            cfg.to_str().unwrap(),
            "--rank",
            "5",
        ],
        &out,
    );
    let echo = fs::read_to_string(out.join("config.echo")).unwrap();
    assert!(echo.contains("\nrank = 5\n"));
    assert!(echo.contains("\nm = 30\n"));
    let table = fs::read_to_string(out.join("variances.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(
        lines[0],
        "index,pca,rbad,sspbad_gaussian,sspbad_bernoulli-half,sspbad_markov-column-stochastic,sspbad_rademacher"
    );
    assert_eq!(lines.len(), 31);
}

#[test]
fn variances_sums_match_pca_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("v");
    let mut args = vec!["variances", "--rank", "5", "--centered", "true"];
    args.extend(SMALL);
    run(&args, &out);
    let table = read_matrix_csv_with_header(&out.join("variances.csv"));
    let total = |j: usize| (0..table.rows()).map(|i| table[(i, j)]).sum::<f64>();
    for j in 2..table.cols() {
        assert!((total(j) - total(1)).abs() <= 1e-9 * total(1));
    }
}

fn read_matrix_csv_with_header(path: &Path) -> Matrix {
    let text = fs::read_to_string(path).unwrap();
    let body: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
    subspace_anomaly::io::parse_matrix_csv(&body).unwrap()
}

#[test]
fn failures_exit_nonzero_with_one_line() {
    let tmp = tempfile::tempdir().unwrap();

    let out = bin().arg("frobnicate").output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    let out = bin()
        .arg("detect")
        .arg("--input")
        .arg(tmp.path().join("none.csv"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error:"));

    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "1,2,3\n4,5\n").unwrap();
    let out = bin()
        .args(["detect", "--input"])
        .arg(&bad)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let cfg = tmp.path().join("bad.cfg");
    fs::write(&cfg, "m = 30\nwibble = 3\n").unwrap();
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn failed_run_leaves_no_partial_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("never");
    // rank above m is rejected after parsing succeeds
    let status = bin()
        .args([
            "sweep", "--m", "30", "--n", "60", "--t", "120", "--r-true", "5", "--ranks", "40",
        ])
        .arg("--output")
        .arg(&out)
        .output()
        .unwrap();
    assert!(!status.status.success());
    assert!(!out.exists());
}
