use std::path::{Path, PathBuf};
use std::process::Command;

use ssc_omp::nalgebra::DMatrix;
use ssc_omp::synth::{independent_arrangement, sample_dataset};
use ssc_omp::Dataset;
use ssc_omp_cli::config::{ArrangementKind, ExperimentConfig};
use ssc_omp_cli::io::{read_csv_matrix, read_labels, write_binary_matrix};
use ssc_omp_cli::run::{evaluate, cluster_seed, run_cluster, run_conditions, run_sweep, trial_seed, SWEEP_HEADER};
use ssc_omp_cli::{CliError, Mode};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ssc-omp"))
}

/// The bundled two-subspace fixture, rebuilt from its generator.
fn two_planes() -> Dataset {
    let arr = independent_arrangement(&[2, 2], 5, 7).unwrap();
    sample_dataset(&arr, &[10, 10], 8).unwrap()
}

#[test]
fn fixture_matches_its_generator() {
    let data = two_planes();
    let points = fixture("two_planes.csv");
    let labels = fixture("two_planes.labels");
    if std::env::var_os("REGENERATE_FIXTURES").is_some() {
        let m = data.points();
        let header: Vec<String> = (0..m.ncols()).map(|j| format!("p{j}")).collect();
        let mut text = header.join(",") + "\n";
        for i in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:e}", m[(i, j)])).collect();
            text += &(row.join(",") + "\n");
        }
        std::fs::write(&points, text).unwrap();
        let l: String = data.labels().unwrap().iter().map(|l| format!("{l}\n")).collect();
        std::fs::write(&labels, l).unwrap();
    }
    assert_eq!(&read_csv_matrix(&points).unwrap(), data.points());
    assert_eq!(read_labels(&labels).unwrap(), data.labels().unwrap());
}

#[test]
fn fixture_clusters_perfectly() {
    let mut config = ExperimentConfig::default();
    config.algorithm.k_max = 0;
    config.algorithm.epsilon = 1e-12;
    let (labels, report) = run_cluster(&two_planes(), None, &config).unwrap();
    assert_eq!(labels.len(), 20);
    assert_eq!(report.report.accuracy_percent, Some(100.0));
    assert_eq!(report.report.p_percent, Some(100.0));
}

#[test]
fn cluster_binary_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("est.labels");
    let json = dir.path().join("report.json");
    let status = bin()
        .args(["cluster", "--k-max", "0", "--epsilon", "1e-12", "--input"])
        .arg(fixture("two_planes.csv"))
        .arg("--labels")
        .arg(fixture("two_planes.labels"))
        .arg("--output")
        .arg(&out)
        .arg("--json")
        .arg(&json)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert_eq!(read_labels(&out).unwrap().len(), 20);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["result"]["report"]["accuracy_percent"], 100.0);
    assert_eq!(v["config"]["algorithm"]["epsilon"], 1e-12);

    // Same data in the binary format.
    let bin_path = dir.path().join("m.bin");
    write_binary_matrix(&bin_path, two_planes().points()).unwrap();
    let status = bin()
        .args(["cluster", "--clusters", "2", "--input"])
        .arg(&bin_path)
        .arg("--output")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success());
    let v: serde_json::Value = serde_json::from_slice(&status.stdout).unwrap();
    // No truth labels: every truth-dependent metric is unavailable.
    for key in ["p_percent", "e_percent", "connectivity", "accuracy_percent"] {
        assert!(v["result"]["report"][key].is_null(), "{key}");
    }
}

#[test]
fn zero_column_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("m.csv");
    std::fs::write(&input, "1,0,0.6\n0,0,0.8\n").unwrap();
    let out = bin()
        .args(["cluster", "--clusters", "2", "--input"])
        .arg(&input)
        .arg("--output")
        .arg(dir.path().join("l"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("zero-norm column"));
}

#[test]
fn label_length_mismatch_is_a_contract_violation() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("l");
    std::fs::write(&labels, "0\n1\n").unwrap();
    let out = bin()
        .args(["cluster", "--input"])
        .arg(fixture("two_planes.csv"))
        .arg("--labels")
        .arg(&labels)
        .arg("--output")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn malformed_input_reports_line_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("m.csv");
    std::fs::write(&input, "1,0\n0,1\n0.5,oops\n").unwrap();
    let out = bin()
        .args(["cluster", "--clusters", "2", "--input"])
        .arg(&input)
        .arg("--output")
        .arg(dir.path().join("l"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let missing = bin().args(["sweep", "--config", "/nonexistent/cfg.toml"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/cfg.toml"));
}

fn small_sweep() -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.synth.densities = vec![5.0, 8.0];
    c.trials = 3;
    c.timing = false;
    c
}

#[test]
fn sweep_is_byte_reproducible_and_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let run = |workers: &str| {
        let out = bin()
            .args(["sweep", "--trials", "2", "--densities", "5,8", "--no-timing", "--csv"])
            .arg(&path)
            .env("SSCOMP_WORKERS", workers)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read_to_string(&path).unwrap()
    };
    let a = run("1");
    assert_eq!(a, run("1"));
    // Worker count only changes the echoed config, never the rows.
    let rows = |t: &str| t.lines().filter(|l| !l.starts_with('#')).map(String::from).collect::<Vec<_>>();
    assert_eq!(rows(&a), rows(&run("3")));

    let text = a;
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], SWEEP_HEADER);
    let keys: Vec<(String, String)> = body[1..]
        .iter()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].to_string())
        })
        .collect();
    let expected: Vec<(&str, &str)> =
        vec![("5", "0"), ("5", "1"), ("8", "0"), ("8", "1"), ("5", "mean"), ("8", "mean")];
    assert_eq!(keys.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect::<Vec<_>>(), expected);
    // The effective config is echoed.
    assert!(text.contains("# trials = 2"));
}

#[test]
fn single_trial_reruns_in_isolation() {
    let config = small_sweep();
    let table = run_sweep(&config).unwrap();
    let row = table.trials().find(|r| r.density == 8.0 && r.trial == Some(2)).unwrap();
    let seed = trial_seed(config.seed, 1, 2);
    assert_eq!(row.seed, Some(seed));
    let synth = ssc_omp::SynthConfig::uniform(5, 6, 9, 8.0, seed);
    let (_, data) = ssc_omp::synth::generate(&synth).unwrap();
    let out = evaluate(&data, 5, &config, cluster_seed(seed)).unwrap();
    assert_eq!(row.p_percent, out.report.p_percent);
    assert_eq!(row.accuracy_percent, out.report.accuracy_percent);
    assert_eq!(row.connectivity, out.report.connectivity);

    let means: Vec<_> = table.means().collect();
    assert_eq!(means.len(), 2);
    let trials: Vec<f64> = table.trials().filter(|r| r.density == 5.0).map(|r| r.p_percent.unwrap()).collect();
    let m = trials.iter().sum::<f64>() / 3.0;
    assert!((means[0].p_percent.unwrap() - m).abs() < 1e-12);
}

#[test]
fn failing_trials_become_rows() {
    // One point per subspace: connectivity of a singleton cluster is undefined.
    let mut config = small_sweep();
    config.synth.n = 2;
    config.synth.d = 1;
    config.synth.ambient = 3;
    config.synth.densities = vec![1.0, 3.0];
    let table = run_sweep(&config).unwrap();
    let failed: Vec<_> = table.trials().filter(|r| !r.ok()).collect();
    assert_eq!(failed.len(), 3);
    assert!(failed.iter().all(|r| r.density == 1.0 && r.status.starts_with("failed:")));
    assert!(table.trials().filter(|r| r.density == 3.0).all(|r| r.ok()));
    let csv = table.to_csv(&config);
    assert!(csv.lines().any(|l| l.starts_with("1,mean,NA,ssc-omp,2,NA")));
}

#[test]
fn condition_modes() {
    let mut config = ExperimentConfig { mode: Mode::Conditions, trials: 5, ..Default::default() };
    config.synth.n = 2;
    config.synth.d = 2;
    config.synth.ambient = 6;
    config.synth.densities = vec![5.0];
    config.algorithm.k_max = 0;
    config.algorithm.epsilon = 1e-12;

    config.synth.arrangement = ArrangementKind::Identical;
    let t = run_conditions(&config).unwrap();
    assert!(t.rows.iter().all(|r| !r.residual_pass && !r.data_pass && !r.angle_pass));
    assert_eq!(t.violations, 0);

    config.synth.arrangement = ArrangementKind::Independent;
    let t = run_conditions(&config).unwrap();
    assert!(t.rows.iter().all(|r| r.p_percent == 100.0));
    assert_eq!(t.violations, 0);
    assert!(t.to_csv(&config).contains("# random model: N = 22,"));

    let out = bin()
        .args(["conditions", "--trials", "3", "--n", "2", "--d", "2", "--ambient", "6", "--densities", "5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("implication violations: 0"));
}

#[test]
fn config_errors_map_to_exit_code_3() {
    let out = bin().args(["sweep", "--trials", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(CliError::Config(String::new()).exit_code(), 3);
    let unlabeled = Dataset::new(DMatrix::identity(2, 2), None).unwrap();
    assert!(matches!(
        run_cluster(&unlabeled, None, &ExperimentConfig::default()),
        Err(CliError::Config(_))
    ));
}
