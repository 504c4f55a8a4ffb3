//! Black-box tests of the command-line interface: flag parsing, exit
//! codes, artifact shapes, and config-file handling.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_singdetect"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().expect("binary failed to spawn")
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("process was killed by a signal")
}

fn write_five_points(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("five.csv");
    fs::write(&path, "x,y,batch\n0.1,0.2,0\n0.3,0.1,0\n0.5,0.4,0\n0.2,0.8,0\n0.9,0.3,0\n")
        .unwrap();
    path
}

#[test]
fn generate_is_deterministic_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = run(&["generate", "--curve", "circle", "--batches", "5", "--seed", "42", "--out", "a.csv"], dir.path());
    let b = run(&["generate", "--curve", "circle", "--batches", "5", "--seed", "42", "--out", "b.csv"], dir.path());
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(code(&b), 0, "{}", stderr(&b));
    let bytes_a = fs::read(dir.path().join("a.csv")).unwrap();
    let bytes_b = fs::read(dir.path().join("b.csv")).unwrap();
    assert!(!bytes_a.is_empty());
    assert_eq!(bytes_a, bytes_b);
}

#[test]
fn missing_input_file_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&["fit", "--input", "nonexistent.csv", "--basis", "poly:2"], dir.path());
    assert_eq!(code(&output), 1, "{}", stderr(&output));
}

#[test]
fn out_of_range_gamma_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_five_points(dir.path());
    let output = run(
        &["filter", "--input", data.to_str().unwrap(), "--filter", "knn", "--k", "2", "--gamma", "1.5"],
        dir.path(),
    );
    assert_eq!(code(&output), 2, "{}", stderr(&output));
    assert!(stderr(&output).contains("gamma"));
}

#[test]
fn unknown_filter_name_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_five_points(dir.path());
    let output = run(
        &["fit", "--input", data.to_str().unwrap(), "--filter", "median"],
        dir.path(),
    );
    assert_eq!(code(&output), 2, "{}", stderr(&output));
}

#[test]
fn underdetermined_fit_warns_but_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_five_points(dir.path());
    let output = run(
        &["fit", "--input", data.to_str().unwrap(), "--filter", "none", "--basis", "poly:2", "--out", "fit.json"],
        dir.path(),
    );
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    assert!(stderr(&output).contains("rank deficient"));
    let body = fs::read_to_string(dir.path().join("fit.json")).unwrap();
    assert!(body.contains("\"rank_deficient\""));
    assert!(body.contains("\"coefficients\""));
    assert!(body.contains("\"residual\""));
    assert!(body.contains("\"eigen_gap\""));
    assert!(body.contains("\"warnings\""));
}

#[test]
fn strict_mode_turns_warnings_into_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_five_points(dir.path());
    let output = run(
        &["fit", "--input", data.to_str().unwrap(), "--filter", "none", "--basis", "poly:2", "--strict"],
        dir.path(),
    );
    assert_eq!(code(&output), 3, "{}", stderr(&output));
    // The artifact is still written before the strict failure.
    assert!(dir.path().join("fit.json").exists());
}

#[test]
fn pipeline_writes_the_full_artifact_set() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(
        &["pipeline", "--curve", "circle", "--filter", "knn", "--basis", "poly:2", "--out-dir", "out", "--resolution", "64"],
        dir.path(),
    );
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    for name in ["config.json", "data.csv", "filter.json", "fit.json", "table.txt", "curve.csv", "curve.svg"] {
        assert!(dir.path().join("out").join(name).exists(), "missing artifact {name}");
    }
    let csv = fs::read_to_string(dir.path().join("out/curve.csv")).unwrap();
    assert!(csv.starts_with("segment_id,x,y\n"));
    let svg = fs::read_to_string(dir.path().join("out/curve.svg")).unwrap();
    assert!(svg.starts_with("<?xml"));
}

#[test]
fn pipeline_without_filter_skips_the_filter_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(
        &["pipeline", "--curve", "circle", "--filter", "none", "--out-dir", "out", "--resolution", "64"],
        dir.path(),
    );
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    assert!(!dir.path().join("out/filter.json").exists());
    assert!(dir.path().join("out/fit.json").exists());
}

#[test]
fn config_file_applies_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "curve = \"xshape\"\nbatches = 4\nresolution = 64\nout-dir = \"out\"\n",
    )
    .unwrap();
    let output = run(
        &["pipeline", "--config", "run.toml", "--batches", "6"],
        dir.path(),
    );
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    let config = fs::read_to_string(dir.path().join("out/config.json")).unwrap();
    assert!(config.contains("\"curve\": \"xshape\""), "file key must apply");
    assert!(config.contains("\"batches\": 6"), "flag must override the file");
}

#[test]
fn missing_config_file_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&["pipeline", "--config", "absent.toml"], dir.path());
    assert_eq!(code(&output), 1, "{}", stderr(&output));
}

#[test]
fn trace_requires_a_known_output_extension() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_five_points(dir.path());
    let fit = run(
        &["fit", "--input", data.to_str().unwrap(), "--filter", "none", "--basis", "poly:2", "--out", "fit.json"],
        dir.path(),
    );
    assert_eq!(code(&fit), 0, "{}", stderr(&fit));
    let bad = run(&["trace", "--fit", "fit.json", "--out", "curve.png"], dir.path());
    assert_eq!(code(&bad), 2, "{}", stderr(&bad));
    let good = run(&["trace", "--fit", "fit.json", "--resolution", "32", "--out", "curve.csv"], dir.path());
    assert_eq!(code(&good), 0, "{}", stderr(&good));
}

#[test]
fn report_prints_a_term_table_with_errors() {
    let dir = tempfile::tempdir().unwrap();
    let gen = run(
        &["pipeline", "--curve", "circle", "--filter", "knn", "--basis", "poly:2", "--out-dir", "out", "--resolution", "64"],
        dir.path(),
    );
    assert_eq!(code(&gen), 0, "{}", stderr(&gen));
    let output = run(&["report", "--fit", "out/fit.json", "--exact", "circle"], dir.path());
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    let table = String::from_utf8_lossy(&output.stdout);
    for header in ["term", "fitted", "exact", "error"] {
        assert!(table.contains(header), "missing column {header}");
    }
    for label in ["y^2", "x^2", "xy"] {
        assert!(table.contains(label), "missing term row {label}");
    }
    assert!(table.contains("max error:"));
}

#[test]
fn report_rejects_a_curve_outside_the_basis() {
    let dir = tempfile::tempdir().unwrap();
    let gen = run(
        &["pipeline", "--curve", "circle", "--filter", "none", "--out-dir", "out", "--resolution", "64"],
        dir.path(),
    );
    assert_eq!(code(&gen), 0, "{}", stderr(&gen));
    // The two-circle quartic needs degree 4, not 2.
    let output = run(&["report", "--fit", "out/fit.json", "--exact", "semicircles"], dir.path());
    assert_eq!(code(&output), 2, "{}", stderr(&output));
}
