//! End-to-end contract tests for the `walsh-logmeans` binary: flag
//! handling, config-file layering, exit codes, and output formats.

use std::io::Write as _;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_walsh-logmeans"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is UTF-8")
}

/// Parses a CSV body (no `#` line) into the header and float-ish rows.
fn parse_csv(body: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = body.lines();
    let header = lines
        .next()
        .expect("nonempty CSV")
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (header, rows)
}

#[test]
fn kernel_f4_multiplier_column_matches_the_closed_form() {
    let out = run(&["kernel", "--kind", "F", "--n", "4", "--K", "6", "--quiet-header"]);
    assert!(out.status.success());
    let (header, rows) = parse_csv(&stdout(&out));
    assert_eq!(header, ["index", "sample", "multiplier"]);
    assert_eq!(rows.len(), 64);
    let mult: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!((mult[0] - 1.0).abs() < 1e-15);
    assert!((mult[1] - 9.0 / 11.0).abs() < 1e-15);
    assert!((mult[2] - 6.0 / 11.0).abs() < 1e-15);
    assert!(mult[3..].iter().all(|&m| m == 0.0));
}

#[test]
fn kernel_d8_samples_follow_the_block_closed_form() {
    let out = run(&["kernel", "--kind", "D", "--n", "8", "--K", "6", "--quiet-header"]);
    assert!(out.status.success());
    let (_, rows) = parse_csv(&stdout(&out));
    for (j, row) in rows.iter().enumerate() {
        let sample: f64 = row[1].parse().unwrap();
        let expected = if j < 8 { 8.0 } else { 0.0 };
        assert!(
            (sample - expected).abs() < 1e-12,
            "cell {j}: sample {sample}, expected {expected}"
        );
    }
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let out = run(&["kernel", "--kind", "F", "--K", "6"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--n"));
}

#[test]
fn bad_flag_value_exits_2_and_names_the_field() {
    let out = run(&["converge", "--orders", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--orders"));

    let out = run(&["diverge", "--what", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--what"));

    let out = run(&["norms", "--K", "30,30"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--K"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lemma_gg_emits_json_in_both_modes() {
    let out = run(&["diverge", "--what", "lemma-gg", "--n", "2", "--tilde", "2"]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(value["n"], 2);
    assert_eq!(value["K"], 6);
    assert_eq!(value["mode"], "override:2");
    let min = value["min"].as_f64().unwrap();
    assert!((min - 0.029470).abs() < 1e-4, "min={min}");

    // Faithful offsets flag every band empty; the scan reports that
    // without error.
    let out = run(&["diverge", "--what", "lemma-gg", "--n", "2"]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(value["mode"], "faithful");
    assert!(value["min"].is_null());
    assert!(value["per_band"]
        .as_array()
        .unwrap()
        .iter()
        .all(|band| band["empty"] == true));
}

#[test]
fn config_file_entries_are_overridden_by_flags() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "command=converge").unwrap();
    writeln!(file, "d=1").unwrap();
    writeln!(file, "K=6").unwrap();
    writeln!(file, "orders=4").unwrap();
    file.flush().unwrap();
    let path = file.path().to_str().unwrap();

    let from_file = run(&["converge", "--config", path, "--quiet-header"]);
    assert!(from_file.status.success());
    let (_, rows) = parse_csv(&stdout(&from_file));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "4");

    let overridden = run(&[
        "converge",
        "--config",
        path,
        "--orders",
        "8,16",
        "--quiet-header",
    ]);
    assert!(overridden.status.success());
    let (_, rows) = parse_csv(&stdout(&overridden));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "8");
    assert_eq!(rows[1][0], "16");
}

#[test]
fn config_file_for_the_wrong_command_is_rejected() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "command=norms").unwrap();
    file.flush().unwrap();
    let out = run(&["kernel", "--config", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("command=norms"));
}

#[test]
fn out_flag_writes_the_same_bytes_as_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("kernel.csv");
    let to_stdout = run(&["kernel", "--kind", "G", "--n", "6", "--K", "5", "--quiet-header"]);
    assert!(to_stdout.status.success());
    let to_file = run(&[
        "kernel",
        "--kind",
        "G",
        "--n",
        "6",
        "--K",
        "5",
        "--quiet-header",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(to_file.status.success());
    assert!(stdout(&to_file).is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(written, stdout(&to_stdout));
}

#[test]
fn header_line_is_present_by_default_and_suppressible() {
    let with_header = run(&["diverge", "--what", "est1", "--nmax", "2"]);
    assert!(with_header.status.success());
    let text = stdout(&with_header);
    let first = text.lines().next().unwrap();
    assert!(first.starts_with("# walsh-logmeans diverge"));
    assert!(first.contains("what=est1"));

    let quiet = run(&["diverge", "--what", "est1", "--nmax", "2", "--quiet-header"]);
    assert!(quiet.status.success());
    let quiet_text = stdout(&quiet);
    assert!(!quiet_text.starts_with('#'));
    // Everything after the header line is identical.
    assert_eq!(text.split_once('\n').unwrap().1, quiet_text);
}

#[test]
fn emitted_config_text_reproduces_the_run() {
    // A resolved config serializes to key=value text that, used as a
    // config file, reproduces the identical run.
    let direct = run(&[
        "converge",
        "--d",
        "1",
        "--K",
        "7",
        "--orders",
        "4,8,16",
        "--function",
        "borderline",
        "--amp",
        "32",
        "--quiet-header",
    ]);
    assert!(direct.status.success());

    let cfg = walsh_logmeans_cli::config::ConvergeConfig::from_kv_text(
        "command=converge\nd=1\nK=7\norders=4,8,16\nfunction=borderline\namp=32\n",
    )
    .unwrap();
    let mut file = tempfile::NamedTempFile::new().unwrap();
    file.write_all(cfg.to_kv_string().as_bytes()).unwrap();
    file.flush().unwrap();
    let via_file = run(&[
        "converge",
        "--config",
        file.path().to_str().unwrap(),
        "--quiet-header",
    ]);
    assert!(via_file.status.success());
    assert_eq!(stdout(&via_file), stdout(&direct));
}
