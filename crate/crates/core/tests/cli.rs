use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn richness(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_richness"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn estimate_geometric_table_with_nof1() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "geo.tsv", "2\t64\n3\t32\n4\t16\n5\t8\n6\t4\n");
    let out = richness(&["estimate", "--input", s(&input), "--estimator", "nof1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["tool"], "richness");
    assert_eq!(v["command"], "estimate");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    let r = &v["results"][0];
    assert_eq!(r["estimator"], "nof1");
    assert!((r["C_hat"].as_f64().unwrap() - 508.0).abs() < 1e-6);
    assert_eq!(r["model"]["p"], 1);
    assert_eq!(r["model"]["q"], 0);
    assert!(r["se"].as_f64().unwrap() > 0.0);
}

#[test]
fn estimate_chao1_as_csv() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "t.csv", "j,f\n1,10\n2,5\n3,2\n");
    let out = richness(&[
        "estimate",
        "--input",
        s(&input),
        "--estimator",
        "chao1",
        "--output",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("estimator,C_hat,se,f0_hat,f1_hat,p,q,warnings,error")
    );
    assert!(lines.next().unwrap().starts_with("chao1,27.0000,"));
    assert!(stderr(&out).contains("header"));
}

#[test]
fn estimate_from_abundances() {
    let dir = TempDir::new().unwrap();
    let input = write(
        dir.path(),
        "a.txt",
        "1\n1\n1\n1\n1\n1\n1\n1\n1\n1\n2\n2\n2\n2\n2\n3\n3\n",
    );
    let out = richness(&[
        "estimate",
        "--input",
        s(&input),
        "--format",
        "abundance",
        "--estimator",
        "chao1",
    ]);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["results"][0]["C_hat"], 27.0);
}

#[test]
fn missing_file_exits_with_input_error() {
    let out = richness(&["estimate", "--input", "/nonexistent/table.tsv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("cannot read"));
}

#[test]
fn malformed_input_reports_the_line() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "bad.tsv", "1\t10\n2\t-3\n");
    let out = richness(&["estimate", "--input", s(&input)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn total_estimation_failure_exits_2() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "tiny.tsv", "1\t3\n2\t1\n");
    let out = richness(&["estimate", "--input", s(&input), "--estimator", "nof1"]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["results"][0]["status"], "failed");
}

#[test]
fn partial_failure_still_succeeds() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "tiny.tsv", "1\t3\n2\t1\n");
    let out = richness(&["estimate", "--input", s(&input)]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn single_replicate_statistics_are_equal() {
    let out = richness(&[
        "simulate",
        "--C",
        "2000",
        "--size",
        "50",
        "--prob",
        "0.9",
        "--reps",
        "1",
        "--seed",
        "3",
        "--estimators",
        "chao1",
        "--output",
        "csv",
        "--precision",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let value = |stat: &str| {
        text.lines()
            .find(|l| l.starts_with(&format!("chao1,{stat},")))
            .map(|l| l.split(',').nth(2).unwrap().to_string())
            .unwrap()
    };
    assert_eq!(value("trimmed_rmse"), value("root_mean_sq_error"));
    assert_eq!(value("trimmed_rmse"), value("root_median_sq_error"));
}

#[test]
fn simulation_reports_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = richness(&[
            "simulate",
            "--C",
            "1000",
            "--size",
            "20",
            "--prob",
            "0.8",
            "--rate",
            "-80",
            "--reps",
            "20",
            "--seed",
            "42",
            "--out",
            s(&path),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        assert!(stderr(&out).contains("seed=42"));
        fs::read(path).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
    assert_eq!(run("a.json"), run("b.json"));
    let v: Value = serde_json::from_slice(&run("c.json")).unwrap();
    assert_eq!(v["config"]["seed"], 42);
    assert_eq!(v["results"]["chao1"]["reps"], 20);
}

#[test]
fn json_and_csv_carry_the_same_numbers() {
    let dir = TempDir::new().unwrap();
    let args = |file: &str| {
        vec![
            "simulate".to_string(),
            "--C".into(),
            "800".into(),
            "--size".into(),
            "30".into(),
            "--prob".into(),
            "0.85".into(),
            "--reps".into(),
            "10".into(),
            "--seed".into(),
            "9".into(),
            "--precision".into(),
            "12".into(),
            "--out".into(),
            dir.path().join(file).to_str().unwrap().to_string(),
        ]
    };
    for f in ["r.json", "r.csv"] {
        let a = args(f);
        let out = richness(&a.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(out.status.code(), Some(0));
    }
    let json: Value =
        serde_json::from_slice(&fs::read(dir.path().join("r.json")).unwrap()).unwrap();
    let csv = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let j = &json["results"][f[0]]["statistics"][f[1]];
        match f[2] {
            "NA" => assert!(j.is_null()),
            v => {
                let (c, j) = (v.parse::<f64>().unwrap(), j.as_f64().unwrap());
                assert!((c - j).abs() <= 1e-9 * j.abs().max(1.0), "{line}: {j}");
            }
        }
    }
}

#[test]
fn omitted_seed_is_drawn_and_echoed() {
    let out = richness(&[
        "simulate",
        "--C",
        "300",
        "--size",
        "10",
        "--prob",
        "0.7",
        "--reps",
        "2",
        "--estimators",
        "chao1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(
        stderr(&out).lines().any(|l| l.starts_with("seed: ")),
        "{}",
        stderr(&out)
    );
}

#[test]
fn invalid_simulation_parameters_exit_1() {
    let out = richness(&[
        "simulate", "--C", "100", "--size", "10", "--prob", "1.2", "--reps", "5", "--seed", "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("prob"));
    let out = richness(&[
        "simulate", "--C", "100", "--size", "10", "--prob", "0.5", "--reps", "0", "--seed", "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn calibration_grid_and_low_replicate_warning() {
    let out = richness(&[
        "calibrate-se",
        "--C-list",
        "400,500",
        "--size-list",
        "10,20",
        "--prob-list",
        "0.8",
        "--grid",
        "cross",
        "--reps",
        "2",
        "--seed",
        "1",
        "--output",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 1 + 4);
    assert!(stderr(&out).contains("only 2 replicates"));

    let zipped = richness(&[
        "calibrate-se",
        "--C-list",
        "400,500",
        "--size-list",
        "10,20",
        "--prob-list",
        "0.8",
        "--reps",
        "2",
        "--seed",
        "1",
    ]);
    let v: Value = serde_json::from_str(&stdout(&zipped)).unwrap();
    assert_eq!(v["results"].as_array().unwrap().len(), 2);
    assert!(!v["warnings"].as_array().unwrap().is_empty());

    let mismatched = richness(&[
        "calibrate-se",
        "--C-list",
        "400,500,600",
        "--size-list",
        "10,20",
        "--prob-list",
        "0.8",
        "--reps",
        "2",
    ]);
    assert_eq!(mismatched.status.code(), Some(1));
}

fn abundance_file(dir: &Path) -> PathBuf {
    // f_j = 2^(11 − j) taxa with abundance j
    let text: String = (1..=10u32)
        .flat_map(|j| std::iter::repeat_n(format!("{j}\n"), 1 << (11 - j)))
        .collect();
    write(dir, "abund.txt", &text)
}

#[test]
fn rarefy_full_fraction_has_zero_spread() {
    let dir = TempDir::new().unwrap();
    let input = abundance_file(dir.path());
    let out = richness(&[
        "rarefy",
        "--input",
        s(&input),
        "--fractions",
        "1.0",
        "--reps",
        "5",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "fraction,estimator,mean_C_hat,sd_C_hat,failures");
    assert_eq!(rows.len(), 4);
    for r in &rows[1..] {
        assert_eq!(r.split(',').nth(3), Some("0.0000"), "{r}");
    }
}

#[test]
fn rarefy_rows_are_ascending_and_unsorted_input_warns() {
    let dir = TempDir::new().unwrap();
    let input = abundance_file(dir.path());
    let out = richness(&[
        "rarefy",
        "--input",
        s(&input),
        "--fractions",
        "0.5,0.25,1.0",
        "--reps",
        "4",
        "--seed",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).contains("sorted"));
    let text = stdout(&out);
    let fractions: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(fractions.len(), 9);
    assert!(fractions.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(fractions.iter().filter(|&&f| f == 0.25).count(), 3);
}

#[test]
fn rarefy_rejects_frequency_tables() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "freq.tsv", "1\t10\n2\t5\n");
    let out = richness(&["rarefy", "--input", s(&input)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("needs abundance"));
    let out = richness(&["rarefy", "--input", s(&input), "--format", "freq"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn version_flag() {
    let out = richness(&["--version"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out).trim(),
        format!("richness {}", env!("CARGO_PKG_VERSION"))
    );
}

#[test]
fn unknown_flag_is_an_input_error() {
    let out = richness(&["estimate", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
}
