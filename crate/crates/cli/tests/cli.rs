use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const GOLDEN: &str = "tests/golden/tails_exact_d3_n4_xi2.jsonl";
const GOLDEN_ARGS: &[&str] = &["tails", "--method", "exact", "-d", "3", "-n", "4", "--xi", "2"];

fn polymer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polymer")).args(args).env_remove("POLYMER_OUTPUT_DIR").output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn records(out: &Output) -> Vec<Value> {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(out));
    stdout(out).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn golden_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(GOLDEN)
}

#[test]
fn exact_tail_matches_golden_file() {
    let out = polymer(GOLDEN_ARGS);
    assert_eq!(out.status.code(), Some(0));
    let golden = std::fs::read_to_string(golden_path()).unwrap();
    assert_eq!(stdout(&out), golden);
    let r = &records(&out)[0];
    assert_eq!(r["exact_numerator"], "1370");
    assert_eq!(r["exact_denominator"], "5488");
}

/// Rewrites the golden file; run with `--ignored regenerate_golden`.
#[test]
#[ignore]
fn regenerate_golden() {
    let out = polymer(GOLDEN_ARGS);
    assert_eq!(out.status.code(), Some(0));
    std::fs::write(golden_path(), out.stdout).unwrap();
}

#[test]
fn constants_reports_lattice_keys() {
    let r = &records(&polymer(&["constants", "-d", "3"]))[0];
    assert_eq!(r["schema_version"], 1);
    for key in ["G", "c_d", "return_probability", "chi_d"] {
        assert!(r[key].is_f64(), "missing {key}");
    }
    assert!((r["G"].as_f64().unwrap() - 1.769117069011).abs() < 1e-9);
    assert!(r.get("mc").is_none());
}

#[test]
fn constants_rejects_recurrent_dimension() {
    let out = polymer(&["constants", "-d", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("d >= 3"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn constants_mc_check_adds_agreement_flag() {
    let args = ["constants", "-d", "3", "--mc-check", "--samples", "20000", "--horizon", "2000", "--seed", "5"];
    let r = &records(&polymer(&args))[0];
    assert_eq!(r["mc"]["agrees"], true);
    assert_eq!(r["mc"]["seed"], 5);
}

#[test]
fn gaussian_rate_matches_constants() {
    let chi = records(&polymer(&["constants", "-d", "3"]))[0]["chi_d"].as_f64().unwrap();
    let rs = records(&polymer(&["rate", "-d", "3", "--dist", "gaussian", "--sigma", "1"]));
    let value = rs[0]["rate_constant"].as_f64().unwrap();
    assert!((value - (2.0 * chi).sqrt()).abs() < 1e-6);
    assert_eq!(rs[0]["certificate"]["gamma_sqrt_convex"], true);
    assert_eq!(rs.iter().filter(|r| r["record"] == "rate_table").count(), 16);
}

#[test]
fn uncertified_law_exits_three() {
    let out = polymer(&["rate", "--dist", "rademacher"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("hypothesis hyp-I not certified"));
    assert!(out.stdout.is_empty());
}

#[test]
fn identity_check_reports_residual() {
    let rs = records(&polymer(&["rate", "--dist", "example_family", "--a", "1", "--beta", "3", "--identity-check"]));
    assert!(rs[0]["identity_residual"].as_f64().unwrap() < 1e-4);
    assert!(rs[0]["gaussian_reference"].is_null());
}

#[test]
fn stochastic_commands_need_a_seed() {
    for args in [
        &["simulate", "-n", "10"][..],
        &["tails", "--method", "naive", "-n", "4", "--xi", "2"],
        &["constants", "--mc-check"],
    ] {
        let out = polymer(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(stderr(&out).contains("--seed is required"));
    }
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["tails", "--method", "exact", "-n", "4", "--xi", "2", "--dist", "gaussian"][..],
        &["tails", "--plan", "fixed", "-n", "4", "--xi", "2", "--seed", "1"],
        &["rate", "--dist", "rademacher", "--sigma", "2"],
        &["rate", "--dist", "cauchy"],
        &["simulate", "--bogus"],
    ] {
        assert_eq!(polymer(args).status.code(), Some(1), "{args:?}");
    }
    assert_eq!(polymer(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_is_validated_and_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# tails run\nmethod = naive\nn = 4\nxi = 2, 4\nsamples = 5000\nseed = 11\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = records(&polymer(&["tails", "--config", cfg]));
    assert_eq!(from_file.len(), 2);
    assert!(from_file.iter().all(|r| r["method"] == "naive" && r["samples"] == 5000));
    let overridden = records(&polymer(&["tails", "--config", cfg, "--samples", "3000", "--xi", "2"]));
    assert_eq!(overridden.len(), 1);
    assert_eq!(overridden[0]["samples"], 3000);

    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "seed = 1\ncolour = red\n").unwrap();
    let out = polymer(&["simulate", "-n", "5", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("colour"));
    let other = dir.path().join("other.conf");
    std::fs::write(&other, "xi = 2\n").unwrap();
    assert_eq!(polymer(&["constants", "--config", other.to_str().unwrap()]).status.code(), Some(1));
}

fn run_to_file(dir: &Path, name: &str, args: &[&str]) -> Vec<u8> {
    let path = dir.join(name);
    let mut full = args.to_vec();
    full.extend(["-o", path.to_str().unwrap()]);
    let out = polymer(&full);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    std::fs::read(path).unwrap()
}

#[test]
fn same_seed_gives_identical_files_for_any_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["tails", "-n", "6", "--xi", "2,4", "--samples", "40000", "--seed", "9", "--plan", "collective"];
    let a = run_to_file(dir.path(), "a.jsonl", &args);
    let b = run_to_file(dir.path(), "b.jsonl", &args);
    let c = run_to_file(dir.path(), "c.jsonl", &[&args[..], &["--workers", "3"]].concat());
    assert_eq!(a, b);
    assert_eq!(a, c);
    let sim = [
        "simulate",
        "-n",
        "300",
        "--samples",
        "20",
        "--seed",
        "4",
        "--dist",
        "example_family",
        "--a",
        "1",
        "--beta",
        "3",
    ];
    let s1 = run_to_file(dir.path(), "s1.jsonl", &sim);
    let s2 = run_to_file(dir.path(), "s2.jsonl", &[&sim[..], &["--workers", "2"]].concat());
    assert_eq!(s1, s2);
    let d =
        run_to_file(dir.path(), "d.jsonl", &["tails", "-n", "6", "--xi", "2,4", "--samples", "40000", "--seed", "10"]);
    assert_ne!(a, d);
}

#[test]
fn csv_tables_and_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_polymer"))
        .args(["rate", "--format", "csv", "-o", "runs/rate.csv", "--points", "4"])
        .env("POLYMER_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let main = std::fs::read_to_string(dir.path().join("runs/rate.csv")).unwrap();
    assert!(main
        .starts_with("dimension,distribution,chi_d,rate_constant,gaussian_reference,certificate,identity_residual\n"));
    let table = std::fs::read_to_string(dir.path().join("runs/rate.rate_table.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("x,rate,rate_prime"));
    assert_eq!(table.lines().count(), 5);
}

#[test]
fn tail_csv_header_does_not_depend_on_method() {
    let header = |method: &str| {
        let out = polymer(&[
            "tails",
            "--method",
            method,
            "-n",
            "4",
            "--xi",
            "2",
            "--samples",
            "1000",
            "--seed",
            "1",
            "--format",
            "csv",
        ]);
        assert_eq!(out.status.code(), Some(0));
        stdout(&out).lines().next().unwrap().to_string()
    };
    assert_eq!(header("exact"), header("naive"));
    assert_eq!(header("exact"), header("tilted"));
}

#[test]
fn rate_curve_rows() {
    let rs = records(&polymer(&[
        "tails",
        "--rate-curve",
        "--n-list",
        "50,100",
        "--dist",
        "gaussian",
        "--samples",
        "2000",
        "--seed",
        "2",
    ]));
    assert_eq!(rs.len(), 2);
    assert!(rs.iter().all(|r| r["record"] == "rate_row" && r["xi_power"] == 1.0 && r["plan"] == "centered"));
    assert!((rs[0]["predicted"].as_f64().unwrap() - 1.2907305503).abs() < 1e-8);
    let out = polymer(&["tails", "--rate-curve", "--n-list", "50", "--xi-power", "0.5", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_quick_passes() {
    let rs = records(&polymer(&["verify", "--quick"]));
    assert!(rs.iter().filter(|r| r["hard"] == true).all(|r| r["passed"] == true));
    assert!(rs.iter().any(|r| r["name"] == "exact_frozen_value"));
}
