use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

fn spectra(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spectra"))
        .args(args)
        .env_remove("SPECTRA_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    spectra(args).status.code().expect("exit code")
}

fn report(args: &[&str]) -> Value {
    let out = spectra(args);
    assert!(out.status.code() != Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON report on stdout")
}

/// Data rows of a CSV written by the tool, skipping comments and header.
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    r.records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect()
}

fn out_dir(dir: &tempfile::TempDir) -> PathBuf {
    dir.path().to_path_buf()
}

#[test]
fn lebesgue_with_integers_is_orthogonal_and_complete_on_the_grid() {
    let r = report(&[
        "check",
        "--measure",
        &fixture("lebesgue01.json"),
        "--lambda",
        &fixture("integers.json"),
    ]);
    // a finite window of ℤ can only ever be a maximal candidate
    assert_eq!(r["verdict"], "maximal_candidate");
    assert_eq!(r["evidence"]["orthogonality"]["verdict"], "orthogonal");
    assert_eq!(r["inputs"].as_array().unwrap().len(), 2);
    assert_eq!(r["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn check_exits_two_when_orthogonality_fails() {
    let args = [
        "--measure",
        &fixture("lebesgue01.json"),
        "--lambda",
        &fixture("half_points.json"),
    ];
    let check: Vec<&str> = ["check"].iter().chain(&args).copied().collect();
    let classify: Vec<&str> = ["classify"].iter().chain(&args).copied().collect();
    assert_eq!(code(&check), 2);
    assert_eq!(code(&classify), 0);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let args = [
        "overlap",
        "--measure",
        &fixture("bernoulli_34.json"),
        "--samples",
        "20000",
        "--seed",
        "7",
    ];
    let a = spectra(&args);
    let b = spectra(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn timing_is_opt_in() {
    let args = ["mu-hat", "--measure", &fixture("bernoulli_14.json"), "--t", "1"];
    assert!(report(&args).get("wall_clock_ms").is_none());
    let timed: Vec<&str> = args.iter().copied().chain(["--timing"]).collect();
    assert!(report(&timed)["wall_clock_ms"].is_u64());
}

#[test]
fn overlapping_bernoulli_gets_a_non_spectrality_certificate() {
    let r = report(&[
        "overlap",
        "--measure",
        &fixture("bernoulli_34.json"),
        "--samples",
        "100000",
        "--seed",
        "7",
    ]);
    assert_eq!(r["evidence"]["conclusion"], "not_spectral");
    assert!(r["verdict"].as_str().unwrap().contains("not spectral"));
    assert_eq!(r["seeds"]["monte_carlo"], 7);
}

#[test]
fn disjoint_digits_give_no_conclusion() {
    let r = report(&["overlap", "--measure", &fixture("four_digit.json"), "--samples", "5000"]);
    // the pieces touch, so the verdict rests on the estimate
    assert_eq!(r["evidence"]["verdict"], "null_overlap_likely");
    assert_eq!(r["evidence"]["conclusion"], "no_conclusion");
    let p = report(&["pieces", "--measure", &fixture("bernoulli_14_maps.json")]);
    assert_eq!(p["verdict"], "pieces_disjoint");
}

#[test]
fn mu_hat_matches_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_dir(&dir);
    let r = report(&[
        "mu-hat",
        "--measure",
        &fixture("lebesgue01.json"),
        "--t",
        "1/2",
        "--grid",
        "0:2:5",
        "--out",
        out.to_str().unwrap(),
    ]);
    let v = &r["evidence"]["values"][0];
    // |∫₀¹ e^{πix} dx| = |e^{iπ} − 1|/π
    assert!((v["abs"].as_f64().unwrap() - 2.0 / std::f64::consts::PI).abs() < 1e-12);
    assert_eq!(csv_rows(&out.join("mu_hat.csv")).len(), 6);
    assert!(out.join("mu-hat.json").exists());
}

#[test]
fn mu_hat_cache_reproduces_values() {
    let cache = tempfile::tempdir().unwrap();
    let args = ["mu-hat", "--measure", &fixture("bernoulli_14.json"), "--grid", "0:3:7"];
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_spectra"))
            .args(args)
            .env("SPECTRA_CACHE_DIR", cache.path())
            .output()
            .unwrap()
    };
    let first = run();
    assert_eq!(fs::read_dir(cache.path()).unwrap().count(), 1);
    let second = run();
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.stdout, spectra(&args).stdout);
}

#[test]
fn probe_writes_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_dir(&dir);
    let r = report(&[
        "bernoulli",
        "probe",
        "--lambda",
        "1/4",
        "--level",
        "6",
        "--grid",
        "0:1:512",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r["artifacts"][0], "h_profile.csv");
    let text = fs::read_to_string(out.join("h_profile.csv")).unwrap();
    assert!(text.starts_with("# "));
    let rows = csv_rows(&out.join("h_profile.csv"));
    assert_eq!(rows.len(), 512);
    for row in rows {
        let h: f64 = row[1].parse().unwrap();
        assert!(h <= 1.0 + 1e-9);
    }
}

#[test]
fn failed_classification_leaves_a_header_only_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_dir(&dir);
    let args = [
        "classify",
        "--measure",
        &fixture("lebesgue01.json"),
        "--lambda",
        &fixture("half_points.json"),
    ];
    let with_out: Vec<&str> = args.iter().copied().chain(["--out", out.to_str().unwrap()]).collect();
    assert_eq!(code(&with_out), 0);
    let text = fs::read_to_string(out.join("h_profile.csv")).unwrap();
    let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines, vec!["t,h,err"]);
}

#[test]
fn sweep_writes_ten_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_dir(&dir);
    let r = report(&[
        "sweep",
        "--lambdas",
        "0.5:0.95:10",
        "--samples",
        "20000",
        "--out",
        out.to_str().unwrap(),
    ]);
    let rows = csv_rows(&out.join("sweep.csv"));
    assert_eq!(rows.len(), 10);
    let lambdas: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    for (i, l) in lambdas.iter().enumerate() {
        assert!((l - (0.5 + 0.05 * i as f64)).abs() < 1e-12);
    }
    // well above 1/2 the overlap is certified
    assert_eq!(rows[9][5], "true");
    assert_eq!(r["evidence"].as_array().unwrap().len(), 10);
}

#[test]
fn bernoulli_zero_certificates() {
    let r = report(&["bernoulli", "zeros", "--lambda", "3/4", "--t", "3"]);
    assert_eq!(r["verdict"], "zero_certified");
    assert_eq!(r["evidence"]["certificate"]["k"], 1);
    assert_eq!(r["evidence"]["certificate"]["scaled"], "9/4");

    assert_eq!(
        code(&["bernoulli", "zeros", "--lambda", "1/4", "--t", "4", "--inclusion"]),
        0
    );
    assert_eq!(code(&["bernoulli", "zeros", "--lambda", "3/4", "--t", "9/4"]), 2);
    assert_eq!(
        code(&["bernoulli", "zeros", "--lambda", "1/4", "--t", "2", "--inclusion"]),
        2
    );
    assert_eq!(code(&["bernoulli", "zeros", "--lambda", "2", "--t", "1"]), 1);
}

#[test]
fn gamma_orthogonality_is_certified() {
    let r = report(&["bernoulli", "gamma", "--level", "5", "--check-orthogonality"]);
    assert_eq!(r["verdict"], "orthogonal_certified");
    assert_eq!(r["evidence"]["certificates_total"], 496);
    assert_eq!(r["evidence"]["report"]["ordered_certified"], 992);
    let three = report(&[
        "bernoulli",
        "gamma",
        "--lambda",
        "3/4",
        "--level",
        "5",
        "--check-orthogonality",
    ]);
    assert_eq!(three["verdict"], "orthogonal_certified");
    let listed = report(&["bernoulli", "gamma", "--level", "2"]);
    assert_eq!(listed["evidence"]["gamma"], serde_json::json!([0, 1, 4, 5]));
}

#[test]
fn atomic_pair_subcommands() {
    let half = fixture("half_points.json");
    assert_eq!(
        code(&[
            "check-pair",
            "--points",
            &half,
            "--lambda",
            &fixture("half_spectrum.json")
        ]),
        0
    );
    assert_eq!(
        code(&[
            "check-pair",
            "--points",
            &half,
            "--lambda",
            &fixture("half_bad_spectrum.json")
        ]),
        2
    );
    assert_eq!(
        code(&[
            "group-verify",
            "--points",
            &half,
            "--lambda",
            &fixture("half_bad_spectrum.json")
        ]),
        2
    );

    let r = report(&[
        "group-verify",
        "--points",
        &fixture("triple_points.json"),
        "--lambda",
        &fixture("triple_spectrum.json"),
        "--samples",
        "40",
    ]);
    assert_eq!(r["verdict"], "group_verified");
    assert!(r["seeds"]["recovery"].is_u64());

    let s = report(&[
        "search-spectrum",
        "--points",
        &fixture("four_digit_points.json"),
        "--den",
        "16",
    ]);
    assert_eq!(s["verdict"], "spectrum_found");
    assert_eq!(s["evidence"]["spectrum"].as_array().unwrap().len(), 4);
}

#[test]
fn bohr_subcommands() {
    let poly = fixture("mixed_poly.json");
    let mean = report(&["bohr", "mean", "--poly", &poly, "--T", "10,100"]);
    assert_eq!(mean["verdict"], "within_bound");
    assert_eq!(code(&["bohr", "intertwine", "--poly", &poly, "--a", "0.3"]), 0);

    let iso = [
        "bohr",
        "isometry",
        "--measure",
        &fixture("lebesgue01.json"),
        "--lambda",
        &fixture("half_points.json"),
        "--poly",
        &poly,
    ];
    assert_eq!(code(&iso), 2);
    let r = report(&iso);
    let defect = r["evidence"]["defect"].as_f64().unwrap();
    assert!((defect - 4.0 / std::f64::consts::PI).abs() < 1e-9, "{defect}");

    let gamma = [
        "bohr",
        "isometry",
        "--measure",
        &fixture("bernoulli_14.json"),
        "--lambda",
        &fixture("gamma4.json"),
        "--poly",
        &fixture("gamma_poly.json"),
    ];
    assert_eq!(code(&gamma), 0);
}

#[test]
fn input_errors_exit_one() {
    let leb = fixture("lebesgue01.json");
    let ints = fixture("integers.json");
    assert_eq!(
        code(&["check", "--measure", &fixture("broken.json"), "--lambda", &ints]),
        1
    );
    assert_eq!(code(&["check", "--measure", "/nonexistent.json", "--lambda", &ints]), 1);
    assert_eq!(
        code(&["check", "--measure", &leb, "--lambda", &ints, "--grid", "0:1:1"]),
        1
    );
    assert_eq!(code(&["check", "--measure", &leb, "--lambda", &ints, "--tol", "0"]), 1);
    assert_eq!(code(&["no-such-command"]), 1);
    assert_eq!(code(&["--help"]), 0);

    let out = spectra(&["overlap", "--measure", &fixture("broken.json")]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line"), "{err}");
}

#[test]
fn sequential_threads_give_the_same_report() {
    let args = [
        "overlap",
        "--measure",
        &fixture("bernoulli_34.json"),
        "--samples",
        "10000",
    ];
    let seq: Vec<&str> = args.iter().copied().chain(["--threads", "0"]).collect();
    let two: Vec<&str> = args.iter().copied().chain(["--threads", "2"]).collect();
    assert_eq!(spectra(&args).stdout, spectra(&seq).stdout);
    assert_eq!(spectra(&args).stdout, spectra(&two).stdout);
}
