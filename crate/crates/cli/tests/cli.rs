use levymax::{price, Family, LaplaceScheme, LevyModel, Payoff, PricingTask};
use std::io::Write;
use std::process::{Command, Output};

const KOBOL02: [&str; 10] = ["--model", "kobol", "--nu", "0.2", "--lambda-plus", "1", "--lambda-minus", "-2", "--m2", "0.1"];

fn levymax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levymax")).args(args).output().unwrap()
}

fn with_model(sub: &str, extra: &[&str]) -> Vec<String> {
    std::iter::once(sub).chain(KOBOL02).chain(extra.iter().copied()).map(String::from).collect()
}

fn run(args: &[String]) -> Output {
    levymax(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

/// Rows of the CSV on stdout, header dropped.
fn rows(out: &Output) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

fn column(out: &Output, k: usize) -> Vec<f64> {
    rows(out).iter().map(|r| r[k].parse().unwrap()).collect()
}

#[test]
fn cpdf_reproduces_reference_cell() {
    let out = run(&with_model("cpdf", &["--T", "0.25", "--a1", "-0.075", "--a2", "0.025"]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let header = String::from_utf8_lossy(&out.stdout).lines().next().unwrap().to_string();
    assert_eq!(header, "T,a1_or_h,a2,x1,x2,value,method,est_error,ms");
    let v = column(&out, 5);
    assert_eq!(v.len(), 1);
    assert!((v[0] - 0.0528532412024316).abs() < 1e-10);
    assert_eq!(rows(&out)[0][6], "sinh");
}

#[test]
fn values_carry_sixteen_significant_digits() {
    let out = run(&with_model("cpdf", &["--T", "0.25", "--a1", "0", "--a2", "0.1"]));
    let cell = &rows(&out)[0][5];
    let mantissa = cell.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 16, "{cell}");
}

#[test]
fn state_above_barrier_gives_zero() {
    let out = run(&with_model("cpdf", &["--T", "1", "--a1", "0", "--a2", "0.1", "--x2", "0.2"]));
    assert!(out.status.success());
    assert_eq!(column(&out, 5), vec![0.0]);
}

#[test]
fn seventeen_digits_round_trip_exactly() {
    let out = run(&with_model("cpdf", &["--T", "0.25", "--a1", "-0.05,0.025", "--a2", "0.05", "--digits", "17"]));
    let got = column(&out, 5);
    let m = LevyModel::kobol_calibrated(0.2, 1.0, -2.0, 0.1, 0.0).unwrap();
    let payoffs = [-0.05, 0.025].iter().map(|&a1| Payoff::Cpdf { x1: 0.0, x2: 0.0, a1, a2: 0.05 }).collect();
    let want = price(&PricingTask::new(m, 0.25, payoffs, 1e-10), &LaplaceScheme::sinh(Family::I)).unwrap().values;
    assert_eq!(got, want);
}

#[test]
fn config_file_matches_flags_and_flags_override() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    write!(
        f,
        "[model]\nkind = \"kobol\"\nnu = 0.2\nlambda_plus = 1.0\nlambda_minus = -2.0\nm2 = 0.1\n\n\
         [task]\nT = 0.25\na1 = [-0.075, 0.0]\na2 = 0.1\n\n[numeric]\nmethod = \"sinh\"\nfamily = \"II\"\n"
    )
    .unwrap();
    let path = f.path().to_str().unwrap();
    let from_cfg = levymax(&["cpdf", "--config", path]);
    assert!(from_cfg.status.success(), "{}", String::from_utf8_lossy(&from_cfg.stderr));
    let from_flags = run(&with_model("cpdf", &["--T", "0.25", "--a1", "-0.075,0", "--a2", "0.1", "--family", "ii"]));
    assert_eq!(column(&from_cfg, 5), column(&from_flags, 5));
    let overridden = levymax(&["cpdf", "--config", path, "--a2", "0.175"]);
    let v = column(&overridden, 5);
    assert!((v[0] - 0.0539603399744032).abs() < 1e-10 && (v[1] - 0.508350135593748).abs() < 1e-10);
}

#[test]
fn output_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let out = run(&with_model("no-touch", &["--T", "0.25", "--a2", "0.05,0.1", "--out", path.to_str().unwrap()]));
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn user_errors_exit_with_one() {
    for args in [
        vec!["cpdf", "--T", "1", "--a1", "0", "--a2", "0.1"],
        vec!["cpdf", "--bogus"],
        vec!["bench", "--set", "other"],
        vec!["cpdf", "--model", "brownian", "--T", "1", "--a1", "0", "--a2", "0.1"],
        vec!["cpdf", "--config", "/nonexistent/run.toml"],
    ] {
        let out = levymax(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
    // finite variation with drift is not deformable in q
    let out = run(&with_model("cpdf", &["--mu", "0.05", "--T", "1", "--a1", "0", "--a2", "0.1"]));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("GWR"));
}

#[test]
fn drift_case_runs_with_gwr() {
    let out = run(&with_model("cpdf", &["--mu", "0.05", "--T", "0.25", "--a1", "0", "--a2", "0.1", "--method", "gwr"]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = column(&out, 5)[0];
    assert!((0.0..=1.0).contains(&v));
}

#[test]
fn bench_reports_every_cell() {
    let out = levymax(&["bench", "--set", "nu02", "--runs", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = rows(&out);
    assert_eq!(r.len(), 25);
    assert!(r.iter().all(|row| row[7] == "true"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("25/25"));
}

#[test]
fn bench_miss_exits_with_two() {
    // a loose working tolerance cannot meet the 1e-10 reference tolerance everywhere
    let out = levymax(&["bench", "--set", "nu02", "--runs", "1", "--tol", "0.9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(rows(&out).iter().any(|row| row[7] == "false"));
}

#[test]
fn brownian_oracle_and_pipeline_agree() {
    let model = ["--model", "brownian", "--sigma", "0.3", "--mu", "0.05", "--T", "0.5", "--a1", "-0.1,0.1", "--a2", "0.2"];
    let pipe = levymax(&[&["cpdf"], &model[..]].concat());
    let oracle = levymax(&[&["oracle", "--kind", "bm"], &model[..]].concat());
    assert!(pipe.status.success() && oracle.status.success());
    for (a, b) in column(&pipe, 5).iter().zip(column(&oracle, 5)) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}

#[test]
fn monte_carlo_oracle_is_seeded() {
    let args = [
        "oracle", "--kind", "mc", "--model", "kobol", "--nu", "1.2", "--lambda-plus", "1", "--lambda-minus", "-2", "--m2",
        "0.1", "--T", "0.25", "--a1", "0", "--a2", "0.1", "--paths", "4000", "--steps", "50", "--seed", "7",
    ];
    let a = levymax(&args);
    let b = levymax(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(column(&a, 5), column(&b, 5));
    let err = column(&a, 7)[0];
    assert!((column(&a, 5)[0] - 0.465880513837506).abs() < 5.0 * err);
}

#[test]
fn factors_satisfy_the_identity_at_output_precision() {
    let out = run(&with_model("whf", &["--q-re", "2", "--q-im", "1", "--xi-re", "-3,0,4", "--xi-im", "-0.3,0.2", "--tol", "1e-14", "--digits", "17"]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = LevyModel::kobol_calibrated(0.2, 1.0, -2.0, 0.1, 0.0).unwrap();
    let q = levymax::Complex64::new(2.0, 1.0);
    let r = rows(&out);
    assert_eq!(r.len(), 6);
    for row in r {
        let f: Vec<f64> = row[..8].iter().map(|s| s.parse().unwrap()).collect();
        let xi = levymax::Complex64::new(f[2], f[3]);
        let p = levymax::Complex64::new(f[4], f[5]) * levymax::Complex64::new(f[6], f[7]);
        assert!((p * (q + m.psi(xi).unwrap()) / q - 1.0).norm() < 1e-12);
    }
}
