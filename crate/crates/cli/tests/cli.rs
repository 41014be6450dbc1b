use std::path::Path;
use std::process::{Command, Output};

fn qlm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlm")).args(args).output().expect("binary runs")
}

fn qlm_with_threads(threads: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlm"))
        .env("QLM_THREADS", threads)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn closed_form(theta: f64) -> f64 {
    0.5 - (1.0 + theta.cos()) / (4.0 * 3f64.sqrt())
}

#[test]
fn perr_csv_layout_and_determinism() {
    let args = ["perr", "--scenario", "fixed-purity", "--r1", "0.75", "--r2", "0.5", "--n", "1:30"];
    let a = qlm(&args);
    assert!(a.status.success());
    let text = stdout(&a);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,p_exact,p_asymptotic,helstrom,excess_risk");
    assert_eq!(lines.len(), 31);
    assert!(!text.contains('\r'));
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first[0], "1");
    // 12 significant digits
    assert_eq!(first[1], "0.426913736486");
    assert_eq!(first[3], "0.284722222222");
    let b = qlm_with_threads("1", &args);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn perr_json_mirrors_the_report() {
    let out = qlm(&["perr", "--scenario", "fixed-overlap", "--theta", "pi/3", "--n", "1:3", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for key in ["n", "scenario", "p_exact", "p_asymptotic", "helstrom", "excess_risk"] {
        assert!(rows[0].get(key).is_some(), "{key}");
    }
    let p1 = rows[0]["p_exact"].as_f64().unwrap();
    assert!((p1 - closed_form(std::f64::consts::PI / 3.0)).abs() < 1e-11);
    assert_eq!(rows[0]["scenario"]["kind"], "fixed_overlap");
}

#[test]
fn hard_sphere_rows_approach_the_baseline() {
    let out = qlm(&["perr", "--scenario", "hard-sphere", "--n", "1:30"]);
    let text = stdout(&out);
    let last: Vec<f64> = text.lines().last().unwrap().split(',').skip(1).map(|x| x.parse().unwrap()).collect();
    assert!((last[2] - 17.0 / 70.0).abs() < 1e-12);
    assert!(last[0] > last[2] && last[0] - last[2] < 0.03);
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec!["perr", "--scenario", "fixed-purity", "--r1", "0.75", "--n", "1:3"],
        vec!["perr", "--scenario", "fixed-purity", "--r1", "1.5", "--r2", "0.5", "--n", "1"],
        vec!["perr", "--scenario", "hard-sphere", "--n", "4:2"],
        vec!["perr", "--scenario", "fixed-overlap", "--theta", "pi/0", "--n", "1"],
        vec!["oracle", "--scenario", "hard-sphere", "--n", "3"],
        vec!["spectrum", "--scenario", "hard-sphere", "--n", "41"],
        vec!["simulate", "--noise", "depolarizing"],
        vec!["simulate", "--noise", "thermal", "--t", "10,20"],
        vec!["frobnicate"],
    ] {
        let out = qlm(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn oracle_passes_for_all_scenarios() {
    for args in [
        vec!["oracle", "--scenario", "fixed-purity", "--r1", "0.75", "--r2", "0.5", "--n", "1"],
        vec!["oracle", "--scenario", "hard-sphere", "--n", "1"],
        vec!["oracle", "--scenario", "fixed-overlap", "--theta", "pi/3", "--n", "1"],
        vec!["oracle", "--scenario", "fixed-overlap", "--theta", "pi/2", "--n", "2"],
    ] {
        let out = qlm(&args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        let text = stdout(&out);
        assert!(text.starts_with("n,scenario,p_engine,p_oracle,abs_diff,pass\n"));
        assert!(text.trim_end().ends_with("true"));
    }
}

#[test]
fn simulate_default_grid_and_seeds() {
    let out = qlm(&["simulate", "--seed", "5"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "theta,frequency,stderr,p_closed_form");
    assert_eq!(lines.len(), 27);
    assert_eq!(out.stdout, qlm_with_threads("1", &["simulate", "--seed", "5"]).stdout);
    assert_ne!(out.stdout, qlm(&["simulate", "--seed", "6"]).stdout);
}

#[test]
fn noiseless_simulation_tracks_the_closed_form() {
    let out = qlm(&["simulate", "--theta", "0,pi/4,pi/2,3pi/4", "--shots", "20000", "--seed", "11"]);
    for line in stdout(&out).lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let sigma = (v[3] * (1.0 - v[3]) / 20000.0).sqrt();
        assert!((v[1] - v[3]).abs() <= 3.0 * sigma, "{line}");
        assert!((v[3] - closed_form(v[0])).abs() < 1e-11);
    }
}

#[test]
fn depolarizing_sweep_writes_one_file_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("fig4.csv");
    let out = qlm(&[
        "simulate",
        "--noise",
        "depolarizing",
        "--p-depol",
        "0.001,0.01",
        "--steps",
        "4",
        "--output",
        base.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for tag in ["p0.001", "p0.01"] {
        let path = dir.path().join(format!("fig4_{tag}.csv"));
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("theta,frequency,stderr,p_closed_form\n"));
        assert_eq!(text.lines().count(), 6);
    }
    assert!(!Path::new(&base).exists());
}

#[test]
fn spectrum_json_accounts_for_the_full_space() {
    let out = qlm(&["spectrum", "--scenario", "fixed-overlap", "--theta", "pi/3", "--n", "1"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n"], 1);
    assert_eq!(v["totals"]["total_multiplicity"], 8);
    assert!(v["totals"]["trace_sum"].as_f64().unwrap().abs() <= 1e-10);
    let entries = v["entries"].as_array().unwrap();
    let total: u64 = entries.iter().map(|e| e["multiplicity"].as_u64().unwrap()).sum();
    assert_eq!(total, 8);
    for e in entries {
        for key in ["s", "t", "q", "case", "branch", "eigenvalue", "multiplicity", "ln_scale", "weighted"] {
            assert!(e.get(key).is_some(), "{key}");
        }
    }
}

#[test]
fn spectrum_csv_reports_totals() {
    let out = qlm(&["spectrum", "--scenario", "hard-sphere", "--n", "3", "--format", "csv"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("s,t,q,case,branch,eigenvalue,multiplicity,ln_scale,weighted\n"));
    let total: u64 = text.lines().skip(1).map(|l| l.split(',').nth(6).unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 128);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("total_multiplicity=128"));
}
