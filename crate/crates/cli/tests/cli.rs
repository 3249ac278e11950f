use krylov_expm::linalg::mtx::read_matrix_market;
use std::path::Path;
use std::process::Command;
use tempfile::TempDir;

fn run(cmd: &str, config: &str, dir: &Path, extra: &[&str]) -> (i32, String) {
    let cfg = dir.join(format!("{cmd}.json"));
    std::fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_krylov-expm"))
        .arg(cmd)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_owned).collect())
        .collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn build_writes_matrix_and_metadata() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"problems": [{"kind": "schrodinger_free", "n": 3}, {"kind": "hubbard", "omega": 0.123}]}"#;
    let (code, err) = run("build", cfg, dir.path(), &[]);
    assert_eq!(code, 0, "{err}");
    let out = dir.path().join("out");

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("schrodinger_n3.json")).unwrap())
            .unwrap();
    assert_eq!(meta["n"], 3);
    assert_eq!(meta["nnz"], 7);
    assert_eq!(meta["symmetry"], "hermitian");
    assert_eq!(meta["sigma"], serde_json::json!([0.0, -1.0]));

    let hub: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("hubbard_w0.123.json")).unwrap())
            .unwrap();
    assert_eq!(hub["n"], 4900);
    assert_eq!(hub["nnz"], 43980);

    let text = std::fs::read(out.join("hubbard_w0.123.mtx")).unwrap();
    let op = read_matrix_market(text.as_slice()).unwrap();
    assert_eq!(op.nnz(), 43980);
    let mut again = Vec::new();
    krylov_expm::linalg::mtx::write_matrix_market(&op, &mut again).unwrap();
    assert_eq!(again, text);
}

#[test]
fn sweep_single_point_gives_one_row() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"problem": {"kind": "heat", "n": 60}, "m": 8, "t_grid": {"values": [2.0]}}"#;
    let (code, err) = run("sweep", cfg, dir.path(), &[]);
    assert_eq!(code, 0, "{err}");
    let (header, rows) = read_csv(&dir.path().join("out/sweep_heat_n60_m8.csv"));
    assert_eq!(
        header,
        [
            "t",
            "oracle_error",
            "Era",
            "Err1",
            "HermiteQuad",
            "ImprovedHermiteQuad",
            "TrapezoidQuad",
            "EffectiveOrderQuad",
            "rho"
        ]
    );
    assert_eq!(rows.len(), 1);
    let (long_header, long) = read_csv(&dir.path().join("out/sweep_long.csv"));
    assert_eq!(
        long_header,
        [
            "problem",
            "m",
            "sigma",
            "p",
            "t",
            "estimator",
            "value",
            "extra_matvecs",
            "oracle_error"
        ]
    );
    assert!(long
        .iter()
        .all(|r| r[0] == "heat_n60" && r[1] == "8" && r[2] == "-1+0i"));
    assert!(dir.path().join("out/plot_sweep.py").exists());
}

#[test]
fn sweep_reproduces_the_error_slope() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"problem": {"kind": "schrodinger_free", "n": 200}, "m": 10,
                  "t_grid": {"era_from": 1e-14, "era_to": 1e2, "points": 30}}"#;
    let (code, err) = run("sweep", cfg, dir.path(), &[]);
    assert_eq!(code, 0, "{err}");
    let (h, rows) = read_csv(&dir.path().join("out/sweep_schrodinger_n200_m10.csv"));
    let (it, ie) = (col(&h, "t"), col(&h, "oracle_error"));
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| {
            (
                r[it].parse::<f64>().unwrap().ln(),
                r[ie].parse::<f64>().unwrap(),
            )
        })
        .filter(|&(_, e)| (1e-12..=1e-6).contains(&e))
        .map(|(x, e)| (x, e.ln()))
        .collect();
    assert!(pts.len() >= 4);
    let n = pts.len() as f64;
    let (mx, my) = pts
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope - 10.0).abs() <= 0.25, "slope {slope}");
    let era = col(&h, "Era");
    for r in &rows {
        let (e, b) = (
            r[ie].parse::<f64>().unwrap(),
            r[era].parse::<f64>().unwrap(),
        );
        assert!(e <= b * (1.0 + 1e-9) + 1e-13);
    }
}

#[test]
fn sweep_output_is_deterministic_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"problem": {"kind": "convection_diffusion", "n": 6, "mu1": 0.9, "mu2": 1.1}, "m": [6, 12],
                  "t_grid": {"start": 1e-3, "stop": 0.5, "points": 12}}"#;
    let mut bodies = Vec::new();
    for threads in ["1", "3"] {
        let (code, err) = run("sweep", cfg, dir.path(), &["--threads", threads]);
        assert_eq!(code, 0, "{err}");
        bodies.push(std::fs::read(dir.path().join("out/sweep_long.csv")).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn seed_flag_changes_the_starting_vector() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"problem": {"kind": "heat", "n": 40}, "m": 6, "t_grid": {"values": [1.0]}}"#;
    let mut bodies = Vec::new();
    for seed in ["1", "2"] {
        assert_eq!(run("sweep", cfg, dir.path(), &["--seed", seed]).0, 0);
        bodies.push(std::fs::read(dir.path().join("out/sweep_heat_n40_m6.csv")).unwrap());
    }
    assert_ne!(bodies[0], bodies[1]);
}

#[test]
fn bench_meets_the_tolerance_on_hubbard() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"problem": {"kind": "hubbard", "omega": 0.123}, "m": 10,
                  "bench": {"tol": 1e-8, "steps": 10, "runs": [{"controller": "direct_era_local"}],
                            "early_stop": {"t": 0.3, "m_max": 30}}}"#;
    let (code, err) = run("bench", cfg, dir.path(), &[]);
    assert_eq!(code, 0, "{err}");
    let (h, rows) = read_csv(&dir.path().join("out/bench_hubbard_w0.123.csv"));
    assert_eq!(
        h,
        [
            "controller",
            "estimator",
            "m",
            "tol",
            "N",
            "total_t",
            "total_matvecs",
            "accumulated_bound",
            "oracle_error_per_unit_t"
        ]
    );
    let per_t = col(&h, "oracle_error_per_unit_t");
    assert_eq!(rows[0][col(&h, "N")], "10");
    assert!(rows[0][per_t].parse::<f64>().unwrap() <= 1e-8);
    let es = &rows[1];
    assert_eq!(es[0], "early_stop");
    assert!(es[col(&h, "total_matvecs")].parse::<usize>().unwrap() <= 30);
    assert!(es[per_t].parse::<f64>().unwrap() <= 1e-8);
}

#[test]
fn equal_cost_runs_spend_equal_matvecs() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"problem": {"kind": "schrodinger_free", "n": 200}, "m": 12,
                  "bench": {"steps": 5, "equal_cost": true, "runs": [
                      {"controller": "direct_era_local"},
                      {"controller": "direct_era_corrected", "estimator": "EraCorrected"}]}}"#;
    let (code, err) = run("bench", cfg, dir.path(), &[]);
    assert_eq!(code, 0, "{err}");
    let (h, rows) = read_csv(&dir.path().join("out/bench_schrodinger_n200.csv"));
    let mv = col(&h, "total_matvecs");
    assert_eq!(rows[0][mv], rows[1][mv]);
    assert_eq!(
        (
            rows[0][col(&h, "m")].as_str(),
            rows[1][col(&h, "m")].as_str()
        ),
        ("12", "11")
    );
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let cases = [
        (
            "sweep",
            r#"{"problem": {"kind": "heat", "n": 10}, "t_grid": {"values": []}}"#,
        ),
        ("sweep", r#"{"problem": {"kind": "heat", "n": 10}}"#),
        (
            "bench",
            r#"{"problem": {"kind": "heat", "n": 10}, "bench": {"steps": 0, "runs": [{"controller": "heuristic"}]}}"#,
        ),
        ("bench", r#"{"problem": {"kind": "heat", "n": 10}}"#),
        ("build", r#"{"problem": {"kind": "warp_drive"}}"#),
        ("build", "{"),
    ];
    for (cmd, cfg) in cases {
        let (code, err) = run(cmd, cfg, dir.path(), &[]);
        assert_eq!(code, 2, "{cmd} {cfg}: {err}");
        assert!(!err.is_empty());
    }
    let (code, _) = run(
        "build",
        r#"{"problem": {"kind": "heat", "n": 10}}"#,
        dir.path(),
        &["--threads", "0"],
    );
    assert_eq!(code, 2);
    let missing = Command::new(env!("CARGO_BIN_EXE_krylov-expm"))
        .args(["build", "--config", "/nonexistent/config.json"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}
