use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_quantile-motion"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

/// Data rows of a CSV (after the unit line and header), split on commas.
fn rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# units"));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let body = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, body)
}

fn col(header: &[String], name: &str) -> usize {
    header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"))
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

fn out(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

#[test]
fn free_median_is_a_straight_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = out(&dir, "free.csv");
    let o = run(&["free", "--p-list", "0.5", "--lambda", "0", "--out", p.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (h, body) = rows(&p);
    assert_eq!(
        h,
        ["P", "t", "x_cdf", "v_cdf", "x_ode", "v_ode", "discrepancy", "status"]
    );
    assert_eq!(body.len(), 201);
    for r in &body {
        let t = f(&r[col(&h, "t")]);
        assert!((f(&r[col(&h, "x_cdf")]) - (-10.0 + 2.0 * t)).abs() < 1e-8);
        assert!((f(&r[col(&h, "x_ode")]) - (-10.0 + 2.0 * t)).abs() < 1e-8);
        assert_eq!(r[col(&h, "status")], "ok");
    }
    let text = std::fs::read_to_string(&p).unwrap();
    assert!(!text.contains('\r'));
    assert!(p.with_extension("csv.manifest").exists());
}

#[test]
fn dissipative_terminations_in_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let p = out(&dir, "d.csv");
    assert_eq!(
        code(&run(&["dissipative", "--preset", "fig1", "--out", p.to_str().unwrap()])),
        0
    );
    let manifest = std::fs::read_to_string(p.with_extension("csv.manifest")).unwrap();
    for pv in [0.3f64, 0.5, 0.7, 0.9] {
        for method in ["cdf", "ode"] {
            let key = format!("termination P={pv:?} {method}: norm-below-P t_end=");
            let line = manifest
                .lines()
                .find(|l| l.contains(&key))
                .unwrap_or_else(|| panic!("{key}"));
            let t_end: f64 = line.rsplit('=').next().unwrap().parse().unwrap();
            assert!((t_end + pv.ln() / 0.1).abs() < 1e-6, "{line}");
        }
    }
    // the norm at t = 20 is e^-2 > 0.1, so P = 0.1 survives
    assert!(manifest.contains("termination P=0.1 cdf: completed"));
    let (h, body) = rows(&p);
    let last_05 = body
        .iter()
        .filter(|r| f(&r[0]) == 0.5)
        .map(|r| f(&r[col(&h, "t")]))
        .fold(0.0, f64::max);
    assert!(last_05 < 2.0f64.ln() / 0.1);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = out(&dir, "x.csv");
    let p = p.to_str().unwrap();
    for args in [
        vec!["free", "--p-list", "", "--out", p],
        vec!["free", "--p-list", "0.5,0.2", "--out", p],
        vec!["free", "--t-step", "0", "--out", p],
        vec!["tunnel", "--barrier-halfwidth", "-1", "--out", p],
        vec!["free", "--preset", "fig7", "--out", p],
        vec!["free", "--out", "/nonexistent-dir/x.csv"],
        vec!["frobnicate"],
    ] {
        let o = run(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn coarse_k_grid_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let p = out(&dir, "t.csv");
    let o = run(&[
        "tunnel",
        "--k-nodes",
        "64",
        "--t-max",
        "40",
        "--p-list",
        "0.5",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("k-grid too coarse"));
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = out(&dir, "a.csv");
    let b = out(&dir, "b.csv");
    let c = out(&dir, "c.csv");
    let args = ["--p-list", "0.2,0.6", "--lambda", "0.05", "--t-max", "8"];
    for p in [&a, &b] {
        let mut v = vec!["dissipative", "--out", p.to_str().unwrap()];
        v.extend(args);
        assert_eq!(code(&run(&v)), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    // the manifest is itself a config file
    let m = a.with_extension("csv.manifest");
    assert_eq!(
        code(&run(&[
            "dissipative",
            "--config",
            m.to_str().unwrap(),
            "--out",
            c.to_str().unwrap()
        ])),
        0
    );
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn flags_override_config_override_preset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = out(&dir, "run.cfg");
    std::fs::write(&cfg, "# test\np_list = 0.3\nt_max = 3\nt_step = 0.5\n").unwrap();
    let p = out(&dir, "f.csv");
    let o = run(&[
        "free",
        "--config",
        cfg.to_str().unwrap(),
        "--t-max",
        "2",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let (h, body) = rows(&p);
    let ts: Vec<f64> = body.iter().map(|r| f(&r[col(&h, "t")])).collect();
    assert_eq!(ts, [0.0, 0.5, 1.0, 1.5, 2.0]);
    assert!(body.iter().all(|r| f(&r[0]) == 0.3));
}

#[test]
fn tunnel_without_barrier_has_no_lag() {
    let dir = tempfile::tempdir().unwrap();
    let p = out(&dir, "t.csv");
    let o = run(&[
        "tunnel",
        "--quick",
        "--barrier-height",
        "0",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (h, body) = rows(&p);
    assert_eq!(
        h,
        ["P", "t", "x_tunnel", "x_free", "lag", "v_tunnel", "v_free", "status"]
    );
    assert!(!body.is_empty());
    for r in &body {
        assert!(f(&r[col(&h, "lag")]).abs() < 1e-8, "{r:?}");
    }

    let (dh, dbody) = rows(&p.with_file_name("t_density.csv"));
    assert_eq!(dh, ["t", "x", "rho_tunnel", "rho_free"]);
    let mut times: Vec<f64> = dbody.iter().map(|r| f(&r[0])).collect();
    times.dedup();
    assert_eq!(times, [0.0, 2.0, 4.0, 6.0, 8.0]);
    for t in times {
        let block: Vec<(f64, f64)> = dbody
            .iter()
            .filter(|r| f(&r[0]) == t)
            .map(|r| (f(&r[1]), f(&r[2])))
            .collect();
        let mass: f64 = block
            .windows(2)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
            .sum();
        assert!((mass - 1.0).abs() < 1e-6, "t={t}: {mass}");
    }
}

#[test]
fn delta_p_columns_and_zero_barrier() {
    let dir = tempfile::tempdir().unwrap();
    let p = out(&dir, "dp.csv");
    let o = run(&["delta-p", "--quick", "--out", p.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let (h, body) = rows(&p);
    assert_eq!(
        h,
        [
            "x",
            "t",
            "dp_direct",
            "term1",
            "term2",
            "term3",
            "dp_eq9_total",
            "agreement_rel",
            "positivity_ok"
        ]
    );
    assert!(body.iter().all(|r| r[8] == "true"));
    for r in &body {
        if f(&r[2]) > 1e-6 {
            assert!(f(&r[7]) <= 0.01, "{r:?}");
        }
    }

    let o = run(&[
        "delta-p",
        "--quick",
        "--barrier-height",
        "0",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let (_, body) = rows(&p);
    for r in &body {
        assert!(f(&r[2]).abs() < 1e-8 && f(&r[6]) == 0.0, "{r:?}");
    }
}

#[test]
fn sphere_without_drift_moves_radially() {
    let dir = tempfile::tempdir().unwrap();
    let p = out(&dir, "s.csv");
    assert_eq!(code(&run(&["sphere3d", "--out", p.to_str().unwrap()])), 0);
    let (h, body) = rows(&p);
    assert_eq!(h, ["seed_id", "t", "x", "y", "z", "radius", "enclosed_probability"]);
    let p0 = f(&body[0][6]);
    let first: Vec<[f64; 3]> = body.iter().take(27).map(|r| [f(&r[2]), f(&r[3]), f(&r[4])]).collect();
    for r in &body {
        assert!((f(&r[6]) - p0).abs() < 1e-4);
        let id: usize = r[0].parse().unwrap();
        if id == 0 {
            continue;
        }
        // same direction as the seed, radius scaled uniformly
        let x = [f(&r[2]), f(&r[3]), f(&r[4])];
        let r0 = first[id];
        let cross = [
            x[1] * r0[2] - x[2] * r0[1],
            x[2] * r0[0] - x[0] * r0[2],
            x[0] * r0[1] - x[1] * r0[0],
        ];
        assert!(cross.iter().all(|c| c.abs() < 1e-6), "{r:?}");
    }
    // z = 0 cut: the 8 seeds in the equatorial plane stay on a circle
    let last_t = f(&body.last().unwrap()[1]);
    let radii: Vec<f64> = body
        .iter()
        .filter(|r| f(&r[1]) == last_t && r[0] != "0" && f(&r[4]).abs() < 1e-12)
        .map(|r| f(&r[5]))
        .collect();
    assert_eq!(radii.len(), 8);
    assert!(radii.iter().all(|r| (r - radii[0]).abs() < 1e-8 * radii[0]));
}

#[test]
fn verify_quick_passes_and_detects_a_flipped_current() {
    let dir = tempfile::tempdir().unwrap();
    let p = out(&dir, "v.csv");
    let o = run(&["verify", "--quick", "--out", p.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let (h, body) = rows(&p);
    assert_eq!(h, ["check", "passed", "value", "limit", "seconds", "detail"]);
    assert!(body.len() >= 8 && body.iter().all(|r| r[1] == "true"));

    let o = run(&[
        "verify",
        "--quick",
        "--inject-fault",
        "flip-current",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("continuity"), "{err}");
}
