use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_v2v-sf"));
    c.env_remove("V2V_SF_SEED");
    c
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

/// Header and rows of a CSV, skipping `#` comment lines.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn fig1_writes_expected_columns_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(bin()
            .args(["fig1", "--trials", "300", "--seed", "9", "--out"])
            .arg(out));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["fig1_alpha3.csv", "fig1_alpha4.csv"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap()
        );
        let (header, rows) = read_csv(&a.join(name));
        assert_eq!(
            header.join(","),
            "sigma,analytic_c1,analytic_c2,mc_c1,mc_c2,baseline_c1,baseline_c2"
        );
        assert_eq!(rows.len(), 199);
        for r in &rows {
            assert!((0.0..1.0).contains(&r[0]));
            assert!(r[1..].iter().all(|v| (0.0..=1.0).contains(v)));
        }
        let text = fs::read_to_string(a.join(name)).unwrap();
        assert!(text.starts_with("# config_hash: "));
        assert!(text.contains("# units: "));
    }
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("fig1.meta.json")).unwrap()).unwrap();
    assert!(meta["fig1_alpha4"]["config_hash"].is_string());
    assert!(a.join("fig1.gp").exists());
}

#[test]
fn seed_environment_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (tag, env, flag) in [
        ("e1", Some("5"), None),
        ("e2", Some("5"), None),
        ("e3", Some("6"), None),
        ("f", Some("6"), Some("5")),
    ] {
        let out = dir.path().join(tag);
        let mut cmd = bin();
        cmd.args(["fig1", "--trials", "100", "--set", "alpha=4", "--out"])
            .arg(&out);
        if let Some(e) = env {
            cmd.env("V2V_SF_SEED", e);
        }
        if let Some(s) = flag {
            cmd.args(["--seed", s]);
        }
        assert!(run(&mut cmd).status.success());
        outputs.push(read_csv(&out.join("fig1_alpha4.csv")).1);
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_ne!(outputs[0], outputs[2]);
    assert_eq!(outputs[0], outputs[3], "--seed wins over the environment");
}

#[test]
fn fig2_probe_reports_small_threshold_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(bin().args(["fig2", "--out"]).arg(dir.path()))
        .status
        .success());
    let (header, rows) = read_csv(&dir.path().join("fig2_probe.csv"));
    let col = header.iter().position(|h| h == "rel_error_pct").unwrap();
    let f1 = rows.iter().find(|r| r[1] == 1.0).unwrap();
    assert!((f1[col] + 0.24).abs() < 0.01, "{}", f1[col]);
    let (header, rows) = read_csv(&dir.path().join("fig2.csv"));
    let mh = header.iter().position(|h| h == "mh").unwrap();
    assert!(rows
        .iter()
        .all(|r| r[mh] >= 0.0 && r[2..].iter().all(|v| (0.0..=1.0).contains(v))));
}

#[test]
fn fig3_stays_below_its_limit() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(bin().args(["fig3", "--out"]).arg(dir.path()))
        .status
        .success());
    let (header, rows) = read_csv(&dir.path().join("fig3.csv"));
    assert_eq!(header, ["pt_w", "sf_c1", "sf_c2", "limit_c1", "limit_c2"]);
    assert_eq!(rows.len(), 31);
    for r in &rows {
        assert!(r[1] <= r[3] && r[2] <= r[4]);
    }
}

#[test]
fn sweep_over_alpha_with_speed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    fs::write(
        &cfg,
        "# exponent sweep\nv_s = 22.5\ncurves = analytic, f1, f2, limit, baseline\nsweep_key = alpha\nsweep_values = 3, 4, 5\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = run(bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("lambda_p"), "missing-key notice: {stderr}");
    for v in ["3", "4", "5"] {
        let (header, rows) = read_csv(&out.join(format!("sweep_alpha_{v}.csv")));
        assert_eq!(header.len(), 2 + 2 * 5);
        assert!(!rows.is_empty());
    }
    let (_, summary) = read_csv(&out.join("sweep_alpha_summary.csv"));
    assert_eq!(
        summary.iter().map(|r| r[0]).collect::<Vec<_>>(),
        [3.0, 4.0, 5.0]
    );
    let text = fs::read_to_string(out.join("sweep_alpha_3.csv")).unwrap();
    assert!(text.contains("# alpha = 3\n"));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("sweep_alpha.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["runs"][0]["config"]["d_s"], 45.0);
    assert!(out.join("sweep_alpha.gp").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(bin().arg("fig9")).status.code(), Some(1));
    assert_eq!(
        run(bin().args(["fig1", "--trials", "many"])).status.code(),
        Some(1)
    );

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "alpha = 4\nlambda_p = lots\n").unwrap();
    let o = run(bin()
        .args(["sweep", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path()));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let o = run(bin()
        .args(["fig2", "--set", "lambda_p=-1", "--out"])
        .arg(dir.path()));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lambda_p"));

    let o = run(bin()
        .args(["fig2", "--set", "nonsense", "--out"])
        .arg(dir.path()));
    assert_eq!(o.status.code(), Some(2));
    assert!(run(bin().arg("--help")).status.success());
}
