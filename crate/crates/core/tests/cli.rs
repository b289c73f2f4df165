use std::path::Path;
use std::process::{Command, Output};

use shrinker::export::read_curve_csv;

fn shrinker(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shrinker"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("SHRINKER_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn trace_round_sphere_writes_csv_and_events() {
    let dir = tempfile::tempdir().unwrap();
    let o = shrinker(&["trace", "--b", "2"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty(), "data goes to files only");

    let curve = read_curve_csv(&dir.path().join("profile.csv")).unwrap();
    let first = curve.points[0];
    assert_eq!(
        (first.s, first.x, first.z, first.theta),
        (0.0, 0.0, 2.0, 0.0)
    );

    let events: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("events.json")).unwrap())
            .unwrap();
    let vt = events
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["kind"] == "VerticalTangent")
        .expect("a vertical tangent");
    let (x, z) = (
        vt["state"]["x"].as_f64().unwrap(),
        vt["state"]["z"].as_f64().unwrap(),
    );
    assert!((x - 2.0).abs() < 1e-6 && z.abs() < 1e-6, "({x}, {z})");
}

#[test]
fn verify_at_tiny_height_passes_every_applicable_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = shrinker(&["verify", "--b", "1e-6"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("verify_report.json")).unwrap();
    let reports: Vec<serde_json::Value> = serde_json::from_str(&text).unwrap();
    assert!(reports.len() > 20);
    for r in &reports {
        assert_ne!(r["status"], "fail", "{}", r["claim_id"]);
    }
    assert!(reports
        .iter()
        .any(|r| r["claim_id"] == "small_b.x_star_lower" && r["status"] == "pass"));
}

#[test]
fn shoot_sphere_report_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let o = shrinker(&["shoot-sphere"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("sphere_report.json")).unwrap(),
    )
    .unwrap();
    let b0 = report["root"].as_f64().unwrap();
    assert!(b0 > 0.0 && b0 < 2.0);
    assert!(report["self_intersections"].as_array().unwrap().len() >= 2);

    let svg = std::fs::read_to_string(dir.path().join("sphere.svg")).unwrap();
    assert!(svg.contains("class=\"z-axis\""));
    assert_eq!(svg.matches("class=\"self-intersection\"").count(), 3);
    for tag in ["gamma", "beta", "gamma_ref", "beta_ref"] {
        assert!(svg.contains(&format!("class=\"branch-{tag}\"")), "{tag}");
    }

    // β runs between two vertical tangents, so with its mirror image the
    // tangent turns through more than π.
    let curve = read_curve_csv(&dir.path().join("sphere_curve.csv")).unwrap();
    let span = |tags: &[&str]| {
        let t: Vec<f64> = curve
            .points
            .iter()
            .filter(|p| tags.contains(&p.branch.as_str()))
            .map(|p| p.theta)
            .collect();
        t.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - t.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    assert!(span(&["beta"]) > 3.0);
    assert!(span(&["beta", "beta_ref"]) > std::f64::consts::PI);
}

#[test]
fn mesh_of_immersed_sphere_has_sphere_topology() {
    let dir = tempfile::tempdir().unwrap();
    let o = shrinker(
        &[
            "mesh",
            "--shape",
            "sphere",
            "--segments",
            "16",
            "--samples",
            "400",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("Euler characteristic 2"));
    let obj = std::fs::read_to_string(dir.path().join("sphere.obj")).unwrap();
    assert_eq!(
        obj.lines().filter(|l| l.starts_with("v ")).count(),
        398 * 16 + 2
    );
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(
        &cfg,
        "# round sphere\nb = 0.5\nrel_tol = 1e-10\nabs_tol = 1e-10\n",
    )
    .unwrap();
    let o = shrinker(
        &["trace", "--config", cfg.to_str().unwrap(), "--b", "2"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let curve = read_curve_csv(&dir.path().join("profile.csv")).unwrap();
    assert_eq!(curve.points[0].z, 2.0, "flag overrides the file");
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_shrinker"))
        .args(["trace", "--b", "1"])
        .env("SHRINKER_OUT_DIR", dir.path())
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("profile.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| shrinker(args, dir.path()).status.code();

    assert_eq!(code(&["frobnicate"]), Some(2));
    assert_eq!(code(&["trace"]), Some(2), "missing --b");
    assert_eq!(code(&["trace", "--b", "2", "--rel-tol", "-1"]), Some(2));
    assert_eq!(
        code(&["trace", "--b", "2", "--config", "/nonexistent/run.conf"]),
        Some(2)
    );
    assert_eq!(code(&["verify", "--b", "1e-6", "--n", "1"]), Some(2));

    // Outside the seed range and a bracket with no sign change are
    // computational failures.
    assert_eq!(code(&["trace", "--b", "9"]), Some(1));
    assert_eq!(
        code(&["shoot-sphere", "--bracket-lo", "1", "--bracket-hi", "2"]),
        Some(1)
    );
    assert_eq!(
        std::fs::read_dir(dir.path()).unwrap().count(),
        0,
        "no partial files"
    );
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "tolerance = 1e-9\n").unwrap();
    let o = shrinker(
        &["trace", "--b", "1", "--config", cfg.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown key tolerance"));
}
