use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn mushroom(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mushroom"))
        .args(args)
        .env("MUSHROOM_CACHE_DIR", cache)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert_eq!(o.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn geom_default_prints_area_and_segments() {
    let tmp = TempDir::new().unwrap();
    let out = stdout(&mushroom(tmp.path(), &["geom"]));
    assert!(out.lines().any(|l| l.starts_with("area,8.2831853")), "{out}");
    assert!(out.contains("segment,shape,start_x,start_y,end_x,end_y,length\n"));
    assert_eq!(out.lines().filter(|l| l.contains(",line,") || l.contains(",arc,")).count(), 6);
    assert!(!out.contains('\r'));
}

#[test]
fn quasi_count_reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let args = ["quasi", "count", "--lambda-max", "40", "--points", "4", "--out", d.to_str().unwrap()];
        stdout(&mushroom(&tmp.path().join("cache"), &args));
    }
    let ca = std::fs::read(a.join("quasi_count.csv")).unwrap();
    assert_eq!(ca, std::fs::read(b.join("quasi_count.csv")).unwrap());
    let text = String::from_utf8(ca).unwrap();
    assert!(text.starts_with("lambda,count,ratio,constant\n"));
    assert_eq!(text.lines().count(), 5);
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma["inputs_sha256"], mb["inputs_sha256"]);
    assert_eq!(ma["status"], "complete");
    assert_eq!(ma["artifacts"], mb["artifacts"]);
}

#[test]
fn manifest_records_artifact_digests() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    stdout(&mushroom(tmp.path(), &["geom", "--out", out.to_str().unwrap()]));
    let m = manifest(&out);
    assert_eq!(m["command"], "geom");
    assert_eq!(m["seeds"], serde_json::json!([]));
    for a in m["artifacts"].as_array().unwrap() {
        let bytes = std::fs::read(out.join(a["name"].as_str().unwrap())).unwrap();
        assert_eq!(a["sha256"], mushroom_cli::artifact::sha256_hex(&bytes));
        assert_eq!(a["bytes"], bytes.len());
    }
}

#[test]
fn seeds_are_recorded_and_control_monte_carlo() {
    let tmp = TempDir::new().unwrap();
    let run = |seed: &str, dir: &str| {
        let d = tmp.path().join(dir);
        stdout(&mushroom(tmp.path(), &["dyn", "mc", "--samples", "5000", "--seed", seed, "--out", d.to_str().unwrap()]));
        (std::fs::read_to_string(d.join("mc.csv")).unwrap(), manifest(&d))
    };
    let (a, ma) = run("11", "a");
    let (b, _) = run("11", "b");
    let (c, _) = run("12", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(ma["seeds"], serde_json::json!([11]));
}

#[test]
fn validation_errors_exit_1_before_any_output() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("never");
    for args in [
        vec!["geom", "--r1", "3"],
        vec!["quasi", "count", "--eps", "0.5"],
        vec!["eig", "solve", "--h", "-1"],
        vec!["nonsense"],
        vec!["dyn", "classify", "--x", "5", "--y", "5", "--dx", "1", "--dy", "0"],
    ] {
        let mut a = args.clone();
        a.extend(["--out", out.to_str().unwrap()]);
        let o = mushroom(tmp.path(), &a);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
    }
    // configuration validation happens before the manifest is written
    assert!(!out.join("manifest.json").exists() || manifest(&out)["status"] == "failed");
    assert_eq!(mushroom(tmp.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn refused_runs_leave_a_failure_marker_and_no_artifacts() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("bad.json");
    std::fs::write(&input, r#"{"g":[1,1],"sets":[[1,2]],"eps":[0.1],"eps_prime":[0.1],"d":1}"#).unwrap();
    let out = tmp.path().join("run");
    let o = mushroom(tmp.path(), &["density", "assemble", "--input", input.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("j = 1"));
    let m = manifest(&out);
    assert_eq!(m["status"], "failed");
    assert!(m["error"].as_str().unwrap().contains("density"));
    assert_eq!(std::fs::read_dir(&out).unwrap().count(), 1);
}

#[test]
fn config_file_is_applied_and_flags_take_precedence() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.ini");
    std::fs::write(&cfg, "[geometry]\nr1 = 0.5\nr2 = 1\nt = 2\n").unwrap();
    let c = cfg.to_str().unwrap();
    let out = stdout(&mushroom(tmp.path(), &["--config", c, "geom"]));
    let area = std::f64::consts::PI / 2.0 + 2.0;
    assert!(out.contains(&format!("area,{area}\n")), "{out}");
    let out = stdout(&mushroom(tmp.path(), &["--config", c, "geom", "--t", "1"]));
    assert!(out.contains(&format!("area,{}\n", std::f64::consts::PI / 2.0 + 1.0)), "{out}");

    std::fs::write(&cfg, "[solver]\nmethod = spectral\n").unwrap();
    assert_eq!(mushroom(tmp.path(), &["--config", c, "geom"]).status.code(), Some(1));
    std::fs::write(&cfg, "[mystery]\nkey = 1\n").unwrap();
    assert_eq!(mushroom(tmp.path(), &["--config", c, "geom"]).status.code(), Some(1));
}

#[test]
fn cache_dir_comes_from_env_unless_overridden() {
    let tmp = TempDir::new().unwrap();
    let (env_dir, flag_dir) = (tmp.path().join("env"), tmp.path().join("flag"));
    let out = stdout(&mushroom(&env_dir, &["specfun", "zeros", "--n", "0", "--kmax", "2"]));
    assert!(out.starts_with("n,k,alpha,residual\n0,1,2.40482555769577"), "{out}");
    assert!(env_dir.join("bessel_zeros.csv").exists());
    stdout(&mushroom(&env_dir, &["--cache-dir", flag_dir.to_str().unwrap(), "specfun", "zeros", "--n", "1", "--kmax", "1"]));
    assert!(flag_dir.join("bessel_zeros.csv").exists());
}

#[test]
fn eig_solve_is_cached_and_reproducible() {
    let tmp = TempDir::new().unwrap();
    let args = ["eig", "solve", "--h", "0.05", "--count", "6"];
    let first = stdout(&mushroom(tmp.path(), &args));
    let files: Vec<_> = std::fs::read_dir(tmp.path()).unwrap().collect();
    assert_eq!(files.len(), 1);
    assert_eq!(first, stdout(&mushroom(tmp.path(), &args)));
    let e1: f64 = first.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((e1 - 2.5895).abs() < 1e-3, "{e1}");
}

#[test]
fn weyl_and_flow_tables_have_the_documented_columns() {
    let tmp = TempDir::new().unwrap();
    let w = stdout(&mushroom(tmp.path(), &["eig", "weyl", "--h", "0.05", "--lambda-grid", "20,40"]));
    assert!(w.starts_with("lambda,count,ratio\n20,"));
    let s = stdout(&mushroom(
        tmp.path(),
        &["flow", "sweep", "--h", "0.05", "--t0", "0.9", "--t1", "1.1", "--samples", "3", "--jmax", "2"],
    ));
    assert!(s.starts_with("t,j,E,dE_numeric,dE_boundary,dE_interior,bound\n"));
    assert_eq!(s.lines().count(), 7);
    let h = stdout(&mushroom(tmp.path(), &["flow", "hadamard", "--h", "0.05", "--j", "2"]));
    assert_eq!(h.lines().count(), 3);
}

#[test]
fn density_assemble_reports_thresholds() {
    let tmp = TempDir::new().unwrap();
    let n = 10_000;
    let j = 4;
    let inst = serde_json::json!({
        "g": (1..=n).map(|k| 1.0 / k as f64).collect::<Vec<_>>(),
        "sets": (1..=j).map(|j| ((j + 1)..=n).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "eps": (1..=j).map(|j| 0.5f64.powi(j)).collect::<Vec<_>>(),
        "eps_prime": (1..=j).map(|j| 0.5f64.powi(j)).collect::<Vec<_>>(),
        "d": 1.0,
    });
    let input = tmp.path().join("inst.json");
    std::fs::write(&input, inst.to_string()).unwrap();
    let v: Value = serde_json::from_str(&stdout(&mushroom(tmp.path(), &["density", "assemble", "--input", input.to_str().unwrap()]))).unwrap();
    let nj: Vec<u64> = v["N_j"].as_array().unwrap().iter().map(|t| t["n_j"].as_u64().unwrap()).collect();
    assert_eq!(nj, [2, 5, 17, 65]);
    assert_eq!(v["S"], serde_json::json!([[1, n]]));
    for seg in v["audit"]["segments"].as_array().unwrap() {
        assert!(seg["density_margin"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn percival_report_bundles_every_diagnostic() {
    let tmp = TempDir::new().unwrap();
    let out = stdout(&mushroom(tmp.path(), &["report", "percival", "--t", "1", "--h", "0.05", "--count", "40"]));
    let v: Value = serde_json::from_str(&out).unwrap();
    let d = v["integrable_fraction"].as_f64().unwrap();
    assert!((d - 0.29659355744).abs() < 1e-10);
    for key in ["quasi_count", "weyl", "good_time", "flow"] {
        assert!(!v[key].is_null(), "{key}");
    }
    assert_eq!(v["flow"]["records"].as_array().unwrap().len(), 5);
}

#[test]
fn plot_handles_empty_tables_presets_and_bad_input() {
    let tmp = TempDir::new().unwrap();
    let empty = tmp.path().join("empty.csv");
    std::fs::write(&empty, "lambda,count,ratio,constant\n").unwrap();
    let svg = stdout(&mushroom(tmp.path(), &["plot", "--input", empty.to_str().unwrap(), "--kind", "quasi-count"]));
    assert!(svg.contains(r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1""#));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains("<line") && !svg.contains("<polyline"));

    let table = tmp.path().join("q.csv");
    std::fs::write(&table, stdout(&mushroom(tmp.path(), &["quasi", "count", "--lambda-max", "30", "--points", "3"]))).unwrap();
    let svg = stdout(&mushroom(tmp.path(), &["plot", "--input", table.to_str().unwrap(), "--kind", "quasi-count"]));
    assert_eq!(svg.matches("<polyline").count(), 1);
    assert!(svg.contains("stroke-dasharray") && svg.contains("constant = 0.1955"));

    let ragged = tmp.path().join("ragged.csv");
    std::fs::write(&ragged, "a,b\n1,2\n3\n").unwrap();
    let o = mushroom(tmp.path(), &["plot", "--input", ragged.to_str().unwrap(), "--x", "a", "--y", "b"]);
    assert_eq!(o.status.code(), Some(1));
    std::fs::write(&ragged, "a,b\n1,x\n").unwrap();
    let o = mushroom(tmp.path(), &["plot", "--input", ragged.to_str().unwrap(), "--x", "a", "--y", "b"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fan_chart_draws_one_curve_per_branch() {
    let csv = "t,j,E\n0.9,1,2.6\n1,1,2.5\n0.9,2,6.1\n1,2,6.0\n0.9,3,6.7\n1,3,6.4\n";
    let spec = mushroom_cli::plot::PlotSpec::for_kind(mushroom_cli::plot::PlotKind::Fan, None, None, None).unwrap();
    let svg = mushroom_cli::plot::plot(csv, &spec).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);
    assert!(svg.contains("j = 3"));
}

#[test]
fn error_classes_map_to_exit_codes() {
    use mushroom_core::Error;
    let code = |e: Error| mushroom_cli::CliError::from(e).code;
    assert_eq!(code(Error::Numerical { module: "m", detail: "x".into() }), 2);
    assert_eq!(code(Error::InvalidParameter { module: "m", detail: "x".into() }), 1);
    assert_eq!(code(Error::OutOfRange { module: "m", detail: "x".into() }), 1);
    assert_eq!(code(Error::Refused { module: "m", detail: "x".into() }), 1);
    assert_eq!(code(Error::Parse("x".into())), 1);
}
