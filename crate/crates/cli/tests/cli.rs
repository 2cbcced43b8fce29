use std::fs;
use std::process::{Command, Output};

fn edgelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edgelab"))
        .args(args)
        .env_remove("EDGELAB_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn frechet_grid_row_at_one() {
    let o = edgelab(&[
        "limits",
        "--law",
        "frechet",
        "--mu",
        "1",
        "--c",
        "2",
        "--grid",
        "0.5:5:0.1",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("x,cdf"));
    assert!(text.lines().any(|l| l == "1,0.367879"), "{text}");
    assert_eq!(text.lines().count(), 1 + 46);
    assert_eq!(text.lines().last(), Some("5,0.998401"));
}

#[test]
fn falpha_closed_form_point() {
    let o = edgelab(&["limits", "--falpha", "--alpha", "1", "--x", "2"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "2.25\n");
}

#[test]
fn tau_at_alpha_one() {
    let o = edgelab(&["limits", "--tau", "--alpha", "1"]);
    assert_eq!(stdout(&o), "0.707107\n");
}

#[test]
fn domain_error_exits_one() {
    let o = edgelab(&["limits", "--law", "frechet", "--c", "-1", "--x", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
}

#[test]
fn missing_config_fails_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = edgelab(&["experiment", "missing-file.cfg", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn failed_limits_leave_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid.csv");
    let o = edgelab(&[
        "limits",
        "--law",
        "mp-stieltjes",
        "--alpha",
        "1",
        "--grid",
        "0:5:1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn sample_then_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = dir.path().join("a.mtx");
    let o = edgelab(&[
        "sample",
        "--n",
        "80",
        "--mu",
        "0.5",
        "--seed",
        "4",
        "--out",
        mtx.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(fs::read_to_string(&mtx)
        .unwrap()
        .starts_with("%%MatrixMarket matrix coordinate real symmetric"));
    let o = edgelab(&["spectrum", "--input", mtx.to_str().unwrap(), "--k", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lams: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(lams.len(), 3);
    assert!(lams.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn experiment_and_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("run");
    fs::write(
        &cfg,
        "[run]\nkind = \"point_process\"\ntrials = 40\nmaster_seed = 3\n\n[ensemble]\nn = 100\n",
    )
    .unwrap();
    let o = edgelab(&["experiment", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["manifest.json", "trials.csv", "cdf.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let trials = fs::read_to_string(out.join("trials.csv")).unwrap();
    assert!(trials.starts_with("trial,seed,excluded,t1,"));

    let cdf = dir.path().join("plot.csv");
    let o = edgelab(&[
        "report",
        out.join("manifest.json").to_str().unwrap(),
        "--cdf",
        cdf.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let report = stdout(&o);
    for s in manifest["scores"].as_array().unwrap() {
        let name = s["name"].as_str().unwrap();
        let line = report.lines().find(|l| l.starts_with(name)).unwrap();
        let shown: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
        assert_eq!(shown, s["value"].as_f64().unwrap());
    }
    assert_eq!(
        fs::read_to_string(cdf).unwrap(),
        fs::read_to_string(out.join("cdf.csv")).unwrap()
    );
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[run]\nkind = \"edge_law\"\ntrails = 4\n").unwrap();
    let o = edgelab(&[
        "experiment",
        cfg.to_str().unwrap(),
        "--out-dir",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("x").exists());
}

#[test]
fn output_dir_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "[run]\nkind = \"point_process\"\ntrials = 5\n\n[ensemble]\nn = 40\n\n[output]\ndir = \"ignored\"\n",
    )
    .unwrap();
    let target = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_edgelab"))
        .args(["experiment", cfg.to_str().unwrap()])
        .env("EDGELAB_OUTPUT_DIR", &target)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(target.join("manifest.json").exists());
    assert!(!dir.path().join("ignored").exists());
}

#[test]
fn shipped_configs_parse() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) == Some("toml") {
            edgelab::report::load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert_eq!(seen, 6);
}

#[test]
fn missing_matrix_file_exits_one() {
    let o = edgelab(&["spectrum", "--input", "/nonexistent/a.mtx"]);
    assert_eq!(o.status.code(), Some(1));
}
