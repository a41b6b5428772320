use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vortex-oam"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn default_spectrum_to_stdout() {
    let out = run(&["spectrum"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("r0,l_out,weight,"));
    assert!(header.ends_with(",version,config_sha256"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 15);
    for r in &rows {
        let w: f64 = r[2].parse().unwrap();
        if r[1] == "2" {
            assert!((w - 1.0).abs() < 1e-12);
        } else {
            assert!(w < 1e-12);
        }
    }
}

#[test]
fn sweep_with_config_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", "[geometry]\nr0 = 0, 0.5, 1, 2\n");
    let csv = dir.path().join("s.csv");
    let out = run(&["spectrum", "--config", &cfg, "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 * 15);

    let json = dir.path().join("s.json");
    let out = run(&[
        "spectrum",
        "--config",
        &cfg,
        "--out",
        json.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 60);
    let csv_hash = text.lines().nth(1).unwrap().rsplit(',').next().unwrap();
    assert_eq!(v["config_sha256"], csv_hash);
    for chunk in rows.chunks(15) {
        let sum: f64 = chunk.iter().map(|r| r["weight"].as_f64().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }
}

#[test]
fn config_hash_follows_config() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_config(dir.path(), "a.cfg", "[geometry]\nr0 = 0.5\n");
    let b = write_config(dir.path(), "b.cfg", "[geometry]\nr0 = 0.6\n");
    let hash = |cfg: &str| {
        let out = run(&["spectrum", "--config", cfg]);
        let text = String::from_utf8(out.stdout).unwrap();
        text.lines().nth(1).unwrap().rsplit(',').next().unwrap().to_string()
    };
    assert_ne!(hash(&a), hash(&b));
    assert_eq!(hash(&a), hash(&a));
}

#[test]
fn validation_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.cfg", "[beam]\nl = 1\ncolour = red\n");
    let out = run(&["spectrum", "--config", &bad]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let window = write_config(dir.path(), "w.cfg", "[window]\nl_min = 3\nl_max = 5\n");
    assert_eq!(run(&["spectrum", "--config", &window]).status.code(), Some(1));

    let empty = write_config(dir.path(), "e.cfg", "[geometry]\ncluster_radii =\n");
    let out = run(&["dichroism", "--config", &empty]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cluster_radii"));

    assert_eq!(
        run(&["spectrum", "--config", "/nonexistent/x.cfg"]).status.code(),
        Some(1)
    );
    assert_eq!(run(&["spectrum", "--format", "xml"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn unconverged_exit_2_unless_allowed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cap.cfg", "[truncation]\nr_max = 60\n");
    let out = run(&["spectrum", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("did not converge"));
    let out = run(&["spectrum", "--config", &cfg, "--allow-unconverged"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains(",false,"));
}

#[test]
fn dichroism_and_limit_study_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "d.cfg", "[geometry]\ncluster_radii = 0, 1, 2, 4\n");
    let out = run(&["dichroism", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-increasing with cluster radius: yes"));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("cluster_radius,d,total_plus,total_minus,n_samples,converged,"));
    assert_eq!(text.lines().count(), 5);

    let out = run(&["limit-study"]);
    assert_eq!(out.status.code(), Some(0));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("strictly decreasing: yes"), "{err}");
    assert!(err.contains("log-log slope"));
}

#[test]
fn verify_quick_and_fault_injection() {
    let out = run(&["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("selection identity   PASS"));
    assert!(text.ends_with("6 checks, 0 failed\n"));

    let out = run(&["verify", "--inject-fault", "selection"]);
    assert_ne!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("selection identity   FAIL"));
}

#[test]
fn outputs_are_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "r.cfg",
        "[geometry]\nr0 = 0, 1.5, 3\ncluster_radii = 0, 2\nn_samples = 8\n",
    );
    for cmd in ["spectrum", "dichroism", "limit-study"] {
        let mut outputs = Vec::new();
        for threads in ["1", "4", "4"] {
            let path = dir.path().join(format!("{cmd}-{threads}-{}.csv", outputs.len()));
            let out = run(&[
                "--threads",
                threads,
                cmd,
                "--config",
                &cfg,
                "--out",
                path.to_str().unwrap(),
            ]);
            assert_eq!(out.status.code(), Some(0));
            outputs.push(fs::read(&path).unwrap());
        }
        assert!(outputs.windows(2).all(|w| w[0] == w[1]), "{cmd} output differs");
    }
}
