use std::path::PathBuf;
use std::process::{Command, Output};
use std::time::Instant;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qudit-rb"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn demo_config() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/qutrit_demo.toml")
}

#[test]
fn gateset_dumps() {
    let o = run(&["gateset", "--d", "3", "--mode", "minimal"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("cyclic factor: C9 x C9"), "{s}");
    assert!(s.contains("group order: 486"));

    let o = run(&["gateset", "--d", "4", "--matrices"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("diag(1, ω8) ⊗ I") && s.contains("T_0 ="), "{s}");

    let o = run(&["gateset", "--d", "2", "--phases", "0,1", "--order", "8"]);
    assert!(stdout(&o).contains("group order: 128"));

    let o = run(&["gateset", "--d", "6"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not a prime power"));
}

#[test]
fn verify_passes() {
    let o = run(&["verify", "--d", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let s = stdout(&o);
    assert!(s.contains("PASS howell_golden"));
    assert!(s.contains("3.000000 (exact 3)"), "{s}");
    assert!(s.contains("failures=0"));
    let o = run(&["verify", "--d", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["verify", "--d", "2", "--n", "2"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let cfg = demo_config();
    let start = Instant::now();
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    assert!(start.elapsed().as_secs() < 60);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let log = stderr(&o);
    assert!(log.contains("example circuit (depth 3)") && log.contains("inversion gate: ("), "{log}");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    for f in ["zero.csv", "plus.csv", "metadata.json"] {
        let x = std::fs::read(a.join(f)).unwrap();
        let y = std::fs::read(b.join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
    let zero = std::fs::read_to_string(a.join("zero.csv")).unwrap();
    assert!(zero.contains("depth,circuit_index,survival_frequency"));
    assert_eq!(zero.lines().filter(|l| l.starts_with("3,")).count(), 20);

    // The simulated file fits.
    let o = run(&["fit", "--input", a.join("zero.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["eta"].as_f64().unwrap() > 0.5);
}

#[test]
fn simulate_rejects_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "dimension = 3\nshots = 10\ncircuits = 2\ncolour = 1\n[noise]\nkind = \"identity\"\n").unwrap();
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("colour") && err.contains("line 4"), "{err}");

    std::fs::write(&cfg, "dimension = 6\nshots = 10\ncircuits = 2\n[noise]\nkind = \"identity\"\n").unwrap();
    let o = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fit_bundled_fixture() {
    let o = run(&["fit", "--input", fixture("synthetic_eta095.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let eta = v["eta"].as_f64().unwrap();
    assert!((eta - 0.95).abs() < 1e-6, "{eta}");
    assert_eq!(format!("{eta:.6}"), "0.950000");
    assert_eq!(v["status"], "converged");
}

#[test]
fn fit_rejects_malformed_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    std::fs::write(&p, "depth,circuit_index,survival_frequency\n1,0,0.9\n2,0,abc\n").unwrap();
    let o = run(&["fit", "--input", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"));
    let o = run(&["fit", "--input", "/nonexistent/file.csv"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn table_has_the_requested_rows() {
    let args = [
        "--seed", "3", "table", "--noise", r#"{"kind":"depolarizing","p":0.05}"#, "--reps", "100", "--workers", "1",
    ];
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "shots,circuits,err_q95,err_q999,err_q100,fidelity");
    let cells: Vec<String> = lines[1..].iter().map(|l| l.split(',').take(2).collect::<Vec<_>>().join("x")).collect();
    assert_eq!(cells, vec!["100x10", "10x100", "100x100"]);
    assert_eq!(stdout(&run(&args)), s);

    let o = run(&["table", "--random-fidelity", "0.89", "--reps", "100", "--grid", "100x100", "--depths", "1,2,3,4,5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).lines().nth(1).unwrap().ends_with(",0.890000"));

    let o = run(&["table", "--noise", r#"{"kind":"depolarizing","p":2}"#]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["table", "--noise", r#"{"kind":"identity"}"#, "--grid", "100by10"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn strategies_report() {
    let o = run(&["strategies", "--reps", "100", "--circuits", "50"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.starts_with("rank,strategy,err_q95,err_q999,err_q100\n"));
    assert_eq!(s.lines().count(), 5);
    for name in [",i,", ",ii,", ",iii,", ",iv,"] {
        assert!(s.contains(name), "{s}");
    }
}

#[test]
fn help_and_usage_errors() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    for sub in ["gateset", "verify", "simulate", "fit", "table", "strategies", "--seed", "--workers"] {
        assert!(s.contains(sub), "{sub}");
    }
    let o = run(&["table", "--help"]);
    for flag in ["--noise", "--random-fidelity", "--grid", "--reps", "--depths", "--quantiles", "--sim-mode", "--out"] {
        assert!(stdout(&o).contains(flag), "{flag}");
    }
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["gateset"]).status.code(), Some(1));
}

#[test]
fn library_entry_point_exit_codes() {
    assert_eq!(qudit_rb::cli::run(["qudit-rb", "gateset", "--d", "5"]), 0);
    assert_eq!(qudit_rb::cli::run(["qudit-rb", "gateset", "--d", "10"]), 1);
    let (report, ok) = qudit_rb::cli::verify_report(3, 1, 0).unwrap();
    assert!(ok, "{report}");
}
