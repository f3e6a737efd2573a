use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_critpatch"))
        .args(args)
        .env_remove("CRITPATCH_WORKERS")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn simulate_writes_trajectory_and_snapshots() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = run(&["simulate", "--preset", "fig4", "--out", out]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(stdout(&res).contains("fate: growth"));

    let traj = read(&dir.path().join("trajectory.csv"));
    let mut lines = traj.lines();
    assert_eq!(lines.next(), Some("T,N"));
    let times: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(times.len() > 10 && times.windows(2).all(|w| w[1] > w[0]));

    let snap = read(&dir.path().join("snapshot_T0.001.csv"));
    assert!(snap.starts_with("X,rho\n"));
    assert_eq!(snap.lines().count(), 202);

    let manifest: serde_json::Value = serde_json::from_str(&read(&dir.path().join("manifest.json"))).unwrap();
    assert_eq!(manifest["preset"], "fig4");
    assert_eq!(manifest["spec"]["command"], "simulate");
}

#[test]
fn simulate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let base = [
        "simulate", "--mu", "4", "--nu", "2", "--family", "f1", "--alpha", "100", "--out", out,
    ];

    let res = run(&[&base[..], &["--q", "0.9"]].concat());
    assert_eq!(code(&res), 0);
    assert!(stdout(&res).contains("fate: extinction"));

    let res = run(&[&base[..], &["--q", "0.9", "--t-max", "0.0001"]].concat());
    assert_eq!(code(&res), 2);
    assert!(stdout(&res).contains("inconclusive"));

    let res = run(&[
        &base[..],
        &["--q", "0.9", "--a", "1", "--D", "1", "--l", "1", "--n0", "1"],
    ]
    .concat());
    assert_eq!(code(&res), 1);

    let res = run(&["simulate", "--mu", "1", "--nu", "2", "--q", "1", "--out", out]);
    assert_eq!(code(&res), 1);
    assert!(String::from_utf8_lossy(&res.stderr).contains("unsupported regime"));
}

#[test]
fn physical_inputs_map_to_q() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    // Q = (a/D) l^{2+nu-mu} n0^{mu-nu} = 0.5 * 2^0 * 1.5^2 = 1.125
    let res = run(&[
        "simulate", "--mu", "4", "--nu", "2", "--family", "f2", "--alpha", "100", "--a", "1", "--D", "2", "--l", "2",
        "--n0", "1.5", "--out", out,
    ]);
    assert_eq!(code(&res), 0);
    assert!(stdout(&res).starts_with("Q = 1.125"));
    assert!(stdout(&res).contains("fate: growth"));
}

#[test]
fn usage_errors() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&["simulate", "--bogus"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    let dir = TempDir::new().unwrap();
    let res = run(&["simulate", "--preset", "fig11", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&res), 1);
    let res = run(&["qc", "--preset", "fig99", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&res), 1);
}

#[test]
fn qc_runs_are_deterministic_and_rerunnable() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = |dir: &TempDir| {
        vec![
            "qc".to_string(),
            "--mu=2".into(),
            "--nu=2".into(),
            "--family=f1".into(),
            "--alpha=0".into(),
            "--dq=0.01".into(),
            "--m=100".into(),
            format!("--out={}", dir.path().display()),
        ]
    };
    let ra = run(&args(&a).iter().map(String::as_str).collect::<Vec<_>>());
    let rb = run(&args(&b).iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!((code(&ra), code(&rb)), (0, 0));
    for f in ["sweep.csv", "scan.csv", "manifest.json"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }

    let table = read(&a.path().join("sweep.csv"));
    let row: Vec<&str> = table.lines().nth(1).unwrap().split(',').collect();
    let est: f64 = row[1].parse().unwrap();
    let exact = std::f64::consts::PI.powi(2) / 2.0;
    assert!((est - exact).abs() < 0.02 * exact, "{table}");

    let c = TempDir::new().unwrap();
    let manifest = a.path().join("manifest.json");
    let rc = run(&["rerun", manifest.to_str().unwrap(), "--out", c.path().to_str().unwrap()]);
    assert_eq!(code(&rc), 0, "{}", String::from_utf8_lossy(&rc.stderr));
    for f in ["sweep.csv", "manifest.json"] {
        assert_eq!(read(&a.path().join(f)), read(&c.path().join(f)), "{f}");
    }
}

#[test]
fn failed_scan_still_writes_table() {
    let dir = TempDir::new().unwrap();
    let res = run(&[
        "qc",
        "--mu",
        "4",
        "--nu",
        "2",
        "--family",
        "f1",
        "--alpha",
        "100",
        "--start",
        "0.5",
        "--dq",
        "0.01",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 3);
    assert!(String::from_utf8_lossy(&res.stderr).contains("not supercritical"));
    let table = read(&dir.path().join("sweep.csv"));
    assert!(table.lines().nth(1).unwrap().contains("error"));
}

#[test]
fn critical_cases() {
    let res = run(&["critical", "--mu", "1", "--nu", "1", "--a", "1", "--D", "1"]);
    assert_eq!(code(&res), 0);
    assert!(stdout(&res).contains("l_c = 3.14159265358979"));

    let res = run(&["critical", "--mu", "1", "--nu", "1", "--a", "1", "--D", "1", "--l", "2"]);
    assert_eq!(code(&res), 1);
    assert!(String::from_utf8_lossy(&res.stderr).contains("does not constrain the total population"));

    let res = run(&[
        "critical", "--mu", "4", "--nu", "2", "--qc", "4.467", "--a", "1", "--D", "1",
    ]);
    assert_eq!(code(&res), 0);
    assert!(stdout(&res).contains("n0 >= 2.11352785645233"));

    let res = run(&[
        "critical", "--mu", "4", "--nu", "2", "--qc", "4.467", "--a", "1", "--D", "1", "--n0", "3",
    ]);
    assert_eq!(code(&res), 1);

    // mu = 3, nu = 2: l_c = Q_c / n0, n0_c = Q_c / l
    let res = run(&[
        "critical", "--mu", "3", "--nu", "2", "--qc", "4", "--n0", "2", "--l", "1", "--a", "1", "--D", "1",
    ]);
    assert_eq!(code(&res), 0);
    let text = stdout(&res);
    assert!(
        text.contains("l_c = 2.00000000000000 (survival needs l >= l_c)"),
        "{text}"
    );
    assert!(text.contains("n0_c = 4.00000000000000"), "{text}");

    let res = run(&[
        "critical", "--mu", "2", "--nu", "3", "--qc", "4", "--n0", "2", "--a", "1", "--D", "1",
    ]);
    assert_eq!(code(&res), 1);
}

#[test]
fn sweep_rows_follow_points() {
    let dir = TempDir::new().unwrap();
    let res = run(&[
        "sweep",
        "--task",
        "qc",
        "--axis",
        "mu",
        "--nu",
        "1",
        "--family",
        "homogeneous",
        "--alpha",
        "0",
        "--points",
        "1,2",
        "--step",
        "0.01",
        "--m",
        "100",
        "--workers",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let table = read(&dir.path().join("sweep.csv"));
    let points: Vec<f64> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(points, [1.0, 2.0]);
}
