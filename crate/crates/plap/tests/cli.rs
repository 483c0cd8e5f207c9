use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use plap::snapshot::Snapshot;

const BIN: &str = env!("CARGO_BIN_EXE_plap");

const PROBLEM_2D: &str = r#"
[problem]
p = 3.0
dim = 2
beta0 = 1.0
r0 = 1.0
c_mono = 1.0
sigma = { kind = "constant", value = 1.0 }
beta = { kind = "constant", value = 1.0 }
f = { kind = "odd_power", q = 3.0 }
g = { kind = "constant", value = 0.0 }

[grid]
R = 4.0
m_per_axis = 13
"#;

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn plap(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn last_line(o: &Output) -> String {
    stdout(o).lines().last().unwrap().to_string()
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write_config(dir.path(), "ok.toml", PROBLEM_2D);
    assert_eq!(code(&plap(&["validate"], &ok, &dir.path().join("a"))), 0);
    assert!(dir.path().join("a/validate.json").exists());

    let decaying = PROBLEM_2D.replace(
        r#"beta = { kind = "constant", value = 1.0 }"#,
        r#"beta = { kind = "exp_decay", amplitude = 1.0, rate = 1.0 }"#,
    );
    let bad = write_config(dir.path(), "bad.toml", &decaying);
    let o = plap(&["validate"], &bad, &dir.path().join("b"));
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("FAIL beta-bounds"));

    let typo = write_config(dir.path(), "typo.toml", &PROBLEM_2D.replace("beta0", "betta0"));
    assert_eq!(code(&plap(&["validate"], &typo, &dir.path().join("c"))), 2);
    let missing = dir.path().join("nope.toml");
    assert_eq!(code(&plap(&["validate"], &missing, &dir.path().join("d"))), 2);
    let garbage = write_config(dir.path(), "garbage.toml", "this is = = not toml");
    assert_eq!(code(&plap(&["validate"], &garbage, &dir.path().join("e"))), 2);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let mismatch = write_config(
        dir.path(),
        "kind.toml",
        &format!("{PROBLEM_2D}\n[experiment]\nkind = \"absorb\"\n"),
    );
    assert_eq!(code(&plap(&["contract"], &mismatch, &dir.path().join("a"))), 2);

    let one_d = PROBLEM_2D.replace("dim = 2", "dim = 1");
    let one_d = write_config(dir.path(), "one_d.toml", &one_d);
    assert_eq!(code(&plap(&["validate"], &one_d, &dir.path().join("b"))), 0);
    assert_eq!(
        code(&plap(&["validate", "--strict-paper"], &one_d, &dir.path().join("c"))),
        2
    );

    let no_config = Command::new(BIN).arg("validate").output().unwrap();
    assert_eq!(code(&no_config), 2);
    let unknown = Command::new(BIN).arg("frobnicate").output().unwrap();
    assert_eq!(code(&unknown), 2);
}

#[test]
fn zero_initial_gives_zero_norm() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "zero.toml",
        &format!("{PROBLEM_2D}\n[stepping]\ndt = 0.1\nt_final = 0.5\n[initial]\nkind = \"zero\"\n"),
    );
    let o = plap(&["simulate"], &cfg, &dir.path().join("out"));
    assert_eq!(code(&o), 0);
    assert_eq!(last_line(&o), "0.0");
}

#[test]
fn linear_decay_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let (r, m, dt, t) = (4.0f64, 65usize, 1e-3f64, 5.0f64);
    let cfg = format!(
        r#"
[problem]
p = 2.0
dim = 1
beta0 = 1.0
r0 = 1.0
c_mono = 1.0
sigma = {{ kind = "constant", value = 1.0 }}
beta = {{ kind = "constant", value = 1.0 }}

[grid]
R = {r:?}
m_per_axis = {m}

[stepping]
dt = {dt:?}
t_final = {t:?}

[initial]
kind = "sine"
amplitude = 1.0
"#
    );
    let cfg = write_config(dir.path(), "lin.toml", &cfg);
    let o = plap(&["simulate"], &cfg, &dir.path().join("out"));
    assert_eq!(code(&o), 0);
    let got: f64 = last_line(&o).parse().unwrap();

    // discrete Dirichlet eigenvalue and norm of the first sine mode
    let h = 2.0 * r / (m - 1) as f64;
    let theta = std::f64::consts::PI * h / (2.0 * r);
    let mu = 4.0 / (h * h) * (theta / 2.0).sin().powi(2);
    let norm0 = ((1..m - 1).map(|i| (i as f64 * theta).sin().powi(2)).sum::<f64>() * h).sqrt();
    let steps = (t / dt).round() as i32;
    let expected = norm0 * (1.0 + dt * (1.0 + mu)).powi(-steps);
    assert!((got - expected).abs() <= 1e-6 * expected, "{got} vs {expected}");
}

#[test]
fn solver_failure_exits_three_with_dump() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        "{}\n[stepping]\ndt = 0.1\nt_final = 0.3\nnonlinear_tol = 1e-300\nmax_picard = 1\nmax_newton = 1\n\
         [initial]\nkind = \"gaussian\"\namplitude = 2.0\nwidth = 1.0\n",
        PROBLEM_2D
    );
    let cfg = write_config(dir.path(), "fail.toml", &body);
    let out = dir.path().join("out");
    let o = plap(&["simulate"], &cfg, &out);
    assert_eq!(code(&o), 3);
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("diagnostic dump"), "{err}");
    assert!(out.join("failure.json").exists());
    let snap = Snapshot::load(&out.join("failure.plap")).unwrap();
    assert_eq!(snap.t, 0.0);
}

fn simulate_config(dir: &Path, extra: &str) -> PathBuf {
    let body = format!(
        "seed = 11\n{PROBLEM_2D}\n[stepping]\ndt = 0.01\nt_final = 1.0\n\
         [initial]\nkind = \"bumps\"\nnorm = 2.0\n[io]\nsnapshot_every = 50\n{extra}"
    );
    write_config(dir, "sim.toml", &body)
}

fn read(p: PathBuf) -> Vec<u8> {
    std::fs::read(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = simulate_config(dir.path(), "");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&plap(&["simulate"], &cfg, &a)), 0);
    assert_eq!(code(&plap(&["simulate"], &cfg, &b)), 0);
    for f in [
        "ledger.csv",
        "final.plap",
        "final.csv",
        "snapshot_000050.plap",
        "simulate.json",
    ] {
        assert_eq!(read(a.join(f)), read(b.join(f)), "{f}");
    }

    let c = dir.path().join("c");
    let o = Command::new(BIN)
        .args(["simulate", "--seed", "12", "--out"])
        .arg(&c)
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_ne!(read(a.join("final.plap")), read(c.join("final.plap")));
}

#[test]
fn reports_are_reproducible_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        "seed = 5\n{}\n[stepping]\ndt = 0.05\nt_final = 1.0\n[experiment]\ncount = 4\ncheckpoints = 4\n[io]\nout_dir = \"{}\"\n",
        PROBLEM_2D,
        dir.path().join("same").display()
    );
    let cfg = write_config(dir.path(), "c.toml", &body);
    let run = |sub: &str| {
        let o = Command::new(BIN).arg(sub).arg("--config").arg(&cfg).output().unwrap();
        assert_eq!(code(&o), 0, "{sub}: {}", String::from_utf8_lossy(&o.stderr));
        read(dir.path().join("same").join(format!("{sub}.json")))
    };
    for sub in ["contract", "compact"] {
        let first = run(sub);
        assert_eq!(first, run(sub), "{sub}");
        let text = String::from_utf8(first).unwrap();
        assert!(text.contains("\"config_hash\"") && text.contains("\"spec_hash\""));
    }
}

#[test]
fn snapshot_restart_continues_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = simulate_config(dir.path(), "");
    let full = dir.path().join("full");
    assert_eq!(code(&plap(&["simulate"], &cfg, &full)), 0);

    let mid = full.join("snapshot_000050.plap");
    let snap = Snapshot::load(&mid).unwrap();
    assert_eq!(snap.t, 0.5);
    let restart_body = std::fs::read_to_string(&cfg).unwrap().replace(
        "kind = \"bumps\"\nnorm = 2.0",
        &format!("kind = \"snapshot\"\npath = {:?}", mid.display().to_string()),
    );
    let restart = write_config(dir.path(), "restart.toml", &restart_body);
    let resumed = dir.path().join("resumed");
    let o = plap(&["simulate"], &restart, &resumed);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(full.join("final.plap")), read(resumed.join("final.plap")));

    // the ledger continues the original one row for row
    let full_ledger = String::from_utf8(read(full.join("ledger.csv"))).unwrap();
    let tail: Vec<&str> = full_ledger.lines().skip(1 + 50).collect();
    let resumed_ledger = String::from_utf8(read(resumed.join("ledger.csv"))).unwrap();
    let resumed_rows: Vec<&str> = resumed_ledger.lines().skip(1).collect();
    assert_eq!(tail.len(), resumed_rows.len());
    for (a, b) in tail.iter().zip(&resumed_rows) {
        // the time column is recomputed from the restart time, the energies are not
        assert_eq!(a.split_once(',').unwrap().1, b.split_once(',').unwrap().1);
    }
}

#[test]
fn snapshot_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = simulate_config(dir.path(), "");
    let out = dir.path().join("o");
    assert_eq!(code(&plap(&["simulate"], &cfg, &out)), 0);
    let bytes = read(out.join("final.plap"));
    let snap = Snapshot::from_bytes(&bytes).unwrap();
    let again = dir.path().join("again.plap");
    snap.save(&again).unwrap();
    assert_eq!(read(again), bytes);
    assert_eq!(snap.values.len(), 11 * 11);
    assert_eq!(snap.t, 1.0);
}
