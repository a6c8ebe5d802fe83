use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sbl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbl"))
        .args(args)
        .output()
        .expect("spawn sbl")
}

fn run_with(experiment: &str, config: &str, dir: &Path) -> Output {
    let cfg = dir.join(format!("{experiment}.cfg"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join(experiment);
    sbl(&[
        experiment,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn spectrum_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_with(
        "spectrum",
        "d = 3\nl_max = 20\nmethod = closed\n",
        tmp.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("spectrum");
    let csv = fs::read_to_string(dir.join("spectrum.csv")).unwrap();
    assert!(csv.starts_with("ell,mu\n"));
    let r = rows(&csv);
    assert_eq!(r.len(), 21);
    assert!(r.iter().all(|row| row[1] > 0.0));
    assert!(dir.join("config.resolved").is_file());
    assert!(dir.join("manifest.txt").is_file());
}

#[test]
fn spectrum_methods_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_with("spectrum", "d = 3\nl_max = 20\nmethod = both\n", tmp.path());
    assert!(o.status.success());
    let csv = fs::read_to_string(tmp.path().join("spectrum/spectrum.csv")).unwrap();
    for row in rows(&csv) {
        assert!(row[3] <= 1e-10, "{row:?}");
    }
}

#[test]
fn quad_equispaced_has_equal_weights() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_with(
        "quad",
        "nodes = equispaced\nequispaced_n = 64\ndegree = 40\n",
        tmp.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("quad/rule.csv")).unwrap();
    let r = rows(&csv);
    assert_eq!(r.len(), 64);
    for row in r {
        assert!((row[2] - std::f64::consts::TAU / 64.0).abs() <= 1e-10);
    }
}

#[test]
fn config_and_io_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_with(
        "quad",
        "nodes = file\nnodes_file = /nonexistent/nodes.csv\n",
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(2));

    let o = run_with("spectrum", "no_such_key = 1\n", tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no_such_key"));

    let o = run_with("spectrum", "experiment = quad\n", tmp.path());
    assert_eq!(o.status.code(), Some(2));

    let o = sbl(&["spectrum", "--config", "/nonexistent.cfg"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numeric_failure_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    // 64 equispaced nodes cannot integrate degree 64 exactly
    let o = run_with(
        "quad",
        "nodes = equispaced\nequispaced_n = 64\ndegree = 64\n",
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

const QUICK_TRAIN: &str = "\
nodes = equispaced
equispaced_n = 32
degree = 31
target_degree = 4
loss = mse
m = 256
epochs = 20
record_stride = 5
cap = 8
";

#[test]
fn runs_are_deterministic_and_verifiable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_with("train", QUICK_TRAIN, a.path()).status.success());
    assert!(run_with("train", QUICK_TRAIN, b.path()).status.success());
    for f in ["loss.csv", "frequency.csv", "net.bin", "config.resolved"] {
        let x = fs::read(a.path().join("train").join(f)).unwrap();
        let y = fs::read(b.path().join("train").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between identical runs");
    }

    let dir = a.path().join("train");
    let o = sbl(&["train", "--verify", "--out", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let loss = dir.join("loss.csv");
    let mut text = fs::read_to_string(&loss).unwrap();
    text.push('\n');
    fs::write(&loss, text).unwrap();
    let o = sbl(&["train", "--verify", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seed_flag_changes_gaussian_runs() {
    let cfg = format!("{QUICK_TRAIN}scheme = gaussian\nkappa = 1\n");
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("t.cfg");
    fs::write(&path, cfg).unwrap();
    let read = |seed: &str| {
        let out = tmp.path().join(seed);
        let o = sbl(&[
            "train",
            "-c",
            path.to_str().unwrap(),
            "--seed",
            seed,
            "-o",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        (
            fs::read(out.join("net.bin")).unwrap(),
            fs::read_to_string(out.join("config.resolved")).unwrap(),
        )
    };
    let (n1, c1) = read("1");
    let (n2, _) = read("2");
    assert_ne!(n1, n2);
    assert!(c1.lines().any(|l| l.replace(' ', "") == "seed=1"));
}

#[test]
fn help_documents_outputs() {
    let o = sbl(&["--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["spectrum.csv", "rule.csv", "loss.csv", "Exit codes"] {
        assert!(text.contains(name), "missing {name}");
    }
    let o = sbl(&["quad", "--help"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("equispaced_n"));
}
