use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn skewspec(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skewspec"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("SKEWSPEC_THREADS", "2")
        .output()
        .expect("spawn skewspec")
}

fn read(path: impl AsRef<Path>) -> String {
    fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

#[test]
fn free_laplacian_eigenvalues_match_closed_form() {
    let dir = TempDir::new().unwrap();
    let out = skewspec(
        &[
            "eig",
            "--set",
            "potential.family=constant",
            "--set",
            "potential.c=0",
            "--set",
            "sizes=[4]",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let csv = read(dir.path().join("N4/eigenvalues.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("j,lambda"));
    for (k, line) in lines.enumerate() {
        let (j, v) = line.split_once(',').unwrap();
        assert_eq!(j.parse::<usize>().unwrap(), k);
        // Eigenvalues of the path graph: 2 cos(pi m / 5), ascending.
        let expected = -2.0 * (std::f64::consts::PI * (k + 1) as f64 / 5.0).cos();
        assert!((v.parse::<f64>().unwrap() - expected).abs() < 1e-12);
    }

    let vectors = read(dir.path().join("N4/eigenvectors.csv"));
    assert_eq!(vectors.lines().next(), Some("n,xi_0,xi_1,xi_2,xi_3"));
    assert_eq!(vectors.lines().count(), 5);
}

#[test]
fn invalid_config_exits_with_code_two() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "command = \"sigma\"\n[grids]\nbogus = 3\n").unwrap();
    let out = skewspec(
        &["sigma", "--config", cfg.to_str().unwrap()],
        &dir.path().join("out"),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let out = skewspec(
        &["sigma", "--set", "potential.family=nonsense"],
        &dir.path().join("out2"),
    );
    assert_eq!(out.status.code(), Some(2));

    let out = skewspec(
        &["lyap", "--set", "potential.family=power-beta"],
        &dir.path().join("out3"),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_echo_reproduces_the_run() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("first");
    let out = skewspec(
        &[
            "sigma",
            "--set",
            "potential.family=harper",
            "--set",
            "potential.lambda=1",
            "--set",
            "sizes=[40, 60]",
            "--set",
            "grids.nx=256",
        ],
        &first,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let second = dir.path().join("second");
    let echo = first.join("config.toml");
    let out = skewspec(&["sigma", "--config", echo.to_str().unwrap()], &second);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    assert_eq!(
        read(first.join("config.toml")),
        read(second.join("config.toml"))
    );
    assert_eq!(
        read(first.join("sigma.json")),
        read(second.join("sigma.json"))
    );
}

#[test]
fn payloads_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let args = [
        "gap-profile",
        "--set",
        "potential.family=skew-shift",
        "--set",
        "sizes=[24]",
        "--set",
        "grids.nx=16",
        "--set",
        "grids.ny=64",
        "--set",
        "grids.phase_nx=8",
        "--set",
        "grids.phase_ny=8",
        "--set",
        "grids.nt=512",
    ];
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(skewspec(&args, &a).status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_skewspec"))
        .args(args)
        .arg("--out")
        .arg(&b)
        .env("SKEWSPEC_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    for f in [
        "gap_profile.json",
        "N24/profile.csv",
        "N24/phases.csv",
        "config.toml",
    ] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f} differs"
        );
    }

    let lyap = [
        "lyap",
        "--set",
        "potential.family=iid-random",
        "--set",
        "potential.lo=-1",
        "--set",
        "potential.hi=1",
        "--set",
        "potential.seed=4",
        "--set",
        "sizes=[500]",
        "--set",
        "grids.ne=7",
        "--set",
        "lyap.num_phases=3",
        "--set",
        "seed=11",
    ];
    let c = dir.path().join("c");
    let d = dir.path().join("d");
    assert!(skewspec(&lyap, &c).status.success());
    assert!(skewspec(&lyap, &d).status.success());
    assert_eq!(
        read(c.join("N500/lyapunov.csv")),
        read(d.join("N500/lyapunov.csv"))
    );
    assert_eq!(read(c.join("lyapunov.json")), read(d.join("lyapunov.json")));
}

#[test]
fn sigma_and_gap_outputs_are_consistent() {
    let dir = TempDir::new().unwrap();
    let out = skewspec(
        &[
            "gap-bound",
            "--set",
            "potential.family=harper",
            "--set",
            "potential.lambda=1",
            "--set",
            "sizes=[80]",
            "--set",
            "grids.nt=2048",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value =
        serde_json::from_str(&read(dir.path().join("gap_bound.json"))).unwrap();
    assert_eq!(json["provenance"]["tool"], "skewspec");
    let r = &json["results"][0];
    let upper = r["sigma"]["sigma_plus_upper"].as_f64().unwrap();
    let lower = r["sigma"]["sigma_minus_lower"].as_f64().unwrap();
    let window_max = r["sigma"]["window_max"].as_f64().unwrap();
    assert!(upper >= window_max && lower <= -window_max + 1e-12);
    let gamma = r["gap"]["gamma_upper"].as_f64().unwrap();
    let empirical = r["largest_empirical_gap"]["width"].as_f64().unwrap();
    assert!(gamma > 0.0 && gamma < upper - lower);
    assert!(empirical > 0.0);

    let profile = read(dir.path().join("N80/profile.csv"));
    assert_eq!(profile.lines().next(), Some("t,d,phase_index,j"));
    assert_eq!(profile.lines().count(), 2049);
}

#[test]
fn certify_gap_reports_uncertified_without_failing() {
    let dir = TempDir::new().unwrap();
    let out = skewspec(
        &[
            "certify-gap",
            "--set",
            "potential.family=harper",
            "--set",
            "potential.lambda=1",
            "--set",
            "sizes=[60]",
            "--set",
            "grids.cert_nx=256",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value =
        serde_json::from_str(&read(dir.path().join("certify_gap.json"))).unwrap();
    let r = &json["results"][0];
    let margin = r["certificate"]["margin"].as_f64().unwrap();
    assert_eq!(r["certified"].as_bool().unwrap(), margin > 0.0);
    let threshold = r["certificate"]["threshold"].as_f64().unwrap();
    assert!((threshold - (2.0f64 / 60.0).sqrt()).abs() < 1e-15);
}

#[test]
fn json_format_replaces_csv_curves() {
    let dir = TempDir::new().unwrap();
    let out = skewspec(
        &[
            "lyap",
            "--set",
            "format=json",
            "--set",
            "sizes=[100]",
            "--set",
            "grids.ne=3",
            "--set",
            "lyap.num_phases=1",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("N100/lyapunov.json").exists());
    assert!(!dir.path().join("N100/lyapunov.csv").exists());
    let meta: serde_json::Value =
        serde_json::from_str(&read(dir.path().join("run_metadata.json"))).unwrap();
    assert_eq!(meta["threads"], 2);
}
