use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_qtwist"));
    c.env_remove("QTWIST_CONFIG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qtwist-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn rmat_matches_golden() {
    let path = golden("rmat_q0.5_order8.json");
    let o = run(&["rmat", "--q", "0.5", "--order", "8"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), std::fs::read_to_string(&path).unwrap());
    let o = run(&["rmat", "--q", "0.5", "--order", "8", "--golden", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn golden_leading_coefficients() {
    // at q = 1/2 the (00,00) entry is q^{1/2} A(q,y); expanding
    // A = exp(sum (q^k - q^-k)/(q^k + q^-k) y^k / k) gives 1 - 0.6 y + (0.18 - 3.75/8.5) y^2
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(golden("rmat_q0.5_order8.json")).unwrap()).unwrap();
    let e00 = &v["entries"][0][0];
    assert_eq!(e00["order"], 8);
    let s = 0.5f64.sqrt();
    let want = [s, -0.6 * s, s * (0.18 - 3.75 / 8.5)];
    for (n, w) in want.iter().enumerate() {
        let got = e00["coeffs"][n][0].as_f64().unwrap();
        assert!((got - w).abs() < 1e-14, "coefficient {n}: {got} vs {w}");
    }
    // (10,01): q^{-1/2} (q - 1/q) at y = 0
    let lead = v["entries"][2][1]["coeffs"][0][0].as_f64().unwrap();
    assert!((lead - (0.5 - 2.0) / s).abs() < 1e-14);
}

#[test]
fn golden_mismatch_is_a_validation_failure() {
    let path = golden("rmat_q0.5_order8.json");
    let o = run(&["rmat", "--q", "0.4", "--order", "8", "--golden", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("golden"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["rmat", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["rmat", "--q", "1"]).status.code(), Some(1));
    assert_eq!(run(&["rmat", "--q", "abc"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn validation_failure_exits_two_and_names_the_identity() {
    let o = run(&["ybe-check", "--tol", "1e-30"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("yang-baxter"), "{}", stderr(&o));
}

#[test]
fn flags_override_config_file_which_overrides_defaults() {
    let cfg = scratch("prec.toml", "q = 0.3\n");
    // ybe-check reports rho = min(|q|^2, |q|^-2)
    let rho = |o: &Output| json(o)["rho"].as_f64().unwrap();
    assert!((rho(&run(&["ybe-check"])) - 0.25).abs() < 1e-15);
    let o = bin().env("QTWIST_CONFIG", &cfg).args(["ybe-check"]).output().unwrap();
    assert!((rho(&o) - 0.09).abs() < 1e-15);
    let o = bin().env("QTWIST_CONFIG", &cfg).args(["ybe-check", "--q", "0.6"]).output().unwrap();
    assert!((rho(&o) - 0.36).abs() < 1e-15);
    let other = scratch("other.toml", "q = 0.4\n");
    let o = bin().env("QTWIST_CONFIG", &cfg).args(["ybe-check", "--config", other.to_str().unwrap()]).output().unwrap();
    assert!((rho(&o) - 0.16).abs() < 1e-15);
}

#[test]
fn bad_config_is_a_usage_error() {
    let cfg = scratch("bad.toml", "qq = 0.3\n");
    let o = bin().env("QTWIST_CONFIG", &cfg).args(["rmat"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_all_is_deterministic_per_seed() {
    let a = scratch("seed7.toml", "seed = 7\nformat = \"csv\"\n");
    let b = scratch("seed8.toml", "seed = 8\nformat = \"csv\"\n");
    let go = |p: &Path| run(&["verify-all", "--config", p.to_str().unwrap()]);
    let (x, y, z) = (go(&a), go(&a), go(&b));
    assert_eq!(x.status.code(), Some(0), "{}", stderr(&x));
    assert_eq!(x.stdout, y.stdout);
    assert_ne!(x.stdout, z.stdout);
    let text = stdout(&x);
    assert!(text.starts_with("id,identity,check,value,bound,kind,pass\n"));
    assert!(!text.contains(",false\n"));
}

#[test]
fn qkz_solve2_emits_branches() {
    let o = run(&["qkz", "solve2", "--flavor", "g"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    let branches = v["branches"].as_array().unwrap();
    assert_eq!(branches.len(), 4);
    for b in branches {
        assert_eq!(b["s"].as_array().unwrap().len(), 2);
        assert_eq!(b["coeffs"][0]["order"], 32);
        for r in b["residuals"].as_array().unwrap() {
            assert!(r.as_f64().unwrap() < 1e-9);
        }
    }
}

#[test]
fn elliptic_compare_at_eps_zero_passes() {
    let o = run(&["elliptic-compare", "--eps", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn other_commands_pass_at_defaults() {
    for args in [
        &["twistor"][..],
        &["twistor", "--factor", "3"],
        &["elliptic-compare"],
        &["qkz", "check3"],
        &["qkz", "twist2"],
        &["qkz", "twist2", "--mode", "quasi", "--k", "1", "--m-source", "0.5"],
        &["kz", "flat", "--format", "csv"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn output_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("qtwist-cli-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("r.csv");
    let o = run(&["rmat", "--order", "2", "--format", "csv", "--output", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("i,j,n,re,im\n"));
    assert_eq!(text.lines().count(), 1 + 16 * 3);
}
