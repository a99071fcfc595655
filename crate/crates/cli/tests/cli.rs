use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use serde_json::Value;
use tempfile::TempDir;

fn anosov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anosov")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn write_preset(dir: &Path, name: &str, generators: &[[[f64; 3]; 3]]) -> String {
    let gens: Vec<Value> = generators
        .iter()
        .enumerate()
        .map(|(i, m)| serde_json::json!({ "letter": ((b'a' + i as u8) as char).to_string(), "matrix": m }))
        .collect();
    let v = serde_json::json!({ "name": name, "dim": 3, "pingpong_power": 1, "generators": gens });
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, v.to_string()).unwrap();
    path.display().to_string()
}

#[test]
fn enumerate_three_letters_deep() {
    let o = anosov(&["enumerate", "--max-len", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 53);
    assert!(text.starts_with("word,word_len,mu_1"));
}

#[test]
fn enumerate_reruns_are_byte_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for d in [&a, &b] {
        let o = anosov(&["enumerate", "--max-len", "5", "--out", d.path().to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["enumerate.csv", "enumerate.meta.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let meta = read_json(&a.path().join("enumerate.meta.json"));
    assert_eq!(meta["seed"], 0);
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn depth_over_cap_is_a_resource_error() {
    let o = anosov(&["enumerate", "--max-len", "15"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("cap"), "{}", stderr(&o));
    let o = anosov(&["enumerate", "--max-len", "4", "--param", "cap=10"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert_eq!(code(&anosov(&["verify", "--max-len", "20"])), 2);
}

#[test]
fn identity_suites_pass_quickly() {
    let dir = TempDir::new().unwrap();
    let start = Instant::now();
    let o = anosov(&["verify", "--suite", "identity", "--out", dir.path().to_str().unwrap()]);
    assert!(start.elapsed() < Duration::from_secs(10));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep = read_json(&dir.path().join("verify-report.json"));
    let suites = rep["suites"].as_array().unwrap();
    let ids: Vec<&str> = suites.iter().map(|s| s["lemma_id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["preset-integrity", "identities", "gromov-two-path", "strong-positivity", "rank-one"]);
    assert!(suites.iter().all(|s| s["status"] == "pass"));
    assert_eq!(rep["all_hard_passed"], true);
}

#[test]
fn corrupted_preset_fails_integrity() {
    let dir = TempDir::new().unwrap();
    // Commuting diagonal generators: the commutator is the identity.
    let e = std::f64::consts::E;
    let a = [[e, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0 / e]];
    let b = [[e.sqrt(), 0.0, 0.0], [0.0, e.powf(0.2), 0.0], [0.0, 0.0, e.powf(-0.7)]];
    let preset = write_preset(dir.path(), "bad", &[a, b]);
    let out = dir.path().join("out");
    let o = anosov(&["verify", "--suite", "identity", "--preset", &preset, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let rep = read_json(&out.join("verify-report.json"));
    let first = &rep["suites"][0];
    assert_eq!(first["lemma_id"], "preset-integrity");
    assert_eq!(first["status"], "fail");
    assert!(first["witnesses"][0].as_str().unwrap().contains("loxodromic"));
    assert_eq!(rep["all_hard_passed"], false);
}

#[test]
fn missing_inputs_exit_three() {
    assert_eq!(code(&anosov(&["verify", "--preset", "/nonexistent/preset.json"])), 3);
    assert_eq!(code(&anosov(&["enumerate", "--config", "/nonexistent/run.conf"])), 3);
    assert_eq!(code(&anosov(&["no-such-command"])), 3);
    assert_eq!(code(&anosov(&["--help"])), 0);
}

#[test]
fn verify_report_matches_the_schema() {
    let dir = TempDir::new().unwrap();
    let o = anosov(&["verify", "--suite", "identity,regularity,almost-additivity", "--max-len", "6", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let schema: Value = serde_json::from_str(include_str!("../schema/verify-report.schema.json")).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let report = read_json(&dir.path().join("verify-report.json"));
    let errors: Vec<String> = validator.iter_errors(&report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
    // A report missing its hash is rejected.
    let mut broken = report.clone();
    broken.as_object_mut().unwrap().remove("config_hash");
    assert!(!validator.is_valid(&broken));
}

#[test]
fn single_generator_limit_set_has_two_points() {
    let dir = TempDir::new().unwrap();
    let g = [[2.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let preset = write_preset(dir.path(), "cyclic", &[g]);
    let out = dir.path().join("out");
    let o = anosov(&["limitset", "--preset", &preset, "--max-len", "8", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("limitset.csv")).unwrap();
    let pts: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[2].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect();
    // Words a^n and A^n with n >= 4.
    assert_eq!(pts.len(), 10);
    let p = pts[0];
    let dist = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).hypot(a.1 - b.1);
    let q = *pts.iter().find(|x| dist(**x, p) > 0.1).expect("second cluster");
    assert!(pts.iter().all(|x| dist(*x, p) < 1e-3 || dist(*x, q) < 1e-3));
}

#[test]
fn limit_set_rows_and_cone_symmetry() {
    let dir = TempDir::new().unwrap();
    let o = anosov(&["limitset", "--max-len", "6", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let pts = std::fs::read_to_string(dir.path().join("limitset.csv")).unwrap();
    // Ball of radius 6 in the free group of rank 2, minus the ball of radius 2.
    assert_eq!(pts.lines().count() - 1, 1457 - 17);
    let cone = std::fs::read_to_string(dir.path().join("limitset-cone.csv")).unwrap();
    let dirs: Vec<Vec<f64>> = cone
        .lines()
        .skip(1)
        .map(|l| l.split(',').skip(3).map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(dirs.len(), 1440);
    // Opposition: (u1, u2, u3) -> (-u3, -u2, -u1).
    for u in dirs.iter().step_by(37) {
        let o = [-u[2], -u[1], -u[0]];
        assert!(dirs.iter().any(|v| v.iter().zip(&o).all(|(a, b)| (a - b).abs() < 1e-9)));
    }
}

#[test]
fn config_file_with_overrides() {
    let dir = TempDir::new().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# small run\npreset = schottky3\nmax-len = 2\nseed = 7\n").unwrap();
    let c = conf.to_str().unwrap();
    let o = anosov(&["enumerate", "--config", c]);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 1 + 17);
    let o = anosov(&["enumerate", "--config", c, "--max-len", "3"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 1 + 53);
}

#[test]
fn artifacts_embed_hash_and_seed() {
    let run = |seed: &str| {
        let o = anosov(&["ps-build", "--max-len", "5", "--psi", "2rho", "--seed", seed]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        serde_json::from_slice::<Value>(&o.stdout).unwrap()
    };
    let (a, b, c) = (run("3"), run("3"), run("4"));
    assert_eq!(a, b);
    assert_eq!(a["seed"], 3);
    assert_ne!(a["config_hash"], c["config_hash"]);
    assert!(!a["atoms"].as_array().unwrap().is_empty());
}

#[test]
fn json_commands_run() {
    for cmd in ["limit-cone", "growth", "exponent", "myrberg"] {
        let o = anosov(&[cmd, "--max-len", "6"]);
        assert_eq!(code(&o), 0, "{cmd}: {}", stderr(&o));
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["command"], cmd);
        assert!(v["result"].is_object());
    }
}
