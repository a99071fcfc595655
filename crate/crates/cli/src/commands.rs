//! Subcommand bodies. Each returns its exit code; artifacts go to the output
//! directory when one is configured and to stdout otherwise.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{anyhow, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use anosov_core::lie::*;
use anosov_core::measure::*;
use anosov_core::metrics::*;
use anosov_core::orbit::*;
use anosov_core::words::{enumerate_words, Word};

use crate::config::RunConfig;
use crate::suites::{self, Ctx, Status, BAND_RADIUS};

/// Writes `name` into the output directory, or prints it.
fn emit(cfg: &RunConfig, name: &str, body: &str) -> Result<()> {
    match &cfg.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path: PathBuf = dir.join(name);
            std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn header(cfg: &RunConfig, command: &str) -> serde_json::Map<String, Value> {
    let v = json!({
        "tool": "anosov",
        "command": command,
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "preset": cfg.preset,
        "max_len": cfg.max_len,
        "psi": cfg.psi,
    });
    match v {
        Value::Object(m) => m,
        _ => unreachable!(),
    }
}

/// A JSON artifact: the run header plus `result`.
fn emit_json(cfg: &RunConfig, command: &str, result: Value) -> Result<()> {
    let mut m = header(cfg, command);
    m.insert("result".into(), result);
    emit(cfg, &format!("{command}.json"), &(serde_json::to_string_pretty(&Value::Object(m))? + "\n"))
}

/// CSV artifacts carry their provenance in a sidecar file.
fn emit_csv(cfg: &RunConfig, stem: &str, body: &str) -> Result<()> {
    emit(cfg, &format!("{stem}.csv"), body)?;
    if cfg.out.is_some() {
        let meta = Value::Object(header(cfg, stem));
        emit(cfg, &format!("{stem}.meta.json"), &(serde_json::to_string_pretty(&meta)? + "\n"))?;
    }
    Ok(())
}

fn rng(cfg: &RunConfig) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed)
}

fn to_value<T: serde::Serialize>(x: &T) -> Result<Value> {
    Ok(serde_json::to_value(x)?)
}

pub fn enumerate(cfg: &RunConfig) -> Result<u8> {
    cfg.check_depth()?;
    let preset = cfg.load_preset()?;
    let cap: usize = cfg.param("cap", anosov_core::orbit::table::DEFAULT_CAP)?;
    let t = OrbitTable::enumerate_with_cap(&preset, cfg.max_len, cap)?;
    let mut buf = Vec::new();
    t.write_csv(&mut buf)?;
    emit_csv(cfg, "enumerate", &String::from_utf8(buf)?)?;
    Ok(0)
}

pub fn limit_cone(cfg: &RunConfig) -> Result<u8> {
    let preset = cfg.load_preset()?;
    let t = cfg.table(&preset)?;
    let min_len: usize = cfg.param("min_len", cfg.max_len / 2)?;
    let cone = limit_cone_estimate(&t, min_len);
    let angles: Vec<f64> = if t.dim() == 3 { cone.extreme_rays.iter().map(chamber_angle).collect() } else { Vec::new() };
    emit_json(
        cfg,
        "limit-cone",
        json!({
            "min_len": cone.min_len,
            "directions": cone.mu_directions.len(),
            "extreme_rays": cone.extreme_rays,
            "extreme_ray_angles": angles,
            "wall_margin": cone.wall_margin,
            "regularity_margin": regularity_margin(&t),
            "inversion_defect": cone.inversion_defect,
            "word_length_bounds": to_value(&word_length_bounds(&t))?,
        }),
    )?;
    Ok(0)
}

pub fn growth(cfg: &RunConfig) -> Result<u8> {
    let preset = cfg.load_preset()?;
    let t = cfg.table(&preset)?;
    let theta: f64 = cfg.param("theta", 0.1)?;
    let dirs: Vec<CartanVector> = match cfg.params.get("u") {
        Some(u) => vec![LinearForm::parse(u, t.dim()).map_err(|e| anyhow!(e))?.to_vector()],
        None if t.dim() == 3 => {
            // Evenly spaced through the open chamber, which spans angles (pi/6, pi/2).
            let n: usize = cfg.param("directions", 9)?;
            (0..n).map(|i| direction_at_angle(PI / 6.0 + (i as f64 + 0.5) * (PI / 3.0) / n as f64)).collect()
        }
        None => return Err(anosov_core::Error::Input("angle scans need d = 3; pass --param u=...".into()).into()),
    };
    let mut rows = Vec::new();
    for u in &dirs {
        let est = match growth_indicator_estimate(&t, u, theta) {
            Ok(GrowthOutcome::Estimate(e)) => json!({ "slope": e.slope, "stderr": e.stderr, "upper": e.upper, "points": e.points, "t_max": e.t_max }),
            Ok(GrowthOutcome::NegativeInfinity) => json!("-inf"),
            Err(anosov_core::Error::InsufficientData(m)) => json!({ "insufficient_data": m }),
            Err(e) => return Err(e.into()),
        };
        let angle = if t.dim() == 3 { Some(chamber_angle(u)) } else { None };
        rows.push(json!({ "direction": u, "angle": angle, "estimate": est }));
    }
    emit_json(cfg, "growth", json!({ "theta": theta, "scan": rows }))?;
    Ok(0)
}

pub fn exponent(cfg: &RunConfig) -> Result<u8> {
    let preset = cfg.load_preset()?;
    let t = cfg.table(&preset)?;
    let psi = cfg.linear_form(&t)?;
    let w = match cfg.params.get("w") {
        Some(s) => LinearForm::parse(s, t.dim()).map_err(|e| anyhow!(e))?.to_vector(),
        None => psi.to_vector(),
    };
    let ce = critical_exponent(&t, &w)?;
    let shells = |s: f64| {
        let p = poincare_partial(&t, &psi, s);
        json!({ "s": s, "total": p.total, "log_shells": p.log_shells, "decay_rate": p.decay_rate })
    };
    emit_json(
        cfg,
        "exponent",
        json!({
            "w": w,
            "critical_exponent": to_value(&ce)?,
            "linear_rate": linear_rate(&t, &w),
            "poincare": [shells(1.0), shells(1.5)],
        }),
    )?;
    Ok(0)
}

pub fn ps_build(cfg: &RunConfig) -> Result<u8> {
    let preset = cfg.load_preset()?;
    let t = cfg.table(&preset)?;
    let psi = cfg.linear_form(&t)?;
    let floor: usize = cfg.param("floor", default_floor(cfg.max_len))?;
    let nu = build_ps(&t, &psi, floor)?;
    let mut v: Value = serde_json::from_str(&nu.to_json())?;
    if let Value::Object(m) = &mut v {
        m.insert("config_hash".into(), json!(cfg.hash()));
        m.insert("seed".into(), json!(cfg.seed));
    }
    emit(cfg, "ps-build.json", &(serde_json::to_string(&v)? + "\n"))?;
    Ok(0)
}

pub fn verify(cfg: &RunConfig) -> Result<u8> {
    cfg.check_depth()?;
    let ids = suites::select(&cfg.suites)?;
    let results = match cfg.load_preset() {
        Ok(preset) => suites::run(&Ctx::new(cfg, preset), &ids),
        Err(e) => match e.downcast_ref::<anosov_core::Error>() {
            Some(anosov_core::Error::PresetIntegrity(msg)) => vec![suites::integrity_failure(msg.clone())],
            _ => return Err(e),
        },
    };
    let all_hard = results.iter().all(|r| !r.hard || r.status == Status::Pass);
    let mut m = header(cfg, "verify");
    m.insert("suites".into(), to_value(&results)?);
    m.insert("all_hard_passed".into(), json!(all_hard));
    emit(cfg, "verify-report.json", &(serde_json::to_string_pretty(&Value::Object(m))? + "\n"))?;
    for r in &results {
        let kind = if r.hard { "hard" } else { "soft" };
        eprintln!("{:<18} {:<4} {kind} {:.2}s {}", r.lemma_id, format!("{:?}", r.status).to_uppercase(), r.runtime_s, r.note);
    }
    Ok(if all_hard { 0 } else { 1 })
}

pub fn metric(cfg: &RunConfig) -> Result<u8> {
    let preset = cfg.load_preset()?;
    let t = cfg.table(&preset)?;
    let psi = cfg.linear_form(&t)?;
    let mut r = rng(cfg);
    let n: usize = cfg.param("points", 150)?;
    let sample = limit_sample(&preset, n, ZETA_DEPTH, &mut r)?;
    let s = limit_metric_sample(&preset, &sample, &psi, ZETA_DEPTH)?;
    let wc = weak_constants(&s)?;
    let adm = admissible_eps(&wc);
    let (n_tri, at) = triangle_constant(&s);
    let pm = power_metric(&s, adm / 2.0)?;
    let families: usize = cfg.param("families", 100)?;
    let mut covers = Vec::with_capacity(families);
    for _ in 0..families {
        let balls: Vec<(Flag, f64)> = (0..15)
            .map(|_| (s.points[r.random_range(0..s.len())].clone(), r.random_range(0.01..0.6)))
            .collect();
        covers.push(match vitali_cover(&balls, &s) {
            Ok(c) => json!({ "selected": c.selected.len(), "dilation": c.dilation, "n0": c.n0, "passed": c.dilation < 3.0 * c.n0 }),
            Err(e) => json!({ "error": e.to_string(), "passed": false }),
        });
    }
    emit_json(
        cfg,
        "metric",
        json!({
            "points": s.len(),
            "weak_constants": to_value(&wc)?,
            "triangle_n": n_tri,
            "triangle_witness": at,
            "admissible_eps": adm,
            "power_metric": to_value(&pm)?,
            "vitali": covers,
        }),
    )?;
    Ok(0)
}

pub fn shadow(cfg: &RunConfig) -> Result<u8> {
    let preset = cfg.load_preset()?;
    let t = cfg.table(&preset)?;
    let psi = cfg.linear_form(&t)?;
    let nu = build_ps(&t, &psi, cfg.param("floor", default_floor(cfg.max_len))?)?;
    let word_len: usize = cfg.param("word_len", 2)?;
    let r: f64 = cfg.param("r", BAND_RADIUS)?;
    let mut rows = Vec::new();
    for w in enumerate_words(t.alphabet(), word_len) {
        let s = shadow_mass_ratio(&nu, &preset.evaluate(&w), r, ShadowOptions::default())?;
        rows.push(json!({ "word": w.to_string(), "shadow": to_value(&s)? }));
    }
    emit_json(cfg, "shadow", json!({ "r": r, "word_len": word_len, "band": rows }))?;
    Ok(0)
}

pub fn essential(cfg: &RunConfig) -> Result<u8> {
    let preset = cfg.load_preset()?;
    let ctx = Ctx::new(cfg, preset.clone());
    let t = cfg.table(&preset)?;
    let psi = cfg.linear_form(&t)?;
    let nu = build_ps(&t, &psi, default_floor(cfg.max_len))?;
    let g0 = Word::parse(&cfg.param("gamma0", "aaa".to_string())?, t.alphabet())?;
    let eps: f64 = cfg.param("eps", 0.5)?;
    let n0 = match cfg.params.get("n0") {
        Some(v) => v.parse().map_err(|_| anyhow!("bad n0 {v:?}"))?,
        None => suites::fitted_n0(&ctx, &psi, &mut rng(cfg))?,
    };
    let opts = EssentialOptions { n0, ..Default::default() };
    let cert = essential_value_search(&nu, &t, &g0, eps, &AtomSet::All, &opts)?;
    let (dev, mass) = verify_certificate(&cert, &nu, &t, &AtomSet::All)?;
    emit_json(
        cfg,
        "essential",
        json!({
            "certificate": to_value(&cert)?,
            "reverified": { "max_busemann_deviation": dev, "set_mass": mass, "passed": dev < eps && mass > 0.0 },
        }),
    )?;
    Ok(0)
}

pub fn myrberg(cfg: &RunConfig) -> Result<u8> {
    let preset = cfg.load_preset()?;
    let t = cfg.table(&preset)?;
    let tol: f64 = cfg.param("tol", 0.05)?;
    let (xi0, targets) = suites::myrberg_inputs(&preset, cfg.param("targets", 100)?, &mut rng(cfg))?;
    let score = myrberg_score(&xi0, &t, &targets, tol);
    emit_json(
        cfg,
        "myrberg",
        json!({ "tol": tol, "targets": targets.len(), "xi0": xi0, "score": to_value(&score)? }),
    )?;
    Ok(0)
}

/// Disk coordinates of the first line of a flag: the representative in the
/// upper hemisphere, projected stereographically from the south pole. In
/// `d = 2` the line is sent to the point at twice its angle on the circle.
fn disk_point(frame: &[f64], d: usize) -> (f64, f64) {
    let v = &frame[..d];
    if d == 2 {
        let a = 2.0 * v[1].atan2(v[0]);
        return (a.cos(), a.sin());
    }
    let s = if v[d - 1] < 0.0 { -1.0 } else { 1.0 };
    let last = s * v[d - 1];
    (s * v[0] / (1.0 + last), s * v[1] / (1.0 + last))
}

pub fn limitset(cfg: &RunConfig) -> Result<u8> {
    let preset = cfg.load_preset()?;
    let t = cfg.table(&preset)?;
    let floor: usize = cfg.param("floor", default_floor(cfg.max_len))?;
    let d = t.dim();
    let mut points = String::from("word,word_len,x,y\n");
    let mut cone = String::from("word,word_len,angle");
    for k in 1..=d {
        write!(cone, ",u_{k}")?;
    }
    cone.push('\n');
    for i in t.sphere(floor.max(1)).start..t.len() {
        let w = t.word(i);
        let Some(frame) = t.kappa_frame(i) else { continue };
        let (x, y) = disk_point(frame, d);
        writeln!(points, "{w},{},{x:.12e},{y:.12e}", w.len())?;
        if let Some(u) = t.mu(i).normalized() {
            let angle = if d == 3 { chamber_angle(&u) } else { f64::NAN };
            write!(cone, "{w},{},{angle:.12e}", w.len())?;
            for c in u.coords() {
                write!(cone, ",{c:.12e}")?;
            }
            cone.push('\n');
        }
    }
    emit_csv(cfg, "limitset", &points)?;
    if cfg.out.is_some() {
        emit(cfg, "limitset-cone.csv", &cone)?;
    }
    Ok(0)
}
