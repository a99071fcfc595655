//! `anosov`: batch front-end for orbit tables, fits, measures and verification.
//!
//! Exit codes: 0 success, 1 suite failure or other error, 2 resource limit,
//! 3 missing input.

mod commands;
mod config;
mod rank_one;
mod suites;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{MissingInput, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "anosov", version, about = "Orbit tables, limit cones, Patterson-Sullivan measures and verification suites for Schottky subgroups of SL(d,R)")]
struct Cli {
    /// Flat `key = value` config file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in preset name or path to a preset JSON file.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Maximal word length of the orbit table.
    #[arg(long, global = true)]
    max_len: Option<usize>,
    /// Linear form: coefficients `c1,...,cd`, `omegaK`, `alphaK`, `2rho` or `tangent-scan`.
    #[arg(long, global = true)]
    psi: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; artifacts go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated suites or groups (`all`, `identity`) for `verify`.
    #[arg(long, global = true)]
    suite: Option<String>,
    /// Command parameter `key=value`, repeatable.
    #[arg(long = "param", global = true, value_parser = parse_kv)]
    params: Vec<(String, String)>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Orbit table as CSV (param: cap).
    Enumerate,
    /// Limit-cone summary (param: min_len).
    LimitCone,
    /// Growth-indicator angle scan (params: theta, directions, u).
    Growth,
    /// Critical exponent and Poincaré shells at s = 1 and 1.5 (param: w).
    Exponent,
    /// Patterson-Sullivan measure JSON (param: floor).
    PsBuild,
    /// Run verification suites and write a JSON report.
    Verify,
    /// Quasi-metric constants, power metric and Vitali covers (params: points, families).
    Metric,
    /// Shadow-mass band (params: r, word_len, floor).
    Shadow,
    /// Essential-value certificate (params: gamma0, eps, n0).
    Essential,
    /// Myrberg score (params: tol, targets).
    Myrberg,
    /// Limit-set plot data and cone directions (param: floor).
    Limitset,
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    Ok((k.trim().replace('-', "_"), v.trim().to_string()))
}

fn overrides(cli: &Cli) -> BTreeMap<String, String> {
    let mut m: BTreeMap<String, String> = cli.params.iter().cloned().collect();
    let mut put = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            m.insert(k.to_string(), v);
        }
    };
    put("preset", cli.preset.clone());
    put("max_len", cli.max_len.map(|x| x.to_string()));
    put("psi", cli.psi.clone());
    put("seed", cli.seed.map(|x| x.to_string()));
    put("out", cli.out.as_ref().map(|p| p.display().to_string()));
    put("suite", cli.suite.clone());
    m
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    let cfg = RunConfig::resolve(cli.config.as_deref(), overrides(cli))?;
    match cli.command {
        Command::Enumerate => commands::enumerate(&cfg),
        Command::LimitCone => commands::limit_cone(&cfg),
        Command::Growth => commands::growth(&cfg),
        Command::Exponent => commands::exponent(&cfg),
        Command::PsBuild => commands::ps_build(&cfg),
        Command::Verify => commands::verify(&cfg),
        Command::Metric => commands::metric(&cfg),
        Command::Shadow => commands::shadow(&cfg),
        Command::Essential => commands::essential(&cfg),
        Command::Myrberg => commands::myrberg(&cfg),
        Command::Limitset => commands::limitset(&cfg),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    use anosov_core::Error;
    if e.downcast_ref::<MissingInput>().is_some() {
        return 3;
    }
    let not_found = |io: &std::io::Error| io.kind() == std::io::ErrorKind::NotFound;
    match e.downcast_ref::<Error>() {
        Some(Error::Resource(_)) => 2,
        Some(Error::Io(io)) if not_found(io) => 3,
        _ => match e.downcast_ref::<std::io::Error>() {
            Some(io) if not_found(io) => 3,
            _ => 1,
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
