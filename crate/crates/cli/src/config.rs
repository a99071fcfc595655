//! Run configuration: a flat `key = value` file merged with command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use sha2::{Digest, Sha256};

use anosov_core::lie::LinearForm;
use anosov_core::orbit::{tangent_scan, OrbitTable, SchottkyPreset};

pub const DEFAULT_PRESET: &str = "schottky3";
pub const DEFAULT_MAX_LEN: usize = 8;
/// Largest accepted table depth; deeper balls need more than a desk machine.
pub const MAX_LEN_CAP: usize = 14;
/// Directions scanned when the form is `tangent-scan`.
pub const TANGENT_DIRECTIONS: usize = 9;

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub preset: String,
    pub max_len: usize,
    /// Coefficients, `omegaK`, `alphaK`, `2rho` or `tangent-scan`.
    pub psi: String,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub suites: Vec<String>,
    /// Command-specific parameters (`r`, `eps`, `gamma0`, ...).
    pub params: BTreeMap<String, String>,
}

/// Raised for anything that names a file or object that is not there.
#[derive(Debug)]
pub struct MissingInput(pub String);

impl std::fmt::Display for MissingInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "missing input: {}", self.0)
    }
}

impl std::error::Error for MissingInput {}

pub fn parse_flat(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected key = value", n + 1))?;
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

impl RunConfig {
    /// Merges the optional config file with overrides; overrides win.
    pub fn resolve(file: Option<&Path>, overrides: BTreeMap<String, String>) -> Result<Self> {
        let mut map = match file {
            Some(p) => {
                if !p.exists() {
                    return Err(MissingInput(format!("config file {}", p.display())).into());
                }
                parse_flat(&std::fs::read_to_string(p)?)?
            }
            None => BTreeMap::new(),
        };
        map.extend(overrides);
        let take = |map: &mut BTreeMap<String, String>, k: &str| map.remove(k);
        let preset = take(&mut map, "preset").unwrap_or_else(|| DEFAULT_PRESET.into());
        let max_len = match take(&mut map, "max_len") {
            Some(v) => v.parse().with_context(|| format!("max_len = {v:?}"))?,
            None => DEFAULT_MAX_LEN,
        };
        let psi = take(&mut map, "psi").unwrap_or_else(|| "tangent-scan".into());
        let seed = match take(&mut map, "seed") {
            Some(v) => v.parse().with_context(|| format!("seed = {v:?}"))?,
            None => 0,
        };
        let out = take(&mut map, "out").map(PathBuf::from);
        let suites = take(&mut map, "suite")
            .map(|s| s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect())
            .unwrap_or_else(|| vec!["all".to_string()]);
        Ok(RunConfig {
            preset,
            max_len,
            psi,
            seed,
            out,
            suites,
            params: map,
        })
    }

    /// Canonical `key=value` lines of everything that affects results.
    pub fn canonical(&self) -> String {
        let mut lines = vec![
            format!("max_len={}", self.max_len),
            format!("preset={}", self.preset),
            format!("psi={}", self.psi),
            format!("seed={}", self.seed),
            format!("suite={}", self.suites.join(",")),
        ];
        lines.extend(self.params.iter().map(|(k, v)| format!("{k}={v}")));
        lines.sort();
        lines.join("\n")
    }

    /// SHA-256 of the canonical form, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn param<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.params.get(key) {
            Some(v) => v.parse().map_err(|_| anyhow!("bad value {v:?} for {key}")),
            None => Ok(default),
        }
    }

    pub fn check_depth(&self) -> Result<()> {
        if self.max_len > MAX_LEN_CAP {
            return Err(anosov_core::Error::Resource(format!(
                "max_len {} exceeds the cap of {MAX_LEN_CAP}",
                self.max_len
            ))
            .into());
        }
        Ok(())
    }

    pub fn load_preset(&self) -> Result<SchottkyPreset> {
        if !SchottkyPreset::BUILTIN.contains(&self.preset.as_str()) && !Path::new(&self.preset).exists() {
            return Err(MissingInput(format!("preset {:?}", self.preset)).into());
        }
        Ok(SchottkyPreset::resolve(&self.preset)?)
    }

    pub fn table(&self, preset: &SchottkyPreset) -> Result<OrbitTable> {
        self.check_depth()?;
        Ok(OrbitTable::enumerate(preset, self.max_len)?)
    }

    pub fn linear_form(&self, table: &OrbitTable) -> Result<LinearForm> {
        if self.psi == "tangent-scan" {
            return Ok(tangent_scan(table, TANGENT_DIRECTIONS)?.psi);
        }
        LinearForm::parse(&self.psi, table.dim()).map_err(|e| anyhow!(e))
    }
}
