//! Schottky presets: generator matrices, ping-pong power and validation.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::random::random_rotation;
use crate::lie::{cartan_projection, jordan_projection, GroupElement};
use crate::words::{enumerate_words, Alphabet, Letter, Word};

/// Reduced words up to this length must be loxodromic and regular.
pub const CHECK_LENGTH: usize = 6;
/// Minimal root gap required of every checked word.
pub const MIN_GAP: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct SchottkyPreset {
    pub name: String,
    pub alphabet: Alphabet,
    pub pingpong_power: u32,
    pub provenance: String,
    raw: Vec<GroupElement>,
    /// Indexed by letter: generator `i` at `2i`, its inverse at `2i + 1`.
    letters: Vec<GroupElement>,
}

#[derive(Serialize, Deserialize)]
struct GeneratorRecord {
    letter: String,
    matrix: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct PresetFile {
    name: String,
    dim: usize,
    pingpong_power: u32,
    generators: Vec<GeneratorRecord>,
    #[serde(default)]
    provenance: String,
}

impl SchottkyPreset {
    pub fn new(name: &str, raw: Vec<GroupElement>, pingpong_power: u32, provenance: &str) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Input("preset needs at least one generator".into()));
        }
        if pingpong_power == 0 {
            return Err(Error::Input("ping-pong power must be at least 1".into()));
        }
        let d = raw[0].dim();
        if raw.iter().any(|g| g.dim() != d) {
            return Err(Error::Input("generators of different dimensions".into()));
        }
        let alphabet = Alphabet::new(raw.len())?;
        let mut letters = Vec::with_capacity(2 * raw.len());
        for g in &raw {
            let p = g.pow(pingpong_power);
            letters.push(p.clone());
            letters.push(p.inverse());
        }
        Ok(SchottkyPreset {
            name: name.to_string(),
            alphabet,
            pingpong_power,
            provenance: provenance.to_string(),
            raw,
            letters,
        })
    }

    pub fn dim(&self) -> usize {
        self.letters[0].dim()
    }

    pub fn rank(&self) -> usize {
        self.alphabet.rank()
    }

    pub fn letter(&self, l: Letter) -> &GroupElement {
        &self.letters[l as usize]
    }

    pub fn raw_generators(&self) -> &[GroupElement] {
        &self.raw
    }

    /// The element represented by a word (left-to-right product of letters).
    pub fn evaluate(&self, w: &Word) -> GroupElement {
        let mut g = GroupElement::identity(self.dim());
        for (i, &l) in w.letters().iter().enumerate() {
            g = if i >= 20 {
                g.mul_compensated(self.letter(l))
            } else {
                g.mul(self.letter(l))
            };
        }
        g
    }

    /// Checks loxodromy and regularity of every reduced word up to `max_len`.
    pub fn validate(&self, max_len: usize) -> Result<()> {
        for w in enumerate_words(&self.alphabet, max_len).iter().skip(1) {
            let g = self.evaluate(w);
            let lam = jordan_projection(&self.evaluate(&w.cyclic_core().1));
            let mu = cartan_projection(&g);
            if lam.min_root() < MIN_GAP {
                return Err(Error::PresetIntegrity(format!("word {w} is not loxodromic (gap {:e})", lam.min_root())));
            }
            if mu.min_root() < MIN_GAP {
                return Err(Error::PresetIntegrity(format!("word {w} has singular Cartan projection")));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PresetFile = serde_json::from_str(text)?;
        let alphabet = Alphabet::new(file.generators.len())?;
        let mut raw = vec![None; file.generators.len()];
        for rec in &file.generators {
            let mut chars = rec.letter.chars();
            let l = match (chars.next(), chars.next()) {
                (Some(c), None) => alphabet.parse_letter(c)?,
                _ => return Err(Error::Input(format!("bad letter {:?}", rec.letter))),
            };
            if l & 1 == 1 {
                return Err(Error::Input("generators must use lower-case letters".into()));
            }
            let m = crate::lie::group::matrix_from_rows(&rec.matrix)?;
            if m.nrows() != file.dim {
                return Err(Error::Input(format!("generator {} is not {}x{}", rec.letter, file.dim, file.dim)));
            }
            raw[(l / 2) as usize] = Some(GroupElement::from_matrix(m)?);
        }
        let raw: Option<Vec<GroupElement>> = raw.into_iter().collect();
        let raw = raw.ok_or_else(|| Error::Input("generator letters must be a, b, ... without gaps".into()))?;
        let preset = SchottkyPreset::new(&file.name, raw, file.pingpong_power, &file.provenance)?;
        preset.validate(CHECK_LENGTH)?;
        Ok(preset)
    }

    pub fn to_json(&self) -> String {
        let generators = self
            .raw
            .iter()
            .enumerate()
            .map(|(i, g)| GeneratorRecord {
                letter: Alphabet::symbol(2 * i as Letter).to_string(),
                matrix: g.matrix().row_iter().map(|r| r.iter().cloned().collect()).collect(),
            })
            .collect();
        let file = PresetFile {
            name: self.name.clone(),
            dim: self.dim(),
            pingpong_power: self.pingpong_power,
            generators,
            provenance: self.provenance.clone(),
        };
        serde_json::to_string_pretty(&file).expect("preset serialises")
    }

    /// Built-in presets by name.
    pub fn builtin(name: &str) -> Result<Self> {
        let (diag, seed, power): (&[f64], u64, u32) = match name {
            "schottky3" => (&[1.0, 0.1, -1.1], 4, 2),
            "schottky3-wide" => (&[1.0, 0.1, -1.1], 0, 3),
            "schottky2" => (&[1.0, -1.0], 2, 2),
            _ => return Err(Error::Input(format!("unknown preset {name:?}"))),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = (0..2)
            .map(|_| conjugated_diagonal(diag, &random_rotation(diag.len(), &mut rng)))
            .collect::<Result<Vec<_>>>()?;
        let provenance = format!("R diag(exp v) R^T with v = {diag:?}, Haar rotations R from ChaCha8 seed {seed}");
        let preset = SchottkyPreset::new(name, raw, power, &provenance)?;
        preset.validate(CHECK_LENGTH)?;
        Ok(preset)
    }

    pub const BUILTIN: [&'static str; 3] = ["schottky3", "schottky2", "schottky3-wide"];

    /// Loads a preset from a name or a path to a JSON file.
    pub fn resolve(name: &str) -> Result<Self> {
        if Self::BUILTIN.contains(&name) {
            return Self::builtin(name);
        }
        let path = Path::new(name);
        if !path.exists() {
            return Err(Error::Input(format!("no preset named {name:?} and no such file")));
        }
        Self::load(path)
    }
}

/// `R diag(exp(v)) R^T` for a rotation `R`.
fn conjugated_diagonal(v: &[f64], r: &DMatrix<f64>) -> Result<GroupElement> {
    let d = v.len();
    let mean = v.iter().sum::<f64>() / d as f64;
    let diag = DMatrix::from_diagonal(&DVector::from_iterator(d, v.iter().map(|x| (x - mean).exp())));
    GroupElement::from_matrix(r * diag * r.transpose())
}
