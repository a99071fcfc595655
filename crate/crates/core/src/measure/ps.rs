//! Truncated orbital sums `sum e^{-psi(mu(gamma))} delta_{kappa_1(gamma)}`.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::group::matrix_from_rows;
use crate::lie::{Flag, FlagCloud, LinearForm};
use crate::orbit::{log_sum_exp, OrbitTable};

/// Finite atomic probability measure on the flag variety.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    pub psi: LinearForm,
    pub max_len: usize,
    pub preset: String,
    /// Shortest word length contributing an atom.
    pub floor: usize,
    atoms: FlagCloud,
    weights: Vec<f64>,
    rows: Vec<usize>,
}

impl DiscreteMeasure {
    /// Normalises non-negative weights; `log_weights` may be arbitrarily negative.
    pub fn from_log_weights(flags: &[Flag], log_weights: &[f64], psi: LinearForm, preset: &str) -> Result<Self> {
        let dim = flags.first().ok_or_else(|| Error::Input("measure without atoms".into()))?.dim();
        let weights = normalise(log_weights)?;
        Ok(DiscreteMeasure {
            psi,
            max_len: 0,
            preset: preset.to_string(),
            floor: 0,
            atoms: FlagCloud::from_flags(dim, flags),
            weights,
            rows: Vec::new(),
        })
    }

    /// Equal weights, e.g. on Haar-random flags for the `K`-invariant measure.
    pub fn uniform(flags: &[Flag], psi: LinearForm) -> Result<Self> {
        Self::from_log_weights(flags, &vec![0.0; flags.len()], psi, "uniform")
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms.dim()
    }

    pub fn atoms(&self) -> &FlagCloud {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn atom(&self, i: usize) -> Flag {
        self.atoms.flag(i)
    }

    /// Table rows the atoms came from (empty for measures not built from a table).
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Mass of the atoms satisfying `pred(i)`.
    pub fn mass_where(&self, mut pred: impl FnMut(usize) -> bool) -> f64 {
        (0..self.len()).filter(|&i| pred(i)).map(|i| self.weights[i]).sum()
    }

    /// Index and chordal distance of the atom nearest to `xi`.
    pub fn nearest(&self, xi: &Flag) -> (usize, f64) {
        (0..self.len())
            .map(|i| (i, self.atoms.distance_to(i, xi)))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
    }

    pub fn to_json(&self) -> String {
        let file = MeasureFile {
            psi: self.psi.coeffs().to_vec(),
            max_len: self.max_len,
            preset: self.preset.clone(),
            floor: self.floor,
            atoms: (0..self.len())
                .map(|i| AtomRecord {
                    frame: self.atom(i).to_rows(),
                    weight: self.weights[i],
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("measure serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MeasureFile = serde_json::from_str(text)?;
        let first = file.atoms.first().ok_or_else(|| Error::Input("measure file without atoms".into()))?;
        let d = first.frame.len();
        let mut atoms = FlagCloud::new(d);
        let mut weights = Vec::with_capacity(file.atoms.len());
        for a in &file.atoms {
            let m: DMatrix<f64> = matrix_from_rows(&a.frame)?;
            if m.nrows() != d {
                return Err(Error::Input("atoms of different dimensions".into()));
            }
            if !(a.weight >= 0.0) {
                return Err(Error::Input("negative atom weight".into()));
            }
            atoms.push(&Flag::from_basis(&m)?);
            weights.push(a.weight);
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Input("measure has zero mass".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(DiscreteMeasure {
            psi: LinearForm::new(file.psi),
            max_len: file.max_len,
            preset: file.preset,
            floor: file.floor,
            atoms,
            weights,
            rows: Vec::new(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct AtomRecord {
    frame: Vec<Vec<f64>>,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
struct MeasureFile {
    psi: Vec<f64>,
    #[serde(rename = "L")]
    max_len: usize,
    preset: String,
    #[serde(default)]
    floor: usize,
    atoms: Vec<AtomRecord>,
}

fn normalise(log_weights: &[f64]) -> Result<Vec<f64>> {
    if log_weights.is_empty() {
        return Err(Error::Precision("no atoms above the floor".into()));
    }
    let lse = log_sum_exp(log_weights);
    if !lse.is_finite() {
        return Err(Error::Precision("weights underflow or overflow".into()));
    }
    let w: Vec<f64> = log_weights.iter().map(|x| (x - lse).exp()).collect();
    if w.iter().all(|&x| x == 0.0) {
        return Err(Error::Precision("all weights underflow".into()));
    }
    Ok(w)
}

/// Default shell floor: half the table depth.
pub fn default_floor(max_len: usize) -> usize {
    (max_len / 2).max(1)
}

/// Orbital sum over `floor <= |gamma| <= L` with weights `e^{-psi(mu(gamma))}`,
/// atoms at `kappa_1(gamma) e+`, normalised.
pub fn build_ps(table: &OrbitTable, psi: &LinearForm, floor: usize) -> Result<DiscreteMeasure> {
    if floor == 0 {
        return Err(Error::Input("shell floor must be at least 1".into()));
    }
    let start = if floor > table.max_len() { table.len() } else { table.sphere(floor).start };
    let mut atoms = FlagCloud::new(table.dim());
    let mut logw = Vec::with_capacity(table.len() - start);
    let mut rows = Vec::with_capacity(table.len() - start);
    for i in start..table.len() {
        let m = psi.eval_slice(table.mu_slice(i));
        if !(m > 0.0) {
            return Err(Error::Domain(format!("psi is not positive on mu({})", table.word(i))));
        }
        let frame = table
            .kappa(i)
            .ok_or_else(|| Error::Degeneracy(format!("mu({}) is not regular", table.word(i))))?;
        atoms.push(&frame);
        logw.push(-m);
        rows.push(i);
    }
    let weights = normalise(&logw)?;
    Ok(DiscreteMeasure {
        psi: psi.clone(),
        max_len: table.max_len(),
        preset: table.preset().name.clone(),
        floor,
        atoms,
        weights,
        rows,
    })
}
