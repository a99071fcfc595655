//! Myrberg coverage and the coarse-grained singularity report.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::ps::DiscreteMeasure;
use crate::lie::random::random_flag;
use crate::lie::{Action, Flag, FlagCloud, FlagPair};
use crate::orbit::OrbitTable;

#[derive(Clone, Debug, Serialize)]
pub struct MyrbergScore {
    /// Fraction of targets approximated.
    pub score: f64,
    /// Word approximating each target, if any.
    pub witnesses: Vec<Option<String>>,
}

/// Fraction of targets `(xi, eta)` for which some `gamma` in the table has
/// `d(kappa_1(gamma), xi) < tol` and `d(gamma xi_0, eta) < tol`.
pub fn myrberg_score(xi0: &Flag, table: &OrbitTable, targets: &[FlagPair], tol: f64) -> MyrbergScore {
    let d = table.dim();
    let mut kappas = FlagCloud::new(d);
    let mut images = FlagCloud::new(d);
    let mut rows = Vec::with_capacity(table.len());
    let base = FlagCloud::from_flags(d, [xi0]);
    for i in 1..table.len() {
        let Some(k) = table.kappa(i) else { continue };
        kappas.push(&k);
        images.push(&base.act(&Action::new(&table.element(i)), 0));
        rows.push(i);
    }
    let witnesses: Vec<Option<String>> = targets
        .iter()
        .map(|t| {
            (0..rows.len())
                .find(|&j| kappas.distance_to(j, t.xi()) < tol && images.distance_to(j, t.eta()) < tol)
                .map(|j| table.word(rows[j]).to_string())
        })
        .collect();
    let hits = witnesses.iter().filter(|w| w.is_some()).count();
    MyrbergScore {
        score: if targets.is_empty() { 0.0 } else { hits as f64 / targets.len() as f64 },
        witnesses,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SingularityScale {
    pub scale: f64,
    pub cells: usize,
    /// Pearson correlation of the two cell-mass vectors.
    pub correlation: f64,
}

/// Cell masses of both measures over `ceil(scale^-2)` Voronoi cells of
/// Haar-random flags, one partition per scale, with their correlation.
pub fn mutual_singularity_diagnostic(nu1: &DiscreteMeasure, nu2: &DiscreteMeasure, scales: &[f64], seed: u64) -> Vec<SingularityScale> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = nu1.dim();
    scales
        .iter()
        .map(|&scale| {
            let cells = (scale.powi(-2)).ceil().max(1.0) as usize;
            let centers: Vec<Flag> = (0..cells).map(|_| random_flag(d, &mut rng)).collect();
            let m1 = cell_masses(nu1, &centers);
            let m2 = cell_masses(nu2, &centers);
            SingularityScale {
                scale,
                cells,
                correlation: pearson(&m1, &m2),
            }
        })
        .collect()
}

fn cell_masses(nu: &DiscreteMeasure, centers: &[Flag]) -> Vec<f64> {
    let mut mass = vec![0.0; centers.len()];
    for i in 0..nu.len() {
        let cell = (0..centers.len())
            .map(|c| (c, nu.atoms().distance_to(i, &centers[c])))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
            .0;
        mass[cell] += nu.weight(i);
    }
    mass
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return if x == y { 1.0 } else { 0.0 };
    }
    sxy / (sxx * syy).sqrt()
}
