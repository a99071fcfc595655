//! The limit map on boundary words and the checks built on it: Busemann
//! bounds along the orbit, the tree decomposition of the cocycle, the
//! comparison of word and psi-Gromov products, and shadow transfer.

use std::collections::HashMap;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lie::{
    cartan_flag, cartan_projection, gromov_product, iwasawa_sigma, Action, CartanVector, Flag, FlagCloud, FlagPair, GroupElement,
    LinearForm,
};
use crate::orbit::{ols, OrbitTable, SchottkyPreset};
use crate::words::{BOUNDARY_DEPTH, word_gromov_product, word_shadow_membership, Alphabet, BoundaryWord, Word};

use nalgebra::DMatrix;

use super::visual::MetricSample;
use super::shadow::{chamber_distance, rotation_of, ShadowOptions};

/// Default truncation depth of the limit map.
pub const ZETA_DEPTH: usize = 32;

/// `zeta(x)`: the `kappa_1` flag of the depth-`depth` prefix of `x`.
pub fn zeta(preset: &SchottkyPreset, x: &BoundaryWord, depth: usize) -> Result<Flag> {
    if x.depth() < depth {
        return Err(Error::Input(format!("boundary word resolved to depth {}, need {depth}", x.depth())));
    }
    cartan_flag(&preset.evaluate(&x.truncated(depth)))
}

/// Seeded sample of boundary words together with their limit flags. The
/// words are resolved `BOUNDARY_DEPTH` letters beyond `depth`, so that
/// shifted limit points stay available.
pub fn limit_sample(preset: &SchottkyPreset, n: usize, depth: usize, rng: &mut impl Rng) -> Result<Vec<(BoundaryWord, Flag)>> {
    (0..n)
        .map(|_| {
            let x = BoundaryWord::random(&preset.alphabet, depth + BOUNDARY_DEPTH, rng);
            let f = zeta(preset, &x, depth)?;
            Ok((x, f))
        })
        .collect()
}

/// A fitted constant with the witness that attains it.
#[derive(Clone, Debug, Serialize)]
pub struct ConstantReport {
    pub lemma_id: String,
    pub fitted_constant: f64,
    pub witness: String,
    pub sample_size: usize,
    /// Ratio of the constant on the full sample to the constant on its first half.
    pub stability_ratio: Option<f64>,
}

impl ConstantReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BusemannReport {
    /// `max psi(beta_xi(gamma o, o)) - psi(a(gamma o, o))`.
    pub upper_defect: f64,
    /// `max -psi(a(o, gamma o)) - psi(beta_xi(gamma o, o))`.
    pub lower_defect: f64,
    pub upper_witness: (String, usize),
    pub lower_witness: (String, usize),
    pub pairs: usize,
}

impl BusemannReport {
    fn empty() -> Self {
        BusemannReport {
            upper_defect: f64::NEG_INFINITY,
            lower_defect: f64::NEG_INFINITY,
            upper_witness: (String::new(), 0),
            lower_witness: (String::new(), 0),
            pairs: 0,
        }
    }

    fn record(&mut self, up: f64, low: f64, row: usize, j: usize, table: &OrbitTable) {
        if up > self.upper_defect {
            self.upper_defect = up;
            self.upper_witness = (table.word(row).to_string(), j);
        }
        if low > self.lower_defect {
            self.lower_defect = low;
            self.lower_witness = (table.word(row).to_string(), j);
        }
        self.pairs += 1;
    }

    /// The fitted constant: the larger defect, floored at zero.
    pub fn constant(&self) -> f64 {
        self.upper_defect.max(self.lower_defect).max(0.0)
    }
}

/// `psi(mu(gamma^-1))` by row, checking that `psi` is positive on every `mu`.
fn psi_on_inverses(table: &OrbitTable, psi: &LinearForm) -> Result<Vec<f64>> {
    let mut out = vec![0.0; table.len()];
    for i in 1..table.len() {
        let m = psi.eval_slice(table.mu_slice(i));
        if !(m > 0.0) {
            return Err(Error::Domain(format!("psi is not positive on mu({})", table.word(i))));
        }
        let inv = table.index_of(&table.word(i).inverse()).expect("ball is closed under inversion");
        out[inv] = m;
    }
    Ok(out)
}

/// Empirical defects of the two-sided Busemann bound over every non-identity
/// row of the table and every flag, evaluating the cocycle on the flags as
/// given. Flags deep inside the shadow of a long word lose accuracy here;
/// [`busemann_bounds_check_limit`] avoids that for limit points.
pub fn busemann_bounds_check(table: &OrbitTable, psi: &LinearForm, flags: &[Flag]) -> Result<BusemannReport> {
    if flags.is_empty() {
        return Err(Error::Input("no flags to test".into()));
    }
    let cloud = FlagCloud::from_flags(table.dim(), flags);
    let mu_inv = psi_on_inverses(table, psi)?;
    let mut report = BusemannReport::empty();
    for i in 1..table.len() {
        let ginv = table.element(i).inverse();
        let low_bound = psi.eval_slice(table.mu_slice(i));
        for j in 0..cloud.len() {
            let b = psi.eval(&cloud.sigma(&ginv, j));
            report.record(b - mu_inv[i], -low_bound - b, i, j, table);
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    /// `max |beta_xi(gamma o, o) + mu(gamma_1) - mu(gamma_2^-1)|`.
    pub busemann_defect: f64,
    /// `max |a(gamma o, o) - mu(gamma_1^-1) - mu(gamma_2^-1)|`.
    pub distance_defect: f64,
    pub witness: (String, usize),
    pub pairs: usize,
}

/// Splits each `gamma` at the branch point of `x` on `[e, gamma]` and
/// measures how far the cocycle and the distance are from the split values.
pub fn decomposition_check(table: &OrbitTable, sample: &[(BoundaryWord, Flag)], depth: usize) -> Result<DecompositionReport> {
    let shifted = Shifted::new(table, sample, depth)?;
    let mut out = DecompositionReport {
        busemann_defect: 0.0,
        distance_defect: 0.0,
        witness: (String::new(), 0),
        pairs: 0,
    };
    let mu_of = |w: &Word| table.mu(table.index_of(w).expect("subword lies in the ball"));
    for i in 1..table.len() {
        let w = table.word(i);
        let a = mu_of(&w.inverse());
        let mut cache = InverseSuffixes::new(table, &w);
        for j in 0..sample.len() {
            let (k, beta) = shifted.beta(&w, j, &mut cache);
            let m1 = mu_of(&w.prefix(k));
            let m2i = mu_of(&w.suffix_from(k).inverse());
            let bd = (&(&beta + &m1) - &m2i).norm();
            let dd = (&(&a - &mu_of(&w.prefix(k).inverse())) - &m2i).norm();
            if bd > out.busemann_defect {
                out.busemann_defect = bd;
                out.witness = (w.to_string(), j);
            }
            out.distance_defect = out.distance_defect.max(dd);
            out.pairs += 1;
        }
    }
    Ok(out)
}

/// Limit flags of the shifted words `x_j[k..]` and the cocycle values
/// `sigma(x_j[..k], zeta(x_j[k..]))`, for evaluating `sigma(gamma^-1, zeta x)`
/// without cancellation: with `gamma = gamma_1 gamma_2` split where `gamma`
/// leaves `x`, it equals `sigma(gamma_2^-1, xi') - sigma(gamma_1, xi')`, and
/// neither term contracts its argument towards its most contracted direction.
struct Shifted {
    levels: usize,
    flags: FlagCloud,
    offsets: Vec<CartanVector>,
    words: Vec<Vec<crate::words::Letter>>,
}

impl Shifted {
    fn new(table: &OrbitTable, sample: &[(BoundaryWord, Flag)], depth: usize) -> Result<Self> {
        let levels = table.max_len() + 1;
        let preset = table.preset();
        let mut flags = FlagCloud::new(table.dim());
        let mut offsets = Vec::with_capacity(sample.len() * levels);
        for (x, _) in sample {
            for k in 0..levels {
                let xi = shifted_zeta(preset, x, k, depth)?;
                let head = table.element_of(&x.truncated(k));
                offsets.push(iwasawa_sigma(&head, &xi)?);
                flags.push(&xi);
            }
        }
        Ok(Shifted {
            levels,
            flags,
            offsets,
            words: sample.iter().map(|(x, _)| x.prefix().letters().to_vec()).collect(),
        })
    }

    /// `(k, sigma(gamma^-1, zeta x_j))` with `k` the common prefix length.
    fn beta(&self, w: &Word, j: usize, cache: &mut InverseSuffixes) -> (usize, CartanVector) {
        let k = word_gromov_product(w.letters(), &self.words[j]).min(w.len());
        let idx = j * self.levels + k;
        let g2inv = cache.get(k);
        (k, &self.flags.sigma(g2inv, idx) - &self.offsets[idx])
    }
}

/// Lazily built `gamma[k..]^-1` for one word.
struct InverseSuffixes<'a> {
    table: &'a OrbitTable,
    word: Word,
    cache: Vec<Option<GroupElement>>,
}

impl<'a> InverseSuffixes<'a> {
    fn new(table: &'a OrbitTable, word: &Word) -> Self {
        InverseSuffixes {
            table,
            word: word.clone(),
            cache: vec![None; word.len() + 1],
        }
    }

    fn get(&mut self, k: usize) -> &GroupElement {
        let (table, word) = (self.table, &self.word);
        self.cache[k].get_or_insert_with(|| table.element_of(&word.suffix_from(k).inverse()))
    }
}

/// `zeta` of the boundary word with its first `k` letters removed.
pub fn shifted_zeta(preset: &SchottkyPreset, x: &BoundaryWord, k: usize, depth: usize) -> Result<Flag> {
    if x.depth() < k + depth {
        return Err(Error::Input(format!(
            "boundary word resolved to depth {}, need {}",
            x.depth(),
            k + depth
        )));
    }
    cartan_flag(&preset.evaluate(&x.prefix().suffix_from(k).prefix(depth)))
}

/// Busemann bounds with `beta_xi(gamma o, o)` evaluated symbolically from the
/// boundary words of the sample; exact up to truncation at every depth.
pub fn busemann_bounds_check_limit(
    table: &OrbitTable,
    psi: &LinearForm,
    sample: &[(BoundaryWord, Flag)],
    depth: usize,
) -> Result<BusemannReport> {
    if sample.is_empty() {
        return Err(Error::Input("no flags to test".into()));
    }
    let shifted = Shifted::new(table, sample, depth)?;
    let mu_inv = psi_on_inverses(table, psi)?;
    let mut report = BusemannReport::empty();
    for i in 1..table.len() {
        let w = table.word(i);
        let mut cache = InverseSuffixes::new(table, &w);
        let low_bound = psi.eval_slice(table.mu_slice(i));
        for j in 0..sample.len() {
            let b = psi.eval(&shifted.beta(&w, j, &mut cache).1);
            report.record(b - mu_inv[i], -low_bound - b, i, j, table);
        }
    }
    Ok(report)
}

/// `G(zeta x, zeta y)`, computed after stripping the common prefix `h`:
/// `G(h xi, h eta) = G(xi, eta) + sigma(h, xi) + i sigma(h, eta)`.
pub fn limit_gromov(preset: &SchottkyPreset, x: &BoundaryWord, y: &BoundaryWord, depth: usize) -> Result<CartanVector> {
    let n = word_gromov_product(x.prefix().letters(), y.prefix().letters());
    if n >= x.depth().min(y.depth()) {
        return Err(Error::Input("boundary words agree to their resolved depth".into()));
    }
    let xi = shifted_zeta(preset, x, n, depth)?;
    let eta = shifted_zeta(preset, y, n, depth)?;
    let h = preset.evaluate(&x.truncated(n));
    let base = gromov_product(&FlagPair::new(xi.clone(), eta.clone())?);
    Ok(&(&base + &iwasawa_sigma(&h, &xi)?) + &iwasawa_sigma(&h, &eta)?.opposition())
}

/// Metric sample on limit points at the basepoint `o`, with all products
/// from [`limit_gromov`].
pub fn limit_metric_sample(
    preset: &SchottkyPreset,
    sample: &[(BoundaryWord, Flag)],
    psi: &LinearForm,
    depth: usize,
) -> Result<MetricSample> {
    let n = sample.len();
    // Shifted limit flags and prefix elements, keyed by (point, shift).
    let mut shifted: HashMap<(usize, usize), (Flag, GroupElement)> = HashMap::new();
    let mut get = |i: usize, k: usize| -> Result<(Flag, GroupElement)> {
        if k == 0 {
            return Ok((sample[i].1.clone(), GroupElement::identity(preset.dim())));
        }
        if let Some(v) = shifted.get(&(i, k)) {
            return Ok(v.clone());
        }
        let x = &sample[i].0;
        let v = (shifted_zeta(preset, x, k, depth)?, preset.evaluate(&x.truncated(k)));
        shifted.insert((i, k), v.clone());
        Ok(v)
    };
    let mut products = DMatrix::from_element(n, n, f64::INFINITY);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (x, y) = (&sample[i].0, &sample[j].0);
            let k = word_gromov_product(x.prefix().letters(), y.prefix().letters());
            if k >= x.depth().min(y.depth()) {
                return Err(Error::Input("boundary words agree to their resolved depth".into()));
            }
            let (xi, h) = get(i, k)?;
            let (eta, _) = get(j, k)?;
            let base = gromov_product(&FlagPair::new(xi.clone(), eta.clone())?);
            let g = &(&base + &iwasawa_sigma(&h, &xi)?) + &iwasawa_sigma(&h, &eta)?.opposition();
            products[(i, j)] = psi.eval(&g);
        }
    }
    MetricSample::from_products(
        sample.iter().map(|(_, f)| f.clone()).collect(),
        psi.clone(),
        GroupElement::identity(preset.dim()),
        products,
    )
}

/// Pairs of boundary words with prescribed common prefix lengths
/// `0..=max_prefix`, `per_level` pairs each.
pub fn comparison_pairs(
    alphabet: &Alphabet,
    max_prefix: usize,
    per_level: usize,
    depth: usize,
    rng: &mut impl Rng,
) -> Vec<(BoundaryWord, BoundaryWord)> {
    let mut out = Vec::new();
    for n in 0..=max_prefix {
        let mut made = 0;
        while made < per_level {
            let head = Word::random(alphabet, n, rng);
            let x = BoundaryWord::random_extension(&head, alphabet, depth, rng);
            let y = BoundaryWord::random_extension(&head, alphabet, depth, rng);
            if word_gromov_product(x.prefix().letters(), y.prefix().letters()) == n {
                out.push((x, y));
                made += 1;
            }
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct GromovFit {
    pub c1: f64,
    pub c2: f64,
    /// Slope of the upper and lower envelopes against `(x|y)`.
    pub upper_slope: f64,
    pub lower_slope: f64,
    /// `((x|y), psi(G(zeta x, zeta y)))` per pair.
    pub points: Vec<(usize, f64)>,
    pub witness: usize,
}

/// Affine envelope `c1^-1 (x|y) - c2 <= psi(G(zeta x, zeta y)) <= c1 (x|y) + c2`.
/// The slopes come from regressing the per-level extremes on `(x|y)`;
/// `c2` is then the largest defect, so the envelope holds on every pair.
pub fn gromov_comparison_fit(
    preset: &SchottkyPreset,
    psi: &LinearForm,
    pairs: &[(BoundaryWord, BoundaryWord)],
    depth: usize,
) -> Result<GromovFit> {
    let mut points = Vec::with_capacity(pairs.len());
    for (x, y) in pairs {
        if x == y {
            return Err(Error::Input("comparison pairs must be distinct".into()));
        }
        let n = word_gromov_product(x.prefix().letters(), y.prefix().letters());
        points.push((n, psi.eval(&limit_gromov(preset, x, y, depth)?)));
    }
    let max_n = points.iter().map(|p| p.0).max().unwrap_or(0);
    let (mut ns, mut hi, mut lo) = (Vec::new(), Vec::new(), Vec::new());
    for n in 0..=max_n {
        let ys: Vec<f64> = points.iter().filter(|p| p.0 == n).map(|p| p.1).collect();
        if !ys.is_empty() {
            ns.push(n as f64);
            hi.push(ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
            lo.push(ys.iter().cloned().fold(f64::INFINITY, f64::min));
        }
    }
    if ns.len() < 2 {
        return Err(Error::InsufficientData("need at least two prefix levels".into()));
    }
    let upper_slope = ols(&ns, &hi).0;
    let lower_slope = ols(&ns, &lo).0;
    if !(lower_slope > 0.0) {
        return Err(Error::Degeneracy("lower envelope does not grow with (x|y)".into()));
    }
    let c1 = upper_slope.max(1.0 / lower_slope).max(1.0);
    let mut c2 = 0.0f64;
    let mut witness = 0;
    for (i, &(n, y)) in points.iter().enumerate() {
        let n = n as f64;
        let defect = (y - c1 * n).max(n / c1 - y);
        if defect > c2 {
            c2 = defect;
            witness = i;
        }
    }
    Ok(GromovFit {
        c1,
        c2,
        upper_slope,
        lower_slope,
        points,
        witness,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ShadowTransfer {
    pub word_radius: usize,
    /// `max` over sampled `x` in the word shadow of `d(gamma o, cone) / R`.
    pub c: f64,
    pub members: usize,
    pub witness: Option<usize>,
}

/// For the word shadow `O_R(g1, g2)` and boundary words sampled inside it,
/// the smallest `c` with `zeta(x)` in the shadow `O_{cR}(g1 o, g2 o)`.
pub fn shadow_transfer(
    preset: &SchottkyPreset,
    g1: &Word,
    g2: &Word,
    radius: usize,
    sample: &[(BoundaryWord, Flag)],
) -> Result<ShadowTransfer> {
    if radius == 0 {
        return Err(Error::Input("word shadow radius must be positive".into()));
    }
    let p = preset.evaluate(g1);
    let q = preset.evaluate(g2);
    let pinv = Action::new(&p.inverse());
    let cloud = FlagCloud::from_flags(preset.dim(), sample.iter().map(|(_, f)| f));
    let qinv_p = q.inverse().mul(&p);
    let mut out = ShadowTransfer {
        word_radius: radius,
        c: 0.0,
        members: 0,
        witness: None,
    };
    for (j, (x, _)) in sample.iter().enumerate() {
        if !word_shadow_membership(x, g1, g2, radius) {
            continue;
        }
        let k = rotation_of(&cloud.act(&pinv, j));
        let h = qinv_p.mul(&k);
        let start = cartan_projection(&k.inverse().mul(&p.inverse()).mul(&q));
        let fit = chamber_distance(&h, &start, ShadowOptions::default());
        let c = fit.value / radius as f64;
        if c > out.c || out.witness.is_none() {
            out.c = c.max(out.c);
            out.witness = Some(j);
        }
        out.members += 1;
    }
    Ok(out)
}

/// Helper for tests and the CLI: `h = g exp(v)`.
pub fn along_flat(g: &GroupElement, v: &[f64]) -> GroupElement {
    g.mul(&GroupElement::exp_diag(v))
}
