//! Cartan, Jordan and Iwasawa data, Busemann functions and the Gromov product.

use nalgebra::{DMatrix, DVector};

use super::cartan::CartanVector;
use super::exterior::{null_vector, svd, top_singular_triple};
use super::flag::{transversality_dets, Flag, FlagPair};
use super::group::GroupElement;
use crate::error::{Error, Result};

/// Minimal root gap for Cartan frames and loxodromy to be considered defined.
pub const REGULAR_TOL: f64 = 1e-7;

/// Cartan projection `mu(g)`.
pub fn cartan_projection(g: &GroupElement) -> CartanVector {
    let omegas: Vec<f64> = g.powers().iter().map(|p| p.log_top_singular()).collect();
    CartanVector::from_omegas(&omegas)
}

/// Cartan projection together with the flags `kappa_1(g) e+` (left singular
/// frame) and the right singular frame, when `mu(g)` is regular.
#[derive(Clone, Debug)]
pub struct CartanData {
    pub mu: CartanVector,
    pub frames: Option<(Flag, Flag)>,
}

pub fn cartan_data(g: &GroupElement) -> CartanData {
    let d = g.dim();
    let mut omegas = Vec::with_capacity(d - 1);
    let mut left = Vec::with_capacity(d - 1);
    let mut right = Vec::with_capacity(d - 1);
    for p in g.powers() {
        let (s, u, v) = top_singular_triple(&p.m);
        omegas.push(p.log_scale + s.ln());
        left.push(u);
        right.push(v);
    }
    let mu = CartanVector::from_omegas(&omegas);
    let frames = if mu.min_root() > REGULAR_TOL {
        Flag::from_wedges(d, &left)
            .ok()
            .zip(Flag::from_wedges(d, &right).ok())
    } else {
        None
    };
    CartanData { mu, frames }
}

/// The flag `kappa_1(g) e+`; requires `mu(g)` regular.
pub fn cartan_flag(g: &GroupElement) -> Result<Flag> {
    cartan_data(g)
        .frames
        .map(|(l, _)| l)
        .ok_or_else(|| Error::Degeneracy("Cartan projection is singular".into()))
}

/// Cartan decomposition `g = k1 exp(mu) k2` computed directly from the matrix.
/// Only meaningful for moderately conditioned elements.
pub fn kak(g: &GroupElement) -> (DMatrix<f64>, CartanVector, DMatrix<f64>) {
    let m = g.matrix();
    let d = m.nrows();
    let dec = svd(&m);
    let mut k1 = dec.u;
    let mut k2 = dec.v.transpose();
    if k1.determinant() < 0.0 {
        k1.column_mut(d - 1).neg_mut();
        k2.row_mut(d - 1).neg_mut();
    }
    let mu = CartanVector::new(dec.s.iter().map(|s| s.ln()).collect());
    (k1, mu, k2)
}

/// Jordan projection `lambda(g)`: logarithms of the moduli of the eigenvalues.
pub fn jordan_projection(g: &GroupElement) -> CartanVector {
    let omegas: Vec<f64> = g
        .powers()
        .iter()
        .map(|p| p.log_scale + spectral_radius(&p.m).ln())
        .collect();
    CartanVector::from_omegas(&omegas)
}

fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)].abs();
    }
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

fn dominant_real_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .complex_eigenvalues()
        .iter()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .map(|z| z.re)
        .unwrap_or(0.0)
}

pub fn is_loxodromic(g: &GroupElement) -> bool {
    jordan_projection(g).min_root() > REGULAR_TOL
}

/// Attracting flag `y_g` of a loxodromic element.
pub fn attracting_flag(g: &GroupElement) -> Result<Flag> {
    if !is_loxodromic(g) {
        return Err(Error::NotLoxodromic);
    }
    let d = g.dim();
    let wedges: Vec<DVector<f64>> = g
        .powers()
        .iter()
        .map(|p| {
            let lam = dominant_real_eigenvalue(&p.m);
            let shifted = &p.m - DMatrix::identity(p.m.nrows(), p.m.nrows()) * lam;
            null_vector(&shifted)
        })
        .collect();
    Flag::from_wedges(d, &wedges)
}

/// Repelling flag `y_{g^-1}`.
pub fn repelling_flag(g: &GroupElement) -> Result<Flag> {
    attracting_flag(&g.inverse())
}

/// Iwasawa cocycle `sigma(g, xi)`: `g k in K exp(sigma) N` for `k e+ = xi`.
/// Its `k`-th fundamental weight is `log |Lambda^k g (x_1 ^ ... ^ x_k)|`.
pub fn iwasawa_sigma(g: &GroupElement, xi: &Flag) -> Result<CartanVector> {
    iwasawa_sigma_wedges(g, &xi.wedges())
}

/// As [`iwasawa_sigma`], with the Plücker vectors of the flag precomputed.
pub fn iwasawa_sigma_wedges(g: &GroupElement, wedges: &[DVector<f64>]) -> Result<CartanVector> {
    let omegas: Vec<f64> = g
        .powers()
        .iter()
        .zip(wedges)
        .map(|(p, w)| p.log_norm_apply(w))
        .collect();
    let v = CartanVector::from_omegas(&omegas);
    if !v.is_finite() {
        return Err(Error::Degeneracy("Iwasawa cocycle is not finite".into()));
    }
    Ok(v)
}

/// The flag `g xi`.
pub fn flag_action(g: &GroupElement, xi: &Flag) -> Flag {
    flag_action_wedges(g, &xi.wedges())
}

pub fn flag_action_wedges(g: &GroupElement, wedges: &[DVector<f64>]) -> Flag {
    let images: Vec<DVector<f64>> = g
        .powers()
        .iter()
        .zip(wedges)
        .map(|(p, w)| {
            let v = &p.m * w;
            let n = v.norm();
            v / n
        })
        .collect();
    Flag::from_wedges(g.dim(), &images).expect("invertible action keeps Plücker vectors non-zero")
}

/// Busemann function `beta_xi(p o, q o) = sigma(p^-1, xi) - sigma(q^-1, xi)`.
pub fn busemann(xi: &Flag, p: &GroupElement, q: &GroupElement) -> Result<CartanVector> {
    let w = xi.wedges();
    Ok(iwasawa_sigma_wedges(&p.inverse(), &w)? - iwasawa_sigma_wedges(&q.inverse(), &w)?)
}

/// Visual flags `(g+, g-) = (g e+, g e-)`.
pub fn visual_flags(g: &GroupElement) -> (Flag, Flag) {
    let d = g.dim();
    (
        flag_action(g, &Flag::standard(d)),
        flag_action(g, &Flag::opposite(d)),
    )
}

/// Vector-valued Gromov product, via fundamental representations:
/// `omega_k(G(xi, eta)) = -log |det(X_k^T Y_k)|`.
pub fn gromov_product(pair: &FlagPair) -> CartanVector {
    let omegas: Vec<f64> = transversality_dets(pair.xi(), pair.eta())
        .iter()
        .map(|det| -det.abs().max(f64::MIN_POSITIVE).ln())
        .collect();
    CartanVector::from_omegas(&omegas)
}

/// An element `g` with `g+ = xi` and `g- = eta`, normalised to determinant one.
pub fn element_with_flags(pair: &FlagPair) -> Result<GroupElement> {
    let xi = pair.xi().frame();
    let eta = pair.eta().frame();
    let d = xi.nrows();
    let mut cols = DMatrix::zeros(d, d);
    for k in 1..=d {
        let x = xi.columns(0, k);
        let u = if k == 1 {
            x.column(0).into_owned()
        } else {
            // u in V_k(xi), orthogonal to the complement of the (d-k+1)-plane of eta.
            let z = eta.columns(d - k + 1, k - 1);
            let c = null_vector(&(z.transpose() * x));
            x * c
        };
        cols.set_column(k - 1, &(&u / u.norm()));
    }
    let det = cols.determinant();
    if det.abs() < 1e-14 {
        return Err(Error::NotTransverse(det.abs()));
    }
    if det < 0.0 {
        cols.column_mut(0).neg_mut();
    }
    cols /= det.abs().powf(1.0 / d as f64);
    Ok(GroupElement::from_matrix_unchecked(&cols))
}

/// Gromov product from its definition `beta_{g+}(e, g) + i beta_{g-}(e, g)`.
pub fn gromov_product_via_busemann(pair: &FlagPair) -> Result<CartanVector> {
    let g = element_with_flags(pair)?;
    let ginv = g.inverse();
    let a = -iwasawa_sigma(&ginv, pair.xi())?;
    let b = -iwasawa_sigma(&ginv, pair.eta())?;
    Ok(a + b.opposition())
}

/// Cartan-valued distance `a(p o, q o) = mu(p^-1 q)`.
pub fn symmetric_distance(p: &GroupElement, q: &GroupElement) -> CartanVector {
    cartan_projection(&p.inverse().mul(q))
}
