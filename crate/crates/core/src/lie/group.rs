//! Elements of `SL(d, R)` carried through their exterior powers.
//!
//! Long products in an Anosov group are extremely ill-conditioned, so an
//! element is stored as the list of compounds `Lambda^k g`, `k = 1..d-1`, each
//! with a separate logarithmic scale. Every quantity used downstream (Cartan
//! and Jordan projections, Iwasawa cocycle, flag action) only needs the top of
//! the spectrum of some compound, which stays accurate.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::exterior::{self, complement, hodge_sign, subsets, ScaledMatrix, MAX_DIM};
use crate::error::{Error, Result};

/// Relative tolerance on `|det g - 1|`.
pub const DET_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    dim: usize,
    powers: Vec<ScaledMatrix>,
}

impl GroupElement {
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        let d = m.nrows();
        if m.ncols() != d {
            return Err(Error::Input(format!("matrix is {}x{}, not square", d, m.ncols())));
        }
        if !(2..=MAX_DIM).contains(&d) {
            return Err(Error::Input(format!("dimension {d} outside 2..={MAX_DIM}")));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("matrix has non-finite entries".into()));
        }
        let det = m.determinant();
        let scale = m.amax().max(1.0).powi(d as i32);
        if (det - 1.0).abs() > DET_TOL * scale {
            return Err(Error::Input(format!("determinant {det} is not 1")));
        }
        Ok(Self::from_matrix_unchecked(&m))
    }

    /// Builds compounds without validating the determinant.
    pub(crate) fn from_matrix_unchecked(m: &DMatrix<f64>) -> Self {
        let d = m.nrows();
        GroupElement {
            dim: d,
            powers: (1..d)
                .map(|k| ScaledMatrix::new(exterior::compound(m, k)))
                .collect(),
        }
    }

    pub fn from_parts(dim: usize, powers: Vec<ScaledMatrix>) -> Self {
        debug_assert_eq!(powers.len(), dim - 1);
        GroupElement { dim, powers }
    }

    pub fn identity(d: usize) -> Self {
        GroupElement {
            dim: d,
            powers: (1..d)
                .map(|k| ScaledMatrix::identity(exterior::binomial(d, k)))
                .collect(),
        }
    }

    /// `exp(v)` for a trace-zero vector `v`.
    pub fn exp_diag(v: &[f64]) -> Self {
        let d = v.len();
        let powers = (1..d)
            .map(|k| {
                let sets = subsets(d, k);
                let logs: Vec<f64> = sets.iter().map(|s| s.iter().map(|&i| v[i]).sum()).collect();
                let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let diag = DVector::from_iterator(logs.len(), logs.iter().map(|l| (l - top).exp()));
                ScaledMatrix {
                    log_scale: top,
                    m: DMatrix::from_diagonal(&diag),
                }
            })
            .collect();
        GroupElement { dim: d, powers }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Lambda^k g`, `1 <= k <= d-1`.
    pub fn power(&self, k: usize) -> &ScaledMatrix {
        &self.powers[k - 1]
    }

    pub fn powers(&self) -> &[ScaledMatrix] {
        &self.powers
    }

    /// The matrix itself; entries overflow once the scale passes ~700.
    pub fn matrix(&self) -> DMatrix<f64> {
        self.powers[0].to_matrix()
    }

    pub fn mul(&self, rhs: &GroupElement) -> GroupElement {
        GroupElement {
            dim: self.dim,
            powers: self
                .powers
                .iter()
                .zip(&rhs.powers)
                .map(|(a, b)| a.mul(b))
                .collect(),
        }
    }

    pub fn mul_compensated(&self, rhs: &GroupElement) -> GroupElement {
        GroupElement {
            dim: self.dim,
            powers: self
                .powers
                .iter()
                .zip(&rhs.powers)
                .map(|(a, b)| a.mul_compensated(b))
                .collect(),
        }
    }

    /// Exact inverse from the pairing `Lambda^k x Lambda^{d-k} -> Lambda^d`:
    /// `Lambda^k(g^-1)[I, J] = s(I) s(J) Lambda^{d-k}(g)[J^c, I^c]`.
    pub fn inverse(&self) -> GroupElement {
        let d = self.dim;
        let powers = (1..d)
            .map(|k| {
                let src = &self.powers[d - k - 1];
                let sets = subsets(d, k);
                let n = sets.len();
                let comp: Vec<usize> = sets
                    .iter()
                    .map(|s| exterior::subset_index(d, &complement(d, s)))
                    .collect();
                let signs: Vec<f64> = sets.iter().map(|s| hodge_sign(s)).collect();
                let m = DMatrix::from_fn(n, n, |i, j| signs[i] * signs[j] * src.m[(comp[j], comp[i])]);
                ScaledMatrix {
                    log_scale: src.log_scale,
                    m,
                }
            })
            .collect();
        GroupElement { dim: d, powers }
    }

    pub fn pow(&self, n: u32) -> GroupElement {
        let mut out = GroupElement::identity(self.dim);
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Conjugate `h g h^-1`.
    pub fn conjugate_by(&self, h: &GroupElement) -> GroupElement {
        h.mul(self).mul(&h.inverse())
    }

    /// The longest Weyl element as a signed antidiagonal permutation in `SO(d)`.
    pub fn longest_weyl(d: usize) -> GroupElement {
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            m[(i, d - 1 - i)] = 1.0;
        }
        if m.determinant() < 0.0 {
            m[(0, d - 1)] = -1.0;
        }
        GroupElement::from_matrix_unchecked(&m)
    }

    /// Sub-multiplicative size `log max |Lambda^k g|`, useful for overflow checks.
    pub fn log_size(&self) -> f64 {
        self.powers[0].log_scale
    }
}

impl Serialize for GroupElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m = self.matrix();
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().cloned().collect()).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GroupElement {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(de)?;
        matrix_from_rows(&rows)
            .and_then(GroupElement::from_matrix)
            .map_err(serde::de::Error::custom)
    }
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Input("matrix rows must form a non-empty square".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(d: usize, seed: u64) -> DMatrix<f64> {
        let mut x = seed as f64;
        let mut m = DMatrix::from_fn(d, d, |_, _| {
            x = (x * 1.618 + 0.37).fract();
            2.0 * x - 1.0
        });
        m += DMatrix::identity(d, d) * 2.0;
        let det = m.determinant();
        if det < 0.0 {
            m.row_mut(0).neg_mut();
        }
        m / det.abs().powf(1.0 / d as f64)
    }

    #[test]
    fn rejects_bad_determinant() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert!(matches!(GroupElement::from_matrix(m), Err(Error::Input(_))));
    }

    #[test]
    fn hodge_inverse_matches_matrix_inverse() {
        for d in 2..6 {
            let m = sample(d, d as u64 + 3);
            let g = GroupElement::from_matrix(m.clone()).unwrap();
            let inv = g.inverse();
            let direct = GroupElement::from_matrix(m.try_inverse().unwrap()).unwrap();
            for k in 1..d {
                let a = inv.power(k).to_matrix();
                let b = direct.power(k).to_matrix();
                assert!((a - b).amax() < 1e-10, "d = {d}, k = {k}");
            }
        }
    }

    #[test]
    fn rank_one_inverse_is_adjugate() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 3.0, 1.0, 2.0]);
        let inv = GroupElement::from_matrix(m).unwrap().inverse().matrix();
        let want = DMatrix::from_row_slice(2, 2, &[2.0, -3.0, -1.0, 2.0]);
        assert!((inv - want).amax() < 1e-14);
    }

    #[test]
    fn product_matches_matrix_product() {
        let a = sample(3, 1);
        let b = sample(3, 2);
        let g = GroupElement::from_matrix(a.clone())
            .unwrap()
            .mul(&GroupElement::from_matrix(b.clone()).unwrap());
        let direct = GroupElement::from_matrix(&a * &b).unwrap();
        for k in 1..3 {
            assert!((g.power(k).to_matrix() - direct.power(k).to_matrix()).amax() < 1e-12);
        }
    }

    #[test]
    fn longest_weyl_has_unit_determinant() {
        for d in 2..8 {
            let w = GroupElement::longest_weyl(d).matrix();
            assert!((w.determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn serde_roundtrip() {
        let g = GroupElement::from_matrix(sample(3, 9)).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: GroupElement = serde_json::from_str(&s).unwrap();
        assert!((back.matrix() - g.matrix()).amax() < 1e-14);
    }
}
