//! Full flags in `R^d`, represented by canonical orthonormal frames.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::cartan::CartanVector;
use super::exterior::{self, null_vector, plane_from_wedge, wedge_of_columns};
use crate::error::{Error, Result};

/// Pairs with transversality margin at or below this are rejected.
pub const TRANSVERSE_TOL: f64 = 1e-12;
const SIGN_TOL: f64 = 1e-10;

/// A full flag `V_1 < V_2 < ... < V_{d-1}`; `V_k` is spanned by the first `k`
/// columns of the frame.
#[derive(Clone, Debug)]
pub struct Flag {
    frame: DMatrix<f64>,
}

impl Flag {
    /// Canonicalises an arbitrary basis: Gram-Schmidt with positive diagonal,
    /// then each column is signed so its first non-negligible entry is positive.
    pub fn from_basis(basis: &DMatrix<f64>) -> Result<Flag> {
        let d = basis.nrows();
        if basis.ncols() != d || d < 2 {
            return Err(Error::Input("flag basis must be square".into()));
        }
        let qr = basis.clone().qr();
        let r = qr.r();
        let scale = basis.amax().max(f64::MIN_POSITIVE);
        if (0..d).any(|i| r[(i, i)].abs() <= 1e-13 * scale) || r.iter().any(|x| !x.is_finite()) {
            return Err(Error::Degeneracy("flag basis is rank deficient".into()));
        }
        Ok(Flag::canonical(qr.q()))
    }

    pub(crate) fn canonical(mut q: DMatrix<f64>) -> Flag {
        for mut col in q.column_iter_mut() {
            if let Some(first) = col.iter().find(|x| x.abs() > SIGN_TOL) {
                if *first < 0.0 {
                    col.neg_mut();
                }
            }
        }
        Flag { frame: q }
    }

    /// Wraps a frame that is already orthonormal and canonical.
    pub fn from_frame_unchecked(frame: DMatrix<f64>) -> Flag {
        Flag { frame }
    }

    /// The standard flag `e+`.
    pub fn standard(d: usize) -> Flag {
        Flag {
            frame: DMatrix::identity(d, d),
        }
    }

    /// The opposite flag `e- = w0 e+`.
    pub fn opposite(d: usize) -> Flag {
        Flag {
            frame: DMatrix::from_fn(d, d, |i, j| if i + j == d - 1 { 1.0 } else { 0.0 }),
        }
    }

    /// Rebuilds a flag from Plücker coordinates of its `k`-planes, `k = 1..d-1`.
    pub fn from_wedges(d: usize, wedges: &[DVector<f64>]) -> Result<Flag> {
        if wedges.len() != d - 1 {
            return Err(Error::Input("need one wedge per proper subspace".into()));
        }
        if wedges.iter().any(|w| !w.iter().all(|x| x.is_finite()) || w.norm() == 0.0) {
            return Err(Error::Degeneracy("null or non-finite Plücker vector".into()));
        }
        let mut frame = DMatrix::zeros(d, d);
        for k in 1..d {
            let plane = plane_from_wedge(&wedges[k - 1], d, k);
            let col = if k == 1 {
                plane.column(0).into_owned()
            } else {
                let prev = frame.columns(0, k - 1);
                let resid = &plane - &prev * (prev.transpose() * &plane);
                exterior::top_left_singular(&resid, 1).column(0).into_owned()
            };
            frame.set_column(k - 1, &col);
        }
        let last = if d == 2 {
            DVector::from_vec(vec![-frame[(1, 0)], frame[(0, 0)]])
        } else {
            null_vector(&frame.columns(0, d - 1).transpose().into_owned())
        };
        frame.set_column(d - 1, &last);
        Ok(Flag::canonical(frame))
    }

    pub fn dim(&self) -> usize {
        self.frame.nrows()
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    /// Orthonormal basis of `V_k`.
    pub fn plane(&self, k: usize) -> DMatrix<f64> {
        self.frame.columns(0, k).into_owned()
    }

    /// Unit Plücker vector of `V_k`.
    pub fn wedge(&self, k: usize) -> DVector<f64> {
        wedge_of_columns(&self.frame, k)
    }

    pub fn wedges(&self) -> Vec<DVector<f64>> {
        (1..self.dim()).map(|k| self.wedge(k)).collect()
    }

    /// Sine of the largest principal angle between `V_k` and `W_k`.
    pub fn plane_gap(&self, other: &Flag, k: usize) -> f64 {
        let d = self.dim();
        // Lines and hyperplanes reduce to one unit vector each.
        let single = |j: usize| {
            let x = self.frame.column(j);
            let y = other.frame.column(j);
            (y - x * x.dot(&y)).norm().min(1.0)
        };
        if k == 1 {
            return single(0);
        }
        if k == d - 1 {
            return single(d - 1);
        }
        let x = self.frame.columns(0, k);
        let y = other.frame.columns(0, k);
        let resid = &y - &x * (x.transpose() * &y);
        exterior::top_singular_value(&resid.into_owned()).min(1.0)
    }

    /// Chordal distance: the largest principal-angle gap over all `k`-planes.
    pub fn distance(&self, other: &Flag) -> f64 {
        (1..self.dim())
            .map(|k| self.plane_gap(other, k))
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Flag, tol: f64) -> bool {
        self.distance(other) <= tol
    }

    /// Flattened row-major frame, used by the file formats.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.frame
            .row_iter()
            .map(|r| r.iter().cloned().collect())
            .collect()
    }
}

impl Serialize for Flag {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Flag {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(de)?;
        let m = super::group::matrix_from_rows(&rows).map_err(serde::de::Error::custom)?;
        Flag::from_basis(&m).map_err(serde::de::Error::custom)
    }
}

/// Transversality margin: `min_k |det(X_k^T Y_k)|`, where `X_k` spans the
/// `k`-plane of `xi` and `Y_k` spans the orthogonal complement of the
/// `(d-k)`-plane of `eta`.
pub fn transversality_margin(xi: &Flag, eta: &Flag) -> f64 {
    transversality_dets(xi, eta)
        .iter()
        .fold(f64::INFINITY, |m, x| m.min(x.abs()))
}

/// The determinants `det(X_k^T Y_k)` for `k = 1..d-1`.
pub fn transversality_dets(xi: &Flag, eta: &Flag) -> Vec<f64> {
    let d = xi.dim();
    (1..d)
        .map(|k| {
            let x = xi.frame.columns(0, k);
            let y = eta.frame.columns(d - k, k);
            (x.transpose() * y).determinant()
        })
        .collect()
}

/// An ordered pair of transverse flags.
#[derive(Clone, Debug, Serialize)]
pub struct FlagPair {
    xi: Flag,
    eta: Flag,
    margin: f64,
}

impl FlagPair {
    pub fn new(xi: Flag, eta: Flag) -> Result<FlagPair> {
        if xi.dim() != eta.dim() {
            return Err(Error::Input("flags of different dimensions".into()));
        }
        let margin = transversality_margin(&xi, &eta);
        if !(margin > TRANSVERSE_TOL) {
            return Err(Error::NotTransverse(margin));
        }
        Ok(FlagPair { xi, eta, margin })
    }

    pub fn xi(&self) -> &Flag {
        &self.xi
    }

    pub fn eta(&self) -> &Flag {
        &self.eta
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn swapped(&self) -> FlagPair {
        FlagPair {
            xi: self.eta.clone(),
            eta: self.xi.clone(),
            margin: transversality_margin(&self.eta, &self.xi),
        }
    }
}

/// A point of `F^(2) x a`, coordinates for `G/M`.
#[derive(Clone, Debug, Serialize)]
pub struct HopfPoint {
    pub pair: FlagPair,
    pub b: CartanVector,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_pair_has_unit_margin() {
        for d in 2..6 {
            let m = transversality_margin(&Flag::standard(d), &Flag::opposite(d));
            assert!((m - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn flag_is_not_transverse_to_itself() {
        let f = Flag::standard(3);
        assert!(matches!(FlagPair::new(f.clone(), f), Err(Error::NotTransverse(_))));
    }

    #[test]
    fn canonical_frame_is_basis_independent() {
        let b = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.3, 0.5, -1.0, 2.0, 0.2, 0.1, 1.0]);
        // Column operations preserving the flag: upper-triangular right factor.
        let n = DMatrix::from_row_slice(3, 3, &[-2.0, 1.0, 4.0, 0.0, 3.0, -1.0, 0.0, 0.0, 0.5]);
        let f1 = Flag::from_basis(&b).unwrap();
        let f2 = Flag::from_basis(&(&b * n)).unwrap();
        assert!((f1.frame() - f2.frame()).amax() < 1e-12);
        assert!(f1.distance(&f2) < 1e-12);
    }

    #[test]
    fn wedges_roundtrip() {
        let b = DMatrix::from_row_slice(
            4,
            4,
            &[1.0, 0.2, 0.3, 0.0, -0.5, 1.0, 0.1, 0.4, 0.2, -0.3, 1.0, 0.1, 0.7, 0.1, -0.2, 1.0],
        );
        let f = Flag::from_basis(&b).unwrap();
        let g = Flag::from_wedges(4, &f.wedges()).unwrap();
        assert!(f.distance(&g) < 1e-12);
    }

    #[test]
    fn distance_to_opposite_is_one() {
        let d = Flag::standard(3).distance(&Flag::opposite(3));
        assert!((d - 1.0).abs() < 1e-14);
    }
}
