//! Seeded random samplers for rotations, group elements and flags.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::flag::Flag;
use super::group::GroupElement;

/// Haar-distributed element of `SO(d)` (QR of a Gaussian matrix).
pub fn random_rotation(d: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// A trace-zero vector with entries of size about `spread`.
pub fn random_cartan(d: usize, spread: f64, rng: &mut impl Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..d).map(|_| spread * rng.sample::<f64, _>(StandardNormal)).collect();
    let mean = v.iter().sum::<f64>() / d as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    v
}

/// `k1 exp(v) k2` with Haar rotations and a Gaussian Cartan part.
pub fn random_element(d: usize, spread: f64, rng: &mut impl Rng) -> GroupElement {
    let k1 = GroupElement::from_matrix_unchecked(&random_rotation(d, rng));
    let k2 = GroupElement::from_matrix_unchecked(&random_rotation(d, rng));
    let a = GroupElement::exp_diag(&random_cartan(d, spread, rng));
    k1.mul(&a).mul(&k2)
}

/// Flag of a Haar rotation, i.e. a sample of the `K`-invariant measure.
pub fn random_flag(d: usize, rng: &mut impl Rng) -> Flag {
    Flag::from_basis(&random_rotation(d, rng)).expect("rotation is invertible")
}
