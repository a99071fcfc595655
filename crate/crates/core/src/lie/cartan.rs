//! Vectors in the Cartan subspace of `sl(d)` and linear forms on it.
//!
//! The Cartan subspace is realised as trace-zero vectors in `R^d`; the
//! closed positive chamber is the set of non-increasing vectors.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CartanVector(Vec<f64>);

impl CartanVector {
    /// Wraps raw coordinates. The caller is responsible for the trace being zero;
    /// use [`CartanVector::projected`] for arbitrary input.
    pub fn new(coords: Vec<f64>) -> Self {
        CartanVector(coords)
    }

    /// Orthogonal projection of `coords` onto the trace-zero hyperplane.
    pub fn projected(mut coords: Vec<f64>) -> Self {
        let mean = coords.iter().sum::<f64>() / coords.len() as f64;
        coords.iter_mut().for_each(|c| *c -= mean);
        CartanVector(coords)
    }

    pub fn zero(d: usize) -> Self {
        CartanVector(vec![0.0; d])
    }

    /// Rebuilds a vector from its fundamental-weight values `omega_1..omega_{d-1}`.
    pub fn from_omegas(omegas: &[f64]) -> Self {
        let d = omegas.len() + 1;
        let mut v = Vec::with_capacity(d);
        let mut prev = 0.0;
        for &w in omegas {
            v.push(w - prev);
            prev = w;
        }
        v.push(-prev);
        CartanVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &CartanVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(&self) -> Option<CartanVector> {
        let n = self.norm();
        (n > 0.0).then(|| self.clone() * (1.0 / n))
    }

    /// `omega_k(v) = v_1 + ... + v_k`, for `1 <= k <= d-1`.
    pub fn omega(&self, k: usize) -> f64 {
        self.0[..k].iter().sum()
    }

    pub fn omegas(&self) -> Vec<f64> {
        (1..self.dim()).map(|k| self.omega(k)).collect()
    }

    /// Simple root `alpha_i(v) = v_i - v_{i+1}`, 1-based.
    pub fn alpha(&self, i: usize) -> f64 {
        self.0[i - 1] - self.0[i]
    }

    /// Smallest simple root value; positive exactly on the open chamber.
    pub fn min_root(&self) -> f64 {
        (1..self.dim())
            .map(|i| self.alpha(i))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn in_closed_chamber(&self, tol: f64) -> bool {
        self.min_root() >= -tol
    }

    /// The opposition involution `(v_1..v_d) -> (-v_d..-v_1)`.
    pub fn opposition(&self) -> CartanVector {
        CartanVector(self.0.iter().rev().map(|x| -x).collect())
    }

    pub fn max_abs_diff(&self, other: &CartanVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Index<usize> for CartanVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for CartanVector {
    type Output = CartanVector;
    fn add(self, rhs: CartanVector) -> CartanVector {
        &self + &rhs
    }
}

impl Add for &CartanVector {
    type Output = CartanVector;
    fn add(self, rhs: &CartanVector) -> CartanVector {
        CartanVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl AddAssign<&CartanVector> for CartanVector {
    fn add_assign(&mut self, rhs: &CartanVector) {
        self.0.iter_mut().zip(&rhs.0).for_each(|(a, b)| *a += b);
    }
}

impl Sub for CartanVector {
    type Output = CartanVector;
    fn sub(self, rhs: CartanVector) -> CartanVector {
        &self - &rhs
    }
}

impl Sub for &CartanVector {
    type Output = CartanVector;
    fn sub(self, rhs: &CartanVector) -> CartanVector {
        CartanVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for CartanVector {
    type Output = CartanVector;
    fn neg(self) -> CartanVector {
        CartanVector(self.0.into_iter().map(|x| -x).collect())
    }
}

impl Mul<f64> for CartanVector {
    type Output = CartanVector;
    fn mul(self, s: f64) -> CartanVector {
        CartanVector(self.0.into_iter().map(|x| x * s).collect())
    }
}

/// A linear form on the Cartan subspace, stored by its coefficient vector in
/// the trace-zero gauge (coefficients summing to zero).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearForm {
    coeffs: Vec<f64>,
}

impl LinearForm {
    pub fn new(coeffs: Vec<f64>) -> Self {
        LinearForm {
            coeffs: CartanVector::projected(coeffs).into_vec(),
        }
    }

    /// Fundamental weight `omega_k`.
    pub fn omega(k: usize, d: usize) -> Self {
        assert!(k >= 1 && k < d, "omega_{k} undefined in dimension {d}");
        LinearForm::new((0..d).map(|j| if j < k { 1.0 } else { 0.0 }).collect())
    }

    /// Simple root `alpha_i`.
    pub fn simple_root(i: usize, d: usize) -> Self {
        assert!(i >= 1 && i < d);
        let mut c = vec![0.0; d];
        c[i - 1] = 1.0;
        c[i] = -1.0;
        LinearForm::new(c)
    }

    /// Sum of the positive roots.
    pub fn two_rho(d: usize) -> Self {
        LinearForm::new(
            (1..=d)
                .map(|j| (d + 1) as f64 - 2.0 * j as f64)
                .collect(),
        )
    }

    /// The form `<w, .>` for a Cartan vector `w`.
    pub fn dual_of(w: &CartanVector) -> Self {
        LinearForm::new(w.coords().to_vec())
    }

    /// Riesz representative in the Cartan subspace.
    pub fn to_vector(&self) -> CartanVector {
        CartanVector::new(self.coeffs.clone())
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, v: &CartanVector) -> f64 {
        self.eval_slice(v.coords())
    }

    pub fn eval_slice(&self, v: &[f64]) -> f64 {
        self.coeffs.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        LinearForm {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `psi o i`, the form composed with the opposition involution.
    pub fn opposite(&self) -> Self {
        LinearForm {
            coeffs: self.coeffs.iter().rev().map(|c| -c).collect(),
        }
    }

    /// Operator norm for the Euclidean norm on the Cartan subspace.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Coefficients `a_k` in `psi = sum_k a_k omega_k`.
    pub fn omega_coefficients(&self) -> Vec<f64> {
        self.coeffs.windows(2).map(|w| w[0] - w[1]).collect()
    }

    /// True when `psi` is a non-negative combination of fundamental weights.
    pub fn is_strongly_positive(&self, tol: f64) -> bool {
        self.omega_coefficients().iter().all(|&a| a >= -tol)
    }

    /// Parses `omegaK`, `alphaK`, `2rho`, or a comma-separated coefficient list.
    pub fn parse(s: &str, d: usize) -> Result<Self, String> {
        let s = s.trim();
        if s == "2rho" {
            return Ok(LinearForm::two_rho(d));
        }
        let indexed = |prefix: &str| -> Option<Result<usize, String>> {
            s.strip_prefix(prefix).map(|rest| {
                let k: usize = rest.parse().map_err(|_| format!("bad index in {s:?}"))?;
                if k >= 1 && k < d {
                    Ok(k)
                } else {
                    Err(format!("{s:?} out of range for d = {d}"))
                }
            })
        };
        if let Some(k) = indexed("omega") {
            return Ok(LinearForm::omega(k?, d));
        }
        if let Some(k) = indexed("alpha") {
            return Ok(LinearForm::simple_root(k?, d));
        }
        let coeffs: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| format!("cannot parse linear form {s:?}"))?;
        if coeffs.len() != d {
            return Err(format!("expected {d} coefficients, got {}", coeffs.len()));
        }
        Ok(LinearForm::new(coeffs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_roundtrip() {
        let v = CartanVector::projected(vec![3.0, 1.0, -0.5, -2.0]);
        let back = CartanVector::from_omegas(&v.omegas());
        assert!(v.max_abs_diff(&back) < 1e-14);
    }

    #[test]
    fn opposition_is_involutive_and_preserves_chamber() {
        let v = CartanVector::projected(vec![2.0, 0.5, -2.5]);
        assert_eq!(v.opposition().opposition(), v);
        assert!(v.opposition().in_closed_chamber(0.0));
    }

    #[test]
    fn strong_positivity_classification() {
        for d in 2..6 {
            for k in 1..d {
                assert!(LinearForm::omega(k, d).is_strongly_positive(0.0));
            }
            assert!(LinearForm::two_rho(d).is_strongly_positive(0.0));
        }
        assert!(!LinearForm::simple_root(1, 3).is_strongly_positive(1e-12));
        assert!(LinearForm::simple_root(1, 2).is_strongly_positive(0.0));
    }

    #[test]
    fn two_rho_is_sum_of_positive_roots() {
        let d = 4;
        let v = CartanVector::projected(vec![1.3, 0.2, -0.4, -1.1]);
        let mut total = 0.0;
        for i in 0..d {
            for j in i + 1..d {
                total += v[i] - v[j];
            }
        }
        assert!((LinearForm::two_rho(d).eval(&v) - total).abs() < 1e-12);
    }

    #[test]
    fn parse_forms() {
        assert_eq!(LinearForm::parse("omega2", 3).unwrap(), LinearForm::omega(2, 3));
        assert_eq!(LinearForm::parse("2rho", 3).unwrap(), LinearForm::two_rho(3));
        assert!(LinearForm::parse("omega3", 3).is_err());
        let f = LinearForm::parse("1, 0, -1", 3).unwrap();
        assert_eq!(f.coeffs(), &[1.0, 0.0, -1.0]);
    }
}
