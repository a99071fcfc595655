//! Exterior powers of `R^d`: index sets, compound matrices, Plücker
//! coordinates and log-scaled matrices.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

pub const MAX_DIM: usize = 8;

/// Lexicographically ordered `k`-subsets of `0..d`.
pub fn subsets(d: usize, k: usize) -> &'static [Vec<usize>] {
    static TABLE: OnceLock<Vec<Vec<Vec<Vec<usize>>>>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        (0..=MAX_DIM)
            .map(|d| (0..=d).map(|k| build_subsets(d, k)).collect())
            .collect()
    });
    &table[d][k]
}

fn build_subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, d: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            cur.push(i);
            rec(i + 1, d, k, cur, out);
            cur.pop();
        }
    }
    rec(0, d, k, &mut cur, &mut out);
    out
}

pub fn subset_index(d: usize, set: &[usize]) -> usize {
    subsets(d, set.len())
        .binary_search_by(|s| s.as_slice().cmp(set))
        .expect("subset out of range")
}

pub fn complement(d: usize, set: &[usize]) -> Vec<usize> {
    (0..d).filter(|i| !set.contains(i)).collect()
}

/// Sign of `e_I ^ e_{I^c}` relative to `e_0 ^ ... ^ e_{d-1}`.
pub fn hodge_sign(set: &[usize]) -> f64 {
    let inversions: usize = set.iter().enumerate().map(|(j, &i)| i - j).sum();
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    subsets(n, k).len()
}

/// `k`-th compound matrix: all `k x k` minors of `m`.
pub fn compound(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let d = m.nrows();
    if k == 1 {
        return m.clone();
    }
    let sets = subsets(d, k);
    let n = sets.len();
    let mut out = DMatrix::zeros(n, n);
    let mut sub = DMatrix::zeros(k, k);
    for (a, rows) in sets.iter().enumerate() {
        for (b, cols) in sets.iter().enumerate() {
            for (i, &r) in rows.iter().enumerate() {
                for (j, &c) in cols.iter().enumerate() {
                    sub[(i, j)] = m[(r, c)];
                }
            }
            out[(a, b)] = sub.determinant();
        }
    }
    out
}

/// Plücker coordinates of the span of the first `k` columns of `frame`.
pub fn wedge_of_columns(frame: &DMatrix<f64>, k: usize) -> DVector<f64> {
    let d = frame.nrows();
    if k == 1 {
        return frame.column(0).into_owned();
    }
    let sets = subsets(d, k);
    let mut sub = DMatrix::zeros(k, k);
    DVector::from_iterator(
        sets.len(),
        sets.iter().map(|rows| {
            for (i, &r) in rows.iter().enumerate() {
                for j in 0..k {
                    sub[(i, j)] = frame[(r, j)];
                }
            }
            sub.determinant()
        }),
    )
}

/// Orthonormal basis (`d x k`) of the `k`-plane with Plücker coordinates `w`.
///
/// Contractions of `w` against basis `(k-1)`-covectors all lie in the plane;
/// the plane is the dominant `k`-dimensional left singular subspace of them.
pub fn plane_from_wedge(w: &DVector<f64>, d: usize, k: usize) -> DMatrix<f64> {
    if k == 1 {
        return DMatrix::from_column_slice(d, 1, (w / w.norm()).as_slice());
    }
    let js = subsets(d, k - 1);
    let mut contr = DMatrix::zeros(d, js.len());
    let mut buf = Vec::with_capacity(k);
    for (c, jset) in js.iter().enumerate() {
        for i in 0..d {
            if jset.contains(&i) {
                continue;
            }
            buf.clear();
            buf.extend_from_slice(jset);
            let after = jset.iter().filter(|&&j| j > i).count();
            buf.push(i);
            buf.sort_unstable();
            let sign = if after % 2 == 0 { 1.0 } else { -1.0 };
            contr[(i, c)] = sign * w[subset_index(d, &buf)];
        }
    }
    top_left_singular(&contr, k)
}

/// Singular value decomposition `A V = U diag(s)`, singular values sorted in
/// decreasing order.
///
/// One-sided Jacobi: right rotations orthogonalise the columns of `A`. Works
/// for any shape; `V` is always a full orthogonal basis, and columns of `U`
/// belonging to zero singular values are left at zero.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn svd(a: &DMatrix<f64>) -> Svd {
    const MAX_SWEEPS: usize = 80;
    let (m, n) = a.shape();
    let mut b = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    // Columns below this squared norm are numerically zero and left alone.
    let floor = (f64::EPSILON * f64::EPSILON) * a.norm_squared();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let (x, y) = (b[(i, p)], b[(i, q)]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0
                    || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt()
                    || alpha.min(beta) <= floor
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (b[(i, p)], b[(i, q)]);
                    b[(i, p)] = c * x - s * y;
                    b[(i, q)] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| b.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let u = DMatrix::from_fn(m, n, |i, j| {
        let c = order[j];
        if norms[c] > 0.0 {
            b[(i, c)] / norms[c]
        } else {
            0.0
        }
    });
    Svd {
        u,
        s: order.iter().map(|&c| norms[c]).collect(),
        v: DMatrix::from_fn(n, n, |i, j| v[(i, order[j])]),
    }
}

/// The `k` dominant left singular vectors, ordered by decreasing singular value.
pub fn top_left_singular(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    svd(m).u.columns(0, k).into_owned()
}

/// Dominant singular triple `(sigma_1, u_1, v_1)`.
pub fn top_singular_triple(m: &DMatrix<f64>) -> (f64, DVector<f64>, DVector<f64>) {
    let d = svd(m);
    (d.s[0], d.u.column(0).into_owned(), d.v.column(0).into_owned())
}

pub fn top_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].abs();
    }
    svd(m).s[0]
}

/// Right singular vector for the smallest singular value.
pub fn null_vector(m: &DMatrix<f64>) -> DVector<f64> {
    let d = svd(m);
    let n = m.ncols();
    d.v.column(n - 1).into_owned()
}

/// A matrix stored as `exp(log_scale) * m` with `max |m_ij| = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledMatrix {
    pub log_scale: f64,
    pub m: DMatrix<f64>,
}

impl ScaledMatrix {
    pub fn new(m: DMatrix<f64>) -> Self {
        let mut s = ScaledMatrix { log_scale: 0.0, m };
        s.normalize();
        s
    }

    pub fn identity(n: usize) -> Self {
        ScaledMatrix {
            log_scale: 0.0,
            m: DMatrix::identity(n, n),
        }
    }

    pub fn normalize(&mut self) {
        let s = self.m.amax();
        if s > 0.0 && s.is_finite() {
            self.m /= s;
            self.log_scale += s.ln();
        }
    }

    pub fn mul(&self, rhs: &ScaledMatrix) -> ScaledMatrix {
        let mut out = ScaledMatrix {
            log_scale: self.log_scale + rhs.log_scale,
            m: &self.m * &rhs.m,
        };
        out.normalize();
        out
    }

    /// Product with compensated (error-free transformation) dot products.
    pub fn mul_compensated(&self, rhs: &ScaledMatrix) -> ScaledMatrix {
        let (n, k, p) = (self.m.nrows(), self.m.ncols(), rhs.m.ncols());
        let mut m = DMatrix::zeros(n, p);
        for i in 0..n {
            for j in 0..p {
                m[(i, j)] = dot2((0..k).map(|l| (self.m[(i, l)], rhs.m[(l, j)])));
            }
        }
        let mut out = ScaledMatrix {
            log_scale: self.log_scale + rhs.log_scale,
            m,
        };
        out.normalize();
        out
    }

    /// `log |M x|` for a vector `x`.
    pub fn log_norm_apply(&self, x: &DVector<f64>) -> f64 {
        self.log_scale + (&self.m * x).norm().ln()
    }

    pub fn log_top_singular(&self) -> f64 {
        self.log_scale + top_singular_value(&self.m).ln()
    }

    /// The matrix with its scale applied (may overflow for large scales).
    pub fn to_matrix(&self) -> DMatrix<f64> {
        &self.m * self.log_scale.exp()
    }
}

/// Dot product accumulated in twice the working precision.
pub fn dot2(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for (a, b) in pairs {
        let p = a * b;
        let pe = a.mul_add(b, -p);
        let t = s + p;
        let z = t - s;
        let se = (s - (t - z)) + (p - z);
        s = t;
        c += se + pe;
    }
    s + c
}
