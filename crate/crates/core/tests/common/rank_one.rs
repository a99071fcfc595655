//! Classical hyperbolic-plane formulas for `SL(2, R)`, written without any use
//! of the library's exterior-power machinery.
//!
//! A boundary point `x` of the upper half plane is the line spanned by
//! `(x, 1)`; the point `g o` of the symmetric space is `g . i` under Möbius
//! transformations. The hyperbolic metric has curvature -1, which is twice the
//! Euclidean norm of the Cartan projection.

use nalgebra::DMatrix;

#[derive(Clone, Copy, Debug)]
pub struct C(pub f64, pub f64);

impl C {
    fn sub(self, o: C) -> C {
        C(self.0 - o.0, self.1 - o.1)
    }
    fn abs(self) -> f64 {
        self.0.hypot(self.1)
    }
}

pub fn mobius(g: &DMatrix<f64>, z: C) -> C {
    let (a, b, c, d) = (g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]);
    // (a z + b) / (c z + d)
    let num = C(a * z.0 + b, a * z.1);
    let den = C(c * z.0 + d, c * z.1);
    let n2 = den.0 * den.0 + den.1 * den.1;
    C((num.0 * den.0 + num.1 * den.1) / n2, (num.1 * den.0 - num.0 * den.1) / n2)
}

pub fn base_point() -> C {
    C(0.0, 1.0)
}

/// Frame whose first column spans `(x, 1)`.
pub fn boundary_frame(x: f64) -> DMatrix<f64> {
    let n = (1.0 + x * x).sqrt();
    DMatrix::from_row_slice(2, 2, &[x / n, -1.0 / n, 1.0 / n, x / n])
}

/// Classical Gromov product of boundary points seen from `i`.
pub fn gromov_at_i(x: f64, y: f64) -> f64 {
    -((x - y).abs() / ((1.0 + x * x) * (1.0 + y * y)).sqrt()).ln()
}

/// Visual distance `exp(-(x|y)_z)` seen from `z`.
pub fn visual_distance(x: f64, y: f64, z: C) -> f64 {
    (x - y).abs() * z.1 / (C(x, 0.0).sub(z).abs() * C(y, 0.0).sub(z).abs())
}

/// Busemann function `lim d(z, r_t) - d(w, r_t)` towards the boundary point `x`.
pub fn busemann(x: f64, z: C, w: C) -> f64 {
    let h = |p: C| (p.1 / C(x, 0.0).sub(p).abs().powi(2)).ln();
    h(w) - h(z)
}

/// Busemann function towards infinity.
pub fn busemann_infinity(z: C, w: C) -> f64 {
    w.1.ln() - z.1.ln()
}

/// Hyperbolic distance between two points.
pub fn distance(z: C, w: C) -> f64 {
    (1.0 + z.sub(w).abs().powi(2) / (2.0 * z.1 * w.1)).acosh()
}
