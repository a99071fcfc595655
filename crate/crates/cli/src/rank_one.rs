//! Upper half-plane formulas for `SL(2, R)`, used as an independent oracle by
//! the rank-one suite. Boundary point `x` is the line through `(x, 1)`; the
//! hyperbolic metric has curvature -1.

use nalgebra::DMatrix;

#[derive(Clone, Copy, Debug)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

pub fn mobius(g: &DMatrix<f64>, z: Point) -> Point {
    let (a, b, c, d) = (g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]);
    let (nx, ny) = (a * z.x + b, a * z.y);
    let (dx, dy) = (c * z.x + d, c * z.y);
    let n2 = dx * dx + dy * dy;
    Point {
        x: (nx * dx + ny * dy) / n2,
        y: (ny * dx - nx * dy) / n2,
    }
}

pub const I: Point = Point { x: 0.0, y: 1.0 };

pub fn boundary_frame(x: f64) -> DMatrix<f64> {
    let n = (1.0 + x * x).sqrt();
    DMatrix::from_row_slice(2, 2, &[x / n, -1.0 / n, 1.0 / n, x / n])
}

pub fn gromov_at_i(x: f64, y: f64) -> f64 {
    -((x - y).abs() / ((1.0 + x * x) * (1.0 + y * y)).sqrt()).ln()
}

pub fn visual_distance(x: f64, y: f64, z: Point) -> f64 {
    (x - y).abs() * z.y / ((x - z.x).hypot(z.y) * (y - z.x).hypot(z.y))
}

pub fn busemann(x: f64, z: Point, w: Point) -> f64 {
    let h = |p: Point| (p.y / ((x - p.x).powi(2) + p.y * p.y)).ln();
    h(w) - h(z)
}

pub fn distance(z: Point, w: Point) -> f64 {
    let e2 = (z.x - w.x).powi(2) + (z.y - w.y).powi(2);
    (1.0 + e2 / (2.0 * z.y * w.y)).acosh()
}
