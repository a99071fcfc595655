//! Shadows `O_r(p, q)` in the flag variety, decided by minimising the distance
//! from `q` to the Weyl cone `g exp(a+) o`, and the Morse deviation of orbit rays.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lie::{busemann, cartan_projection, flag_action, symmetric_distance, CartanVector, Flag, GroupElement, LinearForm};
use crate::orbit::OrbitTable;
use crate::words::Word;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ShadowOptions {
    pub max_sweeps: usize,
    /// Stop when a sweep improves the objective by less than this.
    pub tol: f64,
}

impl Default for ShadowOptions {
    fn default() -> Self {
        ShadowOptions {
            max_sweeps: 500,
            tol: 1e-10,
        }
    }
}

impl ShadowOptions {
    /// Twice the sweep budget and half the stopping tolerance.
    pub fn doubled(self) -> Self {
        ShadowOptions {
            max_sweeps: 2 * self.max_sweeps,
            tol: 0.5 * self.tol,
        }
    }
}

/// Viewpoint `p o`, target `q o` and radius `r`.
#[derive(Clone, Debug)]
pub struct ShadowRegion {
    pub p: GroupElement,
    pub q: GroupElement,
    pub r: f64,
}

impl ShadowRegion {
    pub fn new(p: GroupElement, q: GroupElement, r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::Input("shadow radius must be positive".into()));
        }
        Ok(ShadowRegion { p, q, r })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChamberFit {
    /// `min_{v in a+} |mu(h exp v)|`.
    pub value: f64,
    pub v: CartanVector,
    pub sweeps: usize,
    pub converged: bool,
}

/// Fundamental coweight `w_i` (`alpha_j(w_i) = delta_ij`), trace-zero.
fn coweight(i: usize, d: usize) -> Vec<f64> {
    let shift = (i + 1) as f64 / d as f64;
    (0..d).map(|j| if j <= i { 1.0 - shift } else { -shift }).collect()
}

fn from_root_coords(t: &[f64], d: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    for (i, ti) in t.iter().enumerate() {
        for (vj, wj) in v.iter_mut().zip(coweight(i, d)) {
            *vj += ti * wj;
        }
    }
    v
}

/// Minimises `f(v) = |mu(h exp v)|` over the closed chamber: the distance
/// from `h^-1 o` to the Weyl cone `exp(a+) o`. Convex along the flat, so
/// coordinate descent in simple-root coordinates `t >= 0` with a pattern
/// step after each sweep converges.
pub fn chamber_distance(h: &GroupElement, start: &CartanVector, opts: ShadowOptions) -> ChamberFit {
    chamber_distance_shifted(h, &vec![0.0; h.dim()], start, opts)
}

/// Minimises `|mu(h exp(v + shift))|` over `v` in the closed chamber.
pub fn chamber_distance_shifted(h: &GroupElement, shift: &[f64], start: &CartanVector, opts: ShadowOptions) -> ChamberFit {
    descend(h, shift, start, opts, f64::NEG_INFINITY)
}

/// Coordinate descent, stopping early once the objective drops below `stop_below`.
fn descend(h: &GroupElement, shift: &[f64], start: &CartanVector, opts: ShadowOptions, stop_below: f64) -> ChamberFit {
    let d = h.dim();
    let f = |t: &[f64]| {
        let mut v = from_root_coords(t, d);
        v.iter_mut().zip(shift).for_each(|(a, b)| *a += b);
        cartan_projection(&h.mul(&GroupElement::exp_diag(&v))).norm()
    };
    let mut t: Vec<f64> = (1..d).map(|i| start.alpha(i).max(0.0)).collect();
    let mut val = f(&t);
    let mut step = 1.0f64.max(t.iter().cloned().fold(0.0, f64::max));
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps && val >= stop_below {
        sweeps += 1;
        let before = val;
        let t_before = t.clone();
        for i in 0..t.len() {
            let (ti, vi) = line_min(|x| {
                let mut s = t.clone();
                s[i] = x;
                f(&s)
            }, t[i], val, step, opts.tol);
            t[i] = ti;
            val = vi;
        }
        // Pattern move along the sweep displacement.
        let trial: Vec<f64> = t.iter().zip(&t_before).map(|(a, b)| (2.0 * a - b).max(0.0)).collect();
        let tv = f(&trial);
        if tv < val {
            t = trial;
            val = tv;
        }
        let moved = t.iter().zip(&t_before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        step = (2.0 * moved).max(1e-3);
        if before - val <= opts.tol {
            converged = true;
            break;
        }
    }
    ChamberFit {
        value: val,
        v: CartanVector::new(from_root_coords(&t, d)),
        sweeps,
        converged,
    }
}

/// Golden-section minimisation of a convex function on `[0, inf)`, starting
/// from `x0` with `f(x0) = f0` and an initial bracket half-width `step`.
fn line_min(f: impl Fn(f64) -> f64, x0: f64, f0: f64, step: f64, tol: f64) -> (f64, f64) {
    const PHI: f64 = 0.618_033_988_749_894_8;
    let mut lo = (x0 - step).max(0.0);
    let mut hi = x0 + step;
    // Expand to the right until f rises; the left end is either 0 or rising.
    let mut fhi = f(hi);
    let mut width = step;
    while fhi < f0 {
        lo = hi - width;
        width *= 2.0;
        hi += width;
        fhi = f(hi);
    }
    if lo > 0.0 {
        let mut flo = f(lo);
        while flo < f0 && lo > 0.0 {
            hi = lo + width;
            width *= 2.0;
            lo = (lo - width).max(0.0);
            flo = f(lo);
        }
    }
    let mut a = lo;
    let mut b = hi;
    let mut c = b - PHI * (b - a);
    let mut e = a + PHI * (b - a);
    let (mut fc, mut fe) = (f(c), f(e));
    while b - a > 1e-12 * (1.0 + a.abs()) && (fc - fe).abs() > 0.1 * tol || b - a > 1e-3 * (1.0 + a.abs()) {
        if fc < fe {
            b = e;
            e = c;
            fe = fc;
            c = b - PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + PHI * (b - a);
            fe = f(e);
        }
    }
    let (x, fx) = if fc < fe { (c, fc) } else { (e, fe) };
    // Never accept a worse point than the start.
    if fx < f0 {
        (x, fx)
    } else {
        (x0, f0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Membership {
    Member,
    Outside,
    /// The optimiser ran out of sweeps above the radius.
    Indeterminate,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShadowResult {
    pub status: Membership,
    /// Minimiser `v` in the chamber when one was computed.
    pub witness: Option<CartanVector>,
    /// Best distance from `q o` to the cone found.
    pub distance: f64,
    /// Rigorous lower bound for that distance from the Busemann cocycle.
    pub lower_bound: f64,
    /// `beta_xi(p, q)`.
    pub busemann: CartanVector,
}

/// Rotation `k` with `k e+ = xi` (frame with the last column signed to det 1).
pub fn rotation_of(xi: &Flag) -> GroupElement {
    let mut k: DMatrix<f64> = xi.frame().clone();
    if k.determinant() < 0.0 {
        let d = k.ncols();
        k.column_mut(d - 1).neg_mut();
    }
    GroupElement::from_matrix(k).expect("orthogonal frame")
}

/// Lower bound `max_k max(0, -omega_k(b)) / |omega_k|` for the distance from
/// `q o` to the cone `g exp(a+) o`, where `b = beta_xi(p, q)`.
pub fn shadow_lower_bound(b: &CartanVector) -> f64 {
    let d = b.dim();
    (1..d)
        .map(|k| (-b.omega(k)).max(0.0) / LinearForm::omega(k, d).norm())
        .fold(0.0, f64::max)
}

/// Sharper bound using `a = a(p, q)`: both `beta_xi(p, .)` and `a(p, .)` are
/// 1-Lipschitz and equal `v` at `k exp(v) o`, so the distance is at least `|b - a| / 2`.
pub fn shadow_lower_bound_with(b: &CartanVector, a: &CartanVector) -> f64 {
    shadow_lower_bound(b).max(0.5 * (b - a).norm())
}

pub fn shadow_membership(xi: &Flag, region: &ShadowRegion, opts: ShadowOptions) -> Result<ShadowResult> {
    let b = busemann(xi, &region.p, &region.q)?;
    let a = symmetric_distance(&region.p, &region.q);
    Ok(shadow_decide(xi, region, b, &a, opts))
}

/// Membership given precomputed `b = beta_xi(p, q)` and `a = a(p, q)`.
pub(crate) fn shadow_decide(xi: &Flag, region: &ShadowRegion, b: CartanVector, a: &CartanVector, opts: ShadowOptions) -> ShadowResult {
    let lower = shadow_lower_bound_with(&b, a);
    if lower >= region.r {
        return ShadowResult {
            status: Membership::Outside,
            witness: None,
            distance: lower,
            lower_bound: lower,
            busemann: b,
        };
    }
    let k = rotation_of(&flag_action(&region.p.inverse(), xi));
    let h = region.q.inverse().mul(&region.p).mul(&k);
    // On the flat through q the minimiser is b itself; start from its chamber clip.
    let fit = descend(&h, &vec![0.0; h.dim()], &b, opts, region.r);
    let status = if fit.value < region.r {
        Membership::Member
    } else if fit.converged {
        Membership::Outside
    } else {
        Membership::Indeterminate
    };
    ShadowResult {
        status,
        witness: Some(fit.v),
        distance: fit.value,
        lower_bound: lower,
        busemann: b,
    }
}

/// `|beta_xi(p, q) - a(p, q)| / r` for a shadow member.
pub fn kappa_ratio(result: &ShadowResult, region: &ShadowRegion) -> f64 {
    (&result.busemann - &symmetric_distance(&region.p, &region.q)).norm() / region.r
}

#[derive(Clone, Debug, Serialize)]
pub struct MorseDeviation {
    pub max: f64,
    pub per_point: Vec<f64>,
    pub all_converged: bool,
}

/// Distance of each orbit point `gamma_k o` to the Weyl cone `g exp(a+) o`.
pub fn cone_deviation(g: &GroupElement, points: &[GroupElement], opts: ShadowOptions) -> MorseDeviation {
    let mut per_point = Vec::with_capacity(points.len());
    let mut all_converged = true;
    for x in points {
        let h = x.inverse().mul(g);
        let start = cartan_projection(&g.inverse().mul(x));
        let fit = chamber_distance(&h, &start, opts);
        all_converged &= fit.converged;
        per_point.push(fit.value);
    }
    MorseDeviation {
        max: per_point.iter().cloned().fold(0.0, f64::max),
        per_point,
        all_converged,
    }
}

/// Morse deviation of a geodesic ray `e = w_0, w_1, ..., w_n` from the cone
/// based at `o` in the direction of the limit flag of the ray, approximated
/// by `kappa_1` of its deepest element.
///
/// With `w_n = u exp(mu_n) v^T`, the points of the second half are measured
/// from the far end: `w_k^-1 u exp(t) = r_k v exp(t - mu_n)` for the suffix
/// `r_k = w_k^-1 w_n`, which keeps the products well conditioned.
pub fn morse_deviation(ray: &[Word], table: &OrbitTable) -> Result<MorseDeviation> {
    for (k, w) in ray.iter().enumerate() {
        let ok = w.len() == k && (k == 0 || ray[k - 1].letters() == &w.letters()[..k - 1]);
        if !ok {
            return Err(Error::Input(format!("ray is not geodesic at position {k}")));
        }
    }
    let deepest = ray.last().ok_or_else(|| Error::Input("empty ray".into()))?;
    let top = table.element_of(deepest);
    let data = crate::lie::cartan_data(&top);
    let (left, right) = data
        .frames
        .ok_or_else(|| Error::Degeneracy("deepest element is singular".into()))?;
    let u = rotation_of(&left);
    let v = rotation_of(&right);
    let n = deepest.len();
    let neg_mu: Vec<f64> = data.mu.coords().iter().map(|x| -x).collect();
    let opts = ShadowOptions::default();
    let mut per_point = Vec::with_capacity(ray.len());
    let mut all_converged = true;
    for (k, w) in ray.iter().enumerate() {
        let fit = if 2 * k <= n {
            let x = table.element_of(w);
            let start = cartan_projection(&u.inverse().mul(&x));
            chamber_distance(&x.inverse().mul(&u), &start, opts)
        } else {
            let r = table.element_of(&deepest.suffix_from(k));
            let h = r.mul(&v);
            let start = CartanVector::new(data.mu.coords().iter().zip(cartan_projection(&r).coords()).map(|(a, b)| a - b).collect());
            chamber_distance_shifted(&h, &neg_mu, &start, opts)
        };
        all_converged &= fit.converged;
        per_point.push(fit.value);
    }
    Ok(MorseDeviation {
        max: per_point.iter().cloned().fold(0.0, f64::max),
        per_point,
        all_converged,
    })
}
