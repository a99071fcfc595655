//! Based psi-Gromov products, the virtual visual quasi-metric `d_{psi,p}`,
//! its weak symmetry/ultrametric constants, the chain power metric and the
//! Vitali-type covering lemma on finite samples.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lie::flag::transversality_dets;
use crate::lie::{flag_action, gromov_product, CartanVector, Flag, FlagPair, GroupElement, LinearForm};

/// Flags closer than this (chordally) are treated as the same point.
pub const SAME_POINT_TOL: f64 = 1e-12;
/// Transversality margin below which a sample pair is rejected. Much smaller
/// than the pair tolerance of the Lie layer: distinct limit points sharing a
/// long common prefix legitimately have margins near `1e-13`.
pub const SAMPLE_MARGIN_FLOOR: f64 = 1e-15;

/// `[xi, eta]_{psi, p} = psi(G(g^-1 xi, g^-1 eta))` for `p = g o`.
pub fn psi_gromov(xi: &Flag, eta: &Flag, psi: &LinearForm, p: &GroupElement) -> Result<f64> {
    let ginv = p.inverse();
    psi_gromov_moved(&flag_action(&ginv, xi), &flag_action(&ginv, eta), psi)
}

fn psi_gromov_moved(x: &Flag, y: &Flag, psi: &LinearForm) -> Result<f64> {
    let pair = FlagPair::new(x.clone(), y.clone())?;
    Ok(psi.eval(&gromov_product(&pair)))
}

fn sample_product(x: &Flag, y: &Flag, psi: &LinearForm) -> Result<f64> {
    let dets = transversality_dets(x, y);
    let margin = dets.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if !(margin > SAMPLE_MARGIN_FLOOR) {
        return Err(Error::NotTransverse(margin));
    }
    let omegas: Vec<f64> = dets.iter().map(|v| -v.abs().ln()).collect();
    Ok(psi.eval(&CartanVector::from_omegas(&omegas)))
}

/// `d_{psi,p}(xi, eta) = exp(-[xi, eta]_{psi,p})`, zero on the diagonal and
/// on non-transverse pairs (where the product is `+infinity`).
pub fn virtual_distance(xi: &Flag, eta: &Flag, psi: &LinearForm, p: &GroupElement) -> f64 {
    if xi.approx_eq(eta, SAME_POINT_TOL) {
        return 0.0;
    }
    match psi_gromov(xi, eta, psi, p) {
        Ok(v) => (-v).exp(),
        Err(_) => 0.0,
    }
}

/// Finite sample of pairwise transverse flags with all based products.
#[derive(Clone, Debug)]
pub struct MetricSample {
    pub points: Vec<Flag>,
    pub psi: LinearForm,
    pub basepoint: GroupElement,
    /// `[xi_i, xi_j]_p`, `+infinity` on the diagonal.
    pub products: DMatrix<f64>,
    /// `d_p(xi_i, xi_j)`.
    pub pair_values: DMatrix<f64>,
    moved: Vec<Flag>,
}

impl MetricSample {
    pub fn new(points: Vec<Flag>, psi: LinearForm, basepoint: GroupElement) -> Result<Self> {
        let n = points.len();
        let ginv = basepoint.inverse();
        let moved: Vec<Flag> = points.iter().map(|x| flag_action(&ginv, x)).collect();
        let mut products = DMatrix::from_element(n, n, f64::INFINITY);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    products[(i, j)] = sample_product(&moved[i], &moved[j], &psi)?;
                }
            }
        }
        let pair_values = products.map(|v| (-v).exp());
        Ok(MetricSample {
            points,
            psi,
            basepoint,
            products,
            pair_values,
            moved,
        })
    }

    /// Sample with externally computed products (`+infinity` on the diagonal).
    pub fn from_products(points: Vec<Flag>, psi: LinearForm, basepoint: GroupElement, products: DMatrix<f64>) -> Result<Self> {
        let n = points.len();
        if products.nrows() != n || products.ncols() != n {
            return Err(Error::Input("product matrix does not match the sample".into()));
        }
        if (0..n).any(|i| (0..n).any(|j| i != j && !products[(i, j)].is_finite())) {
            return Err(Error::NotTransverse(0.0));
        }
        let ginv = basepoint.inverse();
        let moved = points.iter().map(|x| flag_action(&ginv, x)).collect();
        let pair_values = products.map(|v| (-v).exp());
        Ok(MetricSample {
            points,
            psi,
            basepoint,
            products,
            pair_values,
            moved,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `d_p(xi, xi_j)` for an arbitrary flag `xi` against sample point `j`.
    pub fn distance_from(&self, xi: &Flag, j: usize) -> f64 {
        let moved = flag_action(&self.basepoint.inverse(), xi);
        self.distance_from_moved(&moved, j)
    }

    fn distance_from_moved(&self, moved: &Flag, j: usize) -> f64 {
        if moved.approx_eq(&self.moved[j], SAME_POINT_TOL) {
            return 0.0;
        }
        sample_product(moved, &self.moved[j], &self.psi)
            .map(|v| (-v).exp())
            .unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakConstants {
    /// `max |[x, y] - [y, x]|`.
    pub c_sym: f64,
    pub sym_witness: (usize, usize),
    /// `max (min([x, y], [y, z]) - [x, z])`, at least zero.
    pub c_ultra: f64,
    pub ultra_witness: (usize, usize, usize),
}

pub fn weak_constants(sample: &MetricSample) -> Result<WeakConstants> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::Input("need at least two sample points".into()));
    }
    let g = &sample.products;
    let mut out = WeakConstants {
        c_sym: 0.0,
        sym_witness: (0, 1),
        c_ultra: 0.0,
        ultra_witness: (0, 0, 0),
    };
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let s = (g[(i, j)] - g[(j, i)]).abs();
            if s > out.c_sym {
                out.c_sym = s;
                out.sym_witness = (i, j);
            }
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let u = g[(i, j)].min(g[(j, k)]) - g[(i, k)];
                if u > out.c_ultra {
                    out.c_ultra = u;
                    out.ultra_witness = (i, j, k);
                }
            }
        }
    }
    Ok(out)
}

/// Smallest `N >= 1` with `d(x, z) <= N (d(x, y) + d(y, z))` and
/// `d(x, y) <= N d(y, x)` on the sample, with a witness triple.
pub fn triangle_constant(sample: &MetricSample) -> (f64, (usize, usize, usize)) {
    let d = &sample.pair_values;
    let n = sample.len();
    let mut best = 1.0;
    let mut witness = (0, 0, 0);
    for i in 0..n {
        for k in 0..n {
            if i == k {
                continue;
            }
            let r = d[(i, k)] / d[(k, i)];
            if r > best {
                best = r;
                witness = (i, k, i);
            }
            for j in 0..n {
                if j == i || j == k {
                    continue;
                }
                let r = d[(i, k)] / (d[(i, j)] + d[(j, k)]);
                if r > best {
                    best = r;
                    witness = (i, j, k);
                }
            }
        }
    }
    (best, witness)
}

/// Largest exponent for which the chain construction applies:
/// `exp(eps C) < sqrt 2` with `C = max(C_sym, C_ultra)`.
pub fn admissible_eps(constants: &WeakConstants) -> f64 {
    let c = constants.c_sym.max(constants.c_ultra);
    if c == 0.0 {
        f64::INFINITY
    } else {
        std::f64::consts::LN_2 / (2.0 * c)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PowerMetric {
    pub eps: f64,
    pub admissible: f64,
    /// Chain metric `d_eps` on the sample.
    #[serde(skip)]
    pub table: DMatrix<f64>,
    /// Smallest `C` with `C^-1 d_p^eps <= d_eps <= C d_p^eps` on the sample.
    pub distortion: f64,
    pub distortion_witness: (usize, usize),
}

/// Chain metric over the sample: the infimum over chains of sums of
/// `max(d_p(x, y), d_p(y, x))^eps`.
pub fn power_metric(sample: &MetricSample, eps: f64) -> Result<PowerMetric> {
    let constants = weak_constants(sample)?;
    let admissible = admissible_eps(&constants);
    if !(eps > 0.0 && eps < admissible) {
        return Err(Error::Condition(format!(
            "eps = {eps} is not admissible: need 0 < eps < {admissible}"
        )));
    }
    let n = sample.len();
    let d = &sample.pair_values;
    let mut t = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { d[(i, j)].max(d[(j, i)]).powf(eps) });
    for k in 0..n {
        for i in 0..n {
            let tik = t[(i, k)];
            for j in 0..n {
                let via = tik + t[(k, j)];
                if via < t[(i, j)] {
                    t[(i, j)] = via;
                }
            }
        }
    }
    let mut distortion: f64 = 1.0;
    let mut witness = (0, 0);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let direct = d[(i, j)].powf(eps);
            let r = (direct / t[(i, j)]).max(t[(i, j)] / direct);
            if r > distortion {
                distortion = r;
                witness = (i, j);
            }
        }
    }
    Ok(PowerMetric {
        eps,
        admissible,
        table: t,
        distortion,
        distortion_witness: witness,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct VitaliCover {
    /// Indices of the selected, pairwise disjoint balls.
    pub selected: Vec<usize>,
    pub n: f64,
    pub n0: f64,
    /// Smallest dilation of the selected balls that covers every sampled
    /// point of the input balls; certified to be below `3 N0`.
    pub dilation: f64,
    pub covered_points: usize,
}

/// Greedy disjoint subfamily (by decreasing radius) of virtual balls
/// `B_p(xi, r) = {eta : d_p(xi, eta) < r}`, restricted to sampled points.
pub fn vitali_cover(balls: &[(Flag, f64)], sample: &MetricSample) -> Result<VitaliCover> {
    if balls.iter().any(|(_, r)| !(*r > 0.0)) {
        return Err(Error::Input("ball radii must be positive".into()));
    }
    let n_pts = sample.len();
    let ginv = sample.basepoint.inverse();
    let center_index: Vec<Option<usize>> = balls
        .iter()
        .map(|(c, _)| sample.points.iter().position(|p| p.approx_eq(c, SAME_POINT_TOL)))
        .collect();
    // dist[b][j] = d_p(center_b, xi_j)
    let dist: Vec<Vec<f64>> = balls
        .iter()
        .zip(&center_index)
        .map(|((c, _), idx)| match idx {
            Some(i) => (0..n_pts).map(|j| if *i == j { 0.0 } else { sample.pair_values[(*i, j)] }).collect(),
            None => {
                let moved = flag_action(&ginv, c);
                (0..n_pts).map(|j| sample.distance_from_moved(&moved, j)).collect()
            }
        })
        .collect();
    let members: Vec<Vec<usize>> = balls
        .iter()
        .enumerate()
        .map(|(b, (_, r))| (0..n_pts).filter(|&j| dist[b][j] < *r).collect())
        .collect();

    let n = if center_index.iter().all(Option::is_some) {
        triangle_constant(sample).0
    } else {
        let mut with_centers = sample.points.clone();
        for ((c, _), idx) in balls.iter().zip(&center_index) {
            if idx.is_none() && !with_centers.iter().any(|p| p.approx_eq(c, SAME_POINT_TOL)) {
                with_centers.push(c.clone());
            }
        }
        let augmented = MetricSample::new(with_centers, sample.psi.clone(), sample.basepoint.clone())?;
        triangle_constant(&augmented).0
    };
    let n0 = n.powi(3);

    let mut order: Vec<usize> = (0..balls.len()).collect();
    order.sort_by(|&a, &b| balls[b].1.total_cmp(&balls[a].1));
    let mut taken = vec![false; n_pts];
    let mut selected = Vec::new();
    for &b in &order {
        if members[b].iter().all(|&j| !taken[j]) {
            for &j in &members[b] {
                taken[j] = true;
            }
            selected.push(b);
        }
    }

    let mut dilation: f64 = 0.0;
    let mut covered = 0;
    for j in 0..n_pts {
        if !members.iter().any(|m| m.contains(&j)) {
            continue;
        }
        let need = selected
            .iter()
            .map(|&b| dist[b][j] / balls[b].1)
            .fold(f64::INFINITY, f64::min);
        if !(need < 3.0 * n0) {
            return Err(Error::Condition(format!(
                "sample point {j} is not covered by the {}-fold dilates (needs {need})",
                3.0 * n0
            )));
        }
        dilation = dilation.max(need);
        covered += 1;
    }
    Ok(VitaliCover {
        selected,
        n,
        n0,
        dilation,
        covered_points: covered,
    })
}
