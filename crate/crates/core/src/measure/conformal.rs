//! Conformality of discrete measures and the densities built on top of them.

use serde::Serialize;

use super::ps::DiscreteMeasure;
use crate::error::Result;
use crate::lie::{flag_action, gromov_product, iwasawa_sigma, Action, CartanVector, Flag, GroupElement, HopfPoint, LinearForm};
use crate::metrics::shadow::shadow_decide;
use crate::metrics::{shadow_lower_bound_with, Membership, ShadowOptions, ShadowRegion};

/// Gaussian bumps `exp(-d(xi, c)^2 / (2 h^2))` in chordal distance, one per
/// center and bandwidth.
#[derive(Clone, Debug)]
pub struct KernelFamily {
    pub centers: Vec<Flag>,
    pub bandwidths: Vec<f64>,
}

impl KernelFamily {
    /// `n` centers taken from the heaviest atoms of `nu`, ties broken by index.
    pub fn from_atoms(nu: &DiscreteMeasure, n: usize, bandwidths: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..nu.len()).collect();
        order.sort_by(|&a, &b| nu.weight(b).total_cmp(&nu.weight(a)).then(a.cmp(&b)));
        let mut centers: Vec<Flag> = Vec::with_capacity(n);
        for i in order {
            if centers.len() == n {
                break;
            }
            let f = nu.atom(i);
            // Keep the centers apart so the bumps probe different regions.
            if centers.iter().all(|c| c.distance(&f) > 0.05) {
                centers.push(f);
            }
        }
        KernelFamily { centers, bandwidths }
    }

    fn eval(h: f64, dist: f64) -> f64 {
        (-(dist * dist) / (2.0 * h * h)).exp()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConformalityResidual {
    /// `(bandwidth, max over centers of the defect)`.
    pub per_bandwidth: Vec<(f64, f64)>,
    pub max: f64,
    /// `|nu(e^{psi beta(e, gamma)}) - 1|`, the defect for `f = 1`.
    pub constant_defect: f64,
}

/// `|int f d(gamma_* nu) - int f e^{psi(beta_.(e, gamma))} d nu|` over the
/// kernel family, with `beta_xi(e, gamma) = -sigma(gamma^-1, xi)`.
pub fn conformality_residual(nu: &DiscreteMeasure, gamma: &GroupElement, kernels: &KernelFamily) -> ConformalityResidual {
    let action = Action::new(gamma);
    let atoms = nu.atoms();
    let nc = kernels.centers.len();
    let nb = kernels.bandwidths.len();
    let mut lhs = vec![0.0; nc * nb];
    let mut rhs = vec![0.0; nc * nb];
    let mut total = 0.0;
    let psi = &nu.psi;
    for i in 0..nu.len() {
        let w = nu.weight(i);
        let factor = (-psi.eval(&atoms.sigma(&action.inv, i))).exp();
        total += w * factor;
        let moved = atoms.act(&action, i);
        for (c, center) in kernels.centers.iter().enumerate() {
            let d_moved = moved.distance(center);
            let d_here = atoms.distance_to(i, center);
            for (b, &h) in kernels.bandwidths.iter().enumerate() {
                lhs[c * nb + b] += w * KernelFamily::eval(h, d_moved);
                rhs[c * nb + b] += w * factor * KernelFamily::eval(h, d_here);
            }
        }
    }
    let per_bandwidth: Vec<(f64, f64)> = kernels
        .bandwidths
        .iter()
        .enumerate()
        .map(|(b, &h)| {
            let m = (0..nc).map(|c| (lhs[c * nb + b] - rhs[c * nb + b]).abs()).fold(0.0, f64::max);
            (h, m)
        })
        .collect();
    let max = per_bandwidth.iter().map(|p| p.1).fold(0.0, f64::max);
    ConformalityResidual {
        per_bandwidth,
        max,
        constant_defect: (total - 1.0).abs(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ShadowMass {
    /// `nu(O_r(o, gamma o)) e^{psi(mu(gamma))}`.
    pub ratio: f64,
    pub mass: f64,
    pub members: usize,
    pub indeterminate: usize,
    pub atoms: usize,
    /// More than 1% of the atoms could not be decided.
    pub warning: bool,
}

/// Share of undecided atoms above which a shadow mass is flagged.
pub const INDETERMINATE_WARN: f64 = 0.01;

/// Atom-sum mass of the shadow `O_r(o, gamma o)`, scaled by `e^{psi(mu(gamma))}`.
pub fn shadow_mass_ratio(nu: &DiscreteMeasure, gamma: &GroupElement, r: f64, opts: ShadowOptions) -> Result<ShadowMass> {
    let d = nu.dim();
    let region = ShadowRegion::new(GroupElement::identity(d), gamma.clone(), r)?;
    let ginv = gamma.inverse();
    let atoms = nu.atoms();
    let mu = crate::lie::cartan_projection(gamma);
    let (mut mass, mut members, mut indeterminate) = (0.0, 0, 0);
    for i in 0..nu.len() {
        // beta_xi(o, gamma o) = -sigma(gamma^-1, xi)
        let b = -atoms.sigma(&ginv, i);
        if shadow_lower_bound_with(&b, &mu) >= r {
            continue;
        }
        match shadow_decide(&atoms.flag(i), &region, b, &mu, opts).status {
            Membership::Member => {
                mass += nu.weight(i);
                members += 1;
            }
            Membership::Indeterminate => indeterminate += 1,
            Membership::Outside => {}
        }
    }
    Ok(ShadowMass {
        ratio: mass * nu.psi.eval(&mu).exp(),
        mass,
        members,
        indeterminate,
        atoms: nu.len(),
        warning: indeterminate as f64 > INDETERMINATE_WARN * nu.len() as f64,
    })
}

/// BMS factor `e^{psi(G(xi, eta))}` at a point of `F^(2) x a`.
pub fn bms_density(point: &HopfPoint, psi: &LinearForm) -> f64 {
    psi.eval(&gromov_product(&point.pair)).exp()
}

/// Relative defect of `factor(h xi, h eta) e^{-psi(sigma(h, xi)) - (psi o i)(sigma(h, eta))} = factor(xi, eta)`.
pub fn bms_invariance_defect(point: &HopfPoint, h: &GroupElement, psi: &LinearForm) -> Result<f64> {
    let (xi, eta) = (point.pair.xi(), point.pair.eta());
    let moved = crate::lie::FlagPair::new(flag_action(h, xi), flag_action(h, eta))?;
    let log_moved = psi.eval(&gromov_product(&moved));
    let transport = psi.eval(&iwasawa_sigma(h, xi)?) + psi.opposite().eval(&iwasawa_sigma(h, eta)?);
    let log_here = psi.eval(&gromov_product(&point.pair));
    Ok(((log_moved - transport - log_here).exp() - 1.0).abs())
}

#[derive(Clone, Debug, Serialize)]
pub struct BrDensity {
    /// `e^{psi(b)}` for `g = k exp(b) n`.
    pub factor: f64,
    pub b: CartanVector,
    /// `g e+ = k e+`.
    pub flag: Flag,
    /// Weight of the nearest atom when it lies within the tolerance, else 0.
    pub atom_weight: f64,
    pub atom_distance: f64,
}

/// BR factor from the Iwasawa decomposition `g = k exp(b) n`: `b = sigma(g, e+)`.
pub fn br_density(g: &GroupElement, psi: &LinearForm, nu: &DiscreteMeasure, tol: f64) -> Result<BrDensity> {
    let e = Flag::standard(g.dim());
    let b = iwasawa_sigma(g, &e)?;
    let flag = flag_action(g, &e);
    let (i, dist) = nu.nearest(&flag);
    Ok(BrDensity {
        factor: psi.eval(&b).exp(),
        b,
        atom_weight: if dist <= tol { nu.weight(i) } else { 0.0 },
        atom_distance: dist,
        flag,
    })
}

/// Mass of a unit `a`-window of the discrete `hat nu` after transport by
/// `gamma`, relative to before: each atom moves to `gamma xi` with its fibre
/// shifted by `sigma(gamma, xi)` and is reweighted by `e^{-psi(beta_{gamma xi}(o, gamma o))}`.
pub fn hat_transport_ratio(nu: &DiscreteMeasure, gamma: &GroupElement) -> f64 {
    let action = Action::new(gamma);
    let atoms = nu.atoms();
    let psi = &nu.psi;
    let mut moved_mass = 0.0;
    for i in 0..nu.len() {
        let shift = psi.eval(&atoms.sigma(gamma, i));
        let image = atoms.act(&action, i);
        // beta_{gamma xi}(o, gamma o) = -sigma(gamma^-1, gamma xi), from the image flag.
        let beta = match iwasawa_sigma(&action.inv, &image) {
            Ok(s) => -psi.eval(&s),
            Err(_) => return f64::NAN,
        };
        moved_mass += nu.weight(i) * (shift - beta).exp();
    }
    moved_mass / nu.total()
}
