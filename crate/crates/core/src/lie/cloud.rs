//! Flat storage for many flags with allocation-free cocycle and distance
//! evaluation, used by the measure and sampling code.

use nalgebra::{DMatrix, Vector3};

use super::cartan::CartanVector;
use super::exterior::binomial;
use super::flag::Flag;
use super::group::GroupElement;
use super::ops::flag_action_wedges;

#[derive(Clone, Debug, Default)]
pub struct FlagCloud {
    dim: usize,
    frames: Vec<f64>,
    wedges: Vec<f64>,
    wedge_stride: usize,
    offsets: Vec<usize>,
}

impl FlagCloud {
    pub fn new(dim: usize) -> Self {
        let mut offsets = vec![0];
        for k in 1..dim {
            offsets.push(offsets[k - 1] + binomial(dim, k));
        }
        FlagCloud {
            dim,
            frames: Vec::new(),
            wedges: Vec::new(),
            wedge_stride: *offsets.last().unwrap(),
            offsets,
        }
    }

    pub fn from_flags<'a>(dim: usize, flags: impl IntoIterator<Item = &'a Flag>) -> Self {
        let mut c = FlagCloud::new(dim);
        for f in flags {
            c.push(f);
        }
        c
    }

    pub fn push(&mut self, f: &Flag) {
        assert_eq!(f.dim(), self.dim);
        self.frames.extend_from_slice(f.frame().as_slice());
        for w in f.wedges() {
            self.wedges.extend_from_slice(w.as_slice());
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.frames.len() / (self.dim * self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Column-major frame of flag `i`.
    pub fn frame(&self, i: usize) -> &[f64] {
        let d2 = self.dim * self.dim;
        &self.frames[i * d2..(i + 1) * d2]
    }

    pub fn flag(&self, i: usize) -> Flag {
        Flag::from_frame_unchecked(DMatrix::from_column_slice(self.dim, self.dim, self.frame(i)))
    }

    /// Unit Plücker vector of the `k`-plane of flag `i`.
    pub fn wedge(&self, i: usize, k: usize) -> &[f64] {
        let base = i * self.wedge_stride;
        &self.wedges[base + self.offsets[k - 1]..base + self.offsets[k]]
    }

    /// `sigma(g, xi_i)`.
    pub fn sigma(&self, g: &GroupElement, i: usize) -> CartanVector {
        let omegas: Vec<f64> = (1..self.dim)
            .map(|k| {
                let p = g.power(k);
                p.log_scale + apply_norm(&p.m, self.wedge(i, k)).ln()
            })
            .collect();
        CartanVector::from_omegas(&omegas)
    }

    /// Chordal distance from flag `i` to `other`.
    pub fn distance_to(&self, i: usize, other: &Flag) -> f64 {
        let d = self.dim;
        let f = self.frame(i);
        let o = other.frame().as_slice();
        let mut dist = unit_gap(&f[..d], &o[..d]);
        if d > 2 {
            dist = dist.max(unit_gap(&f[(d - 1) * d..], &o[(d - 1) * d..]));
        }
        if d > 3 {
            let mine = self.flag(i);
            for k in 2..d - 1 {
                dist = dist.max(mine.plane_gap(other, k));
            }
        }
        dist
    }

    /// The flag `g xi_i`.
    pub fn act(&self, a: &Action, i: usize) -> Flag {
        if self.dim == 3 {
            return act3(a, self.frame(i));
        }
        let ws: Vec<_> = (1..self.dim)
            .map(|k| nalgebra::DVector::from_column_slice(self.wedge(i, k)))
            .collect();
        flag_action_wedges(&a.g, &ws)
    }
}

/// A group element together with its inverse, for repeated flag actions.
#[derive(Clone, Debug)]
pub struct Action {
    pub g: GroupElement,
    pub inv: GroupElement,
}

impl Action {
    pub fn new(g: &GroupElement) -> Self {
        Action {
            g: g.clone(),
            inv: g.inverse(),
        }
    }
}

fn apply_norm(m: &DMatrix<f64>, w: &[f64]) -> f64 {
    let n = w.len();
    let mut sq = 0.0;
    for r in 0..n {
        let mut s = 0.0;
        for (c, x) in w.iter().enumerate() {
            s += m[(r, c)] * x;
        }
        sq += s * s;
    }
    sq.sqrt()
}

fn unit_gap(x: &[f64], y: &[f64]) -> f64 {
    let c: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    x.iter()
        .zip(y)
        .map(|(a, b)| (b - a * c).powi(2))
        .sum::<f64>()
        .sqrt()
        .min(1.0)
}

/// In dimension three a flag is a line inside a plane: move the line by `g`
/// and the plane normal by `g^-T` (the second compound acts on normals).
fn act3(a: &Action, frame: &[f64]) -> Flag {
    let line = Vector3::new(frame[0], frame[1], frame[2]);
    let normal = Vector3::new(frame[6], frame[7], frame[8]);
    let m = &a.g.power(1).m;
    let gl = Vector3::new(
        m[(0, 0)] * line[0] + m[(0, 1)] * line[1] + m[(0, 2)] * line[2],
        m[(1, 0)] * line[0] + m[(1, 1)] * line[1] + m[(1, 2)] * line[2],
        m[(2, 0)] * line[0] + m[(2, 1)] * line[1] + m[(2, 2)] * line[2],
    )
    .normalize();
    let mi = &a.inv.power(1).m;
    let gn = Vector3::new(
        mi[(0, 0)] * normal[0] + mi[(1, 0)] * normal[1] + mi[(2, 0)] * normal[2],
        mi[(0, 1)] * normal[0] + mi[(1, 1)] * normal[1] + mi[(2, 1)] * normal[2],
        mi[(0, 2)] * normal[0] + mi[(1, 2)] * normal[1] + mi[(2, 2)] * normal[2],
    );
    // Re-orthogonalise the normal against the line to absorb rounding.
    let gn = (gn - gl * gl.dot(&gn)).normalize();
    let mid = gn.cross(&gl);
    let frame = DMatrix::from_column_slice(3, 3, &[gl[0], gl[1], gl[2], mid[0], mid[1], mid[2], gn[0], gn[1], gn[2]]);
    Flag::canonical(frame)
}
