//! Enumerated balls of the Cayley graph with per-element Cartan data.

use std::ops::Range;

use nalgebra::DMatrix;

use super::preset::SchottkyPreset;
use crate::error::{Error, Result};
use crate::lie::exterior::{binomial, ScaledMatrix};
use crate::lie::{cartan_data, jordan_projection, CartanVector, Flag, GroupElement, REGULAR_TOL};
use crate::words::{inverse_letter, Alphabet, Letter, Word};

/// Default cap on the size of the outermost sphere.
pub const DEFAULT_CAP: usize = 2_000_000;

/// Struct-of-arrays table over the ball of radius `max_len`, in
/// length-lexicographic order so a word's row is computable from the word.
pub struct OrbitTable {
    preset: SchottkyPreset,
    max_len: usize,
    dim: usize,
    block_sizes: Vec<usize>,
    rep_stride: usize,
    reps: Vec<f64>,
    scales: Vec<f64>,
    mu: Vec<f64>,
    lam: Vec<f64>,
    kappa: Vec<f64>,
    last_letter: Vec<Letter>,
    shell_starts: Vec<usize>,
}

/// One row of the table.
#[derive(Clone, Debug)]
pub struct OrbitEntry {
    pub word: Word,
    pub element: GroupElement,
    pub mu: CartanVector,
    pub lambda: CartanVector,
    /// `kappa_1(gamma) e+`; absent when `mu` is not regular.
    pub kappa: Option<Flag>,
}

impl OrbitTable {
    pub fn enumerate(preset: &SchottkyPreset, max_len: usize) -> Result<Self> {
        Self::enumerate_with_cap(preset, max_len, DEFAULT_CAP)
    }

    pub fn enumerate_with_cap(preset: &SchottkyPreset, max_len: usize, cap: usize) -> Result<Self> {
        let alphabet = preset.alphabet;
        let outer = alphabet.sphere_size(max_len);
        if outer > cap {
            return Err(Error::Resource(format!(
                "sphere of radius {max_len} has {outer} elements, above the cap of {cap}"
            )));
        }
        let d = preset.dim();
        let block_sizes: Vec<usize> = (1..d).map(|k| binomial(d, k).pow(2)).collect();
        let rep_stride = block_sizes.iter().sum();
        let n = alphabet.ball_size(max_len);
        let mut table = OrbitTable {
            preset: preset.clone(),
            max_len,
            dim: d,
            block_sizes,
            rep_stride,
            reps: Vec::with_capacity(n * rep_stride),
            scales: Vec::with_capacity(n * (d - 1)),
            mu: Vec::with_capacity(n * d),
            lam: Vec::with_capacity(n * d),
            kappa: Vec::with_capacity(n * d * d),
            last_letter: Vec::with_capacity(n),
            shell_starts: (0..=max_len).map(|k| if k == 0 { 0 } else { alphabet.ball_size(k - 1) }).collect(),
        };
        table.push(&GroupElement::identity(d), Letter::MAX, false)?;
        let mut start = 0;
        for len in 1..=max_len {
            let end = table.len();
            for parent in start..end {
                let g = table.element(parent);
                let prev = table.last_letter[parent];
                for l in alphabet.letters() {
                    if prev != Letter::MAX && l == inverse_letter(prev) {
                        continue;
                    }
                    let child = if len > 20 {
                        g.mul_compensated(preset.letter(l))
                    } else {
                        g.mul(preset.letter(l))
                    };
                    table.push(&child, l, true)?;
                }
            }
            start = end;
        }
        debug_assert_eq!(table.len(), n);
        Ok(table)
    }

    fn push(&mut self, g: &GroupElement, last: Letter, check: bool) -> Result<()> {
        let d = self.dim;
        for p in g.powers() {
            self.reps.extend_from_slice(p.m.as_slice());
            self.scales.push(p.log_scale);
        }
        let data = cartan_data(g);
        // Conjugates u c u^-1 are badly non-normal; take lambda from the core c.
        let word = Word::from_ball_index(self.len(), &self.preset.alphabet);
        let (_, core) = word.cyclic_core();
        let lam = if core.len() < word.len() {
            self.lambda(core.ball_index(&self.preset.alphabet))
        } else {
            jordan_projection(g)
        };
        if check && lam.min_root() <= REGULAR_TOL {
            return Err(Error::PresetIntegrity(format!("word {word} is not loxodromic")));
        }
        self.mu.extend_from_slice(data.mu.coords());
        self.lam.extend_from_slice(lam.coords());
        match data.frames {
            Some((k1, _)) => self.kappa.extend_from_slice(k1.frame().as_slice()),
            None => self.kappa.extend(std::iter::repeat(f64::NAN).take(d * d)),
        }
        self.last_letter.push(last);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.last_letter.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn preset(&self) -> &SchottkyPreset {
        &self.preset
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.preset.alphabet
    }

    pub fn word(&self, i: usize) -> Word {
        Word::from_ball_index(i, self.alphabet())
    }

    pub fn index_of(&self, w: &Word) -> Option<usize> {
        (w.len() <= self.max_len).then(|| w.ball_index(self.alphabet()))
    }

    /// Row range of the sphere of radius `n`.
    pub fn sphere(&self, n: usize) -> Range<usize> {
        let a = self.alphabet();
        let start = if n == 0 { 0 } else { a.ball_size(n - 1) };
        start..start + a.sphere_size(n)
    }

    pub fn word_len(&self, i: usize) -> usize {
        self.shell_starts.partition_point(|&s| s <= i) - 1
    }

    pub fn element(&self, i: usize) -> GroupElement {
        let d = self.dim;
        let mut off = i * self.rep_stride;
        let powers = (1..d)
            .map(|k| {
                let n = binomial(d, k);
                let size = self.block_sizes[k - 1];
                let m = DMatrix::from_column_slice(n, n, &self.reps[off..off + size]);
                off += size;
                ScaledMatrix {
                    log_scale: self.scales[i * (d - 1) + k - 1],
                    m,
                }
            })
            .collect();
        GroupElement::from_parts(d, powers)
    }

    /// Group element of any word, from the table when it is short enough.
    pub fn element_of(&self, w: &Word) -> GroupElement {
        match self.index_of(w) {
            Some(i) => self.element(i),
            None => self.preset.evaluate(w),
        }
    }

    pub fn mu_slice(&self, i: usize) -> &[f64] {
        &self.mu[i * self.dim..(i + 1) * self.dim]
    }

    pub fn mu(&self, i: usize) -> CartanVector {
        CartanVector::new(self.mu_slice(i).to_vec())
    }

    pub fn lambda_slice(&self, i: usize) -> &[f64] {
        &self.lam[i * self.dim..(i + 1) * self.dim]
    }

    pub fn lambda(&self, i: usize) -> CartanVector {
        CartanVector::new(self.lambda_slice(i).to_vec())
    }

    pub fn kappa_frame(&self, i: usize) -> Option<&[f64]> {
        let d2 = self.dim * self.dim;
        let s = &self.kappa[i * d2..(i + 1) * d2];
        (!s[0].is_nan()).then_some(s)
    }

    pub fn kappa(&self, i: usize) -> Option<Flag> {
        self.kappa_frame(i)
            .map(|s| Flag::from_frame_unchecked(DMatrix::from_column_slice(self.dim, self.dim, s)))
    }

    pub fn entry(&self, i: usize) -> OrbitEntry {
        OrbitEntry {
            word: self.word(i),
            element: self.element(i),
            mu: self.mu(i),
            lambda: self.lambda(i),
            kappa: self.kappa(i),
        }
    }

    /// CSV export: `word,word_len,mu_1..mu_d,lam_1..lam_d`, 17 significant digits.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        let d = self.dim;
        let mut header = vec!["word".to_string(), "word_len".to_string()];
        header.extend((1..=d).map(|i| format!("mu_{i}")));
        header.extend((1..=d).map(|i| format!("lam_{i}")));
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.len() {
            let w = self.word(i);
            write!(out, "{},{}", w, w.len())?;
            for x in self.mu_slice(i).iter().chain(self.lambda_slice(i)) {
                write!(out, ",{x:.16e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}
