//! Free groups: reduced words, the Cayley tree, and truncated boundary words.
//!
//! Letters are encoded as `2i` for generator `i` and `2i + 1` for its inverse,
//! so inversion is `l ^ 1`. Externally generators print as `a, b, ...` and
//! inverses as `A, B, ...`.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Letter = u8;

pub const MAX_RANK: usize = 26;
/// Depth to which infinite words are truncated.
pub const BOUNDARY_DEPTH: usize = 64;

#[inline]
pub fn inverse_letter(l: Letter) -> Letter {
    l ^ 1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    rank: usize,
}

impl Alphabet {
    /// Rank one is allowed for cyclic subgroups; free Schottky presets use rank >= 2.
    pub fn new(rank: usize) -> Result<Alphabet> {
        if rank == 0 || rank > MAX_RANK {
            return Err(Error::Input(format!("rank {rank} outside 1..={MAX_RANK}")));
        }
        Ok(Alphabet { rank })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn letter_count(&self) -> usize {
        2 * self.rank
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> {
        0..(2 * self.rank) as Letter
    }

    pub fn symbol(l: Letter) -> char {
        let base = if l & 1 == 0 { b'a' } else { b'A' };
        (base + l / 2) as char
    }

    pub fn parse_letter(&self, c: char) -> Result<Letter> {
        let (idx, inv) = match c {
            'a'..='z' => (c as u8 - b'a', 0),
            'A'..='Z' => (c as u8 - b'A', 1),
            _ => return Err(Error::Input(format!("unknown symbol {c:?}"))),
        };
        if idx as usize >= self.rank {
            return Err(Error::Input(format!("symbol {c:?} outside rank {}", self.rank)));
        }
        Ok(2 * idx + inv)
    }

    /// Number of reduced words of length exactly `n`.
    pub fn sphere_size(&self, n: usize) -> usize {
        if n == 0 {
            1
        } else {
            let r = 2 * self.rank;
            r * (r - 1).pow(n as u32 - 1)
        }
    }

    pub fn ball_size(&self, n: usize) -> usize {
        (0..=n).map(|k| self.sphere_size(k)).sum()
    }
}

/// A reduced word.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn identity() -> Word {
        Word::default()
    }

    /// Freely reduces an arbitrary letter sequence.
    pub fn reduce(raw: impl IntoIterator<Item = Letter>) -> Word {
        let mut letters: Vec<Letter> = Vec::new();
        for l in raw {
            if letters.last() == Some(&inverse_letter(l)) {
                letters.pop();
            } else {
                letters.push(l);
            }
        }
        Word { letters }
    }

    /// Parses `a`, `A` (inverse), and also `a⁻¹` or `a^-1`; whitespace is ignored.
    pub fn parse(s: &str, alphabet: &Alphabet) -> Result<Word> {
        let mut raw = Vec::new();
        let mut chars = s.chars().peekable();
        while let Some(c) = chars.next() {
            if c.is_whitespace() {
                continue;
            }
            let mut l = alphabet.parse_letter(c)?;
            let rest: String = chars.clone().take(3).collect();
            if rest.starts_with("⁻¹") {
                chars.next();
                chars.next();
                l = inverse_letter(l);
            } else if rest.starts_with("^-1") {
                chars.nth(2);
                l = inverse_letter(l);
            }
            raw.push(l);
        }
        Ok(Word::reduce(raw))
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word {
            letters: self.letters.iter().rev().map(|&l| inverse_letter(l)).collect(),
        }
    }

    pub fn mul(&self, rhs: &Word) -> Word {
        Word::reduce(self.letters.iter().chain(rhs.letters.iter()).copied())
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word {
            letters: self.letters[..n].to_vec(),
        }
    }

    pub fn suffix_from(&self, n: usize) -> Word {
        Word {
            letters: self.letters[n..].to_vec(),
        }
    }

    /// Appends a letter; the caller guarantees the result stays reduced.
    pub fn pushed(&self, l: Letter) -> Word {
        let mut letters = self.letters.clone();
        letters.push(l);
        Word { letters }
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.letters.first(), self.letters.last()) {
            (Some(&a), Some(&b)) => self.letters.len() == 1 || a != inverse_letter(b),
            _ => true,
        }
    }

    /// Splits `w = u c u^-1` with `c` cyclically reduced; returns `(u, c)`.
    pub fn cyclic_core(&self) -> (Word, Word) {
        let l = &self.letters;
        let mut k = 0;
        while 2 * k + 1 < l.len() && l[k] == inverse_letter(l[l.len() - 1 - k]) {
            k += 1;
        }
        (
            Word { letters: l[..k].to_vec() },
            Word { letters: l[k..l.len() - k].to_vec() },
        )
    }

    /// Position of this word in the length-lexicographic enumeration of the
    /// ball, given the alphabet size.
    pub fn ball_index(&self, alphabet: &Alphabet) -> usize {
        let n = self.len();
        let offset = alphabet.ball_size(n.saturating_sub(1)) * usize::from(n > 0);
        offset + self.sphere_index(alphabet)
    }

    fn sphere_index(&self, alphabet: &Alphabet) -> usize {
        let base = alphabet.letter_count() - 1;
        let mut idx = 0usize;
        for (j, &l) in self.letters.iter().enumerate() {
            let digit = if j == 0 {
                l as usize
            } else {
                let forbidden = inverse_letter(self.letters[j - 1]);
                l as usize - usize::from(l > forbidden)
            };
            idx = if j == 0 { digit } else { idx * base + digit };
        }
        idx
    }

    /// Inverse of [`Word::ball_index`].
    pub fn from_ball_index(mut index: usize, alphabet: &Alphabet) -> Word {
        let mut n = 0;
        while index >= alphabet.sphere_size(n) {
            index -= alphabet.sphere_size(n);
            n += 1;
        }
        if n == 0 {
            return Word::identity();
        }
        let base = alphabet.letter_count() - 1;
        let mut digits = vec![0usize; n];
        for j in (1..n).rev() {
            digits[j] = index % base;
            index /= base;
        }
        digits[0] = index;
        let mut letters = Vec::with_capacity(n);
        for (j, &dg) in digits.iter().enumerate() {
            let l = if j == 0 {
                dg as Letter
            } else {
                let forbidden = inverse_letter(letters[j - 1]);
                let l = dg as Letter;
                if l >= forbidden {
                    l + 1
                } else {
                    l
                }
            };
            letters.push(l);
        }
        Word { letters }
    }

    pub fn random(alphabet: &Alphabet, len: usize, rng: &mut impl Rng) -> Word {
        let mut letters: Vec<Letter> = Vec::with_capacity(len);
        while letters.len() < len {
            let l = rng.random_range(0..alphabet.letter_count()) as Letter;
            if letters.last() != Some(&inverse_letter(l)) {
                letters.push(l);
            }
        }
        Word { letters }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        for &l in &self.letters {
            write!(f, "{}", Alphabet::symbol(l))?;
        }
        Ok(())
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        if s == "e" {
            return Ok(Word::identity());
        }
        Word::parse(&s, &Alphabet::new(MAX_RANK).unwrap()).map_err(serde::de::Error::custom)
    }
}

/// A point of the boundary of the free group, stored as a reduced prefix of
/// its infinite word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryWord {
    prefix: Word,
}

impl BoundaryWord {
    pub fn new(prefix: Word) -> BoundaryWord {
        BoundaryWord { prefix }
    }

    /// The attracting point `w^infinity` of a cyclically reduced word.
    pub fn periodic(w: &Word, depth: usize) -> Result<BoundaryWord> {
        if w.is_empty() || !w.is_cyclically_reduced() {
            return Err(Error::Input("periodic boundary word needs a cyclically reduced word".into()));
        }
        let letters = w.letters().iter().cycle().take(depth).copied();
        Ok(BoundaryWord {
            prefix: Word::reduce(letters),
        })
    }

    pub fn random(alphabet: &Alphabet, depth: usize, rng: &mut impl Rng) -> BoundaryWord {
        BoundaryWord {
            prefix: Word::random(alphabet, depth, rng),
        }
    }

    /// Random boundary point agreeing with `head` on exactly its letters and
    /// then diverging (when `head` is a proper prefix of the result).
    pub fn random_extension(head: &Word, alphabet: &Alphabet, depth: usize, rng: &mut impl Rng) -> BoundaryWord {
        let mut letters = head.letters().to_vec();
        while letters.len() < depth {
            let l = rng.random_range(0..alphabet.letter_count()) as Letter;
            if letters.last() != Some(&inverse_letter(l)) {
                letters.push(l);
            }
        }
        BoundaryWord {
            prefix: Word { letters },
        }
    }

    pub fn prefix(&self) -> &Word {
        &self.prefix
    }

    pub fn depth(&self) -> usize {
        self.prefix.len()
    }

    pub fn truncated(&self, n: usize) -> Word {
        self.prefix.prefix(n.min(self.depth()))
    }

    /// `g x`, reduced and truncated to the available depth.
    pub fn translate(&self, g: &Word) -> BoundaryWord {
        let w = g.mul(&self.prefix);
        // Cancellation consumes letters of the prefix; what remains is exact.
        let exact = self.depth() + g.len() - 2 * common_cancel(g, &self.prefix);
        BoundaryWord {
            prefix: w.prefix(exact.min(w.len())),
        }
    }
}

fn common_cancel(g: &Word, x: &Word) -> usize {
    g.letters()
        .iter()
        .rev()
        .zip(x.letters())
        .take_while(|(&a, &b)| a == inverse_letter(b))
        .count()
}

fn common_prefix(a: &[Letter], b: &[Letter]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// Gromov product `(x | y)_e` in the Cayley tree: the length of the longest
/// common prefix. For boundary words it is capped by the truncation depth.
pub fn word_gromov_product(x: &[Letter], y: &[Letter]) -> usize {
    common_prefix(x, y)
}

/// Word distance.
pub fn word_distance(g1: &Word, g2: &Word) -> usize {
    g1.inverse().mul(g2).len()
}

/// Vertices of the tree geodesic from `g1` to `g2`.
pub fn geodesic_segment(g1: &Word, g2: &Word) -> Vec<Word> {
    let h = g1.inverse().mul(g2);
    (0..=h.len()).map(|i| g1.mul(&h.prefix(i))).collect()
}

/// Whether the geodesic ray from `g1` to the boundary point `x` passes within
/// word distance `r` of `g2`. Exact when `x` is resolved beyond `g1^-1 g2`.
pub fn word_shadow_membership(x: &BoundaryWord, g1: &Word, g2: &Word, r: usize) -> bool {
    let y = x.translate(&g1.inverse());
    let h = g1.inverse().mul(g2);
    let cp = common_prefix(y.prefix().letters(), h.letters());
    h.len() - cp <= r
}

/// Nearest-point projection of `g` onto the segment `[x, y]`: the median of
/// the three vertices.
pub fn projection_to_geodesic(g: &Word, x: &Word, y: &Word) -> Word {
    let xi = x.inverse();
    let u = xi.mul(y);
    let v = xi.mul(g);
    let cp = common_prefix(u.letters(), v.letters());
    x.mul(&u.prefix(cp))
}

/// Largest distance from a vertex of one side of the geodesic triangle
/// `(a, b, c)` to the union of the other two sides. Zero in a tree.
pub fn thin_triangle_defect(a: &Word, b: &Word, c: &Word) -> usize {
    let sides = [
        geodesic_segment(a, b),
        geodesic_segment(b, c),
        geodesic_segment(c, a),
    ];
    let mut worst = 0;
    for i in 0..3 {
        for p in &sides[i] {
            let d = sides
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .flat_map(|(_, s)| s.iter())
                .map(|q| word_distance(p, q))
                .min()
                .unwrap_or(0);
            worst = worst.max(d);
        }
    }
    worst
}

/// All reduced words of length at most `n`, in length-lexicographic order.
pub fn enumerate_words(alphabet: &Alphabet, n: usize) -> Vec<Word> {
    let mut out = vec![Word::identity()];
    let mut start = 0;
    for _ in 0..n {
        let end = out.len();
        for i in start..end {
            let w = out[i].clone();
            for l in alphabet.letters() {
                if w.letters.last() != Some(&inverse_letter(l)) {
                    out.push(w.pushed(l));
                }
            }
        }
        start = end;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Alphabet {
        Alphabet::new(2).unwrap()
    }

    fn w(s: &str) -> Word {
        Word::parse(s, &ab()).unwrap()
    }

    #[test]
    fn parse_and_reduce() {
        assert_eq!(w("a a⁻¹ b"), w("b"));
        assert_eq!(w("aAb"), w("b"));
        assert_eq!(w("a^-1"), w("A"));
        assert_eq!(w("abBA"), Word::identity());
        assert!(Word::parse("c", &ab()).is_err());
        assert_eq!(w("abAB").to_string(), "abAB");
    }

    #[test]
    fn ball_counts_and_indexing() {
        let words = enumerate_words(&ab(), 5);
        assert_eq!(words.len(), ab().ball_size(5));
        assert_eq!(ab().sphere_size(3), 36);
        for (i, word) in words.iter().enumerate() {
            assert_eq!(word.ball_index(&ab()), i, "{word}");
            assert_eq!(&Word::from_ball_index(i, &ab()), word);
        }
        assert!(words.windows(2).all(|p| (p[0].len(), &p[0]) < (p[1].len(), &p[1])));
    }

    #[test]
    fn gromov_product_is_common_prefix() {
        assert_eq!(word_gromov_product(w("abab").letters(), w("abA").letters()), 2);
        assert_eq!(word_gromov_product(w("a").letters(), w("b").letters()), 0);
    }

    #[test]
    fn geodesic_backs_up_then_descends() {
        let seg = geodesic_segment(&w("ab"), &w("aB"));
        let names: Vec<String> = seg.iter().map(|x| x.to_string()).collect();
        assert_eq!(names, ["ab", "a", "aB"]);
    }

    #[test]
    fn shadow_membership_examples() {
        let x = BoundaryWord::new(w("abab"));
        assert!(word_shadow_membership(&x, &Word::identity(), &w("ab"), 0));
        assert!(!word_shadow_membership(&x, &Word::identity(), &w("aB"), 0));
        assert!(word_shadow_membership(&x, &Word::identity(), &w("aB"), 1));
    }

    #[test]
    fn projection_onto_axis() {
        let p = projection_to_geodesic(&w("ba"), &w("AAA"), &w("aaa"));
        assert_eq!(p, Word::identity());
        let q = projection_to_geodesic(&w("aab"), &w("AAA"), &w("aaa"));
        assert_eq!(q, w("aa"));
    }

    #[test]
    fn translate_boundary_word() {
        let x = BoundaryWord::new(w("abab"));
        let y = x.translate(&w("bA"));
        assert_eq!(y.prefix(), &w("bbab"));
        let z = x.translate(&w("BA"));
        assert_eq!(z.prefix(), &w("ab"));
        assert_eq!(z.depth(), 2);
    }
}
