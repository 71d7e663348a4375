//! The truncated tensor algebra over `R^d`.
//!
//! Coefficients are stored in canonical word order: by length first, then
//! lexicographically on letters. Letters are 1-based, so over an alphabet of
//! size `d` a word is a sequence drawn from `1..=d`, and the empty word has
//! index 0.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

/// Number of words of length at most `depth` over an alphabet of `dim` letters.
pub fn dimension(dim: usize, depth: usize) -> usize {
    assert!(dim >= 1, "alphabet must be non-empty");
    if dim == 1 {
        depth + 1
    } else {
        (dim.pow(depth as u32 + 1) - 1) / (dim - 1)
    }
}

/// Index of the first word of length `level` in canonical order.
pub fn level_offset(dim: usize, level: usize) -> usize {
    if level == 0 {
        0
    } else {
        dimension(dim, level - 1)
    }
}

/// A word `e_{i_1 ... i_n}` with 1-based letters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn new(letters: &[u8]) -> Self {
        Word(letters.to_vec())
    }

    pub fn letter(letter: u8) -> Self {
        Word(vec![letter])
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks every letter against the alphabet `1..=dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self.0.iter().find(|&&l| l == 0 || l as usize > dim) {
            Some(l) => Err(Error::precondition(alloc::format!(
                "letter {l} outside alphabet 1..={dim}"
            ))),
            None => Ok(()),
        }
    }

    /// Position of this word in canonical order.
    pub fn index(&self, dim: usize) -> usize {
        let within = self
            .0
            .iter()
            .fold(0usize, |acc, &l| acc * dim + (l as usize - 1));
        level_offset(dim, self.len()) + within
    }

    /// Inverse of [`Word::index`].
    pub fn from_index(dim: usize, mut index: usize) -> Self {
        let mut level = 0;
        while index >= level_offset(dim, level + 1) {
            level += 1;
        }
        index -= level_offset(dim, level);
        let mut letters = vec![0u8; level];
        for slot in letters.iter_mut().rev() {
            *slot = (index % dim) as u8 + 1;
            index /= dim;
        }
        Word(letters)
    }

    /// All words of length at most `depth`, in canonical order.
    pub fn all(dim: usize, depth: usize) -> Vec<Word> {
        (0..dimension(dim, depth))
            .map(|i| Word::from_index(dim, i))
            .collect()
    }

    fn split_last(&self) -> Option<(Word, u8)> {
        self.0
            .split_last()
            .map(|(&last, rest)| (Word(rest.to_vec()), last))
    }

    fn push(mut self, letter: u8) -> Word {
        self.0.push(letter);
        self
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("()");
        }
        f.write_str("(")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str(")")
    }
}

/// Formal integer combination of words, as produced by the shuffle product.
pub type WordSum = BTreeMap<Word, u64>;

/// Shuffle product of two words: all interleavings that keep the relative
/// order of each word's letters, counted with multiplicity.
pub fn shuffle_product(u: &Word, v: &Word) -> WordSum {
    let mut out = WordSum::new();
    if u.is_empty() {
        out.insert(v.clone(), 1);
        return out;
    }
    if v.is_empty() {
        out.insert(u.clone(), 1);
        return out;
    }
    let (u_head, u_last) = u.split_last().unwrap();
    let (v_head, v_last) = v.split_last().unwrap();
    for (w, n) in shuffle_product(&u_head, v) {
        *out.entry(w.push(u_last)).or_insert(0) += n;
    }
    for (w, n) in shuffle_product(u, &v_head) {
        *out.entry(w.push(v_last)).or_insert(0) += n;
    }
    out
}

/// An element of `T^D(R^d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedTensor {
    dim: usize,
    depth: usize,
    coeffs: Vec<f64>,
}

impl TruncatedTensor {
    pub fn zero(dim: usize, depth: usize) -> Self {
        TruncatedTensor {
            dim,
            depth,
            coeffs: vec![0.0; dimension(dim, depth)],
        }
    }

    /// The unit `1 = e_∅`.
    pub fn unit(dim: usize, depth: usize) -> Self {
        let mut t = Self::zero(dim, depth);
        t.coeffs[0] = 1.0;
        t
    }

    pub fn from_coeffs(dim: usize, depth: usize, coeffs: Vec<f64>) -> Result<Self> {
        let expected = dimension(dim, depth);
        if coeffs.len() != expected {
            return Err(Error::shape(
                alloc::format!("{expected} coefficients"),
                coeffs.len(),
            ));
        }
        Ok(TruncatedTensor { dim, depth, coeffs })
    }

    /// Linear combination `Σ c_w e_w`; words longer than `depth` are dropped.
    pub fn from_words<'a>(
        dim: usize,
        depth: usize,
        terms: impl IntoIterator<Item = (&'a Word, f64)>,
    ) -> Result<Self> {
        let mut t = Self::zero(dim, depth);
        for (w, c) in terms {
            w.validate(dim)?;
            if w.len() <= depth {
                t.coeffs[w.index(dim)] += c;
            }
        }
        Ok(t)
    }

    /// The basis element `e_w`.
    pub fn basis(dim: usize, depth: usize, word: &Word) -> Result<Self> {
        Self::from_words(dim, depth, [(word, 1.0)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn get(&self, word: &Word) -> f64 {
        if word.len() > self.depth {
            0.0
        } else {
            self.coeffs[word.index(self.dim)]
        }
    }

    /// Coefficients of the words of length exactly `level`.
    pub fn level(&self, level: usize) -> &[f64] {
        let lo = level_offset(self.dim, level);
        &self.coeffs[lo..lo + self.dim.pow(level as u32)]
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.depth != other.depth {
            return Err(Error::shape(
                alloc::format!("T^{}(R^{})", self.depth, self.dim),
                alloc::format!("T^{}(R^{})", other.depth, other.dim),
            ));
        }
        Ok(())
    }

    /// Truncated tensor (concatenation) product `self ⊗ other`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = Self::zero(self.dim, self.depth);
        mul_into(self.dim, self.depth, &self.coeffs, &other.coeffs, &mut out.coeffs);
        Ok(out)
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Bilinear extension of the word shuffle, truncated at `depth`.
    pub fn shuffle(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let words = Word::all(self.dim, self.depth);
        let mut out = Self::zero(self.dim, self.depth);
        for (u, &a) in words.iter().zip(&self.coeffs) {
            if a == 0.0 {
                continue;
            }
            for (v, &b) in words.iter().zip(&other.coeffs) {
                if b == 0.0 || u.len() + v.len() > self.depth {
                    continue;
                }
                for (w, n) in shuffle_product(u, v) {
                    out.coeffs[w.index(self.dim)] += a * b * n as f64;
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Self {
        TruncatedTensor {
            dim: self.dim,
            depth: self.depth,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(TruncatedTensor {
            dim: self.dim,
            depth: self.depth,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Euclidean norm of the level-`level` component.
    pub fn level_norm(&self, level: usize) -> f64 {
        libm::sqrt(self.level(level).iter().map(|c| c * c).sum())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max)
    }
}

/// `out = a ⊗ b` on flat coefficient slices; `out` is overwritten.
pub(crate) fn mul_into(dim: usize, depth: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|c| *c = 0.0);
    for n in 0..=depth {
        let out_lo = level_offset(dim, n);
        for i in 0..=n {
            let j = n - i;
            let a_lo = level_offset(dim, i);
            let b_lo = level_offset(dim, j);
            let a_len = dim.pow(i as u32);
            let b_len = dim.pow(j as u32);
            for u in 0..a_len {
                let au = a[a_lo + u];
                if au == 0.0 {
                    continue;
                }
                let row = &mut out[out_lo + u * b_len..out_lo + (u + 1) * b_len];
                for (o, &bv) in row.iter_mut().zip(&b[b_lo..b_lo + b_len]) {
                    *o += au * bv;
                }
            }
        }
    }
}

/// Writes `exp(v)` truncated at `depth` into `out`: level `k` holds
/// `v^{⊗k} / k!`.
pub(crate) fn exp_into(v: &[f64], depth: usize, out: &mut [f64]) {
    let dim = v.len();
    out[0] = 1.0;
    for k in 1..=depth {
        let prev_lo = level_offset(dim, k - 1);
        let prev_len = dim.pow(k as u32 - 1);
        let lo = level_offset(dim, k);
        let inv_k = 1.0 / k as f64;
        for u in 0..prev_len {
            let pu = out[prev_lo + u] * inv_k;
            for (i, &vi) in v.iter().enumerate() {
                out[lo + u * dim + i] = pu * vi;
            }
        }
    }
}

/// In-place `sig ← sig ⊗ seg`, where `seg` has unit constant term. Levels are
/// updated from the top down so lower levels are still the old values when read.
pub(crate) fn mul_unipotent_assign(dim: usize, depth: usize, sig: &mut [f64], seg: &[f64]) {
    for n in (1..=depth).rev() {
        let out_lo = level_offset(dim, n);
        for i in 0..n {
            let j = n - i;
            let a_lo = level_offset(dim, i);
            let b_lo = level_offset(dim, j);
            let a_len = dim.pow(i as u32);
            let b_len = dim.pow(j as u32);
            for u in 0..a_len {
                let au = sig[a_lo + u];
                for w in 0..b_len {
                    sig[out_lo + u * b_len + w] += au * seg[b_lo + w];
                }
            }
        }
    }
}

/// `exp(v)` in `T^D(R^d)` with `d = v.len()`.
pub fn exp_level1(v: &[f64], depth: usize) -> TruncatedTensor {
    let mut t = TruncatedTensor::zero(v.len(), depth);
    exp_into(v, depth, &mut t.coeffs);
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(letters: &[u8]) -> Word {
        Word::new(letters)
    }

    #[test]
    fn dimension_values() {
        assert_eq!(dimension(2, 3), 15);
        assert_eq!(dimension(1, 5), 6);
        assert_eq!(dimension(3, 2), 13);
        assert_eq!(dimension(3, 0), 1);
    }

    #[test]
    fn canonical_order_is_length_then_lex() {
        let words = Word::all(2, 2);
        let expected = [
            w(&[]),
            w(&[1]),
            w(&[2]),
            w(&[1, 1]),
            w(&[1, 2]),
            w(&[2, 1]),
            w(&[2, 2]),
        ];
        assert_eq!(words, expected);
        for (i, word) in words.iter().enumerate() {
            assert_eq!(word.index(2), i);
        }
    }

    #[test]
    fn invalid_letters_rejected() {
        assert!(w(&[0]).validate(2).is_err());
        assert!(w(&[3]).validate(2).is_err());
        assert!(w(&[1, 2]).validate(2).is_ok());
    }

    #[test]
    fn unit_is_left_identity() {
        let b = TruncatedTensor::from_coeffs(2, 2, (0..7).map(|i| i as f64 * 0.5).collect())
            .unwrap();
        let u = TruncatedTensor::unit(2, 2);
        assert_eq!(u.concat(&b).unwrap(), b);
        assert_eq!(b.concat(&u).unwrap(), b);
    }

    #[test]
    fn single_letter_product() {
        let e1 = TruncatedTensor::basis(2, 3, &w(&[1])).unwrap();
        let e2 = TruncatedTensor::basis(2, 3, &w(&[2])).unwrap();
        let p = e1.concat(&e2).unwrap();
        let expected = TruncatedTensor::basis(2, 3, &w(&[1, 2])).unwrap();
        assert_eq!(p, expected);
    }

    #[test]
    fn one_plus_e1_squared() {
        let a = TruncatedTensor::from_coeffs(1, 2, vec![1.0, 1.0, 0.0]).unwrap();
        let p = a.concat(&a).unwrap();
        assert_eq!(p.coeffs(), &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = TruncatedTensor::unit(2, 2);
        let b = TruncatedTensor::unit(2, 3);
        assert!(matches!(a.concat(&b), Err(Error::Shape { .. })));
        assert!(matches!(a.inner(&b), Err(Error::Shape { .. })));
    }

    #[test]
    fn shuffle_examples() {
        let s = shuffle_product(&w(&[1]), &w(&[2]));
        assert_eq!(s.len(), 2);
        assert_eq!(s[&w(&[1, 2])], 1);
        assert_eq!(s[&w(&[2, 1])], 1);

        let s = shuffle_product(&Word::empty(), &w(&[1, 2]));
        assert_eq!(s.into_iter().collect::<Vec<_>>(), vec![(w(&[1, 2]), 1)]);

        let s = shuffle_product(&w(&[1, 2]), &w(&[1]));
        assert_eq!(s.len(), 2);
        assert_eq!(s[&w(&[1, 2, 1])], 1);
        assert_eq!(s[&w(&[1, 1, 2])], 2);
    }

    #[test]
    fn inner_product_examples() {
        let u = TruncatedTensor::unit(2, 2);
        assert_eq!(u.inner(&u).unwrap(), 1.0);
        let e1 = TruncatedTensor::basis(2, 2, &w(&[1])).unwrap();
        let e2 = TruncatedTensor::basis(2, 2, &w(&[2])).unwrap();
        assert_eq!(e1.inner(&e2).unwrap(), 0.0);
        let a = TruncatedTensor::from_words(1, 1, [(&w(&[]), 1.0), (&w(&[1]), 2.0)]).unwrap();
        let b = TruncatedTensor::from_words(1, 1, [(&w(&[]), 3.0), (&w(&[1]), 1.0)]).unwrap();
        assert_eq!(a.inner(&b).unwrap(), 5.0);
    }

    #[test]
    fn exp_examples() {
        assert_eq!(exp_level1(&[0.0, 0.0], 3), TruncatedTensor::unit(2, 3));

        let e = exp_level1(&[1.0, 1.0], 2);
        assert_eq!(e.level(1), &[1.0, 1.0]);
        assert_eq!(e.level(2), &[0.5; 4]);

        let e = exp_level1(&[2.0], 3);
        let expected = [1.0, 2.0, 2.0, 4.0 / 3.0];
        for (a, b) in e.coeffs().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn in_place_product_matches_allocating_product() {
        let sig = exp_level1(&[0.3, -1.2], 3);
        let seg = exp_level1(&[0.1, 0.7], 3);
        let expected = sig.concat(&seg).unwrap();
        let mut flat = sig.coeffs().to_vec();
        mul_unipotent_assign(2, 3, &mut flat, seg.coeffs());
        for (a, b) in flat.iter().zip(expected.coeffs()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn word_index_roundtrip() {
        for dim in 1..=3 {
            for i in 0..dimension(dim, 4) {
                assert_eq!(Word::from_index(dim, i).index(dim), i);
            }
        }
    }
}
