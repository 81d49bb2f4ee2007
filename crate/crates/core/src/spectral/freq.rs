use std::cmp::Ordering;
use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// A vector over F2 of fixed length. Coordinate `i` (0-based) is stored in bit `i % 64` of word `i / 64`,
/// and is printed as the `i`-th character of the bitstring.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FreqVec {
    n: usize,
    words: Vec<u64>,
}

fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

impl FreqVec {
    pub fn zeros(n: usize) -> Self {
        FreqVec { n, words: vec![0; words_for(n)] }
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v.set(i, true);
        v
    }

    /// Builds from the low `n` bits of `index` (bit `i` is coordinate `i`).
    pub fn from_index(n: usize, index: u64) -> Self {
        let mut v = Self::zeros(n);
        if n > 0 {
            v.words[0] = if n >= 64 { index } else { index & ((1u64 << n) - 1) };
        }
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    pub fn parse(s: &str) -> Result<Self> {
        let mut v = Self::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                _ => return Err(Error::Json(format!("bad bit `{c}` in `{s}`"))),
            }
        }
        Ok(v)
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut v = Self::zeros(n);
        for w in v.words.iter_mut() {
            *w = rng.gen();
        }
        v.mask_tail();
        v
    }

    fn mask_tail(&mut self) {
        let r = self.n % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, b: bool) {
        let m = 1u64 << (i % 64);
        if b {
            self.words[i / 64] |= m;
        } else {
            self.words[i / 64] &= !m;
        }
    }

    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn weight(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Parity of the inner product over F2.
    pub fn dot(&self, other: &FreqVec) -> bool {
        debug_assert_eq!(self.n, other.n);
        let ones: u32 = self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones()).sum();
        ones & 1 == 1
    }

    pub fn xor(&self, other: &FreqVec) -> FreqVec {
        debug_assert_eq!(self.n, other.n);
        FreqVec { n: self.n, words: self.words.iter().zip(&other.words).map(|(a, b)| a ^ b).collect() }
    }

    pub fn xor_assign(&mut self, other: &FreqVec) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Low 64 coordinates as an integer; exact when `n <= 64`.
    pub fn to_index(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// First `len` coordinates.
    pub fn prefix(&self, len: usize) -> FreqVec {
        let mut v = FreqVec { n: len, words: self.words[..words_for(len)].to_vec() };
        v.mask_tail();
        v
    }

    /// Pads with zeros up to length `n`.
    pub fn extend_to(&self, n: usize) -> FreqVec {
        let mut v = Self::zeros(n);
        v.words[..self.words.len()].copy_from_slice(&self.words);
        v
    }

    pub fn to_bitstring(&self) -> String {
        (0..self.n).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }

    /// Sign of the character at `x`: `-1` when `<self, x>` is odd.
    pub fn chi(&self, x: &FreqVec) -> f64 {
        if self.dot(x) {
            -1.0
        } else {
            1.0
        }
    }
}

impl Ord for FreqVec {
    /// Lexicographic in coordinate order, coordinate 0 most significant.
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.words.iter().zip(&other.words) {
            let d = a ^ b;
            if d != 0 {
                let bit = d.trailing_zeros();
                return if (a >> bit) & 1 == 0 { Ordering::Less } else { Ordering::Greater };
            }
        }
        self.n.cmp(&other.n)
    }
}

impl PartialOrd for FreqVec {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for FreqVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FreqVec({})", self.to_bitstring())
    }
}

impl fmt::Display for FreqVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}


impl serde::Serialize for FreqVec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_bitstring())
    }
}

impl<'de> serde::Deserialize<'de> for FreqVec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        FreqVec::parse(&s).map_err(serde::de::Error::custom)
    }
}
