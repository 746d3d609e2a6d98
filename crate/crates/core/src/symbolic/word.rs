use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;
use std::fmt;

/// A finite digit string over `{0, …, b−1}`.
///
/// The base is not stored; operations that need it take it explicitly and
/// [`Word::check_base`] validates the digits against it.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<u8>);

const DIGITS: &[u8; 36] = b"0123456789abcdefghijklmnopqrstuvwxyz";

impl Word {
    pub fn new(digits: Vec<u8>) -> Self {
        Word(digits)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// `digit` repeated `len` times.
    pub fn repeat(digit: u8, len: usize) -> Self {
        Word(vec![digit; len])
    }

    /// Digits of `index` in base `b`, least significant first, padded to `len`.
    /// This is the enumeration order used throughout the crate.
    pub fn from_index(mut index: u64, b: u32, len: usize) -> Self {
        let mut d = Vec::with_capacity(len);
        for _ in 0..len {
            d.push((index % b as u64) as u8);
            index /= b as u64;
        }
        Word(d)
    }

    /// Parses a digit string such as `"10210"`; letters extend the digit set
    /// beyond 9.
    pub fn parse(s: &str, b: u32) -> Result<Self> {
        let digits = s
            .bytes()
            .map(|c| {
                DIGITS
                    .iter()
                    .position(|&d| d == c.to_ascii_lowercase())
                    .map(|v| v as u8)
                    .ok_or_else(|| Error::Parse(format!("bad digit `{}` in word `{s}`", c as char)))
            })
            .collect::<Result<Vec<u8>>>()?;
        let w = Word(digits);
        w.check_base(b)?;
        Ok(w)
    }

    pub fn check_base(&self, b: u32) -> Result<()> {
        match self.0.iter().find(|&&d| d as u32 >= b) {
            Some(d) => Err(invalid(format!("digit {d} not below base {b}"))),
            None => Ok(()),
        }
    }

    pub fn digits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<u8> {
        self.0.first().copied()
    }

    /// Concatenation `self · other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut d = Vec::with_capacity(self.len() + other.len());
        d.extend_from_slice(&self.0);
        d.extend_from_slice(&other.0);
        Word(d)
    }

    /// The length-`k` prefix.
    pub fn prefix(&self, k: usize) -> Word {
        Word(self.0[..k.min(self.len())].to_vec())
    }

    /// True when `self` is a prefix of `other`.
    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }

    /// Left endpoint of the base cell `I_w = [w(0), w(0) + b^{-|w|})`.
    pub fn cell_left(&self, b: u32) -> f64 {
        word_point(self, 0.0, b)
    }
}

/// Words serialize as their digit string.
impl serde::Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Word::parse(&s, DIGITS.len() as u32).map_err(serde::de::Error::custom)
    }
}

impl From<Vec<u8>> for Word {
    fn from(d: Vec<u8>) -> Self {
        Word(d)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &d in &self.0 {
            write!(f, "{}", DIGITS[d as usize] as char)?;
        }
        Ok(())
    }
}

/// `w(x) = (x + j_1 + j_2 b + … + j_n b^{n−1}) / b^n`, the point reached by
/// the inverse branch of `x ↦ bx mod 1` selected by `w`.
///
/// Evaluated by the contraction `τ_k = (τ_{k−1} + j_k) / b`, which never
/// forms the large integer numerator.
pub fn word_point<T: Scalar>(w: &Word, x: T, b: u32) -> T {
    let bf = T::of(b as f64);
    w.digits().iter().fold(x, |t, &d| (t + T::of(d as f64)) / bf)
}
