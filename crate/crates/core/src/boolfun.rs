//! Boolean functions as truth tables.
//!
//! Assignment `a` in `0..2^n` gives `x_i` the bit `(a >> (n - i)) & 1`, so `x_1`
//! is the most significant bit. Bit `a` of the table holds `f(a)`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_VARS: u32 = 24;

/// A literal `x_i` or its negation `~x_i`. Variables are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub var: u32,
    pub neg: bool,
}

impl Literal {
    pub fn pos(var: u32) -> Self {
        Literal { var, neg: false }
    }

    pub fn neg(var: u32) -> Self {
        Literal { var, neg: true }
    }

    pub fn negate(self) -> Self {
        Literal { var: self.var, neg: !self.neg }
    }

    /// Index in the label alphabet `x1, ~x1, x2, ~x2, ...`.
    pub fn code(self) -> usize {
        2 * (self.var as usize - 1) + self.neg as usize
    }

    pub fn from_code(code: usize) -> Self {
        Literal { var: (code / 2) as u32 + 1, neg: code % 2 == 1 }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.neg {
            write!(f, "~x{}", self.var)
        } else {
            write!(f, "x{}", self.var)
        }
    }
}

impl FromStr for Literal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (neg, rest) = match s.strip_prefix('~') {
            Some(r) => (true, r),
            None => (false, s),
        };
        let digits = rest
            .strip_prefix('x')
            .ok_or_else(|| Error::Input(format!("bad literal `{s}`")))?;
        let var: u32 = digits
            .parse()
            .map_err(|_| Error::Input(format!("bad literal `{s}`")))?;
        if var == 0 || var > MAX_VARS {
            return Err(Error::Input(format!("variable index out of range in `{s}`")));
        }
        Ok(Literal { var, neg })
    }
}

/// Truth table of a single literal as a packed word, for `n <= 6`.
pub fn literal_word(n: u32, lit: Literal) -> u64 {
    debug_assert!(n <= 6 && lit.var >= 1 && lit.var <= n);
    let shift = n - lit.var;
    let mut w = 0u64;
    for a in 0..(1u64 << n) {
        if (a >> shift) & 1 == 1 {
            w |= 1 << a;
        }
    }
    if lit.neg {
        !w & full_word(n)
    } else {
        w
    }
}

/// All-ones table for `n <= 6` variables.
pub fn full_word(n: u32) -> u64 {
    if n >= 6 {
        u64::MAX
    } else {
        (1u64 << (1u32 << n)) - 1
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct BoolFunc {
    n: u32,
    words: Vec<u64>,
}

fn word_count(n: u32) -> usize {
    if n <= 6 {
        1
    } else {
        1 << (n - 6)
    }
}

fn check_n(n: u32) -> Result<()> {
    if n == 0 || n > MAX_VARS {
        return Err(Error::Input(format!("variable count {n} outside 1..={MAX_VARS}")));
    }
    Ok(())
}

impl BoolFunc {
    pub fn constant(n: u32, value: bool) -> Result<Self> {
        check_n(n)?;
        let mut f = BoolFunc { n, words: vec![0; word_count(n)] };
        if value {
            f.words.iter_mut().for_each(|w| *w = u64::MAX);
            f.mask();
        }
        Ok(f)
    }

    pub fn literal(n: u32, lit: Literal) -> Result<Self> {
        check_n(n)?;
        if lit.var == 0 || lit.var > n {
            return Err(Error::Input(format!("{lit} is not a variable of an {n}-ary function")));
        }
        Ok(Self::from_fn(n, |a| ((a >> (n - lit.var)) & 1 == 1) != lit.neg))
    }

    pub fn var(n: u32, i: u32) -> Result<Self> {
        Self::literal(n, Literal::pos(i))
    }

    /// Builds the table from a predicate on assignment indices. `n` must be valid.
    pub fn from_fn(n: u32, mut f: impl FnMut(u64) -> bool) -> Self {
        let mut words = vec![0u64; word_count(n)];
        for a in 0..(1u64 << n) {
            if f(a) {
                words[(a >> 6) as usize] |= 1 << (a & 63);
            }
        }
        BoolFunc { n, words }
    }

    /// Packed table for `n <= 6`. Bits above `2^n` are cleared.
    pub fn from_word(n: u32, word: u64) -> Result<Self> {
        check_n(n)?;
        if n > 6 {
            return Err(Error::Input("packed words hold at most 6 variables".into()));
        }
        Ok(BoolFunc { n, words: vec![word & full_word(n)] })
    }

    pub fn as_word(&self) -> Option<u64> {
        (self.n <= 6).then(|| self.words[0])
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    fn mask(&mut self) {
        if self.n < 6 {
            self.words[0] &= full_word(self.n);
        }
    }

    pub fn get(&self, a: u64) -> bool {
        (self.words[(a >> 6) as usize] >> (a & 63)) & 1 == 1
    }

    /// `assignment[i]` is the value of `x_{i+1}`.
    pub fn evaluate(&self, assignment: &[bool]) -> Result<bool> {
        if assignment.len() != self.n as usize {
            return Err(Error::Input(format!(
                "assignment has {} bits, function has {} variables",
                assignment.len(),
                self.n
            )));
        }
        let a = assignment.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
        Ok(self.get(a))
    }

    pub fn negate(&self) -> Self {
        let mut g = BoolFunc { n: self.n, words: self.words.iter().map(|w| !w).collect() };
        g.mask();
        g
    }

    fn zip(&self, other: &Self, op: impl Fn(u64, u64) -> u64) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::Input(format!("arity mismatch {} vs {}", self.n, other.n)));
        }
        let words = self.words.iter().zip(&other.words).map(|(a, b)| op(*a, *b)).collect();
        Ok(BoolFunc { n: self.n, words })
    }

    pub fn and(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a & b)
    }

    pub fn or(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a | b)
    }

    pub fn is_const(&self, value: bool) -> bool {
        let full = BoolFunc::constant(self.n, true).expect("valid n");
        if value {
            *self == full
        } else {
            self.words.iter().all(|&w| w == 0)
        }
    }

    pub fn depends_on(&self, i: u32) -> bool {
        if i == 0 || i > self.n {
            return false;
        }
        let bit = 1u64 << (self.n - i);
        (0..(1u64 << self.n)).any(|a| a & bit == 0 && self.get(a) != self.get(a | bit))
    }

    pub fn essential_vars(&self) -> BTreeSet<u32> {
        (1..=self.n).filter(|&i| self.depends_on(i)).collect()
    }

    /// Same function seen as a function of `n2 >= n` variables; the new variables
    /// are appended after `x_n` and are inessential.
    pub fn extend(&self, n2: u32) -> Result<Self> {
        check_n(n2)?;
        if n2 < self.n {
            return Err(Error::Input("cannot shrink a function".into()));
        }
        let d = n2 - self.n;
        Ok(BoolFunc::from_fn(n2, |a| self.get(a >> d)))
    }

    pub fn to_hex(&self) -> String {
        let bits = 1u64 << self.n;
        let digits = (bits / 4).max(1) as usize;
        let mut s = String::with_capacity(digits);
        for j in (0..digits).rev() {
            let base = 4 * j as u64;
            let mut nib = 0u32;
            for b in 0..4 {
                if base + b < bits && self.get(base + b) {
                    nib |= 1 << b;
                }
            }
            s.push(std::char::from_digit(nib, 16).expect("nibble"));
        }
        s
    }
}

impl fmt::Display for BoolFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n:{}:{}", self.n, self.to_hex())
    }
}

impl FromStr for BoolFunc {
    type Err = Error;

    /// Parses `n:<count>:<hex>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Input(format!("bad function `{s}`, expected n:<count>:<hex>"));
        let mut parts = s.trim().splitn(3, ':');
        if parts.next() != Some("n") {
            return Err(bad());
        }
        let n: u32 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        check_n(n)?;
        let hex = parts.next().ok_or_else(bad)?;
        let bits = 1u64 << n;
        let digits = (bits / 4).max(1) as usize;
        if hex.len() != digits {
            return Err(Error::Input(format!(
                "function on {n} variables needs {digits} hex digits, got {}",
                hex.len()
            )));
        }
        let mut f = BoolFunc { n, words: vec![0; word_count(n)] };
        for (k, ch) in hex.chars().enumerate() {
            let nib = ch.to_digit(16).filter(|_| !ch.is_ascii_uppercase()).ok_or_else(bad)?;
            let base = 4 * (digits - 1 - k) as u64;
            for b in 0..4 {
                if nib >> b & 1 == 1 {
                    if base + b >= bits {
                        return Err(Error::Input(format!("`{s}` sets bits beyond 2^{n}")));
                    }
                    f.words[((base + b) >> 6) as usize] |= 1 << ((base + b) & 63);
                }
            }
        }
        Ok(f)
    }
}

impl Serialize for BoolFunc {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BoolFunc {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: u32, i: u32) -> BoolFunc {
        BoolFunc::var(n, i).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let t = BoolFunc::constant(2, true).unwrap();
        assert!(t.evaluate(&[false, true]).unwrap());
        assert!(x(2, 1).evaluate(&[true, false]).unwrap());
        let conj = x(2, 1).and(&x(2, 2)).unwrap();
        assert!(!conj.evaluate(&[true, false]).unwrap());
        assert!(conj.evaluate(&[true]).is_err());
    }

    #[test]
    fn essential_examples() {
        assert!(BoolFunc::constant(3, true).unwrap().essential_vars().is_empty());
        assert_eq!(x(3, 1).essential_vars(), BTreeSet::from([1]));
        let nx2 = BoolFunc::literal(2, Literal::neg(2)).unwrap();
        let f = x(2, 1).and(&x(2, 2)).unwrap().or(&x(2, 1).and(&nx2).unwrap()).unwrap();
        assert_eq!(f, x(2, 1));
        assert_eq!(f.essential_vars(), BTreeSet::from([1]));
    }

    #[test]
    fn negate_examples() {
        let t = BoolFunc::constant(2, true).unwrap();
        assert!(t.negate().is_const(false));
        assert_eq!(x(2, 1).negate(), BoolFunc::literal(2, Literal::neg(1)).unwrap());
        let lhs = x(2, 1).and(&x(2, 2)).unwrap().negate();
        let rhs = x(2, 1).negate().or(&x(2, 2).negate()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn negation_is_an_involution_up_to_three_vars() {
        for n in 1..=3u32 {
            for w in 0..(1u64 << (1 << n)) {
                let f = BoolFunc::from_word(n, w).unwrap();
                assert_eq!(f.negate().negate(), f);
                assert_ne!(f.negate(), f);
            }
        }
    }

    #[test]
    fn x1_is_the_most_significant_assignment_bit() {
        // x1 true exactly on the upper half of the assignments
        assert_eq!(x(2, 1).to_string(), "n:2:c");
        assert_eq!(x(2, 2).to_string(), "n:2:a");
        let f = x(3, 1).or(&x(3, 2).and(&x(3, 3)).unwrap()).unwrap();
        assert_eq!(f.as_word(), Some(0b1111_1000));
        assert_eq!(f.to_string(), "n:3:f8");
    }

    #[test]
    fn hex_round_trip() {
        for s in ["n:1:1", "n:1:2", "n:2:0", "n:3:f8", "n:7:0123456789abcdef0123456789abcdef"] {
            let f: BoolFunc = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
        }
        assert!("n:1:4".parse::<BoolFunc>().is_err());
        assert!("n:2:F".parse::<BoolFunc>().is_err());
        assert!("n:3:f".parse::<BoolFunc>().is_err());
        assert!("m:3:f8".parse::<BoolFunc>().is_err());
    }

    #[test]
    fn literal_words_match_tables() {
        for n in 1..=6u32 {
            for code in 0..(2 * n as usize) {
                let l = Literal::from_code(code);
                let f = BoolFunc::literal(n, l).unwrap();
                if n <= 6 {
                    assert_eq!(f.as_word(), Some(literal_word(n, l)));
                }
            }
        }
    }

    #[test]
    fn extend_keeps_function() {
        let f = x(2, 1).and(&x(2, 2)).unwrap();
        let g = f.extend(3).unwrap();
        assert_eq!(g, x(3, 1).and(&x(3, 2)).unwrap());
        assert!(!g.depends_on(3));
    }

    #[test]
    fn large_n_tables() {
        let f = x(10, 10).or(&x(10, 1)).unwrap();
        assert_eq!(f.essential_vars(), BTreeSet::from([1, 10]));
        assert_eq!(f.negate().negate(), f);
        let back: BoolFunc = f.to_string().parse().unwrap();
        assert_eq!(back, f);
    }
}
