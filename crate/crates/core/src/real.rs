//! Arbitrary-precision reals over `astro-float`, and first-order dual numbers.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops;

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_rational::BigRational;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

pub const DEFAULT_PRECISION: usize = 256;

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constants cache"));
}

fn with_consts<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

/// A binary floating-point number carrying its working precision in bits.
#[derive(Clone, Debug)]
pub struct Real {
    v: BigFloat,
    p: usize,
}

impl Real {
    pub fn from_f64(x: f64, p: usize) -> Real {
        Real { v: BigFloat::from_f64(x, p), p }
    }

    pub fn from_i64(x: i64, p: usize) -> Real {
        Real { v: BigFloat::from_i64(x, p), p }
    }

    pub fn zero(p: usize) -> Real {
        Real::from_i64(0, p)
    }

    pub fn one(p: usize) -> Real {
        Real::from_i64(1, p)
    }

    /// Parses a decimal literal such as `-12.5e-3`.
    pub fn parse(s: &str, p: usize) -> Result<Real> {
        let v = with_consts(|cc| BigFloat::parse(s, Radix::Dec, p, RM, cc));
        if v.is_nan() {
            return Err(Error::Input(format!("not a decimal number: `{s}`")));
        }
        Ok(Real { v, p })
    }

    pub fn from_rational(q: &BigRational, p: usize) -> Real {
        let num = Real::parse(&q.numer().to_string(), p + 64).expect("integer literal");
        let den = Real::parse(&q.denom().to_string(), p + 64).expect("integer literal");
        let mut r = &num / &den;
        r.set_precision(p);
        r
    }

    pub fn precision(&self) -> usize {
        self.p
    }

    pub fn set_precision(&mut self, p: usize) {
        self.v.set_precision(p, RM).expect("precision change");
        self.p = p;
    }

    fn wrap(&self, v: BigFloat) -> Real {
        Real { v, p: self.p }
    }

    pub fn sqrt(&self) -> Real {
        self.wrap(self.v.sqrt(self.p, RM))
    }

    pub fn exp(&self) -> Real {
        self.wrap(with_consts(|cc| self.v.exp(self.p, RM, cc)))
    }

    pub fn ln(&self) -> Real {
        self.wrap(with_consts(|cc| self.v.ln(self.p, RM, cc)))
    }

    pub fn powi(&self, k: usize) -> Real {
        self.wrap(self.v.powi(k, self.p, RM))
    }

    pub fn recip(&self) -> Real {
        self.wrap(self.v.reciprocal(self.p, RM))
    }

    pub fn abs(&self) -> Real {
        self.wrap(self.v.abs())
    }

    pub fn is_zero(&self) -> bool {
        self.v.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.v.is_negative() && !self.v.is_zero()
    }

    /// False for NaN and infinities.
    pub fn is_finite(&self) -> bool {
        !self.v.is_nan() && !self.v.is_inf()
    }

    pub fn max(self, o: Real) -> Real {
        if o > self {
            o
        } else {
            self
        }
    }

    pub fn min(self, o: Real) -> Real {
        if o < self {
            o
        } else {
            self
        }
    }

    /// `2^e` at precision `p`.
    pub fn pow2(e: i32, p: usize) -> Real {
        let two = Real::from_i64(2, p);
        let r = two.powi(e.unsigned_abs() as usize);
        if e < 0 {
            r.recip()
        } else {
            r
        }
    }

    /// Scientific notation with `digits` significant digits.
    pub fn to_sci(&self, digits: usize) -> String {
        if !self.is_finite() {
            return "nan".into();
        }
        if self.is_zero() {
            return format!("{:.*e}", digits.saturating_sub(1), 0.0);
        }
        let s = with_consts(|cc| self.v.format(Radix::Dec, RM, cc)).unwrap_or_else(|_| "nan".into());
        round_decimal(&s, digits)
    }

    pub fn to_f64(&self) -> f64 {
        self.to_sci(20).parse().unwrap_or(f64::NAN)
    }
}

/// Rounds astro-float's `d.ddd…e±x` output to `digits` significant digits.
fn round_decimal(s: &str, digits: usize) -> String {
    let (mant, exp) = match s.split_once('e') {
        Some((m, e)) => (m, e.parse::<i64>().unwrap_or(0)),
        None => (s, 0),
    };
    let neg = mant.starts_with('-');
    let ds: Vec<u8> = mant.bytes().filter(u8::is_ascii_digit).map(|b| b - b'0').collect();
    let lead = ds.iter().position(|&d| d != 0).unwrap_or(0);
    let point = mant.trim_start_matches('-').find('.').unwrap_or(ds.len()) as i64;
    let mut exp = exp + point - 1 - lead as i64;
    let mut keep: Vec<u8> = ds[lead..].iter().copied().chain(std::iter::repeat(0)).take(digits.max(1)).collect();
    if ds.get(lead + digits.max(1)).is_some_and(|&d| d >= 5) {
        let mut i = keep.len();
        loop {
            if i == 0 {
                keep.insert(0, 1);
                keep.pop();
                exp += 1;
                break;
            }
            i -= 1;
            if keep[i] == 9 {
                keep[i] = 0;
            } else {
                keep[i] += 1;
                break;
            }
        }
    }
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    out.push((b'0' + keep[0]) as char);
    if keep.len() > 1 {
        out.push('.');
        out.extend(keep[1..].iter().map(|&d| (b'0' + d) as char));
    }
    out.push_str(&format!("e{exp}"));
    out
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or((self.p as f64 * std::f64::consts::LOG10_2) as usize);
        f.write_str(&self.to_sci(digits))
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl PartialEq for Real {
    fn eq(&self, o: &Real) -> bool {
        self.partial_cmp(o) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, o: &Real) -> Option<Ordering> {
        self.v.cmp(&o.v).map(|c| c.cmp(&0))
    }
}

macro_rules! real_binop {
    ($tr:ident, $m:ident, $f:ident) => {
        impl ops::$tr<&Real> for &Real {
            type Output = Real;
            fn $m(self, o: &Real) -> Real {
                let p = self.p.max(o.p);
                Real { v: self.v.$f(&o.v, p, RM), p }
            }
        }
        impl ops::$tr<Real> for Real {
            type Output = Real;
            fn $m(self, o: Real) -> Real {
                (&self).$m(&o)
            }
        }
        impl ops::$tr<&Real> for Real {
            type Output = Real;
            fn $m(self, o: &Real) -> Real {
                (&self).$m(o)
            }
        }
        impl ops::$tr<Real> for &Real {
            type Output = Real;
            fn $m(self, o: Real) -> Real {
                self.$m(&o)
            }
        }
        impl ops::$tr<i64> for &Real {
            type Output = Real;
            fn $m(self, o: i64) -> Real {
                self.$m(&Real::from_i64(o, self.p))
            }
        }
        impl ops::$tr<i64> for Real {
            type Output = Real;
            fn $m(self, o: i64) -> Real {
                (&self).$m(&Real::from_i64(o, self.p))
            }
        }
    };
}

real_binop!(Add, add, add);
real_binop!(Sub, sub, sub);
real_binop!(Mul, mul, mul);
real_binop!(Div, div, div);

impl ops::Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        self.wrap(BigFloat::neg(&self.v))
    }
}

impl ops::Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        -&self
    }
}

/// `v + d·ε` with `ε² = 0`.
#[derive(Clone, Debug)]
pub struct Dual {
    pub v: Real,
    pub d: Real,
}

impl Dual {
    pub fn new(v: Real, d: Real) -> Dual {
        Dual { v, d }
    }

    pub fn constant(v: Real) -> Dual {
        let d = Real::zero(v.precision());
        Dual { v, d }
    }

    pub fn variable(v: Real) -> Dual {
        let d = Real::one(v.precision());
        Dual { v, d }
    }

    pub fn scale(&self, c: &Real) -> Dual {
        Dual { v: &self.v * c, d: &self.d * c }
    }

    pub fn recip(&self) -> Result<Dual> {
        if self.v.is_zero() {
            return Err(Error::Numeric("division by zero".into()));
        }
        let r = self.v.recip();
        let d = -(&self.d * &r * &r);
        Ok(Dual { v: r, d })
    }

    pub fn exp(&self) -> Dual {
        let e = self.v.exp();
        Dual { d: &self.d * &e, v: e }
    }

    pub fn ln(&self) -> Dual {
        Dual { v: self.v.ln(), d: &self.d / &self.v }
    }

    pub fn sqrt(&self) -> Dual {
        let s = self.v.sqrt();
        Dual { d: &self.d / &(&s * 2), v: s }
    }
}

impl ops::Add for &Dual {
    type Output = Dual;
    fn add(self, o: &Dual) -> Dual {
        Dual { v: &self.v + &o.v, d: &self.d + &o.d }
    }
}

impl ops::Sub for &Dual {
    type Output = Dual;
    fn sub(self, o: &Dual) -> Dual {
        Dual { v: &self.v - &o.v, d: &self.d - &o.d }
    }
}

impl ops::Mul for &Dual {
    type Output = Dual;
    fn mul(self, o: &Dual) -> Dual {
        Dual { v: &self.v * &o.v, d: &self.d * &o.v + &self.v * &o.d }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn r(x: f64) -> Real {
        Real::from_f64(x, DEFAULT_PRECISION)
    }

    #[test]
    fn arithmetic_and_functions() {
        let two = r(2.0);
        let s = two.sqrt();
        assert!(((&s * &s) - &two).abs() < Real::pow2(-250, 256));
        assert!((two.ln().exp() - &two).abs() < Real::pow2(-240, 256));
        assert_eq!((r(1.5) + r(2.25)).to_f64(), 3.75);
        assert_eq!((r(1.0) / r(8.0)).to_f64(), 0.125);
        assert!(r(-1.0) < r(0.5));
        assert!(r(-3.0).is_negative());
    }

    #[test]
    fn rationals_and_strings() {
        let third = Real::from_rational(&BigRational::new(BigInt::from(1), BigInt::from(3)), 256);
        assert_eq!(third.to_sci(5), "3.3333e-1");
        assert_eq!(r(0.0).to_sci(3), "0.00e0");
        assert_eq!(r(-2.5).to_sci(2), "-2.5e0");
        assert_eq!(r(9.96).to_sci(2), "1.0e1");
        assert_eq!(Real::parse("1e3", 128).unwrap().to_f64(), 1000.0);
        assert!(Real::parse("abc", 128).is_err());
    }

    #[test]
    fn duals_differentiate() {
        // d/dx exp(x^2) at x = 1 is 2e
        let x = Dual::variable(r(1.0));
        let y = (&x * &x).exp();
        let e = r(1.0).exp();
        assert!((&y.d - &(&e * 2)).abs() < Real::pow2(-240, 256));
        let q = x.recip().unwrap();
        assert_eq!(q.d.to_f64(), -1.0);
        assert_eq!(Dual::variable(r(4.0)).sqrt().d.to_f64(), 0.25);
    }
}
