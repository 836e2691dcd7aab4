//! Truncated power series with exact rational coefficients, and the
//! functional equations of the four models.

use std::collections::BTreeMap;
use std::fmt;
use std::ops;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::trees::ModelId;

pub type Q = BigRational;

pub const DEFAULT_ORDER: usize = 64;

pub fn q(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

fn q_ratio(a: i64, b: i64) -> Q {
    Q::new(BigInt::from(a), BigInt::from(b))
}

/// Coefficients `0..=order`; everything above `order` is unknown.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerSeries {
    coeffs: Vec<Q>,
}

impl PowerSeries {
    pub fn zero(order: usize) -> Self {
        PowerSeries { coeffs: vec![Q::zero(); order + 1] }
    }

    pub fn constant(c: Q, order: usize) -> Self {
        Self::monomial(c, 0, order)
    }

    /// `c z^k`.
    pub fn monomial(c: Q, k: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if k <= order {
            s.coeffs[k] = c;
        }
        s
    }

    pub fn from_coeffs(coeffs: Vec<Q>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least the constant term");
        PowerSeries { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> &Q {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    /// Index of the first nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(order + 1, Q::zero());
        PowerSeries { coeffs: c }
    }

    fn common(&self, other: &Self) -> usize {
        self.order().min(other.order())
    }

    pub fn scale(&self, c: &Q) -> Self {
        PowerSeries { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.common(other);
        let mut out = vec![Q::zero(); n + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(n + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(n + 1 - i) {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        PowerSeries { coeffs: out }
    }

    pub fn recip(&self) -> Result<Self> {
        let a0 = &self.coeffs[0];
        if a0.is_zero() {
            return Err(Error::Domain("reciprocal of a series with zero constant term".into()));
        }
        let inv = a0.recip();
        let n = self.order();
        let mut r: Vec<Q> = Vec::with_capacity(n + 1);
        r.push(inv.clone());
        for k in 1..=n {
            let mut s = Q::zero();
            for i in 1..=k {
                if !self.coeffs[i].is_zero() {
                    s += &self.coeffs[i] * &r[k - i];
                }
            }
            r.push(-s * &inv);
        }
        Ok(PowerSeries { coeffs: r })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.recip()?))
    }

    /// `S(z^k)`.
    pub fn subst_pow(&self, k: usize) -> Self {
        assert!(k >= 1);
        let n = self.order();
        let mut out = vec![Q::zero(); n + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            if i * k > n {
                break;
            }
            out[i * k] = c.clone();
        }
        PowerSeries { coeffs: out }
    }

    /// `S(inner(z))`; `inner` must have zero constant term.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if !inner.coeffs[0].is_zero() {
            return Err(Error::Domain("composition needs an inner series without constant term".into()));
        }
        let n = self.common(inner);
        let mut acc = PowerSeries::zero(n);
        for c in self.coeffs.iter().take(n + 1).rev() {
            acc = acc.mul(&inner.truncate(n));
            acc.coeffs[0] += c;
        }
        Ok(acc)
    }

    pub fn derivative(&self) -> Self {
        let n = self.order();
        let mut out: Vec<Q> = (1..=n).map(|k| &self.coeffs[k] * q(k as i64)).collect();
        out.push(Q::zero());
        PowerSeries { coeffs: out }
    }

    /// `exp(S)` for `S` with zero constant term, via `E' = S' E`.
    pub fn exp(&self) -> Result<Self> {
        if !self.coeffs[0].is_zero() {
            return Err(Error::Domain("exp of a series with nonzero constant term".into()));
        }
        let n = self.order();
        let mut e: Vec<Q> = Vec::with_capacity(n + 1);
        e.push(Q::one());
        for k in 1..=n {
            let mut s = Q::zero();
            for j in 1..=k {
                if !self.coeffs[j].is_zero() {
                    s += &self.coeffs[j] * q(j as i64) * &e[k - j];
                }
            }
            e.push(s / q(k as i64));
        }
        Ok(PowerSeries { coeffs: e })
    }

    /// `exp(sum_{i>=1} S(z^i)/i)`: the multiset construction.
    pub fn polya_exp(&self) -> Result<Self> {
        if !self.coeffs[0].is_zero() {
            return Err(Error::Domain("multiset construction needs zero constant term".into()));
        }
        let n = self.order();
        let mut s = PowerSeries::zero(n);
        for i in 1..=n {
            s = &s + &self.subst_pow(i).scale(&q_ratio(1, i as i64));
        }
        s.exp()
    }

    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_integer())
    }
}

impl ops::Add for &PowerSeries {
    type Output = PowerSeries;
    fn add(self, o: &PowerSeries) -> PowerSeries {
        let n = self.common(o);
        PowerSeries { coeffs: (0..=n).map(|k| &self.coeffs[k] + &o.coeffs[k]).collect() }
    }
}

impl ops::Sub for &PowerSeries {
    type Output = PowerSeries;
    fn sub(self, o: &PowerSeries) -> PowerSeries {
        let n = self.common(o);
        PowerSeries { coeffs: (0..=n).map(|k| &self.coeffs[k] - &o.coeffs[k]).collect() }
    }
}

impl ops::Mul for &PowerSeries {
    type Output = PowerSeries;
    fn mul(self, o: &PowerSeries) -> PowerSeries {
        PowerSeries::mul(self, o)
    }
}

impl ops::Neg for &PowerSeries {
    type Output = PowerSeries;
    fn neg(self) -> PowerSeries {
        self.scale(&q(-1))
    }
}

/// Named series of a model system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SeriesKind {
    /// The counting series of the model.
    Model,
    /// The and-rooted half (leaves included) of a stratified model.
    Half,
    /// Trees with a leaf x reachable through or-nodes only (stratified models:
    /// an or-root with exactly one leaf child x and no leaf child ~x).
    GX,
    GXBar,
    /// Simple tautologies realized by x.
    STX,
    STXBar,
    /// Catalan or-rooted trees with x on one side and ~x on the other but no simple tautology.
    HX,
    /// All simple tautologies, counted with multiplicity over the n variables.
    Tautologies,
    SimpleXT,
    SimpleXX,
}

impl SeriesKind {
    pub const ALL: [SeriesKind; 10] = [
        SeriesKind::Model,
        SeriesKind::Half,
        SeriesKind::GX,
        SeriesKind::GXBar,
        SeriesKind::STX,
        SeriesKind::STXBar,
        SeriesKind::HX,
        SeriesKind::Tautologies,
        SeriesKind::SimpleXT,
        SeriesKind::SimpleXX,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SeriesKind::Model => "model",
            SeriesKind::Half => "half",
            SeriesKind::GX => "g_x",
            SeriesKind::GXBar => "g_x_bar",
            SeriesKind::STX => "st_x",
            SeriesKind::STXBar => "st_x_bar",
            SeriesKind::HX => "h_x",
            SeriesKind::Tautologies => "tautologies",
            SeriesKind::SimpleXT => "simple_x_t",
            SeriesKind::SimpleXX => "simple_x_x",
        }
    }
}

impl fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for SeriesKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl FromStr for SeriesKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SeriesKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase().replace('-', "_"))
            .ok_or_else(|| Error::Input(format!("unknown series kind `{s}`")))
    }
}

/// Right-hand sides of series equations.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(Q),
    /// `c z^k`.
    Mono(Q, usize),
    Unknown,
    Known(SeriesKind),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Scale(Q, Box<Expr>),
    Recip(Box<Expr>),
    /// `A(z^k)`.
    Subst(Box<Expr>, usize),
    /// `exp(sum_{i>=1} A(z^i)/i)`.
    Polya(Box<Expr>),
    /// `Polya(A) - 1 - A`: multisets of at least two elements.
    MultisetTail(Box<Expr>),
}

impl Expr {
    pub fn c(v: Q) -> Expr {
        Expr::Const(v)
    }

    pub fn int(v: i64) -> Expr {
        Expr::Const(q(v))
    }

    pub fn z(c: Q, k: usize) -> Expr {
        Expr::Mono(c, k)
    }

    pub fn y() -> Expr {
        Expr::Unknown
    }

    pub fn known(k: SeriesKind) -> Expr {
        Expr::Known(k)
    }

    pub fn scale(self, c: Q) -> Expr {
        Expr::Scale(c, Box::new(self))
    }

    pub fn sq(self) -> Expr {
        self.clone() * self
    }

    pub fn recip(self) -> Expr {
        Expr::Recip(Box::new(self))
    }

    pub fn at_pow(self, k: usize) -> Expr {
        Expr::Subst(Box::new(self), k)
    }

    pub fn polya(self) -> Expr {
        Expr::Polya(Box::new(self))
    }

    pub fn multiset_tail(self) -> Expr {
        Expr::MultisetTail(Box::new(self))
    }

    pub fn mentions_unknown(&self) -> bool {
        match self {
            Expr::Unknown => true,
            Expr::Const(_) | Expr::Mono(..) | Expr::Known(_) => false,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.mentions_unknown() || b.mentions_unknown(),
            Expr::Scale(_, a) | Expr::Recip(a) | Expr::Subst(a, _) | Expr::Polya(a) | Expr::MultisetTail(a) => {
                a.mentions_unknown()
            }
        }
    }

    /// Lower bound on the valuation; `None` for the zero series.
    fn valuation(&self, known: &dyn Fn(SeriesKind) -> Option<usize>) -> Option<usize> {
        match self {
            Expr::Const(c) => (!c.is_zero()).then_some(0),
            Expr::Mono(c, k) => (!c.is_zero()).then_some(*k),
            Expr::Unknown => Some(1),
            Expr::Known(k) => known(*k),
            Expr::Add(a, b) | Expr::Sub(a, b) => match (a.valuation(known), b.valuation(known)) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (x, None) => x,
                (None, y) => y,
            },
            Expr::Mul(a, b) => Some(a.valuation(known)? + b.valuation(known)?),
            Expr::Scale(c, a) => {
                if c.is_zero() {
                    None
                } else {
                    a.valuation(known)
                }
            }
            Expr::Recip(_) | Expr::Polya(_) => Some(0),
            Expr::Subst(a, k) => a.valuation(known).map(|v| v * k),
            Expr::MultisetTail(a) => a.valuation(known).map(|v| 2 * v),
        }
    }

    /// Coefficient `m` of the expression needs coefficients of the unknown up
    /// to `m - lag` only. `None` when it does not depend on the unknown.
    fn lag(&self, known: &dyn Fn(SeriesKind) -> Option<usize>) -> Option<usize> {
        let min = |x: Option<usize>, y: Option<usize>| match (x, y) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, None) => a,
            (None, b) => b,
        };
        match self {
            Expr::Unknown => Some(0),
            Expr::Const(_) | Expr::Mono(..) | Expr::Known(_) => None,
            Expr::Add(a, b) | Expr::Sub(a, b) => min(a.lag(known), b.lag(known)),
            Expr::Scale(_, a) | Expr::Recip(a) | Expr::Polya(a) => a.lag(known),
            Expr::Mul(a, b) => {
                let (va, vb) = (a.valuation(known), b.valuation(known));
                if va.is_none() || vb.is_none() {
                    return None;
                }
                let la = a.lag(known).map(|l| l + vb.unwrap_or(0));
                let lb = b.lag(known).map(|l| l + va.unwrap_or(0));
                min(la, lb)
            }
            Expr::Subst(a, k) => {
                if *k >= 2 {
                    a.lag(known).map(|l| l.max(1))
                } else {
                    a.lag(known)
                }
            }
            Expr::MultisetTail(a) => a.lag(known).map(|l| l + a.valuation(known).unwrap_or(1).max(1)),
        }
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, o: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(o))
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, o: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(o))
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, o: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(o))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Rule {
    /// The series is the unique solution of `Y = rhs(Y)`.
    FixedPoint(Expr),
    /// The series equals an expression in previously defined series.
    Define(Expr),
}

impl Rule {
    pub fn expr(&self) -> &Expr {
        match self {
            Rule::FixedPoint(e) | Rule::Define(e) => e,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub kind: SeriesKind,
    pub rule: Rule,
}

/// Ordered equations: every entry refers only to earlier entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesSystem {
    pub model: ModelId,
    pub n: u32,
    pub entries: Vec<Entry>,
}

impl SeriesSystem {
    pub fn entry(&self, kind: SeriesKind) -> Option<&Entry> {
        self.entries.iter().find(|e| e.kind == kind)
    }

    /// The fixed point that drives the singularity of the model.
    pub fn primary(&self) -> &Entry {
        &self.entries[0]
    }
}

/// Equations of a model with `n` variables.
pub fn model_system(model: ModelId, n: u32) -> SeriesSystem {
    use SeriesKind::*;
    let nq = q(n as i64);
    let two_nz = || Expr::z(q(2 * n as i64), 1);
    let k = Expr::known;
    let fp = |kind, e| Entry { kind, rule: Rule::FixedPoint(e) };
    let def = |kind, e| Entry { kind, rule: Rule::Define(e) };
    let half = q_ratio(1, 2);
    let mut entries = Vec::new();
    match model {
        ModelId::Catalan => {
            entries.push(fp(Model, two_nz() + Expr::y().sq().scale(q(2))));
            entries.push(fp(GXBar, k(Model).sq() + Expr::y().sq() + Expr::z(q(2 * n as i64 - 1), 1)));
            entries.push(def(GX, k(Model) - k(GXBar)));
            entries.push(fp(
                STXBar,
                k(Model).sq() + Expr::y().sq() - (Expr::y() - k(GXBar)).sq().scale(q(2)) + two_nz(),
            ));
            entries.push(def(STX, k(Model) - k(STXBar)));
            entries.push(def(HX, (k(STXBar) - k(GXBar)).sq().scale(q(2))));
        }
        ModelId::Comm => {
            let c_pair = || (k(Model).sq() + k(Model).at_pow(2)).scale(half.clone());
            let y_pair = || (Expr::y().sq() + Expr::y().at_pow(2)).scale(half.clone());
            entries.push(fp(Model, two_nz() + Expr::y().sq() + Expr::y().at_pow(2)));
            entries.push(fp(GXBar, Expr::z(q(2 * n as i64 - 1), 1) + c_pair() + y_pair()));
            entries.push(def(GX, k(Model) - k(GXBar)));
            entries.push(fp(STXBar, two_nz() + c_pair() + y_pair() - (Expr::y() - k(GXBar)).sq()));
            entries.push(def(STX, k(Model) - k(STXBar)));
        }
        ModelId::Assoc => {
            let one_minus = |e: Expr| Expr::int(1) - e;
            entries.push(fp(Half, two_nz() + Expr::y().sq() * one_minus(Expr::y()).recip()));
            entries.push(def(Model, k(Half).scale(q(2)) - two_nz()));
            let r = |j: i64| (one_minus(k(Half)) + Expr::z(q(j), 1)).recip();
            entries.push(def(STX, r(0) - r(1).scale(q(2)) + r(2)));
            entries.push(def(GX, Expr::z(q(1), 1) * (r(2).sq() - Expr::int(1))));
            entries.push(def(GXBar, k(Model) - k(GX)));
            entries.push(def(STXBar, k(Model) - k(STX)));
        }
        ModelId::AssocComm => {
            entries.push(fp(Half, two_nz() + Expr::y().multiset_tail()));
            entries.push(def(Model, k(Half).scale(q(2)) - two_nz()));
            entries.push(def(STX, Expr::z(q(1), 2) * k(Half).polya()));
            let one_minus_z_sq = (Expr::int(1) - Expr::z(q(1), 1)).sq();
            entries.push(def(GX, Expr::z(q(1), 1) * one_minus_z_sq * k(Half).polya()));
            entries.push(def(GXBar, k(Model) - k(GX)));
            entries.push(def(STXBar, k(Model) - k(STX)));
        }
    }
    let width = if model.is_plane() { 4 } else { 2 };
    entries.push(def(Tautologies, k(STX).scale(nq)));
    entries.push(def(SimpleXT, Expr::z(q(width), 1) * k(Tautologies)));
    entries.push(def(SimpleXX, Expr::z(q(width), 1) * k(GX)));
    SeriesSystem { model, n, entries }
}

/// All series of a system, solved exactly to `order`.
#[derive(Clone, Debug)]
pub struct SolvedSystem {
    pub system: SeriesSystem,
    pub order: usize,
    pub series: BTreeMap<SeriesKind, PowerSeries>,
}

impl SolvedSystem {
    pub fn get(&self, kind: SeriesKind) -> Result<&PowerSeries> {
        self.series.get(&kind).ok_or_else(|| {
            Error::Domain(format!("series `{kind}` is not defined for the {} model", self.system.model))
        })
    }
}

enum CNode {
    Const(Q),
    Mono(Q, usize),
    Unknown,
    Known(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize, Option<usize>, Option<usize>),
    Scale(Q, usize),
    Recip(usize),
    Subst(usize, usize),
    Polya(usize),
    Tail(usize),
}

/// Coefficient-at-a-time evaluation of a right-hand side while the unknown is
/// being determined.
struct Lazy<'a> {
    nodes: Vec<CNode>,
    knowns: Vec<&'a PowerSeries>,
    memo: Vec<Vec<Q>>,
    // partial sums S = sum A(z^i)/i and E = exp(S) for Polya and Tail nodes
    polya: Vec<(Vec<Q>, Vec<Q>)>,
    y: Vec<Q>,
}

impl<'a> Lazy<'a> {
    fn compile(
        e: &Expr,
        nodes: &mut Vec<CNode>,
        knowns: &mut Vec<&'a PowerSeries>,
        solved: &'a BTreeMap<SeriesKind, PowerSeries>,
        val: &dyn Fn(SeriesKind) -> Option<usize>,
    ) -> Result<usize> {
        let rec = |x: &Expr, nodes: &mut Vec<CNode>, knowns: &mut Vec<&'a PowerSeries>| {
            Self::compile(x, nodes, knowns, solved, val)
        };
        let node = match e {
            Expr::Const(c) => CNode::Const(c.clone()),
            Expr::Mono(c, k) => CNode::Mono(c.clone(), *k),
            Expr::Unknown => CNode::Unknown,
            Expr::Known(k) => {
                let s = solved.get(k).ok_or_else(|| Error::IllFounded(format!("`{k}` used before it is defined")))?;
                knowns.push(s);
                CNode::Known(knowns.len() - 1)
            }
            Expr::Add(a, b) => CNode::Add(rec(a, nodes, knowns)?, rec(b, nodes, knowns)?),
            Expr::Sub(a, b) => CNode::Sub(rec(a, nodes, knowns)?, rec(b, nodes, knowns)?),
            Expr::Mul(a, b) => {
                CNode::Mul(rec(a, nodes, knowns)?, rec(b, nodes, knowns)?, a.valuation(val), b.valuation(val))
            }
            Expr::Scale(c, a) => CNode::Scale(c.clone(), rec(a, nodes, knowns)?),
            Expr::Recip(a) => CNode::Recip(rec(a, nodes, knowns)?),
            Expr::Subst(a, k) => CNode::Subst(rec(a, nodes, knowns)?, *k),
            Expr::Polya(a) => CNode::Polya(rec(a, nodes, knowns)?),
            Expr::MultisetTail(a) => CNode::Tail(rec(a, nodes, knowns)?),
        };
        nodes.push(node);
        Ok(nodes.len() - 1)
    }

    fn coeff(&mut self, id: usize, k: usize) -> Result<Q> {
        if let CNode::Unknown = self.nodes[id] {
            return match self.y.get(k) {
                Some(c) => Ok(c.clone()),
                None if k == 0 => Ok(Q::zero()),
                None => Err(Error::IllFounded(format!(
                    "coefficient {k} of the unknown requested while solving for it"
                ))),
            };
        }
        while self.memo[id].len() <= k {
            let j = self.memo[id].len();
            let c = self.compute(id, j)?;
            self.memo[id].push(c);
        }
        Ok(self.memo[id][k].clone())
    }

    fn ensure_polya(&mut self, id: usize, a: usize, upto: usize) -> Result<()> {
        while self.polya[id].0.len() <= upto {
            let j = self.polya[id].0.len();
            if j == 0 {
                if !self.coeff(a, 0)?.is_zero() {
                    return Err(Error::Domain("multiset construction needs zero constant term".into()));
                }
                self.polya[id].0.push(Q::zero());
                self.polya[id].1.push(Q::one());
                continue;
            }
            let mut s = Q::zero();
            for i in 1..=j {
                if j.is_multiple_of(i) {
                    s += self.coeff(a, j / i)? / q(i as i64);
                }
            }
            self.polya[id].0.push(s);
            let (sv, ev) = &self.polya[id];
            let mut e = Q::zero();
            for l in 1..=j {
                e += q(l as i64) * &sv[l] * &ev[j - l];
            }
            self.polya[id].1.push(e / q(j as i64));
        }
        Ok(())
    }

    fn compute(&mut self, id: usize, j: usize) -> Result<Q> {
        let node = match &self.nodes[id] {
            CNode::Const(c) => return Ok(if j == 0 { c.clone() } else { Q::zero() }),
            CNode::Mono(c, k) => return Ok(if j == *k { c.clone() } else { Q::zero() }),
            CNode::Known(i) => {
                let s = self.knowns[*i];
                return if j <= s.order() {
                    Ok(s.coeff(j).clone())
                } else {
                    Err(Error::Domain("known series truncated below the requested order".into()))
                };
            }
            CNode::Unknown => unreachable!("handled in coeff"),
            CNode::Add(a, b) => (0, *a, *b, None, None, Q::zero()),
            CNode::Sub(a, b) => (1, *a, *b, None, None, Q::zero()),
            CNode::Mul(a, b, va, vb) => (2, *a, *b, *va, *vb, Q::zero()),
            CNode::Scale(c, a) => (3, *a, 0, None, None, c.clone()),
            CNode::Recip(a) => (4, *a, 0, None, None, Q::zero()),
            CNode::Subst(a, k) => (5, *a, *k, None, None, Q::zero()),
            CNode::Polya(a) => (6, *a, 0, None, None, Q::zero()),
            CNode::Tail(a) => (7, *a, 0, None, None, Q::zero()),
        };
        let (op, a, b, va, vb, c) = node;
        match op {
            0 => Ok(self.coeff(a, j)? + self.coeff(b, j)?),
            1 => Ok(self.coeff(a, j)? - self.coeff(b, j)?),
            2 => {
                let (Some(va), Some(vb)) = (va, vb) else {
                    return Ok(Q::zero());
                };
                let mut s = Q::zero();
                if j >= va + vb {
                    for i in va..=j - vb {
                        let x = self.coeff(a, i)?;
                        if x.is_zero() {
                            continue;
                        }
                        s += x * self.coeff(b, j - i)?;
                    }
                }
                Ok(s)
            }
            3 => Ok(self.coeff(a, j)? * c),
            4 => {
                let a0 = self.coeff(a, 0)?;
                if a0.is_zero() {
                    return Err(Error::Domain("reciprocal of a series with zero constant term".into()));
                }
                if j == 0 {
                    return Ok(a0.recip());
                }
                let mut s = Q::zero();
                for i in 1..=j {
                    let x = self.coeff(a, i)?;
                    if !x.is_zero() {
                        s += x * &self.memo[id][j - i];
                    }
                }
                Ok(-s / a0)
            }
            5 => {
                if j.is_multiple_of(b) {
                    self.coeff(a, j / b)
                } else {
                    Ok(Q::zero())
                }
            }
            6 => {
                self.ensure_polya(id, a, j)?;
                Ok(self.polya[id].1[j].clone())
            }
            _ => {
                if j == 0 {
                    return Ok(Q::zero());
                }
                self.ensure_polya(id, a, j - 1)?;
                // E_j without its S_j E_0 term, plus the i >= 2 part of S_j
                let (sv, ev) = &self.polya[id];
                let mut e = Q::zero();
                for l in 1..j {
                    e += q(l as i64) * &sv[l] * &ev[j - l];
                }
                let mut t = e / q(j as i64);
                for i in 2..=j {
                    if j.is_multiple_of(i) {
                        t += self.coeff(a, j / i)? / q(i as i64);
                    }
                }
                Ok(t)
            }
        }
    }
}

/// Evaluates an expression on complete series.
pub fn eval_expr(
    e: &Expr,
    unknown: Option<&PowerSeries>,
    solved: &BTreeMap<SeriesKind, PowerSeries>,
    order: usize,
) -> Result<PowerSeries> {
    let rec = |x: &Expr| eval_expr(x, unknown, solved, order);
    Ok(match e {
        Expr::Const(c) => PowerSeries::constant(c.clone(), order),
        Expr::Mono(c, k) => PowerSeries::monomial(c.clone(), *k, order),
        Expr::Unknown => unknown.ok_or_else(|| Error::IllFounded("unknown in a definition".into()))?.truncate(order),
        Expr::Known(k) => solved
            .get(k)
            .ok_or_else(|| Error::IllFounded(format!("`{k}` used before it is defined")))?
            .truncate(order),
        Expr::Add(a, b) => &rec(a)? + &rec(b)?,
        Expr::Sub(a, b) => &rec(a)? - &rec(b)?,
        Expr::Mul(a, b) => &rec(a)? * &rec(b)?,
        Expr::Scale(c, a) => rec(a)?.scale(c),
        Expr::Recip(a) => rec(a)?.recip()?,
        Expr::Subst(a, k) => rec(a)?.subst_pow(*k),
        Expr::Polya(a) => rec(a)?.polya_exp()?,
        Expr::MultisetTail(a) => {
            let s = rec(a)?;
            let p = s.polya_exp()?;
            &(&p - &PowerSeries::constant(q(1), order)) - &s
        }
    })
}

/// Solves `Y = rhs(Y)` coefficient by coefficient after checking that the
/// recursion is well founded.
pub fn solve_fixed_point(
    rhs: &Expr,
    solved: &BTreeMap<SeriesKind, PowerSeries>,
    order: usize,
) -> Result<PowerSeries> {
    let val = |k: SeriesKind| solved.get(&k).and_then(|s| s.valuation());
    match rhs.lag(&val) {
        Some(0) => {
            return Err(Error::IllFounded(
                "coefficient m of the right-hand side depends on coefficient m of the unknown".into(),
            ))
        }
        None => return Err(Error::IllFounded("right-hand side does not involve the unknown".into())),
        Some(_) => {}
    }
    let mut nodes = Vec::new();
    let mut knowns = Vec::new();
    let root = Lazy::compile(rhs, &mut nodes, &mut knowns, solved, &val)?;
    let count = nodes.len();
    let mut lazy = Lazy {
        nodes,
        knowns,
        memo: vec![Vec::new(); count],
        polya: vec![(Vec::new(), Vec::new()); count],
        y: Vec::with_capacity(order + 1),
    };
    for j in 0..=order {
        let c = lazy.coeff(root, j)?;
        if j == 0 && !c.is_zero() {
            return Err(Error::IllFounded("solution would have a nonzero constant term".into()));
        }
        lazy.y.push(c);
    }
    Ok(PowerSeries::from_coeffs(lazy.y))
}

pub fn solve_system(system: &SeriesSystem, order: usize) -> Result<SolvedSystem> {
    if order == 0 {
        return Err(Error::Input("order must be at least 1".into()));
    }
    let mut series = BTreeMap::new();
    for e in &system.entries {
        let s = match &e.rule {
            Rule::FixedPoint(rhs) => solve_fixed_point(rhs, &series, order)?,
            Rule::Define(rhs) => eval_expr(rhs, None, &series, order)?,
        };
        series.insert(e.kind, s);
    }
    Ok(SolvedSystem { system: system.clone(), order, series })
}

pub fn solve_model(model: ModelId, n: u32, order: usize) -> Result<SolvedSystem> {
    if n == 0 {
        return Err(Error::Input("n must be at least 1".into()));
    }
    solve_system(&model_system(model, n), order)
}

/// The model's counting series, plus its half for the stratified models.
pub fn solve_model_series(model: ModelId, n: u32, order: usize) -> Result<(PowerSeries, Option<PowerSeries>)> {
    let s = solve_model(model, n, order)?;
    Ok((s.get(SeriesKind::Model)?.clone(), s.series.get(&SeriesKind::Half).cloned()))
}

pub fn solve_aux_series(model: ModelId, kind: SeriesKind, n: u32, order: usize) -> Result<PowerSeries> {
    Ok(solve_model(model, n, order)?.get(kind)?.clone())
}

#[derive(Clone, Debug, Serialize)]
pub struct SanityLine {
    pub kind: SeriesKind,
    /// Largest |coefficient of Y - rhs(Y)| up to the order, as "p/q".
    pub max_discrepancy: String,
    pub exact: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SanityReport {
    pub model: ModelId,
    pub n: u32,
    pub order: usize,
    pub lines: Vec<SanityLine>,
}

impl SanityReport {
    pub fn all_exact(&self) -> bool {
        self.lines.iter().all(|l| l.exact)
    }
}

/// Substitutes every solved series back into its equation.
pub fn series_sanity(model: ModelId, n: u32, order: usize) -> Result<SanityReport> {
    let solved = solve_model(model, n, order)?;
    let mut lines = Vec::new();
    for e in &solved.system.entries {
        let y = solved.get(e.kind)?;
        let rhs = eval_expr(e.rule.expr(), Some(y), &solved.series, order)?;
        let diff = y - &rhs;
        let max = diff.coeffs().iter().map(|c| c.abs()).max().unwrap_or_else(Q::zero);
        lines.push(SanityLine { kind: e.kind, exact: max.is_zero(), max_discrepancy: max.to_string() });
    }
    Ok(SanityReport { model, n, order, lines })
}
