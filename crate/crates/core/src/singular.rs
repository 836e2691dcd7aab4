//! Dominant singularities, limiting ratios near them, and the asymptotic
//! constants built from those ratios.

use std::cell::{Cell, RefCell};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::{Dual, Real, DEFAULT_PRECISION};
use crate::series::{eval_expr, solve_model, Expr, Rule, SeriesKind, SolvedSystem, DEFAULT_ORDER};
use crate::trees::ModelId;

/// Largest truncation order tried before giving up on a tail check.
pub const MAX_ORDER: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    NumericSystem,
}

#[derive(Clone, Debug, Serialize)]
pub struct SingularityReport {
    pub model: ModelId,
    pub n: u32,
    pub rho: Real,
    /// Value of the model's counting series at `rho`.
    pub value_at_rho: Real,
    /// Value of the fixed point the singularity comes from (the half series
    /// for the stratified models).
    pub primary_at_rho: Real,
    pub method: Method,
}

/// Solved exact series plus cached numeric coefficients for one `(model, n)`.
pub struct Numerics {
    pub model: ModelId,
    pub n: u32,
    pub precision: usize,
    solved: SolvedSystem,
    coeffs: RefCell<HashMap<(usize, usize), Rc<Vec<Real>>>>,
    tail_failed: Cell<bool>,
}

/// Values and z-derivatives of every series of a system at one point.
#[derive(Clone, Debug)]
pub struct PointValues {
    pub z: Real,
    pub values: BTreeMap<SeriesKind, Dual>,
}

impl PointValues {
    pub fn get(&self, k: SeriesKind) -> Result<&Dual> {
        self.values.get(&k).ok_or_else(|| Error::Domain(format!("series `{k}` not in this system")))
    }
}

struct At<'a> {
    entry: usize,
    z: Dual,
    y: Option<Dual>,
    known: &'a BTreeMap<SeriesKind, Dual>,
    // derivative direction is z; when false only the unknown varies
    along_z: bool,
}

impl Numerics {
    pub fn new(model: ModelId, n: u32, precision: usize, order: usize) -> Result<Numerics> {
        if precision < 64 {
            return Err(Error::Input("precision must be at least 64 bits".into()));
        }
        Ok(Numerics {
            model,
            n,
            precision,
            solved: solve_model(model, n, order)?,
            coeffs: RefCell::new(HashMap::new()),
            tail_failed: Cell::new(false),
        })
    }

    /// Runs `f`, re-solving the exact series at doubled order whenever a
    /// truncated series was evaluated too close to its radius.
    pub fn with_escalation<T>(
        model: ModelId,
        n: u32,
        precision: usize,
        mut f: impl FnMut(&Numerics) -> Result<T>,
    ) -> Result<T> {
        let mut order = DEFAULT_ORDER;
        loop {
            let num = Numerics::new(model, n, precision, order)?;
            match f(&num) {
                Err(e) if num.tail_failed.get() => {
                    if order * 2 > MAX_ORDER {
                        return Err(Error::Numeric(format!("{e}; order cap {MAX_ORDER} reached")));
                    }
                    order *= 2;
                }
                r => return r,
            }
        }
    }

    pub fn order(&self) -> usize {
        self.solved.order
    }

    pub fn solved(&self) -> &SolvedSystem {
        &self.solved
    }

    fn real(&self, x: f64) -> Real {
        Real::from_f64(x, self.precision)
    }

    fn tol(&self) -> Real {
        Real::pow2(-(self.precision as i32 / 2), self.precision)
    }

    fn series_of(&self, entry: usize, e: &Expr) -> Result<Rc<Vec<Real>>> {
        let key = (entry, e as *const Expr as usize);
        if let Some(c) = self.coeffs.borrow().get(&key) {
            return Ok(c.clone());
        }
        let kind = self.solved.system.entries[entry].kind;
        let own = self.solved.series.get(&kind);
        let s = eval_expr(e, own, &self.solved.series, self.solved.order)?;
        let v: Rc<Vec<Real>> = Rc::new(s.coeffs().iter().map(|c| Real::from_rational(c, self.precision)).collect());
        self.coeffs.borrow_mut().insert(key, v.clone());
        Ok(v)
    }

    /// Horner evaluation of a truncated series and its derivative at `w`.
    fn horner(&self, c: &[Real], w: &Real) -> Result<(Real, Real)> {
        let p = self.precision;
        let mut v = Real::zero(p);
        let mut d = Real::zero(p);
        for a in c.iter().rev() {
            d = &d * w + &v;
            v = &v * w + a;
        }
        let last = c.len() - 1;
        let tail = (&c[last] * w.powi(last)).abs() + (&c[last - 1] * w.powi(last - 1)).abs();
        if tail > &self.tol() * (v.abs() + 1) {
            self.tail_failed.set(true);
            return Err(Error::Numeric(format!(
                "truncated series of order {last} does not converge at {}",
                w.to_sci(6)
            )));
        }
        Ok((v, d))
    }

    /// `sum_{i>=2} A(z^i)/i` with its z-derivative.
    fn polya_rest(&self, entry: usize, a: &Expr, z: &Dual) -> Result<Dual> {
        let c = self.series_of(entry, a)?;
        let p = self.precision;
        let mut acc = Dual::constant(Real::zero(p));
        let tol = &self.tol() * &self.tol();
        let mut zi = z.v.powi(2);
        for i in 2..=10_000usize {
            let (v, d) = self.horner(&c, &zi)?;
            let inv = Real::from_i64(i as i64, p).recip();
            // d/dz A(z^i) = A'(z^i) i z^{i-1}
            let dz = &d * &z.v.powi(i - 1) * &Real::from_i64(i as i64, p) * &z.d;
            let term = Dual::new(&v * &inv, &dz * &inv);
            let small = term.v.abs() < tol && zi < self.real(0.5);
            acc = &acc + &term;
            if small {
                return Ok(acc);
            }
            zi = &zi * &z.v;
        }
        Err(Error::Numeric("multiset sum did not converge".into()))
    }

    fn eval(&self, e: &Expr, at: &At) -> Result<Dual> {
        let p = self.precision;
        Ok(match e {
            Expr::Const(c) => Dual::constant(Real::from_rational(c, p)),
            Expr::Mono(c, k) => {
                let c = Real::from_rational(c, p);
                let v = &c * &at.z.v.powi(*k);
                let d = if *k == 0 {
                    Real::zero(p)
                } else {
                    &c * &at.z.v.powi(k - 1) * &Real::from_i64(*k as i64, p) * &at.z.d
                };
                Dual::new(v, d)
            }
            Expr::Unknown => at.y.clone().ok_or_else(|| Error::IllFounded("unknown in a definition".into()))?,
            Expr::Known(k) => {
                let v = at.known.get(k).ok_or_else(|| Error::IllFounded(format!("`{k}` used before defined")))?;
                if at.along_z {
                    v.clone()
                } else {
                    Dual::constant(v.v.clone())
                }
            }
            Expr::Add(a, b) => &self.eval(a, at)? + &self.eval(b, at)?,
            Expr::Sub(a, b) => &self.eval(a, at)? - &self.eval(b, at)?,
            Expr::Mul(a, b) => &self.eval(a, at)? * &self.eval(b, at)?,
            Expr::Scale(c, a) => self.eval(a, at)?.scale(&Real::from_rational(c, p)),
            Expr::Recip(a) => self.eval(a, at)?.recip()?,
            Expr::Subst(a, k) => {
                let c = self.series_of(at.entry, a)?;
                let w = at.z.v.powi(*k);
                let (v, d) = self.horner(&c, &w)?;
                let dz = &d * &at.z.v.powi(k - 1) * &Real::from_i64(*k as i64, p) * &at.z.d;
                Dual::new(v, dz)
            }
            Expr::Polya(a) => {
                let main = self.eval(a, at)?;
                (&main + &self.polya_rest(at.entry, a, &at.z)?).exp()
            }
            Expr::MultisetTail(a) => {
                let main = self.eval(a, at)?;
                let e = (&main + &self.polya_rest(at.entry, a, &at.z)?).exp();
                let one = Dual::constant(Real::one(p));
                &(&e - &one) - &main
            }
        })
    }

    /// The primary right-hand side `Phi(z, y)` and `dPhi/dy`.
    pub fn phi(&self, z: &Real, y: &Real) -> Result<(Real, Real)> {
        let empty = BTreeMap::new();
        let at = At {
            entry: 0,
            z: Dual::constant(z.clone()),
            y: Some(Dual::variable(y.clone())),
            known: &empty,
            along_z: false,
        };
        let r = self.eval(self.solved.system.primary().rule.expr(), &at)?;
        if !r.v.is_finite() || !r.d.is_finite() {
            return Err(Error::Numeric(format!("right-hand side not finite at z = {}", z.to_sci(8))));
        }
        Ok((r.v, r.d))
    }

    fn newton(&self, entry: usize, rhs: &Expr, z: &Real, known: &BTreeMap<SeriesKind, Dual>, start: Real) -> Result<Real> {
        let p = self.precision;
        let stop = Real::pow2(-(p as i32 - 24), p);
        let mut y = start;
        for _ in 0..4000 {
            let at = At {
                entry,
                z: Dual::constant(z.clone()),
                y: Some(Dual::variable(y.clone())),
                known,
                along_z: false,
            };
            let r = self.eval(rhs, &at)?;
            let f = &r.v - &y;
            let fp = &r.d - 1;
            if fp.is_zero() || !fp.is_finite() || !f.is_finite() {
                break;
            }
            let step = &f / &fp;
            y = &y - &step;
            if step.abs() <= &stop * (y.abs() + 1) {
                return Ok(y);
            }
        }
        Err(Error::Numeric(format!(
            "Newton iteration for `{}` failed at z = {}",
            self.solved.system.entries[entry].kind,
            z.to_sci(12)
        )))
    }

    /// Every series of the system at `z` (below the singularity), with
    /// z-derivatives. `start` seeds the primary Newton iteration and must not
    /// exceed the solution.
    pub fn point(&self, z: &Real, start: Option<&Real>) -> Result<PointValues> {
        let p = self.precision;
        let mut values: BTreeMap<SeriesKind, Dual> = BTreeMap::new();
        for (i, e) in self.solved.system.entries.iter().enumerate() {
            let d = match &e.rule {
                Rule::FixedPoint(rhs) => {
                    let s = match (i, start) {
                        (0, Some(s)) => s.clone(),
                        _ => Real::zero(p),
                    };
                    let y = self.newton(i, rhs, z, &values, s)?;
                    let dy = self.eval(
                        rhs,
                        &At { entry: i, z: Dual::constant(z.clone()), y: Some(Dual::variable(y.clone())), known: &values, along_z: false },
                    )?;
                    let dz = self.eval(
                        rhs,
                        &At { entry: i, z: Dual::variable(z.clone()), y: Some(Dual::constant(y.clone())), known: &values, along_z: true },
                    )?;
                    let slope = &dz.d / &(Real::one(p) - &dy.d);
                    Dual::new(y, slope)
                }
                Rule::Define(rhs) => self.eval(
                    rhs,
                    &At { entry: i, z: Dual::variable(z.clone()), y: None, known: &values, along_z: true },
                )?,
            };
            values.insert(e.kind, d);
        }
        Ok(PointValues { z: z.clone(), values })
    }

    /// Model value at `z` from a given primary value (usable at the singularity).
    pub fn model_value(&self, z: &Real, primary: &Real) -> Result<Real> {
        let mut values = BTreeMap::new();
        for (i, e) in self.solved.system.entries.iter().enumerate() {
            let v = if i == 0 {
                Dual::constant(primary.clone())
            } else {
                match &e.rule {
                    Rule::Define(rhs) => self.eval(
                        rhs,
                        &At { entry: i, z: Dual::constant(z.clone()), y: None, known: &values, along_z: false },
                    )?,
                    Rule::FixedPoint(_) => break,
                }
            };
            values.insert(e.kind, v);
        }
        values
            .get(&SeriesKind::Model)
            .map(|d| d.v.clone())
            .ok_or_else(|| Error::Numeric("model series is not available at this point".into()))
    }

    /// Solves `Phi(z, y) = y`, `Phi_y(z, y) = 1` for the primary equation.
    pub fn numeric_singularity(&self) -> Result<(Real, Real)> {
        let p = self.precision;
        let y_star = |z: &Real| -> Result<Real> {
            let g = |y: &Real| -> Result<Real> { Ok(self.phi(z, y)?.1 - 1) };
            let lo = Real::zero(p);
            let mut hi = self.real(0.125);
            let mut ghi = g(&hi)?;
            let mut k = 0;
            while ghi.is_negative() {
                hi = &hi * 2;
                ghi = g(&hi)?;
                k += 1;
                if k > 60 {
                    return Err(Error::Numeric("no point with dPhi/dy = 1".into()));
                }
            }
            let glo = g(&lo)?;
            illinois(g, lo, glo, hi, ghi, p)
        };
        let h = |z: &Real| -> Result<Real> {
            let y = y_star(z)?;
            Ok(self.phi(z, &y)?.0 - y)
        };
        let lo = Real::from_f64(1e-300, p);
        let hlo = h(&lo)?;
        if !hlo.is_negative() {
            return Err(Error::Numeric("singularity bracket: h(0+) is not negative".into()));
        }
        let mut hi = Real::from_i64(64 * self.n as i64, p).recip();
        let mut hhi = h(&hi)?;
        let mut k = 0;
        while hhi.is_negative() {
            hi = &hi * 2;
            hhi = h(&hi)?;
            k += 1;
            if k > 60 {
                return Err(Error::Numeric("singularity bracket did not close".into()));
            }
        }
        let rho = illinois(h, lo, hlo, hi, hhi, p)?;
        let y = y_star(&rho)?;
        Ok((rho, y))
    }

    pub fn singularity(&self, method: Method) -> Result<SingularityReport> {
        let p = self.precision;
        let n = Real::from_i64(self.n as i64, p);
        let (rho, primary, method) = match (method, self.model) {
            (Method::ClosedForm, ModelId::Catalan) => ((&n * 16).recip(), self.real(0.25), Method::ClosedForm),
            (Method::ClosedForm, ModelId::Assoc) => {
                let s2 = self.real(2.0).sqrt();
                let alpha = (Real::from_i64(3, p) - &s2 * 2) / (&n * 2);
                (alpha, Real::one(p) - s2.recip(), Method::ClosedForm)
            }
            _ => {
                let (r, y) = self.numeric_singularity()?;
                (r, y, Method::NumericSystem)
            }
        };
        let value = self.model_value(&rho, &primary)?;
        Ok(SingularityReport { model: self.model, n: self.n, rho, value_at_rho: value, primary_at_rho: primary, method })
    }
}

/// Bracketed Illinois (modified regula falsi) to relative width `2^-(p-16)`.
fn illinois(
    mut f: impl FnMut(&Real) -> Result<Real>,
    mut a: Real,
    mut fa: Real,
    mut b: Real,
    mut fb: Real,
    p: usize,
) -> Result<Real> {
    if fa.is_negative() == fb.is_negative() && !fa.is_zero() && !fb.is_zero() {
        return Err(Error::Numeric("root not bracketed".into()));
    }
    let stop = Real::pow2(-(p as i32 - 16), p);
    let mut side = 0i8;
    for _ in 0..2000 {
        if fa.is_zero() {
            return Ok(a);
        }
        if fb.is_zero() {
            return Ok(b);
        }
        let c = (&a * &fb - &b * &fa) / (&fb - &fa);
        let fc = f(&c)?;
        if (&b - &a).abs() <= &stop * b.abs().max(a.abs()) || fc.is_zero() {
            return Ok(c);
        }
        if fc.is_negative() == fb.is_negative() {
            b = c;
            fb = fc;
            if side == -1 {
                fa = &fa / 2;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb = &fb / 2;
            }
            side = 1;
        }
    }
    Err(Error::Numeric("Illinois iteration did not converge".into()))
}

pub fn dominant_singularity(model: ModelId, n: u32, precision: usize) -> Result<SingularityReport> {
    Numerics::with_escalation(model, n, precision, |num| {
        let m = if model.is_plane() { Method::ClosedForm } else { Method::NumericSystem };
        num.singularity(m)
    })
}

/// Ladder and extrapolation settings for `limiting_ratio`.
#[derive(Clone, Debug)]
pub struct Ladder {
    pub eps0: f64,
    pub steps: usize,
}

impl Default for Ladder {
    fn default() -> Self {
        Ladder { eps0: 1e-2, steps: 20 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioResult {
    pub numerator: String,
    pub value: Real,
    /// Raw S'(z)/T'(z) along the ladder.
    pub raw: Vec<Real>,
    /// Diagonal of the extrapolation table.
    pub extrapolants: Vec<Real>,
    pub error: Real,
}

/// Extrapolates `ratio(z)` to `z = rho` along `z_k = rho (1 - eps0 2^-k)`,
/// eliminating successive powers of `sqrt(eps)`.
pub fn limiting_ratio(
    numerator: &str,
    rho: &Real,
    ladder: &Ladder,
    mut ratio: impl FnMut(&Real) -> Result<Real>,
) -> Result<RatioResult> {
    let p = rho.precision();
    let mut raw = Vec::with_capacity(ladder.steps + 1);
    let mut eps = Real::from_f64(ladder.eps0, p);
    for _ in 0..=ladder.steps {
        let z = rho * &(Real::one(p) - &eps);
        raw.push(ratio(&z)?);
        eps = &eps / 2;
    }
    let (value, extrapolants, error) = richardson_sqrt(&raw);
    if !value.is_finite() || !error.is_finite() {
        return Err(Error::Numeric(format!("ratio ladder for `{numerator}` is not finite")));
    }
    Ok(RatioResult { numerator: numerator.to_string(), value, raw, extrapolants, error })
}

/// Richardson table for a sequence with expansion in powers of `h`, where
/// `h` shrinks by `sqrt(2)` per step.
fn richardson_sqrt(raw: &[Real]) -> (Real, Vec<Real>, Real) {
    let p = raw[0].precision();
    let s2 = Real::from_i64(2, p).sqrt();
    let mut prev: Vec<Real> = Vec::new();
    let mut diag = Vec::new();
    for (k, x) in raw.iter().enumerate() {
        let mut row = vec![x.clone()];
        let mut f = Real::one(p);
        for j in 1..=k {
            f = &f * &s2;
            let v = (&f * &row[j - 1] - &prev[j - 1]) / (&f - 1);
            row.push(v);
        }
        diag.push(row[k].clone());
        prev = row;
    }
    let n = diag.len();
    let value = diag[n - 1].clone();
    let error = if n >= 2 { (&diag[n - 1] - &diag[n - 2]).abs() } else { Real::zero(p) };
    (value, diag, error)
}

/// Ratios `S'/T'` at the model singularity for several numerators at once.
pub fn model_ratios(num: &Numerics, rho: &Real, kinds: &[SeriesKind], ladder: &Ladder) -> Result<Vec<RatioResult>> {
    let p = num.precision;
    let mut raw: Vec<Vec<Real>> = vec![Vec::new(); kinds.len()];
    let mut eps = Real::from_f64(ladder.eps0, p);
    let mut start: Option<Real> = None;
    for _ in 0..=ladder.steps {
        let z = rho * &(Real::one(p) - &eps);
        let pv = num.point(&z, start.as_ref())?;
        let t = pv.get(SeriesKind::Model)?.d.clone();
        for (i, k) in kinds.iter().enumerate() {
            raw[i].push(&pv.get(*k)?.d / &t);
        }
        start = Some(pv.values[&num.solved.system.primary().kind].v.clone());
        eps = &eps / 2;
    }
    kinds
        .iter()
        .zip(raw)
        .map(|(k, r)| {
            let (value, extrapolants, error) = richardson_sqrt(&r);
            if !value.is_finite() {
                return Err(Error::Numeric(format!("ratio ladder for `{k}` is not finite")));
            }
            Ok(RatioResult { numerator: k.name().to_string(), value, raw: r, extrapolants, error })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// The constant function True.
    True,
    /// A literal such as x1.
    Literal,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::True => "true",
            Target::Literal => "literal",
        })
    }
}

impl FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "true" | "tautology" => Ok(Target::True),
            "literal" | "x" | "x1" => Ok(Target::Literal),
            _ => Err(Error::Input(format!("unknown target `{s}` (true or literal)"))),
        }
    }
}

/// Per-`n` quantities feeding the constants.
#[derive(Clone, Debug, Serialize)]
pub struct ModelPoint {
    pub n: u32,
    pub singularity: SingularityReport,
    /// Limiting ratio of all simple tautologies (`n ST^x`).
    pub w1: RatioResult,
    /// Limiting ratio of `g_x`.
    pub w2: RatioResult,
}

impl ModelPoint {
    /// `n` times the tautology ratio.
    pub fn true_constant(&self) -> Real {
        &self.w1.value * self.n as i64
    }

    /// `n^2 c rho (w1 + w2)`, with `c = 4` for plane models and 2 otherwise.
    pub fn literal_constant(&self) -> Real {
        let c: i64 = if self.singularity.model.is_plane() { 4 } else { 2 };
        let n2 = (self.n as i64) * (self.n as i64);
        &self.singularity.rho * &(&self.w1.value + &self.w2.value) * (c * n2)
    }

    pub fn constant(&self, t: Target) -> Real {
        match t {
            Target::True => self.true_constant(),
            Target::Literal => self.literal_constant(),
        }
    }

    /// Extrapolation error carried into the constant.
    pub fn constant_error(&self, t: Target) -> f64 {
        let n = self.n as f64;
        match t {
            Target::True => n * self.w1.error.to_f64(),
            Target::Literal => {
                let c = if self.singularity.model.is_plane() { 4.0 } else { 2.0 };
                c * n * n * self.singularity.rho.to_f64() * (self.w1.error.to_f64() + self.w2.error.to_f64())
            }
        }
    }
}

pub fn model_point(model: ModelId, n: u32, precision: usize, ladder: &Ladder) -> Result<ModelPoint> {
    Numerics::with_escalation(model, n, precision, |num| {
        let m = if model.is_plane() { Method::ClosedForm } else { Method::NumericSystem };
        let sing = num.singularity(m)?;
        let mut r = model_ratios(num, &sing.rho, &[SeriesKind::Tautologies, SeriesKind::GX], ladder)?;
        let w2 = r.pop().expect("two ratios");
        let w1 = r.pop().expect("two ratios");
        Ok(ModelPoint { n, singularity: sing.clone(), w1, w2 })
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantEstimate {
    pub model: ModelId,
    pub target: Target,
    pub n_grid: Vec<u32>,
    /// The finite-n constant at each grid point.
    pub values: Vec<f64>,
    /// Fitted `lambda + c/n`.
    pub lambda: f64,
    pub slope: f64,
    /// Largest extrapolation error plus the fit residual.
    pub error: f64,
}

/// Least-squares fit of `lambda + c/n`.
pub fn fit_inverse_n(ns: &[u32], values: &[f64]) -> (f64, f64, f64) {
    let xs: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = values.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(values).map(|(x, y)| (x - mx) * (y - my)).sum();
    let c = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let lambda = my - c * mx;
    let resid = xs.iter().zip(values).map(|(x, y)| (y - lambda - c * x).abs()).fold(0.0, f64::max);
    (lambda, c, resid)
}

pub fn constant_from_points(model: ModelId, target: Target, points: &[ModelPoint]) -> Result<ConstantEstimate> {
    if points.len() < 3 {
        return Err(Error::Input("the n grid needs at least three values".into()));
    }
    let n_grid: Vec<u32> = points.iter().map(|p| p.n).collect();
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Input("the n grid must be strictly increasing".into()));
    }
    let values: Vec<f64> = points.iter().map(|p| p.constant(target).to_f64()).collect();
    let (lambda, slope, resid) = fit_inverse_n(&n_grid, &values);
    let extra = points.iter().map(|p| p.constant_error(target)).fold(0.0, f64::max);
    Ok(ConstantEstimate { model, target, n_grid, values, lambda, slope, error: resid + extra })
}

pub fn constant_estimate(model: ModelId, target: Target, n_grid: &[u32], precision: usize) -> Result<ConstantEstimate> {
    let ladder = Ladder::default();
    let points = n_grid.iter().map(|&n| model_point(model, n, precision, &ladder)).collect::<Result<Vec<_>>>()?;
    constant_from_points(model, target, &points)
}

/// Reference value of each constant, with its closed form.
pub fn reference_constant(model: ModelId, target: Target) -> (f64, &'static str) {
    let s2 = std::f64::consts::SQRT_2;
    let l = 2.0 * std::f64::consts::LN_2 - 1.0;
    match (model, target) {
        (ModelId::Catalan, Target::True) => (0.75, "3/4"),
        (ModelId::Catalan, Target::Literal) => (5.0 / 16.0, "5/16"),
        (ModelId::Assoc, Target::True) => (51.0 - 36.0 * s2, "51-36*sqrt(2)"),
        (ModelId::Assoc, Target::Literal) => (546.0 - 386.0 * s2, "546-386*sqrt(2)"),
        (ModelId::Comm, Target::True) => (641.0 / 1024.0, "641/1024"),
        (ModelId::Comm, Target::Literal) => (1153.0 / 4096.0, "1153/4096"),
        (ModelId::AssocComm, Target::True) => (l * l / 4.0, "(2ln2-1)^2/4"),
        (ModelId::AssocComm, Target::Literal) => (l * l * (l + 2.0) / 4.0, "(2ln2-1)^2(2ln2+1)/4"),
    }
}

/// Refined singularity of the commutative model.
pub fn comm_gamma_expansion(n: u32) -> f64 {
    let k = 8.0 * n as f64;
    (1.0 / k) * (1.0 - 1.0 / k + 7.0 / (4.0 * k * k))
}

pub fn default_precision() -> usize {
    DEFAULT_PRECISION
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: usize = 256;

    fn close(a: &Real, b: f64, tol: f64) -> bool {
        (a.to_f64() - b).abs() <= tol
    }

    #[test]
    fn closed_forms() {
        let r = dominant_singularity(ModelId::Catalan, 4, P).unwrap();
        assert_eq!(r.rho, Real::from_f64(1.0 / 64.0, P));
        assert!(close(&r.value_at_rho, 0.25, 1e-60));
        let r = dominant_singularity(ModelId::Assoc, 3, P).unwrap();
        assert!(close(&r.rho, (3.0 - 2.0 * 2f64.sqrt()) / 6.0, 1e-15));
        assert!(close(&r.value_at_rho, 2f64.sqrt() - 1.0, 1e-15));
    }

    #[test]
    fn numeric_solver_reproduces_closed_forms() {
        for (model, n) in [(ModelId::Catalan, 3), (ModelId::Assoc, 2)] {
            let num = Numerics::new(model, n, P, 32).unwrap();
            let c = num.singularity(Method::ClosedForm).unwrap();
            let g = num.singularity(Method::NumericSystem).unwrap();
            let rel = ((&c.rho - &g.rho) / &c.rho).abs();
            assert!(rel < Real::pow2(-200, P), "{model}: {}", rel.to_sci(5));
            assert!((&c.value_at_rho - &g.value_at_rho).abs() < Real::pow2(-100, P));
        }
    }

    #[test]
    fn comm_singularity() {
        let r = dominant_singularity(ModelId::Comm, 100, P).unwrap();
        let g = comm_gamma_expansion(100);
        assert!((r.rho.to_f64() - g).abs() / g < 1e-5);
        assert!(close(&r.value_at_rho, 0.5, 1e-8));
        let r = dominant_singularity(ModelId::Comm, 1, P).unwrap();
        assert!(r.rho.to_f64() > 0.0 && r.rho.to_f64() < 0.25);
    }

    #[test]
    fn ratio_of_model_to_itself_is_one() {
        let num = Numerics::new(ModelId::Catalan, 2, P, 32).unwrap();
        let rho = num.singularity(Method::ClosedForm).unwrap().rho;
        let r = model_ratios(&num, &rho, &[SeriesKind::Model], &Ladder { eps0: 1e-2, steps: 6 }).unwrap();
        assert!(r[0].raw.iter().all(|x| *x == Real::one(P)));
        assert!(r[0].error.is_zero());
    }

    #[test]
    fn catalan_ratios_at_n_200() {
        let pt = model_point(ModelId::Catalan, 200, P, &Ladder::default()).unwrap();
        assert!(close(&pt.true_constant(), 0.75, 0.01));
        assert!(close(&(&pt.w2.value * 200), 0.5, 0.01));
    }

    #[test]
    fn point_derivatives_match_series() {
        // well inside the disk the truncated series is exact enough
        let num = Numerics::new(ModelId::Comm, 1, P, 64).unwrap();
        let z = Real::from_f64(0.01, P);
        let pv = num.point(&z, None).unwrap();
        for k in [SeriesKind::Model, SeriesKind::STX, SeriesKind::GX] {
            let c: Vec<Real> = num.solved().get(k).unwrap().coeffs().iter().map(|c| Real::from_rational(c, P)).collect();
            let (v, d) = num.horner(&c, &z).unwrap();
            let got = pv.get(k).unwrap();
            assert!((&got.v - &v).abs() < Real::pow2(-120, P), "{k}");
            assert!((&got.d - &d).abs() < Real::pow2(-110, P), "{k}");
        }
    }

    #[test]
    fn fit_recovers_line() {
        let ns = [100, 200, 400];
        let v: Vec<f64> = ns.iter().map(|&n| 0.3 + 2.0 / n as f64).collect();
        let (l, c, r) = fit_inverse_n(&ns, &v);
        assert!((l - 0.3).abs() < 1e-12 && (c - 2.0).abs() < 1e-9 && r < 1e-12);
    }
}
