//! Complexity of Boolean functions, minimal trees, T- and X-expansions and
//! the resulting bounds on `lambda_f`.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::boolfun::{BoolFunc, Literal};
use crate::enumerate::{visit_trees, Limits};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::singular::{model_point, Ladder};
use crate::trees::{canonicalize, Conn, LitTables, ModelId, RawTree, Tree};

/// Largest size tried by `complexity` before giving up.
pub const MAX_SEARCH_SIZE: usize = 8;

#[derive(Clone, Debug, Serialize)]
pub struct MinimalTreeSet {
    pub f: BoolFunc,
    pub model: ModelId,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(serialize_with = "ser_trees")]
    pub trees: Vec<Tree>,
}

fn ser_trees<S: serde::Serializer>(ts: &[Tree], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(ts.iter().map(|t| t.to_string()))
}

impl MinimalTreeSet {
    /// `M_f`.
    pub fn count(&self) -> usize {
        self.trees.len()
    }
}

/// Smallest trees of `model` computing `f`, by increasing size.
pub fn complexity(f: &BoolFunc, model: ModelId, limits: &Limits) -> Result<MinimalTreeSet> {
    let n = f.n();
    if f.is_const(true) || f.is_const(false) {
        return Ok(MinimalTreeSet { f: f.clone(), model, l: 0, trees: Vec::new() });
    }
    let Some(target) = f.as_word() else {
        return Err(Error::Input(format!("complexity search supports n <= 6, got {n}")));
    };
    let lits = LitTables::new(n)?;
    let mut stack = Vec::new();
    for m in 1..=MAX_SEARCH_SIZE {
        let mut trees = Vec::new();
        visit_trees(model, m, n, limits, |t, _| {
            if t.word_with(&lits, &mut stack) == target {
                trees.push(t.clone());
            }
        })?;
        if !trees.is_empty() {
            return Ok(MinimalTreeSet { f: f.clone(), model, l: m, trees });
        }
    }
    Err(Error::resource(format!("complexity search for {f}"), format!("size > {MAX_SEARCH_SIZE}"), MAX_SEARCH_SIZE))
}

/// True iff `L(f)` is the same in all four models.
pub fn complexity_model_independence(f: &BoolFunc, limits: &Limits) -> Result<bool> {
    let mut ls = Vec::new();
    for model in ModelId::ALL {
        ls.push(complexity(f, model, limits)?.l);
    }
    Ok(ls.windows(2).all(|w| w[0] == w[1]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpansionKind {
    T,
    X,
}

/// Where and how a subtree is inserted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// `nu` becomes `new_label(t_e, t_nu)` (`side = 0`) or `new_label(t_nu, t_e)`.
    Wrap { side: usize },
    /// `t_e` becomes a child of `nu` at `position` (associative models).
    Child { position: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Expansion {
    pub tree: usize,
    /// Preorder index of `nu` in the minimal tree.
    pub node: usize,
    pub kind: ExpansionKind,
    /// Label of the father of `t_e` after the expansion.
    pub label: Conn,
    pub placement: Placement,
    /// The literal an X-expansion is realized by.
    pub literal: Option<Literal>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionTally {
    pub model: ModelId,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub lambda_t: u64,
    pub lambda_x: u64,
    /// `(lambda_T, lambda_X)` of each minimal tree.
    pub per_tree: Vec<(u64, u64)>,
    pub expansions: Vec<Expansion>,
}

fn insert_at(raw: &RawTree, target: usize, counter: &mut usize, edit: &dyn Fn(&RawTree) -> RawTree) -> RawTree {
    let here = *counter;
    *counter += 1;
    if here == target {
        // still advance past the subtree so indices stay preorder
        let _ = insert_children(raw, target, counter, &|r| r.clone());
        return edit(raw);
    }
    insert_children(raw, target, counter, edit)
}

fn insert_children(raw: &RawTree, target: usize, counter: &mut usize, edit: &dyn Fn(&RawTree) -> RawTree) -> RawTree {
    match raw {
        RawTree::Leaf(_) => raw.clone(),
        RawTree::Op(c, kids) => RawTree::Op(*c, kids.iter().map(|k| insert_at(k, target, counter, edit)).collect()),
    }
}

/// Applies `edit` to the subtree rooted at preorder index `node`.
fn edit_node(raw: &RawTree, node: usize, edit: &dyn Fn(&RawTree) -> RawTree) -> RawTree {
    let mut counter = 0;
    insert_at(raw, node, &mut counter, edit)
}

/// The tree inserted by an expansion whose `t_e` hangs under `label`:
/// `a op b` with `op` the other connective.
fn witness(label: Conn, kind: ExpansionKind, lit: Option<Literal>, fresh: u32) -> RawTree {
    let y = Literal::pos(fresh);
    let a = match kind {
        ExpansionKind::T => Literal::neg(fresh),
        ExpansionKind::X => lit.expect("X-expansion literal"),
    };
    RawTree::Op(label.other(), vec![RawTree::Leaf(a), RawTree::Leaf(y)])
}

/// The expanded tree, checked against the model rules.
pub fn apply_expansion(t: &Tree, e: &Expansion, fresh: u32) -> Result<Tree> {
    let te = witness(e.label, e.kind, e.literal, fresh);
    let raw = t.to_raw();
    let out = match e.placement {
        Placement::Wrap { side } => edit_node(&raw, e.node, &|nu| {
            let kids = if side == 0 { vec![te.clone(), nu.clone()] } else { vec![nu.clone(), te.clone()] };
            RawTree::Op(e.label, kids)
        }),
        Placement::Child { position } => edit_node(&raw, e.node, &|nu| match nu {
            RawTree::Op(c, kids) => {
                let mut kids = kids.clone();
                kids.insert(position, te.clone());
                RawTree::Op(*c, kids)
            }
            RawTree::Leaf(_) => nu.clone(),
        }),
    };
    canonicalize(&out, t.model())
}

/// Candidate `(node, label, placement)` triples of one tree, before
/// choosing the inserted subtree.
fn sites(t: &Tree) -> Vec<(usize, Conn, Placement)> {
    let model = t.model();
    let mut parent: Vec<Option<Conn>> = vec![None; t.node_count()];
    for i in 0..t.node_count() {
        let v = t.node(i);
        for c in v.children() {
            parent[c.index()] = v.conn();
        }
    }
    let both = [Conn::And, Conn::Or];
    let sides = if model.is_plane() { 2 } else { 1 };
    let mut out = Vec::new();
    for i in 0..t.node_count() {
        let v = t.node(i);
        if !model.is_stratified() {
            for label in both {
                for side in 0..sides {
                    out.push((i, label, Placement::Wrap { side }));
                }
            }
            continue;
        }
        if let Some(c) = v.conn() {
            // first kind
            let slots = if model.is_plane() { v.arity() + 1 } else { 1 };
            for position in 0..slots {
                out.push((i, c, Placement::Child { position }));
            }
        }
        // second kind, at the root or at a leaf
        if i == 0 || v.is_leaf() {
            let labels: Vec<Conn> = match (parent[i], v.conn()) {
                (Some(p), _) => vec![p.other()],
                (None, Some(c)) => vec![c.other()],
                (None, None) => both.to_vec(),
            };
            for label in labels {
                for side in 0..sides {
                    out.push((i, label, Placement::Wrap { side }));
                }
            }
        }
    }
    out
}

/// Tallies every valid T- and X-expansion of every minimal tree. Validity
/// is decided on the witness `t_e` over a fresh variable.
pub fn enumerate_expansions(ts: &MinimalTreeSet) -> Result<ExpansionTally> {
    if ts.l == 0 {
        return Err(Error::Domain("expansions of a constant function".into()));
    }
    let n = ts.f.n();
    let fresh = n + 1;
    let target = ts.f.extend(fresh)?;
    let mut lits = Vec::new();
    for v in ts.f.essential_vars() {
        lits.push(Literal::pos(v));
        lits.push(Literal::neg(v));
    }
    let mut expansions = Vec::new();
    let mut per_tree = Vec::new();
    for (k, t) in ts.trees.iter().enumerate() {
        let (mut lt, mut lx) = (0u64, 0u64);
        for (node, label, placement) in sites(t) {
            let mut e = Expansion { tree: k, node, kind: ExpansionKind::T, label, placement, literal: None };
            if apply_expansion(t, &e, fresh)?.function(fresh)? == target {
                lt += 1;
                expansions.push(e.clone());
            }
            e.kind = ExpansionKind::X;
            for &l in &lits {
                e.literal = Some(l);
                if apply_expansion(t, &e, fresh)?.function(fresh)? == target {
                    lx += 1;
                    expansions.push(e.clone());
                }
            }
        }
        per_tree.push((lt, lx));
    }
    Ok(ExpansionTally {
        model: ts.model,
        l: ts.l,
        m: ts.count(),
        lambda_t: per_tree.iter().map(|p| p.0).sum(),
        lambda_x: per_tree.iter().map(|p| p.1).sum(),
        per_tree,
        expansions,
    })
}

/// An inclusive range; `None` where the bound is not stated for this `L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Range<T> {
    pub lower: Option<T>,
    pub upper: Option<T>,
}

impl<T: PartialOrd + Copy> Range<T> {
    pub fn contains(&self, x: T) -> bool {
        self.lower.is_none_or(|l| l <= x) && self.upper.is_none_or(|u| x <= u)
    }
}

impl<T: fmt::Display> fmt::Display for Range<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |x: &Option<T>| x.as_ref().map_or("-".to_string(), |v| v.to_string());
        write!(f, "[{}, {}]", s(&self.lower), s(&self.upper))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LambdaBounds {
    pub model: ModelId,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "M")]
    pub m: usize,
    /// Bounds on `lambda_f`.
    pub lambda: Range<f64>,
    pub lambda_t: Range<u64>,
    pub lambda_x: Range<u64>,
}

/// The closed-form bounds of each model for complexity `l` and `m` minimal trees.
///
/// Catalan's `lambda_X` range is the one the `lambda_f` bounds encode
/// through `w1 = 3/(4n)`, `w2 = 1/(2n)`: `(4L + 2l) M .. 4L(2L-1) M`.
pub fn lambda_bounds_for(model: ModelId, l: usize, m: usize) -> Result<LambdaBounds> {
    if l == 0 {
        return Err(Error::Domain("bounds for a constant function".into()));
    }
    let (lf, mf) = (l as f64, m as f64);
    let (lu, mu) = (l as u64, m as u64);
    let some = |x: f64| Some(x);
    let r = |a: Option<u64>, b: Option<u64>| Range { lower: a, upper: b };
    let (lambda, lambda_t, lambda_x) = match model {
        ModelId::Catalan => {
            let ell = if l == 1 { 0 } else { l.div_ceil(2) } as u64;
            let p = 16f64.powi(l as i32);
            (
                Range { lower: some((8.0 * lf - 3.0 + ell as f64) / p * mf), upper: some((4.0 * lf * lf + 4.0 * lf - 3.0) / p * mf) },
                r(Some(4 * (2 * lu - 1) * mu), Some(4 * (2 * lu - 1) * mu)),
                r(Some((4 * lu + 2 * ell) * mu), Some(4 * lu * (2 * lu - 1) * mu)),
            )
        }
        ModelId::Comm => {
            let p = 512.0 * 8f64.powi(l as i32);
            (
                Range { lower: some((1794.0 * lf - 641.0) / p * mf), upper: some((2.0 * lf - 1.0) * (512.0 * lf + 641.0) / p * mf) },
                r(Some(2 * (2 * lu - 1) * mu), Some(2 * (2 * lu - 1) * mu)),
                r(Some(2 * lu * mu), Some(2 * lu * (2 * lu - 1) * mu)),
            )
        }
        ModelId::Assoc => {
            let s2 = std::f64::consts::SQRT_2;
            let p = ((3.0 - 2.0 * s2) / 2.0).powi(l as i32);
            let big = l > 1;
            (
                Range {
                    lower: big.then_some(p * (133.0 * lf + 153.0 - (93.0 * lf + 108.0) * s2) * mf),
                    upper: big.then(|| {
                        p * (-(12.0 * lf * lf - 247.0 * lf + 51.0) + (9.0 * lf * lf - 174.0 * lf + 36.0) * s2) * mf
                    }),
                },
                r(big.then_some(3 * (lu + 1) * mu), big.then_some((5 * lu - 1) * mu)),
                r(big.then_some(5 * lu * mu), Some(lu * (3 * lu + 2) * mu)),
            )
        }
        ModelId::AssocComm => {
            let ln2 = std::f64::consts::LN_2;
            let c = 2.0 * ln2 - 1.0;
            let p = (c / 2.0).powi(l as i32);
            let big = l > 1;
            (
                Range {
                    lower: big.then_some(p * ((ln2 * ln2 - 0.25) * lf + ln2 * ln2 - 2.0 * ln2 + 0.5) * mf),
                    upper: big.then(|| p * c * (lf + 1.0 + 4.0 * ln2) * lf / 4.0 * mf),
                },
                r(big.then_some((lu + 2) * mu), Some(2 * lu * mu)),
                r(big.then_some(2 * lu * mu), Some((lu * lu + 3 * lu) * mu)),
            )
        }
    };
    Ok(LambdaBounds { model, l, m, lambda, lambda_t, lambda_x })
}

pub fn lambda_bounds(f: &BoolFunc, model: ModelId, limits: &Limits) -> Result<LambdaBounds> {
    let ts = complexity(f, model, limits)?;
    lambda_bounds_for(model, ts.l, ts.count())
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimatePoint {
    pub n: u32,
    pub rho: Real,
    pub w1: Real,
    pub w2: Real,
    /// `n^(L+1) rho^L (lambda_T w1 + lambda_X w2)`.
    pub estimate: Real,
    pub within_bounds: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbabilityReport {
    pub f: BoolFunc,
    pub model: ModelId,
    pub tally: ExpansionTally,
    pub bounds: LambdaBounds,
    pub t_within: bool,
    pub x_within: bool,
    pub points: Vec<EstimatePoint>,
}

/// `n^(L+1) rho^L (lambda_T w1 + lambda_X w2)` at one `n`. The tallies are
/// already summed over the minimal trees.
pub fn expansion_estimate(tally: &ExpansionTally, n: u32, precision: usize) -> Result<EstimatePoint> {
    let pt = model_point(tally.model, n, precision, &Ladder::default())?;
    let rho = pt.singularity.rho.clone();
    let w1 = pt.w1.value.clone();
    let w2 = pt.w2.value.clone();
    let inner = &(&w1 * tally.lambda_t as i64) + &(&w2 * tally.lambda_x as i64);
    let scale = Real::from_i64(n as i64, precision).powi(tally.l + 1);
    let estimate = &scale * &rho.powi(tally.l) * &inner;
    Ok(EstimatePoint { n, rho, w1, w2, estimate, within_bounds: None })
}

pub fn probability_vs_bounds(
    f: &BoolFunc,
    model: ModelId,
    n_grid: &[u32],
    precision: usize,
    limits: &Limits,
) -> Result<ProbabilityReport> {
    let ts = complexity(f, model, limits)?;
    let tally = enumerate_expansions(&ts)?;
    let bounds = lambda_bounds_for(model, ts.l, ts.count())?;
    let mut points = Vec::new();
    for &n in n_grid {
        let mut p = expansion_estimate(&tally, n, precision)?;
        if bounds.lambda.lower.is_some() || bounds.lambda.upper.is_some() {
            p.within_bounds = Some(bounds.lambda.contains(p.estimate.to_f64()));
        }
        points.push(p);
    }
    Ok(ProbabilityReport {
        f: f.clone(),
        model,
        t_within: bounds.lambda_t.contains(tally.lambda_t),
        x_within: bounds.lambda_x.contains(tally.lambda_x),
        tally,
        bounds,
        points,
    })
}

/// `(lambda_T, lambda_X)` of each tree, keyed by model, for one function.
pub fn lambda_table(f: &BoolFunc, limits: &Limits) -> Result<BTreeMap<ModelId, (u64, u64)>> {
    let mut out = BTreeMap::new();
    for model in ModelId::ALL {
        let t = enumerate_expansions(&complexity(f, model, limits)?)?;
        out.insert(model, (t.lambda_t, t.lambda_x));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn func(s: &str) -> BoolFunc {
        s.parse().unwrap()
    }

    fn lim() -> Limits {
        Limits::default()
    }

    #[test]
    fn small_complexities() {
        let x1 = BoolFunc::var(2, 1).unwrap();
        for model in ModelId::ALL {
            let ts = complexity(&x1, model, &lim()).unwrap();
            assert_eq!((ts.l, ts.count()), (1, 1));
            let c = complexity(&BoolFunc::constant(2, true).unwrap(), model, &lim()).unwrap();
            assert_eq!((c.l, c.count()), (0, 0));
        }
        let and = BoolFunc::var(2, 1).unwrap().and(&BoolFunc::var(2, 2).unwrap()).unwrap();
        assert_eq!(complexity(&and, ModelId::Catalan, &lim()).unwrap().count(), 2);
        assert_eq!(complexity(&and, ModelId::Comm, &lim()).unwrap().count(), 1);
        let xor = BoolFunc::from_fn(2, |a| a.count_ones() == 1);
        assert_eq!(complexity(&xor, ModelId::Catalan, &lim()).unwrap().l, 4);
        for t in complexity(&xor, ModelId::Assoc, &lim()).unwrap().trees {
            assert_eq!(t.function(2).unwrap(), xor);
        }
    }

    #[test]
    fn every_two_variable_function_is_model_independent() {
        for w in 0..16u64 {
            let f = BoolFunc::from_word(2, w).unwrap();
            assert!(complexity_model_independence(&f, &lim()).unwrap(), "{f}");
        }
    }

    #[test]
    fn literal_tallies() {
        let x1 = BoolFunc::var(1, 1).unwrap();
        let want = [(ModelId::Catalan, 4, 4), (ModelId::Assoc, 4, 4), (ModelId::Comm, 2, 2), (ModelId::AssocComm, 2, 2)];
        for (model, t, x) in want {
            let tally = enumerate_expansions(&complexity(&x1, model, &lim()).unwrap()).unwrap();
            assert_eq!((tally.lambda_t, tally.lambda_x), (t, x), "{model}");
        }
    }

    #[test]
    fn catalan_lambda_t_is_site_count() {
        for w in 0..16u64 {
            let f = BoolFunc::from_word(2, w).unwrap();
            let ts = complexity(&f, ModelId::Catalan, &lim()).unwrap();
            if ts.l == 0 {
                continue;
            }
            let tally = enumerate_expansions(&ts).unwrap();
            assert_eq!(tally.lambda_t, 4 * (2 * ts.l as u64 - 1) * ts.count() as u64, "{f}");
        }
    }

    #[test]
    fn catalan_and_hand_count() {
        // per tree and variable: x1 gives 4 at its own leaf, 2 at the root and
        // 2 at the sister; ~x1 gives x2 | (~x1 & y) on both sides
        let and = func("n:2:8");
        let tally = enumerate_expansions(&complexity(&and, ModelId::Catalan, &lim()).unwrap()).unwrap();
        assert_eq!(tally.per_tree, vec![(12, 20), (12, 20)]);
        assert_eq!(tally.lambda_x, 40);
        assert_eq!(tally.lambda_t, 24);
    }

    #[test]
    fn expansions_stay_in_model_and_compute_f() {
        for model in ModelId::ALL {
            for f in ["n:2:8", "n:2:e", "n:2:6", "n:3:f8"] {
                let ts = complexity(&func(f), model, &lim()).unwrap();
                let tally = enumerate_expansions(&ts).unwrap();
                let n = ts.f.n();
                for e in &tally.expansions {
                    let t = apply_expansion(&ts.trees[e.tree], e, n + 1).unwrap();
                    assert!(t.is_well_formed());
                    assert_eq!(t.size(), ts.l + 2);
                    assert_eq!(t.function(n + 1).unwrap(), ts.f.extend(n + 1).unwrap());
                }
            }
        }
    }

    #[test]
    fn bounds_shapes() {
        let b = lambda_bounds_for(ModelId::Catalan, 1, 1).unwrap();
        assert_eq!(b.lambda.lower, Some(5.0 / 16.0));
        assert_eq!(b.lambda.upper, Some(5.0 / 16.0));
        let b = lambda_bounds_for(ModelId::Comm, 1, 1).unwrap();
        assert!((b.lambda.lower.unwrap() - 1153.0 / 4096.0).abs() < 1e-15);
        assert!((b.lambda.upper.unwrap() - 1153.0 / 4096.0).abs() < 1e-15);
        let b = lambda_bounds_for(ModelId::Catalan, 2, 2).unwrap();
        assert_eq!(b.lambda.lower, Some(14.0 / 256.0 * 2.0));
        assert_eq!(b.lambda.upper, Some(21.0 / 256.0 * 2.0));
        for model in ModelId::ALL {
            for l in 2..10 {
                let b = lambda_bounds_for(model, l, 3).unwrap();
                assert!(b.lambda.lower.unwrap() <= b.lambda.upper.unwrap(), "{model} {l}");
                assert!(b.lambda_x.lower.unwrap() <= b.lambda_x.upper.unwrap());
                assert!(b.lambda_t.lower.unwrap() <= b.lambda_t.upper.unwrap());
            }
        }
        assert!(lambda_bounds_for(ModelId::Assoc, 0, 1).is_err());
    }

    #[test]
    fn tallies_within_bounds() {
        for model in ModelId::ALL {
            for f in ["n:1:1", "n:2:8", "n:3:f8", "n:2:e", "n:2:4"] {
                let ts = complexity(&func(f), model, &lim()).unwrap();
                let tally = enumerate_expansions(&ts).unwrap();
                let b = lambda_bounds_for(model, ts.l, ts.count()).unwrap();
                assert!(b.lambda_x.contains(tally.lambda_x), "{model} {f}: {} not in {}", tally.lambda_x, b.lambda_x);
                assert!(b.lambda_t.contains(tally.lambda_t), "{model} {f}: {} not in {}", tally.lambda_t, b.lambda_t);
            }
        }
    }

    #[test]
    fn dual_symmetry() {
        for model in ModelId::ALL {
            for w in [1u64, 2, 6, 7, 8, 11, 13] {
                let f = BoolFunc::from_word(2, w).unwrap();
                let a = complexity(&f, model, &lim()).unwrap();
                let b = complexity(&f.negate(), model, &lim()).unwrap();
                assert_eq!((a.l, a.count()), (b.l, b.count()));
                let mut duals: Vec<Tree> = a.trees.iter().map(Tree::dual).collect();
                duals.sort_by(|x, y| x.cmp_canonical(y));
                let mut bt = b.trees.clone();
                bt.sort_by(|x, y| x.cmp_canonical(y));
                assert_eq!(duals, bt);
                let ta = enumerate_expansions(&a).unwrap();
                let tb = enumerate_expansions(&b).unwrap();
                assert_eq!((ta.lambda_t, ta.lambda_x), (tb.lambda_t, tb.lambda_x), "{model} {f}");
            }
        }
    }

    #[test]
    fn catalan_literal_estimate() {
        let ts = complexity(&BoolFunc::var(1, 1).unwrap(), ModelId::Catalan, &lim()).unwrap();
        let p = expansion_estimate(&enumerate_expansions(&ts).unwrap(), 200, 192).unwrap();
        assert!((p.estimate.to_f64() - 5.0 / 16.0).abs() < 0.01 * 5.0 / 16.0);
    }
}
