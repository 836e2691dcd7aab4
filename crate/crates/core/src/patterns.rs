//! Pattern languages over And/Or trees: pattern leaves, placeholders,
//! repetitions and restrictions, and minimal embeddings of non-plane trees.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::boolfun::{full_word, Literal};
use crate::enumerate::{is_simple_tautology, visit_trees, Limits};
use crate::error::{Error, Result};
use crate::trees::{canonicalize, cmp_subtrees, Conn, LitTables, ModelId, NodeRef, RawTree, Tree};

/// Default cap on embeddings examined by `minimal_embedding`.
pub const EMBEDDING_CAP: u64 = 1_000_000;

/// The base pattern languages. `N` and `R` follow every child of an or-node
/// and one child of an and-node; `S` is the dual.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PatternId {
    N,
    R,
    S,
}

impl PatternId {
    /// The connective whose children all stay in the pattern.
    pub fn through(self) -> Conn {
        match self {
            PatternId::N | PatternId::R => Conn::Or,
            PatternId::S => Conn::And,
        }
    }

    /// N for the binary models, R for the stratified ones.
    pub fn for_model(model: ModelId) -> PatternId {
        if model.is_stratified() {
            PatternId::R
        } else {
            PatternId::N
        }
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PatternId::N => "N",
            PatternId::R => "R",
            PatternId::S => "S",
        })
    }
}

/// A composition `L1[L2[...]]`: level `i` is plugged into the placeholders of level `i - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PatternSpec {
    pub levels: Vec<PatternId>,
}

impl PatternSpec {
    pub fn base(p: PatternId) -> Self {
        PatternSpec { levels: vec![p] }
    }

    pub fn power(p: PatternId, r: usize) -> Self {
        assert!(r >= 1);
        PatternSpec { levels: vec![p; r] }
    }

    /// `L[M]`.
    pub fn compose(&self, inner: &PatternSpec) -> Self {
        PatternSpec { levels: self.levels.iter().chain(&inner.levels).copied().collect() }
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }
}

impl fmt::Display for PatternSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.levels.iter().enumerate() {
            if i > 0 {
                f.write_str("[")?;
            }
            write!(f, "{p}")?;
        }
        for _ in 1..self.levels.len() {
            f.write_str("]")?;
        }
        Ok(())
    }
}

impl FromStr for PatternSpec {
    type Err = Error;

    /// Accepts `N`, `R^2`, `N[N]`, `N[S[N]]`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Input(format!("bad pattern `{s}`"));
        let base = |c: char| match c.to_ascii_uppercase() {
            'N' => Ok(PatternId::N),
            'R' => Ok(PatternId::R),
            'S' => Ok(PatternId::S),
            _ => Err(bad()),
        };
        let s = s.trim();
        if let Some((b, r)) = s.split_once('^') {
            let mut cs = b.trim().chars();
            let (Some(c), None) = (cs.next(), cs.next()) else {
                return Err(bad());
            };
            let r: usize = r.trim().parse().map_err(|_| bad())?;
            if r == 0 {
                return Err(bad());
            }
            return Ok(PatternSpec::power(base(c)?, r));
        }
        let mut levels = Vec::new();
        let mut depth = 0;
        let mut expect_base = true;
        for c in s.chars().filter(|c| !c.is_whitespace()) {
            match c {
                '[' if !expect_base => {
                    depth += 1;
                    expect_base = true;
                }
                ']' if !expect_base && depth > 0 => depth -= 1,
                c if expect_base => {
                    levels.push(base(c)?);
                    expect_base = false;
                }
                _ => return Err(bad()),
            }
        }
        if levels.is_empty() || depth != 0 || expect_base {
            return Err(bad());
        }
        Ok(PatternSpec { levels })
    }
}

/// Which child continues the pattern at each non-through node. Missing
/// entries mean the first child in the stored order.
pub type Embedding = BTreeMap<usize, usize>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PatternMatch {
    pub spec: PatternSpec,
    /// Preorder indices of the pattern leaves.
    pub leaves: Vec<usize>,
    /// Preorder indices of the roots of placeholder subtrees.
    pub placeholders: Vec<usize>,
    /// `(node, child position)` for every non-through node the pattern crossed.
    pub choices: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RestrictionCount {
    pub repetitions: usize,
    pub restrictions: usize,
    /// Essential variables of the tree's function found among the pattern leaves.
    pub realized: BTreeSet<u32>,
}

#[derive(Clone, Default)]
struct Partial {
    leaves: Vec<usize>,
    holes: Vec<usize>,
    choices: Vec<(usize, usize)>,
}

impl Partial {
    fn join(&self, o: &Partial) -> Partial {
        let cat = |a: &Vec<usize>, b: &Vec<usize>| a.iter().chain(b).copied().collect();
        Partial {
            leaves: cat(&self.leaves, &o.leaves),
            holes: cat(&self.holes, &o.holes),
            choices: self.choices.iter().chain(&o.choices).copied().collect(),
        }
    }
}

fn product(a: Vec<Partial>, b: Vec<Partial>, budget: &mut u64, cap: u64) -> Result<Vec<Partial>> {
    let size = (a.len() as u64).saturating_mul(b.len() as u64);
    if size > *budget {
        return Err(Error::resource("pattern embeddings", format!("more than {cap}"), cap));
    }
    *budget -= size.min(*budget);
    let mut out = Vec::with_capacity(size as usize);
    for x in &a {
        for y in &b {
            out.push(x.join(y));
        }
    }
    Ok(out)
}

/// All decompositions of the subtree at `v`; `free` allows any child to
/// continue at non-through nodes, otherwise `emb` decides.
fn options(
    v: NodeRef<'_>,
    levels: &[PatternId],
    free: bool,
    emb: &Embedding,
    budget: &mut u64,
    cap: u64,
) -> Result<Vec<Partial>> {
    if v.is_leaf() {
        return Ok(vec![Partial { leaves: vec![v.index()], ..Partial::default() }]);
    }
    let children: Vec<NodeRef<'_>> = v.children().collect();
    if v.conn() == Some(levels[0].through()) {
        let mut acc = vec![Partial::default()];
        for c in &children {
            let o = options(*c, levels, free, emb, budget, cap)?;
            acc = product(acc, o, budget, cap)?;
        }
        return Ok(acc);
    }
    let picks: Vec<usize> = if free {
        // identical siblings give identical decompositions up to relabelling
        let mut ps: Vec<usize> = Vec::new();
        for (k, c) in children.iter().enumerate() {
            if !ps.iter().any(|&j| cmp_subtrees(children[j].slice(), c.slice()).is_eq()) {
                ps.push(k);
            }
        }
        ps
    } else {
        let k = emb.get(&v.index()).copied().unwrap_or(0);
        if k >= children.len() {
            return Err(Error::Input(format!("embedding picks child {k} of node {}", v.index())));
        }
        vec![k]
    };
    let mut out = Vec::new();
    for k in picks {
        let mut acc = vec![Partial { choices: vec![(v.index(), k)], ..Partial::default() }];
        for (j, c) in children.iter().enumerate() {
            let o = if j == k {
                options(*c, levels, free, emb, budget, cap)?
            } else if levels.len() > 1 {
                options(*c, &levels[1..], free, emb, budget, cap)?
            } else {
                vec![Partial { holes: vec![c.index()], ..Partial::default() }]
            };
            acc = product(acc, o, budget, cap)?;
        }
        out.extend(acc);
    }
    Ok(out)
}

fn finish(spec: &PatternSpec, mut p: Partial) -> PatternMatch {
    p.leaves.sort_unstable();
    p.holes.sort_unstable();
    p.choices.sort_unstable();
    PatternMatch { spec: spec.clone(), leaves: p.leaves, placeholders: p.holes, choices: p.choices }
}

/// Decomposition with the first stored child continuing at every
/// non-through node (the plane reading of the tree).
pub fn match_pattern(t: &Tree, spec: &PatternSpec) -> PatternMatch {
    match_with_embedding(t, spec, &Embedding::new()).expect("default embedding is valid")
}

pub fn match_with_embedding(t: &Tree, spec: &PatternSpec, emb: &Embedding) -> Result<PatternMatch> {
    let mut budget = u64::MAX;
    let mut o = options(t.root(), &spec.levels, false, emb, &mut budget, u64::MAX)?;
    Ok(finish(spec, o.pop().expect("one decomposition")))
}

fn variables(t: &Tree, leaves: &[usize]) -> BTreeSet<u32> {
    leaves.iter().filter_map(|&i| t.node(i).literal()).map(|l| l.var).collect()
}

/// Repetitions and restrictions with respect to a given set of essential variables.
pub fn restrictions_given(t: &Tree, leaves: &[usize], essential: &BTreeSet<u32>) -> RestrictionCount {
    let vars = variables(t, leaves);
    let repetitions = leaves.len() - vars.len();
    let realized: BTreeSet<u32> = vars.intersection(essential).copied().collect();
    RestrictionCount { repetitions, restrictions: repetitions + realized.len(), realized }
}

fn essential(t: &Tree) -> Result<BTreeSet<u32>> {
    Ok(t.function(t.max_var().max(1))?.essential_vars())
}

pub fn count_restrictions(t: &Tree, m: &PatternMatch) -> Result<RestrictionCount> {
    Ok(restrictions_given(t, &m.leaves, &essential(t)?))
}

/// Embedding of a tree minimizing restrictions of `spec`, by exhaustive
/// search over the continuing child at every crossed non-through node.
/// Plane trees have exactly one embedding.
pub fn minimal_embedding(t: &Tree, spec: &PatternSpec, cap: u64) -> Result<(PatternMatch, RestrictionCount)> {
    let ess = essential(t)?;
    minimal_with(t, spec, cap, &ess)
}

fn minimal_with(
    t: &Tree,
    spec: &PatternSpec,
    cap: u64,
    ess: &BTreeSet<u32>,
) -> Result<(PatternMatch, RestrictionCount)> {
    let free = !t.model().is_plane();
    let mut budget = cap;
    let opts = options(t.root(), &spec.levels, free, &Embedding::new(), &mut budget, cap)?;
    let mut best: Option<(PatternMatch, RestrictionCount)> = None;
    for o in opts {
        let r = restrictions_given(t, &o.leaves, ess);
        if best.as_ref().is_none_or(|(_, b)| r.restrictions < b.restrictions) {
            best = Some((finish(spec, o), r));
        }
    }
    Ok(best.expect("at least one embedding"))
}

/// Rebuilds the tree from the pattern skeleton and its placeholder subtrees.
pub fn reassemble(t: &Tree, m: &PatternMatch) -> Result<Tree> {
    let holes: BTreeSet<usize> = m.placeholders.iter().copied().collect();
    let choice: BTreeMap<usize, usize> = m.choices.iter().copied().collect();
    fn build(v: NodeRef<'_>, holes: &BTreeSet<usize>, choice: &BTreeMap<usize, usize>) -> RawTree {
        if holes.contains(&v.index()) || v.is_leaf() {
            return v.to_raw();
        }
        let mut kids: Vec<NodeRef<'_>> = v.children().collect();
        if let Some(&k) = choice.get(&v.index()) {
            let c = kids.remove(k);
            kids.insert(0, c);
        }
        let conn = v.conn().expect("internal node");
        RawTree::Op(conn, kids.into_iter().map(|c| build(c, holes, choice)).collect())
    }
    canonicalize(&build(t.root(), &holes, &choice), t.model())
}

/// The pattern as text, with `*` for pattern leaves and `_` for placeholders.
pub fn skeleton(t: &Tree, m: &PatternMatch) -> String {
    fn go(v: NodeRef<'_>, m: &PatternMatch, out: &mut String) {
        if m.placeholders.contains(&v.index()) {
            out.push('_');
            return;
        }
        if v.is_leaf() {
            out.push('*');
            return;
        }
        let mut kids: Vec<NodeRef<'_>> = v.children().collect();
        if let Some(&(_, k)) = m.choices.iter().find(|(i, _)| *i == v.index()) {
            let c = kids.remove(k);
            kids.insert(0, c);
        }
        out.push('(');
        out.push_str(&v.conn().expect("internal node").to_string());
        for c in kids {
            out.push(' ');
            go(c, m, out);
        }
        out.push(')');
    }
    let mut s = String::new();
    go(t.root(), m, &mut s);
    s
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaRow {
    pub name: &'static str,
    pub checked: u64,
    pub counterexamples: u64,
    /// A few counterexample trees, as text.
    pub examples: Vec<String>,
}

impl LemmaRow {
    fn new(name: &'static str) -> Self {
        LemmaRow { name, checked: 0, counterexamples: 0, examples: Vec::new() }
    }

    fn record(&mut self, ok: bool, t: &Tree) {
        self.checked += 1;
        if !ok {
            self.counterexamples += 1;
            if self.examples.len() < 5 {
                self.examples.push(t.to_string());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.counterexamples == 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub model: ModelId,
    pub max_size: usize,
    pub vars: u32,
    pub pattern: String,
    pub rows: Vec<LemmaRow>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(LemmaRow::passed)
    }
}

pub const LEMMA_TAUTOLOGY_RESTRICTED: &str = "tautology has a restriction";
pub const LEMMA_ONE_RESTRICTION_SIMPLE: &str = "one depth-2 restriction implies simple";
pub const LEMMA_FALSE_LEAVES: &str = "pattern leaves false gives false";
pub const LEMMA_TRUE_LEAVES: &str = "S-pattern leaves true gives true";

struct ShapeCache {
    one: Vec<usize>,
    two: Vec<usize>,
    s: Vec<usize>,
}

/// Checks the pattern lemmas on every tree of size `1..=max_m` over
/// `1..=n` variables.
pub fn verify_pattern_lemmas(model: ModelId, max_m: usize, n: u32, limits: &Limits) -> Result<LemmaReport> {
    let base = PatternId::for_model(model);
    let one = PatternSpec::base(base);
    let two = PatternSpec::power(base, 2);
    let s_spec = PatternSpec::base(PatternId::S);
    let mut rows = [
        LemmaRow::new(LEMMA_TAUTOLOGY_RESTRICTED),
        LemmaRow::new(LEMMA_ONE_RESTRICTION_SIMPLE),
        LemmaRow::new(LEMMA_FALSE_LEAVES),
        LemmaRow::new(LEMMA_TRUE_LEAVES),
    ];
    let none = BTreeSet::new();
    for nv in 1..=n {
        let lits = LitTables::new(nv)?;
        let full = full_word(nv);
        for m in 1..=max_m {
            let mut cache: HashMap<u64, ShapeCache> = HashMap::new();
            let mut stack = Vec::new();
            let mut err: Option<Error> = None;
            visit_trees(model, m, nv, limits, |t, shape| {
                if err.is_some() {
                    return;
                }
                let plane = model.is_plane();
                let sc = if plane {
                    cache.entry(shape).or_insert_with(|| ShapeCache {
                        one: match_pattern(t, &one).leaves,
                        two: match_pattern(t, &two).leaves,
                        s: match_pattern(t, &s_spec).leaves,
                    })
                } else {
                    cache.clear();
                    cache.entry(0).or_insert_with(|| ShapeCache {
                        one: match_pattern(t, &one).leaves,
                        two: Vec::new(),
                        s: match_pattern(t, &s_spec).leaves,
                    })
                };
                let forced = t.word_override(&lits, &mut stack, |i| sc.one.binary_search(&i).ok().map(|_| 0));
                rows[2].record(forced == 0, t);
                let forced = t.word_override(&lits, &mut stack, |i| sc.s.binary_search(&i).ok().map(|_| full));
                rows[3].record(forced == full, t);
                if t.word_with(&lits, &mut stack) != full {
                    return;
                }
                // a tautology has no essential variables
                let (r1, r2) = if plane {
                    (
                        restrictions_given(t, &sc.one, &none).restrictions,
                        restrictions_given(t, &sc.two, &none).restrictions,
                    )
                } else {
                    let a = minimal_with(t, &one, EMBEDDING_CAP, &none);
                    let b = minimal_with(t, &two, EMBEDDING_CAP, &none);
                    match (a, b) {
                        (Ok(a), Ok(b)) => (a.1.restrictions, b.1.restrictions),
                        (Err(e), _) | (_, Err(e)) => {
                            err = Some(e);
                            return;
                        }
                    }
                };
                rows[0].record(r1 >= 1, t);
                if r2 == 1 {
                    rows[1].record(!is_simple_tautology(t).is_empty(), t);
                }
            })?;
            if let Some(e) = err {
                return Err(e);
            }
        }
    }
    Ok(LemmaReport { model, max_size: max_m, vars: n, pattern: one.to_string(), rows: rows.into() })
}

/// Stirling numbers of the second kind `S(n, k)`.
pub fn stirling2(n: usize, k: usize) -> BigUint {
    let mut row = vec![BigUint::one()];
    for i in 1..=n {
        let mut next = vec![BigUint::zero(); i + 1];
        for j in 1..=i {
            let a = if j < i { &row[j] * BigUint::from(j) } else { BigUint::zero() };
            next[j] = a + &row[j - 1];
        }
        row = next;
    }
    row.get(k).cloned().unwrap_or_default()
}

fn falling(x: i64, k: usize) -> BigUint {
    let mut r = BigUint::one();
    for i in 0..k as i64 {
        if x - i <= 0 {
            return BigUint::zero();
        }
        r *= BigUint::from((x - i) as u64);
    }
    r
}

fn binom(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let mut r = BigUint::one();
    for i in 0..k {
        r = r * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    r
}

/// Number of ways to label `l` pattern leaves so that the labelling has
/// exactly `k` restrictions with respect to a fixed set of `v` of the `n`
/// variables, counting signs on the pattern leaves only.
pub fn pattern_labellings(l: usize, k: usize, n: usize, v: usize) -> BigUint {
    let mut total = BigUint::zero();
    for r in 0..=k.min(l.saturating_sub(1)) {
        let distinct = l - r;
        if k - r > v || k - r > distinct || l < k {
            continue;
        }
        let ways = stirling2(l, distinct)
            * binom(v, k - r)
            * falling(distinct as i64, k - r)
            * falling((n - v) as i64, l - k);
        total += ways;
    }
    total * BigUint::from(2u32).pow(l as u32)
}

/// Leaf labellings of a whole tree of size `m` with `l` pattern leaves
/// having `k` restrictions: pattern leaves as above, other leaves free.
pub fn tree_labellings(m: usize, l: usize, k: usize, n: usize, v: usize) -> BigUint {
    let unsigned = pattern_labellings(l, k, n, v) >> l;
    unsigned * BigUint::from(n).pow((m - l) as u32) * BigUint::from(2u32).pow(m as u32)
}

/// Brute-force tally, by restriction count, of all labellings of `shape`
/// (leaf labels are overwritten) with essential set `{1..v}`. With
/// `pattern_only` only the pattern leaves are labelled.
pub fn labelling_tally(shape: &Tree, spec: &PatternSpec, n: u32, v: u32, pattern_only: bool) -> BTreeMap<usize, BigUint> {
    let m = match_pattern(shape, spec);
    let ess: BTreeSet<u32> = (1..=v).collect();
    let positions: Vec<usize> = if pattern_only { m.leaves.clone() } else { shape.leaves().map(|(i, _)| i).collect() };
    let k = 2 * n as usize;
    let mut t = shape.clone();
    let mut digits = vec![0usize; positions.len()];
    let mut out = BTreeMap::new();
    loop {
        for (d, &p) in digits.iter().zip(&positions) {
            t.set_leaf(p, Literal::from_code(*d));
        }
        let r = restrictions_given(&t, &m.leaves, &ess).restrictions;
        *out.entry(r).or_insert_with(BigUint::zero) += 1u32;
        let mut i = digits.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < k {
                break;
            }
            digits[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::generate_trees;

    fn tree(model: ModelId, s: &str) -> Tree {
        Tree::parse(model, s).unwrap()
    }

    fn leaf_lits(t: &Tree, m: &PatternMatch) -> Vec<String> {
        m.leaves.iter().map(|&i| t.node(i).literal().unwrap().to_string()).collect()
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("N".parse::<PatternSpec>().unwrap(), PatternSpec::base(PatternId::N));
        assert_eq!("R^2".parse::<PatternSpec>().unwrap(), PatternSpec::power(PatternId::R, 2));
        let s: PatternSpec = "N[S[N]]".parse().unwrap();
        assert_eq!(s.levels, vec![PatternId::N, PatternId::S, PatternId::N]);
        assert_eq!(s.to_string(), "N[S[N]]");
        for bad in ["", "N[", "X", "N]", "N^0", "NN"] {
            assert!(bad.parse::<PatternSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn match_examples() {
        let n = PatternSpec::base(PatternId::N);
        let t = tree(ModelId::Catalan, "(or x1 x2)");
        let m = match_pattern(&t, &n);
        assert_eq!(leaf_lits(&t, &m), ["x1", "x2"]);
        assert!(m.placeholders.is_empty());
        let t = tree(ModelId::Catalan, "(and x1 x2)");
        let m = match_pattern(&t, &n);
        assert_eq!(leaf_lits(&t, &m), ["x1"]);
        assert_eq!(m.placeholders, vec![2]);
        let t = tree(ModelId::Assoc, "(or x1 (and x2 x3))");
        let m = match_pattern(&t, &PatternSpec::base(PatternId::R));
        assert_eq!(leaf_lits(&t, &m), ["x1", "x2"]);
        assert_eq!(skeleton(&t, &m), "(or * (and * _))");
        let m2 = match_pattern(&t, &PatternSpec::power(PatternId::R, 2));
        assert_eq!(leaf_lits(&t, &m2), ["x1", "x2", "x3"]);
        let s = match_pattern(&t, &PatternSpec::base(PatternId::S));
        assert_eq!(skeleton(&t, &s), "(or * _)");
    }

    #[test]
    fn restriction_examples() {
        let n = PatternSpec::base(PatternId::N);
        for (s, rep, res) in [("(or x1 ~x1)", 1, 1), ("(or x1 x1)", 1, 2), ("(or x1 x2)", 0, 2)] {
            let t = tree(ModelId::Catalan, s);
            let r = count_restrictions(&t, &match_pattern(&t, &n)).unwrap();
            assert_eq!((r.repetitions, r.restrictions), (rep, res), "{s}");
            assert!(r.restrictions >= r.repetitions);
        }
    }

    #[test]
    fn minimal_embedding_examples() {
        let n = PatternSpec::base(PatternId::N);
        let t = tree(ModelId::Comm, "(or x1 ~x1)");
        assert_eq!(minimal_embedding(&t, &n, EMBEDDING_CAP).unwrap().1.restrictions, 1);
        let t = tree(ModelId::Comm, "(or x1 (and x2 x3))");
        let (m, r) = minimal_embedding(&t, &n, EMBEDDING_CAP).unwrap();
        assert_eq!(m.leaves.len(), 2);
        assert_eq!(r.restrictions, 2);
        let t = tree(ModelId::Comm, "(and x1 (or x1 x2))");
        // x1 and (x1 or x2) = x1: picking the or-child costs one repetition
        // plus x1, picking x1 costs only x1
        let (m, r) = minimal_embedding(&t, &n, EMBEDDING_CAP).unwrap();
        assert_eq!(r.restrictions, 1);
        assert_eq!(leaf_lits(&t, &m), ["x1"]);
        let t = tree(ModelId::AssocComm, "x1");
        assert_eq!(minimal_embedding(&t, &PatternSpec::base(PatternId::R), 10).unwrap().1.restrictions, 1);
        let t = tree(ModelId::AssocComm, "(and (or x1 x2) (or x3 x4) (or ~x1 x2))");
        assert!(matches!(minimal_embedding(&t, &PatternSpec::power(PatternId::R, 2), 1), Err(Error::Resource { .. })));
    }

    #[test]
    fn decomposition_invariants_small() {
        for model in ModelId::ALL {
            let specs = [
                PatternSpec::base(PatternId::for_model(model)),
                PatternSpec::power(PatternId::for_model(model), 2),
                PatternSpec::base(PatternId::S),
            ];
            for m in 1..=5 {
                for t in generate_trees(model, m, 2, &Limits::default()).unwrap() {
                    for spec in &specs {
                        let pm = match_pattern(&t, spec);
                        let mut covered: Vec<usize> = pm.leaves.clone();
                        for &h in &pm.placeholders {
                            let v = t.node(h);
                            covered.extend((v.index()..v.index() + v.span()).filter(|&i| t.node(i).is_leaf()));
                        }
                        covered.sort_unstable();
                        let all: Vec<usize> = t.leaves().map(|(i, _)| i).collect();
                        assert_eq!(covered, all, "{t} {spec}");
                        assert_eq!(reassemble(&t, &pm).unwrap(), t);
                        if !model.is_plane() && m <= 4 {
                            let (mm, _) = minimal_embedding(&t, spec, EMBEDDING_CAP).unwrap();
                            assert_eq!(reassemble(&t, &mm).unwrap(), t);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn lemmas_small() {
        for model in ModelId::ALL {
            let r = verify_pattern_lemmas(model, 5, 2, &Limits::default()).unwrap();
            assert!(r.passed(), "{model}: {:?}", r.rows);
            assert!(r.rows[0].checked > 0 && r.rows[1].checked > 0);
        }
    }

    #[test]
    fn stirling_values() {
        assert_eq!(stirling2(0, 0), BigUint::one());
        assert_eq!(stirling2(4, 2), BigUint::from(7u32));
        assert_eq!(stirling2(5, 3), BigUint::from(25u32));
        assert_eq!(stirling2(3, 5), BigUint::zero());
    }

    #[test]
    fn labelling_formula_matches_brute_force() {
        for model in [ModelId::Catalan, ModelId::Assoc] {
            for m in 1..=4 {
                for shape in generate_trees(model, m, 1, &Limits::default()).unwrap() {
                    let spec = PatternSpec::base(PatternId::for_model(model));
                    let l = match_pattern(&shape, &spec).leaves.len();
                    for n in 1..=3u32 {
                        for v in 0..=n {
                            let bf = labelling_tally(&shape, &spec, n, v, false);
                            let mobile = labelling_tally(&shape, &spec, n, v, true);
                            for k in 0..=l + 1 {
                                let want = tree_labellings(m, l, k, n as usize, v as usize);
                                assert_eq!(bf.get(&k).cloned().unwrap_or_default(), want, "{shape} n={n} v={v} k={k}");
                                let want = pattern_labellings(l, k, n as usize, v as usize);
                                assert_eq!(mobile.get(&k).cloned().unwrap_or_default(), want);
                            }
                        }
                    }
                }
            }
        }
    }
}
