//! Exhaustive generation and counting of trees by size, function
//! distributions, and the simple-tautology / simple-x classifiers.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::boolfun::{BoolFunc, Literal};
use crate::error::{Error, Result};
use crate::trees::{cmp_subtrees, push_op, Conn, Item, LitTables, ModelId, NodeRef, Tree};

/// Default number of trees an exhaustive run may visit.
pub const DEFAULT_CAP: u64 = 50_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub cap: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { cap: DEFAULT_CAP }
    }
}

impl Limits {
    pub fn with_cap(cap: u64) -> Self {
        Limits { cap }
    }
}

fn check_args(m: usize, n: u32) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::Input(format!("need m >= 1 and n >= 1, got m = {m}, n = {n}")));
    }
    if m > u16::MAX as usize / 2 || n > 24 {
        return Err(Error::Input("size or variable count too large".into()));
    }
    Ok(())
}

/// C(c + k - 1, k): multisets of size k from c kinds.
pub fn multichoose(c: &BigUint, k: usize) -> BigUint {
    let mut r = BigUint::one();
    for i in 0..k {
        r = r * (c + BigUint::from(i)) / BigUint::from(i + 1);
    }
    r
}

/// Number of trees of sizes `0..=max_m` (entry 0 is zero), by direct
/// combinatorial recursion on the root.
pub fn count_table(model: ModelId, max_m: usize, n: u32) -> Result<Vec<BigUint>> {
    check_args(max_m.max(1), n)?;
    let leaves = BigUint::from(2 * n);
    let mut total = vec![BigUint::zero(); max_m + 1];
    if max_m == 0 {
        return Ok(total);
    }
    match model {
        ModelId::Catalan => {
            total[1] = leaves;
            for m in 2..=max_m {
                let s: BigUint = (1..m).map(|i| &total[i] * &total[m - i]).sum();
                total[m] = s * 2u32;
            }
        }
        ModelId::Comm => {
            total[1] = leaves;
            for m in 2..=max_m {
                let mut s = BigUint::zero();
                for i in 1..=m / 2 {
                    let j = m - i;
                    if i < j {
                        s += &total[i] * &total[j];
                    } else {
                        s += &total[i] * (&total[i] + 1u32) / 2u32;
                    }
                }
                total[m] = s * 2u32;
            }
        }
        ModelId::Assoc => {
            // not_c[k][s]: trees of size s whose root is not connective k (0 = and, 1 = or)
            let mut not_c = [vec![BigUint::zero(); max_m + 1], vec![BigUint::zero(); max_m + 1]];
            // seq[k][s]: non-empty sequences of such trees with total size s
            let mut seq = not_c.clone();
            for k in 0..2 {
                not_c[k][1] = leaves.clone();
                seq[k][1] = leaves.clone();
            }
            total[1] = leaves.clone();
            for m in 2..=max_m {
                let mut rooted = [BigUint::zero(), BigUint::zero()];
                for k in 0..2 {
                    rooted[k] = (1..m).map(|i| &not_c[k][i] * &seq[k][m - i]).sum();
                }
                total[m] = &rooted[0] + &rooted[1];
                not_c[0][m] = rooted[1].clone();
                not_c[1][m] = rooted[0].clone();
                for k in 0..2 {
                    let s: BigUint = (1..m).map(|i| &not_c[k][i] * &seq[k][m - i]).sum();
                    seq[k][m] = &not_c[k][m] + s;
                }
            }
        }
        ModelId::AssocComm => {
            let mut not_c = [vec![BigUint::zero(); max_m + 1], vec![BigUint::zero(); max_m + 1]];
            for k in 0..2 {
                not_c[k][1] = leaves.clone();
            }
            total[1] = leaves.clone();
            for m in 2..=max_m {
                let mut rooted = [BigUint::zero(), BigUint::zero()];
                for k in 0..2 {
                    rooted[k] = multisets_at_least_two(&not_c[k], m);
                }
                total[m] = &rooted[0] + &rooted[1];
                not_c[0][m] = rooted[1].clone();
                not_c[1][m] = rooted[0].clone();
            }
        }
    }
    Ok(total)
}

/// Multisets of at least two elements with total size `m`, where `kinds[s]`
/// elements of size `s` are available (sizes `1..m`).
fn multisets_at_least_two(kinds: &[BigUint], m: usize) -> BigUint {
    // dp[size][card] with card in {0, 1, 2+}
    let mut dp = vec![[BigUint::zero(), BigUint::zero(), BigUint::zero()]; m + 1];
    dp[0][0] = BigUint::one();
    for s in 1..m {
        if kinds[s].is_zero() {
            continue;
        }
        let mut next = dp.clone();
        for k in 1..=m / s {
            let ways = multichoose(&kinds[s], k);
            for size in 0..=m - k * s {
                for card in 0..3 {
                    if dp[size][card].is_zero() {
                        continue;
                    }
                    let c2 = (card + k).min(2);
                    next[size + k * s][c2] += &dp[size][card] * &ways;
                }
            }
        }
        dp = next;
    }
    dp[m][2].clone()
}

pub fn count_trees(model: ModelId, m: usize, n: u32) -> Result<BigUint> {
    check_args(m, n)?;
    Ok(count_table(model, m, n)?.pop().expect("non-empty table"))
}

fn check_cap(model: ModelId, m: usize, n: u32, limits: &Limits) -> Result<()> {
    let c = count_trees(model, m, n)?;
    if c > BigUint::from(limits.cap) {
        return Err(Error::resource(format!("exhaustive {model} m={m} n={n}"), c, limits.cap));
    }
    Ok(())
}

/// Unlabelled plane shapes: preorder items with placeholder leaves.
fn plane_skeletons(model: ModelId, m: usize) -> Vec<Vec<Item>> {
    let leaf = Item::leaf(Literal::pos(1));
    match model {
        ModelId::Catalan => {
            let mut by_size: Vec<Vec<Vec<Item>>> = vec![Vec::new(), vec![vec![leaf]]];
            for s in 2..=m {
                let mut out = Vec::new();
                for i in 1..s {
                    for conn in [Conn::And, Conn::Or] {
                        for a in &by_size[i] {
                            for b in &by_size[s - i] {
                                let mut v = Vec::with_capacity(a.len() + b.len() + 1);
                                push_op(&mut v, conn, &[a, b]);
                                out.push(v);
                            }
                        }
                    }
                }
                by_size.push(out);
            }
            by_size.swap_remove(m)
        }
        ModelId::Assoc => {
            // rooted[k][s]: shapes of size s with root connective k
            let mut rooted: [Vec<Vec<Vec<Item>>>; 2] = [vec![Vec::new(); m + 1], vec![Vec::new(); m + 1]];
            for s in 2..=m {
                for (k, conn) in [Conn::And, Conn::Or].into_iter().enumerate() {
                    let mut out = Vec::new();
                    let mut chosen: Vec<&[Item]> = Vec::new();
                    let leaf_slice = [leaf];
                    assoc_compositions(s, &rooted[1 - k], &leaf_slice, &mut chosen, &mut |ch| {
                        if ch.len() >= 2 {
                            let mut v = Vec::new();
                            push_op(&mut v, conn, ch);
                            out.push(v);
                        }
                    });
                    rooted[k][s] = out;
                }
            }
            if m == 1 {
                return vec![vec![leaf]];
            }
            let mut all = std::mem::take(&mut rooted[0][m]);
            all.append(&mut rooted[1][m]);
            all
        }
        _ => unreachable!("plane models only"),
    }
}

fn assoc_compositions<'a>(
    remaining: usize,
    child_rooted: &'a [Vec<Vec<Item>>],
    leaf: &'a [Item],
    chosen: &mut Vec<&'a [Item]>,
    emit: &mut dyn FnMut(&[&[Item]]),
) {
    if remaining == 0 {
        emit(chosen);
        return;
    }
    for part in 1..=remaining {
        if chosen.is_empty() && part == remaining {
            continue; // a single child is not allowed
        }
        if part == 1 {
            chosen.push(leaf);
            assoc_compositions(remaining - 1, child_rooted, leaf, chosen, emit);
            chosen.pop();
        } else {
            for sh in &child_rooted[part] {
                chosen.push(sh);
                assoc_compositions(remaining - part, child_rooted, leaf, chosen, emit);
                chosen.pop();
            }
        }
    }
}

/// Canonical trees of one size stored back to back.
#[derive(Default)]
struct Arena {
    items: Vec<Item>,
    starts: Vec<usize>,
}

impl Arena {
    fn push(&mut self, t: &[Item]) {
        self.starts.push(self.items.len());
        self.items.extend_from_slice(t);
    }

    fn len(&self) -> usize {
        self.starts.len()
    }

    fn get(&self, i: usize) -> &[Item] {
        let s = self.starts[i];
        &self.items[s..s + self.items[s].span as usize]
    }
}

fn leaf_arena(n: u32) -> Arena {
    let mut a = Arena::default();
    for code in 0..2 * n as usize {
        a.push(&[Item::leaf(Literal::from_code(code))]);
    }
    a
}

/// Calls `f` once per canonical tree of size `m`. The second argument
/// identifies the unlabelled shape for plane models (trees sharing it differ
/// only in leaf labels) and is a running counter for non-plane models.
pub fn visit_trees(
    model: ModelId,
    m: usize,
    n: u32,
    limits: &Limits,
    mut f: impl FnMut(&Tree, u64),
) -> Result<()> {
    check_args(m, n)?;
    check_cap(model, m, n, limits)?;
    match model {
        ModelId::Catalan | ModelId::Assoc => {
            let k = 2 * n as usize;
            for (shape, sk) in plane_skeletons(model, m).into_iter().enumerate() {
                let leaf_pos: Vec<usize> =
                    sk.iter().enumerate().filter(|(_, it)| it.is_leaf()).map(|(i, _)| i).collect();
                let mut tree = Tree::from_items(model, sk);
                let mut labels = vec![0usize; leaf_pos.len()];
                for &p in &leaf_pos {
                    tree.set_leaf(p, Literal::from_code(0));
                }
                'outer: loop {
                    f(&tree, shape as u64);
                    // odometer, last leaf fastest
                    let mut j = leaf_pos.len();
                    loop {
                        if j == 0 {
                            break 'outer;
                        }
                        j -= 1;
                        labels[j] += 1;
                        if labels[j] < k {
                            tree.set_leaf(leaf_pos[j], Literal::from_code(labels[j]));
                            continue 'outer;
                        }
                        labels[j] = 0;
                        tree.set_leaf(leaf_pos[j], Literal::from_code(0));
                    }
                }
            }
        }
        ModelId::Comm => {
            let mut lists: Vec<Arena> = vec![Arena::default(), leaf_arena(n)];
            for s in 2..m {
                let mut a = Arena::default();
                comm_level(&lists, s, &mut |items| a.push(items));
                lists.push(a);
            }
            let mut tree = Tree::from_items(model, Vec::new());
            let mut counter = 0u64;
            if m == 1 {
                for i in 0..lists[1].len() {
                    tree.items.clear();
                    tree.items.extend_from_slice(lists[1].get(i));
                    f(&tree, counter);
                    counter += 1;
                }
            } else {
                comm_level(&lists, m, &mut |items| {
                    tree.items.clear();
                    tree.items.extend_from_slice(items);
                    f(&tree, counter);
                    counter += 1;
                });
            }
        }
        ModelId::AssocComm => {
            // not_c[k][s]: trees of size s whose root is not connective k
            let mut not_c: [Vec<Arena>; 2] =
                [vec![Arena::default(), leaf_arena(n)], vec![Arena::default(), leaf_arena(n)]];
            for s in 2..m {
                for (k, conn) in [Conn::And, Conn::Or].into_iter().enumerate() {
                    let mut a = Arena::default();
                    assoc_comm_level(&not_c[k], conn, s, &mut |items| a.push(items));
                    not_c[1 - k].push(a);
                }
            }
            let mut tree = Tree::from_items(model, Vec::new());
            let mut counter = 0u64;
            if m == 1 {
                for i in 0..not_c[0][1].len() {
                    tree.items.clear();
                    tree.items.extend_from_slice(not_c[0][1].get(i));
                    f(&tree, counter);
                    counter += 1;
                }
            } else {
                for (k, conn) in [Conn::And, Conn::Or].into_iter().enumerate() {
                    assoc_comm_level(&not_c[k], conn, m, &mut |items| {
                        tree.items.clear();
                        tree.items.extend_from_slice(items);
                        f(&tree, counter);
                        counter += 1;
                    });
                }
            }
        }
    }
    Ok(())
}

fn comm_level(lists: &[Arena], s: usize, emit: &mut dyn FnMut(&[Item])) {
    let mut buf = Vec::new();
    for conn in [Conn::And, Conn::Or] {
        for i in 1..=s / 2 {
            let j = s - i;
            let (la, lb) = (&lists[i], &lists[j]);
            for ai in 0..la.len() {
                let b_from = if i == j { ai } else { 0 };
                for bi in b_from..lb.len() {
                    let (a, b) = (la.get(ai), lb.get(bi));
                    buf.clear();
                    if cmp_subtrees(a, b).is_le() {
                        push_op(&mut buf, conn, &[a, b]);
                    } else {
                        push_op(&mut buf, conn, &[b, a]);
                    }
                    emit(&buf);
                }
            }
        }
    }
}

/// Trees of size `s` rooted at `conn`, children drawn as multisets from `pool`
/// (trees whose root is not `conn`, indexed by size).
fn assoc_comm_level(pool: &[Arena], conn: Conn, s: usize, emit: &mut dyn FnMut(&[Item])) {
    let mut chosen: Vec<(usize, usize)> = Vec::new();
    let mut buf = Vec::new();
    let mut kids: Vec<&[Item]> = Vec::new();
    multiset_rec(pool, s, (s - 1, usize::MAX), &mut chosen, &mut |ch| {
        if ch.len() < 2 {
            return;
        }
        kids.clear();
        kids.extend(ch.iter().map(|&(sz, ix)| pool[sz].get(ix)));
        kids.sort_by(|a, b| cmp_subtrees(a, b));
        buf.clear();
        push_op(&mut buf, conn, &kids);
        emit(&buf);
    });
}

/// Non-increasing sequences of (size, index) with sizes summing to `remaining`.
fn multiset_rec(
    pool: &[Arena],
    remaining: usize,
    max_key: (usize, usize),
    chosen: &mut Vec<(usize, usize)>,
    emit: &mut dyn FnMut(&[(usize, usize)]),
) {
    if remaining == 0 {
        emit(chosen);
        return;
    }
    for sz in (1..=remaining.min(max_key.0)).rev() {
        if sz >= pool.len() || pool[sz].len() == 0 {
            continue;
        }
        let len = pool[sz].len();
        let top = if sz == max_key.0 { max_key.1.min(len - 1) } else { len - 1 };
        for ix in (0..=top).rev() {
            chosen.push((sz, ix));
            multiset_rec(pool, remaining - sz, (sz, ix), chosen, emit);
            chosen.pop();
        }
    }
}

/// All canonical trees of size `m`, in the deterministic visiting order.
pub fn generate_trees(model: ModelId, m: usize, n: u32, limits: &Limits) -> Result<Vec<Tree>> {
    let mut out = Vec::new();
    visit_trees(model, m, n, limits, |t, _| out.push(t.clone()))?;
    Ok(out)
}

/// Counts of trees per computed function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Distribution {
    pub model: ModelId,
    pub m: usize,
    pub n: u32,
    pub counts: BTreeMap<BoolFunc, BigUint>,
    pub total: BigUint,
}

#[derive(Serialize)]
struct DistEntry {
    function: String,
    count: String,
}

impl Distribution {
    fn from_words(model: ModelId, m: usize, n: u32, words: HashMap<u64, BigUint>) -> Result<Self> {
        let mut counts = BTreeMap::new();
        let mut total = BigUint::zero();
        for (w, c) in words {
            total += &c;
            counts.insert(BoolFunc::from_word(n, w)?, c);
        }
        Ok(Distribution { model, m, n, counts, total })
    }

    pub fn count(&self, f: &BoolFunc) -> BigUint {
        self.counts.get(f).cloned().unwrap_or_default()
    }

    /// First function whose count differs from that of its negation.
    pub fn duality_violation(&self) -> Option<BoolFunc> {
        self.counts.iter().find(|(f, c)| self.count(&f.negate()) != **c).map(|(f, _)| f.clone())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<DistEntry> = self
            .counts
            .iter()
            .map(|(f, c)| DistEntry { function: f.to_string(), count: c.to_string() })
            .collect();
        serde_json::json!({
            "schema": "boolform/v1",
            "model": self.model.name(),
            "m": self.m,
            "n": self.n,
            "total": self.total.to_string(),
            "entries": entries,
        })
    }

    /// Rows of (function, count) as strings, for CSV export.
    pub fn rows(&self) -> Vec<(String, String)> {
        self.counts.iter().map(|(f, c)| (f.to_string(), c.to_string())).collect()
    }
}

fn check_packed(n: u32) -> Result<LitTables> {
    LitTables::new(n)
}

/// Exhaustive distribution: every tree is generated and evaluated.
pub fn distribution(model: ModelId, m: usize, n: u32, limits: &Limits) -> Result<Distribution> {
    let lits = check_packed(n)?;
    let mut words: HashMap<u64, u64> = HashMap::new();
    let mut stack = Vec::new();
    visit_trees(model, m, n, limits, |t, _| {
        *words.entry(t.word_with(&lits, &mut stack)).or_insert(0) += 1;
    })?;
    let words = words.into_iter().map(|(w, c)| (w, BigUint::from(c))).collect();
    Distribution::from_words(model, m, n, words)
}

type FMap = HashMap<u64, BigUint>;

fn add_into(map: &mut FMap, key: u64, v: BigUint) {
    if v.is_zero() {
        return;
    }
    *map.entry(key).or_default() += v;
}

fn sorted(map: &FMap) -> Vec<(u64, &BigUint)> {
    let mut v: Vec<(u64, &BigUint)> = map.iter().map(|(k, c)| (*k, c)).collect();
    v.sort_unstable_by_key(|e| e.0);
    v
}

/// Distribution by dynamic programming over (size, function) classes. No tree
/// is materialized, so there is no cap.
pub fn distribution_dp(model: ModelId, m: usize, n: u32) -> Result<Distribution> {
    check_args(m, n)?;
    let lits = check_packed(n)?;
    let mut leaves = FMap::new();
    for code in 0..2 * n as usize {
        add_into(&mut leaves, lits.get(Literal::from_code(code)), BigUint::one());
    }
    let conns = [Conn::And, Conn::Or];
    let result = match model {
        ModelId::Catalan | ModelId::Comm => {
            let mut d: Vec<FMap> = vec![FMap::new(), leaves];
            for s in 2..=m {
                let mut cur = FMap::new();
                for conn in conns {
                    for i in 1..s {
                        let j = s - i;
                        if model == ModelId::Comm && i > j {
                            continue;
                        }
                        let (a, b) = (sorted(&d[i]), sorted(&d[j]));
                        for (ai, (g, cg)) in a.iter().enumerate() {
                            for (bi, (h, ch)) in b.iter().enumerate() {
                                let w = conn.apply(*g, *h);
                                if model == ModelId::Comm && i == j {
                                    if bi < ai {
                                        continue;
                                    }
                                    if bi == ai {
                                        add_into(&mut cur, w, *cg * (*cg + 1u32) / 2u32);
                                        continue;
                                    }
                                }
                                add_into(&mut cur, w, *cg * *ch);
                            }
                        }
                    }
                }
                d.push(cur);
            }
            d.swap_remove(m)
        }
        ModelId::Assoc | ModelId::AssocComm => {
            // not_c[k][s] as in count_table, now per function
            let mut not_c: [Vec<FMap>; 2] = [vec![FMap::new(), leaves.clone()], vec![FMap::new(), leaves.clone()]];
            let mut seq: [Vec<FMap>; 2] = [vec![FMap::new(), leaves.clone()], vec![FMap::new(), leaves.clone()]];
            let mut last = leaves.clone();
            for s in 2..=m {
                let mut rooted: [FMap; 2] = [FMap::new(), FMap::new()];
                for (k, conn) in conns.into_iter().enumerate() {
                    rooted[k] = if model == ModelId::Assoc {
                        let mut r = FMap::new();
                        for i in 1..s {
                            for (g, cg) in &not_c[k][i] {
                                for (h, ch) in &seq[k][s - i] {
                                    add_into(&mut r, conn.apply(*g, *h), cg * ch);
                                }
                            }
                        }
                        r
                    } else {
                        multiset_functions(&not_c[k], conn, s, n)
                    };
                }
                let mut all = rooted[0].clone();
                for (w, c) in &rooted[1] {
                    add_into(&mut all, *w, c.clone());
                }
                last = all;
                let [r0, r1] = rooted;
                not_c[0].push(r1);
                not_c[1].push(r0);
                if model == ModelId::Assoc {
                    for (k, conn) in conns.into_iter().enumerate() {
                        let mut w = not_c[k][s].clone();
                        for i in 1..s {
                            for (g, cg) in &not_c[k][i] {
                                for (h, ch) in &seq[k][s - i] {
                                    add_into(&mut w, conn.apply(*g, *h), cg * ch);
                                }
                            }
                        }
                        seq[k].push(w);
                    }
                }
            }
            last
        }
    };
    Distribution::from_words(model, m, n, result)
}

/// Multisets of at least two children (sizes below `s`) combined by `conn`,
/// grouped by the resulting function.
fn multiset_functions(pool: &[FMap], conn: Conn, s: usize, n: u32) -> FMap {
    // state: (size, function, card in {0,1,2+}) -> count
    let unit = conn.unit(n);
    let mut dp: HashMap<(usize, u64, u8), BigUint> = HashMap::new();
    dp.insert((0, unit, 0), BigUint::one());
    for (sz, map) in pool.iter().enumerate().take(s).skip(1) {
        for (g, cnt) in sorted(map) {
            let mut next = dp.clone();
            for k in 1..=(s / sz) {
                let ways = multichoose(cnt, k);
                for ((size, f, card), c) in &dp {
                    if size + k * sz > s {
                        continue;
                    }
                    let key = (size + k * sz, conn.apply(*f, g), (*card as usize + k).min(2) as u8);
                    *next.entry(key).or_default() += c * &ways;
                }
            }
            dp = next;
        }
    }
    let mut out = FMap::new();
    for ((size, f, card), c) in dp {
        if size == s && card == 2 {
            add_into(&mut out, f, c);
        }
    }
    out
}

/// Bitmask over literal codes of the leaves joined to `v` by `conn`-only paths.
pub(crate) fn path_literal_mask(v: NodeRef<'_>, conn: Conn) -> u64 {
    match v.conn() {
        None => 1u64 << v.literal().expect("leaf").code(),
        Some(c) if c == conn => v.children().fold(0, |acc, c| acc | path_literal_mask(c, conn)),
        Some(_) => 0,
    }
}

fn realized(mask: u64) -> BTreeSet<u32> {
    let mut out = BTreeSet::new();
    let mut m = mask & (mask >> 1) & 0x5555_5555_5555_5555;
    while m != 0 {
        let b = m.trailing_zeros();
        out.insert(b / 2 + 1);
        m &= m - 1;
    }
    out
}

/// Variables `x` with both `x` and `~x` joined to the root by or-only paths.
/// Empty when the tree is not a simple tautology.
pub fn is_simple_tautology(t: &Tree) -> BTreeSet<u32> {
    realized(path_literal_mask(t.root(), Conn::Or))
}

/// Dual notion: both polarities joined to the root by and-only paths.
pub fn is_simple_contradiction(t: &Tree) -> BTreeSet<u32> {
    realized(path_literal_mask(t.root(), Conn::And))
}

/// Is `t` a simple tautology realized by the variable of `lit`?
pub fn is_simple_tautology_for(t: &Tree, var: u32) -> bool {
    let mask = path_literal_mask(t.root(), Conn::Or);
    let p = Literal::pos(var).code();
    mask >> p & 1 == 1 && mask >> (p + 1) & 1 == 1
}

/// Membership in the class counted by the series `g_x` for `x = lit`, under
/// connective `conn` (`Or` for g itself, `And` for its dual).
///
/// Binary models: some leaf `lit` is joined to the root by `conn`-only paths.
/// Stratified models: the root carries `conn` and exactly one of its children
/// is the leaf `lit`, none is `~lit`; for AssocComm the bare leaf `lit` also counts.
pub fn in_g_class(v: NodeRef<'_>, model: ModelId, lit: Literal, conn: Conn) -> bool {
    if model.is_binary() {
        return path_literal_mask(v, conn) >> lit.code() & 1 == 1;
    }
    match v.conn() {
        None => model == ModelId::AssocComm && v.literal() == Some(lit),
        Some(c) if c == conn => {
            let mut hits = 0;
            for ch in v.children() {
                match ch.literal() {
                    Some(l) if l == lit => hits += 1,
                    Some(l) if l == lit.negate() => return false,
                    _ => {}
                }
            }
            hits == 1
        }
        Some(_) => false,
    }
}

pub fn in_g_x(t: &Tree, lit: Literal) -> bool {
    in_g_class(t.root(), t.model(), lit, Conn::Or)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SimpleX {
    NotSimple,
    /// `l and ST` or `l or SC`.
    XT(Literal),
    /// `l and u` with `u` in the g-class of `l`, or the dual shape.
    XX(Literal),
}

/// Classifies trees of the simple-x shapes. The root must be binary and one
/// child must be a leaf; `XT` is tried before `XX`.
pub fn is_simple_x(t: &Tree) -> SimpleX {
    let root = t.root();
    let Some(conn) = root.conn() else {
        return SimpleX::NotSimple;
    };
    if root.arity() != 2 {
        return SimpleX::NotSimple;
    }
    let kids: Vec<NodeRef<'_>> = root.children().collect();
    let orders: &[(usize, usize)] = &[(0, 1), (1, 0)];
    // constants: simple tautology under and, simple contradiction under or
    for &(a, b) in orders {
        if let Some(l) = kids[a].literal() {
            let mask = path_literal_mask(kids[b], conn.other());
            if !realized(mask).is_empty() {
                return SimpleX::XT(l);
            }
        }
    }
    for &(a, b) in orders {
        if let Some(l) = kids[a].literal() {
            if in_g_class(kids[b], t.model(), l, conn.other()) {
                return SimpleX::XX(l);
            }
        }
    }
    SimpleX::NotSimple
}

/// Tautologies split into (simple, not simple).
pub fn classify_tautologies(model: ModelId, m: usize, n: u32, limits: &Limits) -> Result<(BigUint, BigUint)> {
    let lits = check_packed(n)?;
    let full = lits.full();
    let (mut simple, mut other) = (0u64, 0u64);
    let mut stack = Vec::new();
    visit_trees(model, m, n, limits, |t, _| {
        if t.word_with(&lits, &mut stack) == full {
            let mask = path_literal_mask(t.root(), Conn::Or);
            if mask & (mask >> 1) & 0x5555_5555_5555_5555 != 0 {
                simple += 1;
            } else {
                other += 1;
            }
        }
    })?;
    Ok((simple.into(), other.into()))
}

/// Brute-force tallies of the classes behind the auxiliary series, for `x = x1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AuxCounts {
    pub total: u64,
    /// Simple tautologies realized by x1.
    pub st_x: u64,
    /// Trees in the g-class of x1.
    pub g_x: u64,
    /// Simple tautologies for any variable.
    pub simple_tautologies: u64,
    pub tautologies: u64,
    /// Trees classified simple-x (either kind) for the literal x1.
    pub simple_x: u64,
}

pub fn aux_counts(model: ModelId, m: usize, n: u32, limits: &Limits) -> Result<AuxCounts> {
    let lits = check_packed(n)?;
    let full = lits.full();
    let x = Literal::pos(1);
    let mut c = AuxCounts::default();
    let mut stack = Vec::new();
    visit_trees(model, m, n, limits, |t, _| {
        c.total += 1;
        let mask = path_literal_mask(t.root(), Conn::Or);
        if mask & 0b11 == 0b11 {
            c.st_x += 1;
        }
        if mask & (mask >> 1) & 0x5555_5555_5555_5555 != 0 {
            c.simple_tautologies += 1;
        }
        if in_g_class(t.root(), model, x, Conn::Or) {
            c.g_x += 1;
        }
        if t.word_with(&lits, &mut stack) == full {
            c.tautologies += 1;
        }
        if matches!(is_simple_x(t), SimpleX::XT(l) | SimpleX::XX(l) if l == x) {
            c.simple_x += 1;
        }
    })?;
    Ok(c)
}

/// Small helper for callers that want plain integers.
pub fn to_u64(x: &BigUint) -> Option<u64> {
    x.to_u64()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(model: ModelId, n: u32, upto: usize) -> Vec<u64> {
        count_table(model, upto, n).unwrap()[1..].iter().map(|c| c.to_u64().unwrap()).collect()
    }

    #[test]
    fn count_tables() {
        assert_eq!(counts(ModelId::Catalan, 1, 6), vec![2, 8, 64, 640, 7168, 86016]);
        assert_eq!(counts(ModelId::Comm, 1, 6), vec![2, 6, 24, 138, 840, 5616]);
        assert_eq!(counts(ModelId::Assoc, 1, 6), vec![2, 8, 48, 352, 2880, 25216]);
        assert_eq!(counts(ModelId::Comm, 2, 4), vec![4, 20, 160, 1700]);
        assert_eq!(counts(ModelId::AssocComm, 1, 3)[..2], [2, 6]);
        assert_eq!(count_trees(ModelId::Catalan, 2, 1).unwrap(), BigUint::from(8u32));
        assert_eq!(count_trees(ModelId::Assoc, 3, 1).unwrap(), BigUint::from(48u32));
        assert_eq!(count_trees(ModelId::Comm, 2, 1).unwrap(), BigUint::from(6u32));
        assert!(count_trees(ModelId::Comm, 0, 1).is_err());
    }

    #[test]
    fn generation_matches_counts_small() {
        for model in ModelId::ALL {
            for n in 1..=2 {
                for m in 1..=5 {
                    let ts = generate_trees(model, m, n, &Limits::default()).unwrap();
                    assert_eq!(BigUint::from(ts.len()), count_trees(model, m, n).unwrap(), "{model} m={m} n={n}");
                    let set: std::collections::HashSet<_> = ts.iter().collect();
                    assert_eq!(set.len(), ts.len(), "duplicates in {model} m={m}");
                    assert!(ts.iter().all(|t| t.size() == m && t.is_well_formed()));
                }
            }
        }
    }

    #[test]
    fn generation_examples() {
        let l = Limits::default();
        let ts: Vec<String> = generate_trees(ModelId::Catalan, 1, 1, &l).unwrap().iter().map(|t| t.to_string()).collect();
        assert_eq!(ts, vec!["x1", "~x1"]);
        assert_eq!(generate_trees(ModelId::Comm, 2, 1, &l).unwrap().len(), 6);
        assert_eq!(generate_trees(ModelId::AssocComm, 2, 1, &l).unwrap().len(), 6);
    }

    #[test]
    fn cap_is_enforced() {
        let e = generate_trees(ModelId::Catalan, 4, 1, &Limits::with_cap(100)).unwrap_err();
        assert!(matches!(e, Error::Resource { .. }));
    }

    #[test]
    fn distribution_examples() {
        let l = Limits::default();
        let d = distribution(ModelId::Catalan, 1, 1, &l).unwrap();
        assert_eq!(d.total, BigUint::from(2u32));
        assert_eq!(d.count(&BoolFunc::var(1, 1).unwrap()), BigUint::one());
        let d = distribution(ModelId::Catalan, 2, 1, &l).unwrap();
        assert_eq!(d.total, BigUint::from(8u32));
        assert_eq!(d.count(&BoolFunc::constant(1, true).unwrap()), BigUint::from(2u32));
        assert_eq!(d.count(&BoolFunc::constant(1, false).unwrap()), BigUint::from(2u32));
        let d = distribution(ModelId::Comm, 2, 1, &l).unwrap();
        assert_eq!(d.total, BigUint::from(6u32));
        assert_eq!(d.count(&BoolFunc::constant(1, true).unwrap()), BigUint::one());
    }

    #[test]
    fn dp_distribution_matches_exhaustive() {
        for model in ModelId::ALL {
            for n in 1..=2 {
                for m in 1..=5 {
                    let a = distribution(model, m, n, &Limits::default()).unwrap();
                    let b = distribution_dp(model, m, n).unwrap();
                    assert_eq!(a, b, "{model} m={m} n={n}");
                }
            }
        }
    }

    #[test]
    fn simple_tautology_examples() {
        let st = |m, s| is_simple_tautology(&Tree::parse(m, s).unwrap());
        assert_eq!(st(ModelId::Catalan, "(or x1 ~x1)"), BTreeSet::from([1]));
        assert!(st(ModelId::Catalan, "(and (or x1 ~x1) x2)").is_empty());
        assert_eq!(st(ModelId::Catalan, "(or x1 (or ~x1 x2))"), BTreeSet::from([1]));
        assert_eq!(st(ModelId::Assoc, "(or x1 ~x1 x2)"), BTreeSet::from([1]));
    }

    #[test]
    fn simple_x_examples() {
        let sx = |m, s| is_simple_x(&Tree::parse(m, s).unwrap());
        assert_eq!(sx(ModelId::Catalan, "(and x1 (or x2 ~x2))"), SimpleX::XT(Literal::pos(1)));
        assert_eq!(sx(ModelId::Catalan, "(or x1 (and x1 x2))"), SimpleX::XX(Literal::pos(1)));
        assert_eq!(sx(ModelId::Catalan, "(and x1 x2)"), SimpleX::NotSimple);
        assert_eq!(sx(ModelId::Assoc, "(or x1 (and x2 x1 x3))"), SimpleX::XX(Literal::pos(1)));
        assert_eq!(sx(ModelId::Assoc, "(or x1 (and x2 x1 ~x1))"), SimpleX::XT(Literal::pos(1)));
        // flat shapes are not simple in the stratified models
        assert_eq!(sx(ModelId::Assoc, "(or x1 x3 (and x2 x1))"), SimpleX::NotSimple);
    }

    #[test]
    fn classify_examples() {
        let l = Limits::default();
        assert_eq!(classify_tautologies(ModelId::Catalan, 2, 1, &l).unwrap(), (2u32.into(), 0u32.into()));
        let (s, o) = classify_tautologies(ModelId::Assoc, 3, 1, &l).unwrap();
        // flat or-rooted triples containing both x1 and ~x1: 3 positions for the third leaf x 2 labels x 3 orders / ...
        let flat = generate_trees(ModelId::Assoc, 3, 1, &l)
            .unwrap()
            .iter()
            .filter(|t| t.root().conn() == Some(Conn::Or) && t.root().arity() == 3 && !is_simple_tautology(t).is_empty())
            .count();
        let nested = generate_trees(ModelId::Assoc, 3, 1, &l)
            .unwrap()
            .iter()
            .filter(|t| t.root().arity() == 2 && !is_simple_tautology(t).is_empty())
            .count();
        assert_eq!(s, BigUint::from(flat + nested));
        assert_eq!(flat, 6);
        let _ = o;
    }
}
