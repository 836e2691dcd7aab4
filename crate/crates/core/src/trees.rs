//! And/Or trees in the four models.
//!
//! A [`Tree`] is stored as a flat preorder array. Non-plane trees keep their
//! children sorted by the canonical order: leaves before internal nodes,
//! leaves by (variable, polarity), internal nodes by (connective, arity,
//! children lexicographically).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::boolfun::{full_word, literal_word, BoolFunc, Literal, MAX_VARS};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Conn {
    And,
    Or,
}

impl Conn {
    pub fn other(self) -> Conn {
        match self {
            Conn::And => Conn::Or,
            Conn::Or => Conn::And,
        }
    }

    pub fn apply(self, a: u64, b: u64) -> u64 {
        match self {
            Conn::And => a & b,
            Conn::Or => a | b,
        }
    }

    /// Neutral element of the connective as a packed table.
    pub fn unit(self, n: u32) -> u64 {
        match self {
            Conn::And => full_word(n),
            Conn::Or => 0,
        }
    }

    fn tag(self) -> u8 {
        match self {
            Conn::And => TAG_AND,
            Conn::Or => TAG_OR,
        }
    }
}

impl fmt::Display for Conn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Conn::And => "and",
            Conn::Or => "or",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelId {
    Catalan,
    Assoc,
    Comm,
    AssocComm,
}

impl ModelId {
    pub const ALL: [ModelId; 4] = [ModelId::Catalan, ModelId::Assoc, ModelId::Comm, ModelId::AssocComm];

    /// Children are ordered.
    pub fn is_plane(self) -> bool {
        matches!(self, ModelId::Catalan | ModelId::Assoc)
    }

    /// Every internal node has exactly two children.
    pub fn is_binary(self) -> bool {
        matches!(self, ModelId::Catalan | ModelId::Comm)
    }

    /// Arity at least two, and no node shares its connective with its parent.
    pub fn is_stratified(self) -> bool {
        !self.is_binary()
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelId::Catalan => "catalan",
            ModelId::Assoc => "assoc",
            ModelId::Comm => "comm",
            ModelId::AssocComm => "assoc-comm",
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "catalan" => Ok(ModelId::Catalan),
            "assoc" => Ok(ModelId::Assoc),
            "comm" => Ok(ModelId::Comm),
            "assoc-comm" | "assoccomm" => Ok(ModelId::AssocComm),
            _ => Err(Error::Input(format!(
                "unknown model `{s}` (catalan, assoc, comm, assoc-comm)"
            ))),
        }
    }
}

/// Unchecked recursive tree, as written by a user or read from text.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RawTree {
    Leaf(Literal),
    Op(Conn, Vec<RawTree>),
}

impl RawTree {
    pub fn leaf(lit: Literal) -> Self {
        RawTree::Leaf(lit)
    }

    pub fn and(children: Vec<RawTree>) -> Self {
        RawTree::Op(Conn::And, children)
    }

    pub fn or(children: Vec<RawTree>) -> Self {
        RawTree::Op(Conn::Or, children)
    }
}

impl fmt::Display for RawTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RawTree::Leaf(l) => write!(f, "{l}"),
            RawTree::Op(c, ch) => {
                write!(f, "({c}")?;
                for t in ch {
                    write!(f, " {t}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl FromStr for RawTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let spaced = s.replace('(', " ( ").replace(')', " ) ");
        let toks: Vec<&str> = spaced.split_whitespace().collect();
        let mut pos = 0;
        let t = parse_raw(&toks, &mut pos)?;
        if pos != toks.len() {
            return Err(Error::Input(format!("trailing input after tree: `{}`", toks[pos..].join(" "))));
        }
        Ok(t)
    }
}

fn parse_raw(toks: &[&str], pos: &mut usize) -> Result<RawTree> {
    let tok = *toks.get(*pos).ok_or_else(|| Error::Input("unexpected end of tree text".into()))?;
    *pos += 1;
    match tok {
        "(" => {
            let head = *toks.get(*pos).ok_or_else(|| Error::Input("missing connective".into()))?;
            *pos += 1;
            let conn = match head {
                "and" => Conn::And,
                "or" => Conn::Or,
                _ => return Err(Error::Input(format!("unknown connective `{head}`"))),
            };
            let mut children = Vec::new();
            loop {
                match toks.get(*pos) {
                    None => return Err(Error::Input("unbalanced parentheses".into())),
                    Some(&")") => {
                        *pos += 1;
                        break;
                    }
                    Some(_) => children.push(parse_raw(toks, pos)?),
                }
            }
            Ok(RawTree::Op(conn, children))
        }
        ")" => Err(Error::Input("unexpected `)`".into())),
        lit => Ok(RawTree::Leaf(lit.parse()?)),
    }
}

pub(crate) const TAG_POS: u8 = 0;
pub(crate) const TAG_NEG: u8 = 1;
pub(crate) const TAG_AND: u8 = 2;
pub(crate) const TAG_OR: u8 = 3;

/// One preorder node: `val` is the variable of a leaf or the arity of an
/// internal node, `span` the number of nodes in the subtree, `leaves` its size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Item {
    pub tag: u8,
    pub val: u8,
    pub span: u16,
    pub leaves: u16,
}

impl Item {
    pub fn leaf(lit: Literal) -> Self {
        Item { tag: if lit.neg { TAG_NEG } else { TAG_POS }, val: lit.var as u8, span: 1, leaves: 1 }
    }

    pub fn is_leaf(self) -> bool {
        self.tag < TAG_AND
    }

    pub fn literal(self) -> Literal {
        Literal { var: self.val as u32, neg: self.tag == TAG_NEG }
    }

    pub fn conn(self) -> Conn {
        if self.tag == TAG_AND {
            Conn::And
        } else {
            Conn::Or
        }
    }
}

/// Child subtrees of the node at the start of `items`.
pub(crate) fn child_slices(items: &[Item]) -> impl Iterator<Item = &[Item]> {
    let arity = if items[0].is_leaf() { 0 } else { items[0].val as usize };
    let mut pos = 1;
    (0..arity).map(move |_| {
        let s = &items[pos..pos + items[pos].span as usize];
        pos += s.len();
        s
    })
}

/// The canonical total order on subtrees.
pub(crate) fn cmp_subtrees(a: &[Item], b: &[Item]) -> Ordering {
    let (x, y) = (a[0], b[0]);
    match (x.is_leaf(), y.is_leaf()) {
        (true, true) => (x.val, x.tag).cmp(&(y.val, y.tag)),
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (false, false) => x
            .tag
            .cmp(&y.tag)
            .then(x.val.cmp(&y.val))
            .then_with(|| {
                for (ca, cb) in child_slices(a).zip(child_slices(b)) {
                    let o = cmp_subtrees(ca, cb);
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                Ordering::Equal
            }),
    }
}

/// Appends an internal node with the given child subtrees.
pub(crate) fn push_op(out: &mut Vec<Item>, conn: Conn, children: &[&[Item]]) {
    let span: usize = 1 + children.iter().map(|c| c.len()).sum::<usize>();
    let leaves: usize = children.iter().map(|c| c[0].leaves as usize).sum();
    out.push(Item { tag: conn.tag(), val: children.len() as u8, span: span as u16, leaves: leaves as u16 });
    for c in children {
        out.extend_from_slice(c);
    }
}

/// A well-formed tree of one model.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tree {
    model: ModelId,
    pub(crate) items: Vec<Item>,
}

/// Packed literal tables for evaluating trees on at most six variables.
#[derive(Clone, Debug)]
pub struct LitTables {
    n: u32,
    words: Vec<u64>,
}

impl LitTables {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 || n > 6 {
            return Err(Error::Input(format!("packed evaluation needs 1 <= n <= 6, got {n}")));
        }
        let words = (0..2 * n as usize).map(|c| literal_word(n, Literal::from_code(c))).collect();
        Ok(LitTables { n, words })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn get(&self, lit: Literal) -> u64 {
        self.words[lit.code()]
    }

    pub fn full(&self) -> u64 {
        full_word(self.n)
    }
}

/// Read-only view of one node.
#[derive(Clone, Copy)]
pub struct NodeRef<'a> {
    items: &'a [Item],
    index: usize,
}

impl<'a> NodeRef<'a> {
    /// Preorder index inside the whole tree.
    pub fn index(&self) -> usize {
        self.index
    }

    fn head(&self) -> Item {
        self.items[self.index]
    }

    pub fn is_leaf(&self) -> bool {
        self.head().is_leaf()
    }

    pub fn literal(&self) -> Option<Literal> {
        self.is_leaf().then(|| self.head().literal())
    }

    pub fn conn(&self) -> Option<Conn> {
        (!self.is_leaf()).then(|| self.head().conn())
    }

    pub fn arity(&self) -> usize {
        if self.is_leaf() {
            0
        } else {
            self.head().val as usize
        }
    }

    /// Number of leaves below (and including) this node.
    pub fn size(&self) -> usize {
        self.head().leaves as usize
    }

    pub fn span(&self) -> usize {
        self.head().span as usize
    }

    pub fn children(&self) -> impl Iterator<Item = NodeRef<'a>> + 'a {
        let items = self.items;
        let arity = self.arity();
        let mut pos = self.index + 1;
        (0..arity).map(move |_| {
            let r = NodeRef { items, index: pos };
            pos += items[pos].span as usize;
            r
        })
    }

    pub fn child(&self, k: usize) -> Option<NodeRef<'a>> {
        self.children().nth(k)
    }

    pub(crate) fn slice(&self) -> &'a [Item] {
        &self.items[self.index..self.index + self.span()]
    }

    pub fn to_raw(&self) -> RawTree {
        match self.literal() {
            Some(l) => RawTree::Leaf(l),
            None => RawTree::Op(self.head().conn(), self.children().map(|c| c.to_raw()).collect()),
        }
    }

    /// Leaves below this node joined to it by nodes carrying `conn` only,
    /// as preorder indices. A leaf node returns itself.
    pub fn conn_path_leaves(&self, conn: Conn) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![*self];
        while let Some(v) = stack.pop() {
            match v.conn() {
                None => out.push(v.index),
                Some(c) if c == conn => stack.extend(v.children()),
                Some(_) => {}
            }
        }
        out.sort_unstable();
        out
    }
}

fn flatten(raw: &RawTree, model: ModelId, parent: Option<Conn>, out: &mut Vec<Item>) -> Result<()> {
    match raw {
        RawTree::Leaf(l) => {
            if l.var == 0 || l.var > MAX_VARS {
                return Err(Error::Input(format!("variable {l} out of range")));
            }
            out.push(Item::leaf(*l));
        }
        RawTree::Op(conn, children) => {
            if model.is_binary() && children.len() != 2 {
                return Err(Error::Structure(format!(
                    "{model} nodes have exactly 2 children, found {} under `{conn}`",
                    children.len()
                )));
            }
            if children.len() < 2 {
                return Err(Error::Structure(format!("`{conn}` node with {} child(ren)", children.len())));
            }
            if children.len() > u8::MAX as usize {
                return Err(Error::Input("node arity above 255".into()));
            }
            if model.is_stratified() && parent == Some(*conn) {
                return Err(Error::Structure(format!(
                    "`{conn}` node under a `{conn}` parent breaks stratification in {model}"
                )));
            }
            let mut subs: Vec<Vec<Item>> = Vec::with_capacity(children.len());
            for c in children {
                let mut v = Vec::new();
                flatten(c, model, Some(*conn), &mut v)?;
                subs.push(v);
            }
            if !model.is_plane() {
                subs.sort_by(|a, b| cmp_subtrees(a, b));
            }
            let refs: Vec<&[Item]> = subs.iter().map(|v| v.as_slice()).collect();
            let span: usize = 1 + refs.iter().map(|c| c.len()).sum::<usize>();
            if span > u16::MAX as usize {
                return Err(Error::Input("tree too large".into()));
            }
            push_op(out, *conn, &refs);
        }
    }
    Ok(())
}

/// Checks model rules and, for non-plane models, sorts children canonically.
pub fn canonicalize(raw: &RawTree, model: ModelId) -> Result<Tree> {
    let mut items = Vec::new();
    flatten(raw, model, None, &mut items)?;
    Ok(Tree { model, items })
}

impl Tree {
    pub(crate) fn from_items(model: ModelId, items: Vec<Item>) -> Self {
        Tree { model, items }
    }

    pub fn parse(model: ModelId, text: &str) -> Result<Self> {
        canonicalize(&text.parse()?, model)
    }

    pub fn leaf(model: ModelId, lit: Literal) -> Self {
        Tree { model, items: vec![Item::leaf(lit)] }
    }

    /// Joins subtrees of the same model under a new root.
    pub fn join(conn: Conn, children: &[Tree]) -> Result<Self> {
        let model = children
            .first()
            .map(|t| t.model)
            .ok_or_else(|| Error::Structure("node without children".into()))?;
        if children.iter().any(|t| t.model != model) {
            return Err(Error::Input("children from different models".into()));
        }
        let raw = RawTree::Op(conn, children.iter().map(|t| t.to_raw()).collect());
        canonicalize(&raw, model)
    }

    pub fn model(&self) -> ModelId {
        self.model
    }

    pub fn size(&self) -> usize {
        self.items[0].leaves as usize
    }

    pub fn node_count(&self) -> usize {
        self.items.len()
    }

    pub fn root(&self) -> NodeRef<'_> {
        NodeRef { items: &self.items, index: 0 }
    }

    pub fn node(&self, index: usize) -> NodeRef<'_> {
        NodeRef { items: &self.items, index }
    }

    pub fn to_raw(&self) -> RawTree {
        self.root().to_raw()
    }

    /// Leaves in left-to-right order with their preorder indices.
    pub fn leaves(&self) -> impl Iterator<Item = (usize, Literal)> + '_ {
        self.items.iter().enumerate().filter(|(_, it)| it.is_leaf()).map(|(i, it)| (i, it.literal()))
    }

    pub fn max_var(&self) -> u32 {
        self.leaves().map(|(_, l)| l.var).max().unwrap_or(0)
    }

    pub(crate) fn set_leaf(&mut self, index: usize, lit: Literal) {
        debug_assert!(self.items[index].is_leaf());
        self.items[index] = Item::leaf(lit);
    }

    /// Packed truth table; `stack` is scratch space reused across calls.
    pub fn word_with(&self, lits: &LitTables, stack: &mut Vec<u64>) -> u64 {
        self.word_override(lits, stack, |_| None)
    }

    pub fn word(&self, lits: &LitTables) -> u64 {
        self.word_with(lits, &mut Vec::with_capacity(self.items.len()))
    }

    /// Evaluation where `force(i)` may replace the table of the leaf at preorder index `i`.
    pub fn word_override(
        &self,
        lits: &LitTables,
        stack: &mut Vec<u64>,
        force: impl Fn(usize) -> Option<u64>,
    ) -> u64 {
        stack.clear();
        for (i, it) in self.items.iter().enumerate().rev() {
            if it.is_leaf() {
                stack.push(force(i).unwrap_or_else(|| lits.get(it.literal())));
            } else {
                let conn = it.conn();
                let mut acc = stack.pop().expect("child value");
                for _ in 1..it.val {
                    acc = conn.apply(acc, stack.pop().expect("child value"));
                }
                stack.push(acc);
            }
        }
        stack.pop().expect("root value")
    }

    /// The function computed on `n` variables.
    pub fn function(&self, n: u32) -> Result<BoolFunc> {
        let mv = self.max_var();
        if mv > n {
            return Err(Error::Input(format!("tree uses x{mv} but n = {n}")));
        }
        if n <= 6 {
            return BoolFunc::from_word(n, self.word(&LitTables::new(n)?));
        }
        let mut stack: Vec<BoolFunc> = Vec::new();
        for it in self.items.iter().rev() {
            if it.is_leaf() {
                stack.push(BoolFunc::literal(n, it.literal())?);
            } else {
                let mut acc = stack.pop().expect("child value");
                for _ in 1..it.val {
                    let c = stack.pop().expect("child value");
                    acc = match it.conn() {
                        Conn::And => acc.and(&c)?,
                        Conn::Or => acc.or(&c)?,
                    };
                }
                stack.push(acc);
            }
        }
        Ok(stack.pop().expect("root value"))
    }

    /// Swaps connectives and negates leaves; computes the negated function.
    pub fn dual(&self) -> Tree {
        let mut items = self.items.clone();
        for it in &mut items {
            it.tag ^= 1;
        }
        let t = Tree { model: self.model, items };
        if self.model.is_plane() {
            t
        } else {
            canonicalize(&t.to_raw(), self.model).expect("dual of a valid tree is valid")
        }
    }

    /// Re-checks the model rules; true for every tree built by this crate.
    pub fn is_well_formed(&self) -> bool {
        canonicalize(&self.to_raw(), self.model).map(|t| t == *self).unwrap_or(false)
    }

    /// Compares subtrees in the canonical order.
    pub fn cmp_canonical(&self, other: &Tree) -> Ordering {
        cmp_subtrees(&self.items, &other.items)
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_raw())
    }
}
