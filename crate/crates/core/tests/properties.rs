use boolform::complexity::complexity;
use boolform::enumerate::Limits;
use boolform::patterns::{count_restrictions, match_pattern, reassemble, PatternId, PatternSpec};
use boolform::series::{q, PowerSeries};
use boolform::trees::canonicalize;
use boolform::{BoolFunc, Conn, Literal, ModelId, RawTree, Tree};
use proptest::prelude::*;

const N: u32 = 3;

fn literal() -> impl Strategy<Value = Literal> {
    (1..=N, any::<bool>()).prop_map(|(v, neg)| if neg { Literal::neg(v) } else { Literal::pos(v) })
}

/// Random raw trees obeying the rules of `model`.
fn raw_tree(model: ModelId) -> BoxedStrategy<RawTree> {
    fn go(model: ModelId, depth: u32, parent: Option<Conn>) -> BoxedStrategy<RawTree> {
        let leaf = literal().prop_map(RawTree::Leaf).boxed();
        if depth == 0 {
            return leaf;
        }
        let conns: Vec<Conn> = match (model.is_stratified(), parent) {
            (true, Some(p)) => vec![p.other()],
            _ => vec![Conn::And, Conn::Or],
        };
        let arity = if model.is_binary() { 2..3usize } else { 2..4usize };
        let node = (prop::sample::select(conns), arity)
            .prop_flat_map(move |(c, k)| {
                prop::collection::vec(go(model, depth - 1, Some(c)), k).prop_map(move |kids| RawTree::Op(c, kids))
            })
            .boxed();
        prop_oneof![1 => leaf, 2 => node].boxed()
    }
    go(model, 3, None)
}

fn model() -> impl Strategy<Value = ModelId> {
    prop::sample::select(ModelId::ALL.to_vec())
}

fn tree() -> impl Strategy<Value = Tree> {
    model().prop_flat_map(|m| raw_tree(m).prop_map(move |r| canonicalize(&r, m).unwrap()))
}

fn series(order: usize) -> impl Strategy<Value = PowerSeries> {
    prop::collection::vec(-20i64..20, order).prop_map(|v| PowerSeries::from_coeffs(v.into_iter().map(q).collect()))
}

proptest! {
    #[test]
    fn negation_is_an_involution(w in 0u64..256) {
        let f = BoolFunc::from_word(3, w).unwrap();
        prop_assert_eq!(f.negate().negate(), f.clone());
        prop_assert_eq!(f.essential_vars(), f.negate().essential_vars());
        let back: BoolFunc = f.to_string().parse().unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn extension_keeps_essential_variables(w in 0u64..16) {
        let f = BoolFunc::from_word(2, w).unwrap();
        prop_assert_eq!(f.extend(4).unwrap().essential_vars(), f.essential_vars());
    }

    #[test]
    fn canonical_form_is_stable(t in tree()) {
        prop_assert!(t.is_well_formed());
        let again = canonicalize(&t.to_raw(), t.model()).unwrap();
        prop_assert_eq!(&again, &t);
        let parsed = Tree::parse(t.model(), &t.to_string()).unwrap();
        prop_assert_eq!(parsed, t);
    }

    #[test]
    fn dual_tree_computes_negation(t in tree()) {
        let f = t.function(N).unwrap();
        prop_assert_eq!(t.dual().function(N).unwrap(), f.negate());
        prop_assert_eq!(t.dual().dual(), t);
    }

    #[test]
    fn patterns_cover_the_tree(t in tree(), depth in 1usize..3, dual in any::<bool>()) {
        let base = if dual { PatternId::S } else { PatternId::for_model(t.model()) };
        let spec = PatternSpec::power(base, depth);
        let m = match_pattern(&t, &spec);
        prop_assert_eq!(reassemble(&t, &m).unwrap(), t.clone());
        let r = count_restrictions(&t, &m).unwrap();
        prop_assert!(r.restrictions >= r.repetitions);
        prop_assert!(!m.leaves.is_empty());
    }

    #[test]
    fn series_products_commute(a in series(8), b in series(8)) {
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        let sum = &a + &b;
        prop_assert_eq!(&sum - &b, a);
    }

    #[test]
    fn reciprocal_inverts(mut a in series(8), c in 1i64..5) {
        let mut v = a.coeffs().to_vec();
        v[0] = q(c);
        a = PowerSeries::from_coeffs(v);
        let one = a.mul(&a.recip().unwrap());
        prop_assert_eq!(one, PowerSeries::constant(q(1), a.order()));
    }

    #[test]
    fn complexity_of_negation(w in 0u64..16, m in model()) {
        let f = BoolFunc::from_word(2, w).unwrap();
        let a = complexity(&f, m, &Limits::default()).unwrap();
        let b = complexity(&f.negate(), m, &Limits::default()).unwrap();
        prop_assert_eq!((a.l, a.count()), (b.l, b.count()));
        for t in &a.trees {
            prop_assert_eq!(t.function(2).unwrap(), f.clone());
        }
    }
}
