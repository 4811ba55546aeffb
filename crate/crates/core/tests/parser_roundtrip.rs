//! Printing then parsing gives back the same expression.

use std::collections::BTreeMap;

use operadix::expr_parser::{elaborate, parse, parse_expr, print_expr, ComposeExpr, Declaration, Program};
use operadix::{default_config, FlatState, OperadId, Position};
use proptest::prelude::*;

fn arb_id() -> impl Strategy<Value = OperadId> {
    "[a-zA-Z_][a-zA-Z0-9_]{0,5}".prop_filter_map("reserved", |s| OperadId::new(s).ok())
}

fn arb_expr() -> impl Strategy<Value = ComposeExpr> {
    arb_id().prop_map(ComposeExpr::Atom).prop_recursive(6, 40, 2, |inner| {
        (inner.clone(), 1usize..100, inner)
            .prop_map(|(l, i, r)| ComposeExpr::compose(l, Position::new(i).unwrap(), r))
    })
}

/// A well-formed program: distinct atoms, positions within the left
/// operand's foliage.
fn arb_program() -> impl Strategy<Value = Program> {
    prop::collection::vec((1usize..=3, any::<prop::sample::Index>(), any::<prop::sample::Index>()), 1..7)
        .prop_map(|parts| {
            let decls: Vec<Declaration> = parts
                .iter()
                .enumerate()
                .map(|(k, (arity, _, _))| Declaration {
                    id: OperadId::new(format!("a{k}")).unwrap(),
                    arity: *arity,
                })
                .collect();
            let arities: BTreeMap<OperadId, usize> = decls.iter().map(|d| (d.id.clone(), d.arity)).collect();
            // fold atoms into a random shape: each new atom either becomes the
            // right operand of the whole, or the left operand of a new node
            let mut expr = ComposeExpr::Atom(decls[0].id.clone());
            for (d, (_, at, side)) in decls.iter().zip(&parts).skip(1) {
                let atom = ComposeExpr::Atom(d.id.clone());
                let (l, r) = if side.index(2) == 0 || arities[&d.id] == 1 {
                    (expr, atom)
                } else {
                    (atom, expr)
                };
                let n = l.leaf_count(&arities).unwrap();
                expr = ComposeExpr::compose(l, Position::new(1 + at.index(n)).unwrap(), r);
            }
            Program { decls, expr }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn print_parse(e in arb_expr()) {
        let text = print_expr(&e);
        prop_assert_eq!(parse_expr(&text).unwrap(), e);
    }

    #[test]
    fn unparenthesized_chain_is_left_assoc(ids in prop::collection::vec(arb_id(), 2..6), i in 1usize..9) {
        let text = ids.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(&format!(" o_{i} "));
        let mut want = ComposeExpr::Atom(ids[0].clone());
        for x in &ids[1..] {
            want = ComposeExpr::compose(want, Position::new(i).unwrap(), ComposeExpr::Atom(x.clone()));
        }
        prop_assert_eq!(parse_expr(&text).unwrap(), want);
    }

    #[test]
    fn elaboration_matches_leaf_count(p in arb_program()) {
        let src = p
            .decls
            .iter()
            .map(|d| format!("{}:{};", d.id, d.arity))
            .chain([print_expr(&p.expr)])
            .collect::<Vec<_>>()
            .join(" ");
        let parsed = parse(&src).unwrap();
        prop_assert_eq!(&parsed, &p);
        let config = default_config();
        let events = elaborate(&p, &config).unwrap();
        let state = events.iter().fold(FlatState::new(config), |s, e| s.apply(e).unwrap());
        let roots: Vec<&OperadId> = state.roots().collect();
        prop_assert_eq!(roots.len(), 1);
        prop_assert_eq!(roots[0], p.expr.root());
        let leaves = p.expr.leaf_count(&p.arities()).unwrap();
        prop_assert_eq!(state.foliage_of(roots[0]).unwrap().len(), leaves);
        let tree = p.expr.to_tree(&p.arities()).unwrap();
        let view = tree.flat_view();
        prop_assert_eq!(&view.in_map, &state.relations().in_op);
    }
}
