use std::collections::BTreeSet;

use hetlift::bench::{self, Problem, Sizes};
use hetlift::pfl::{parse_pfl, print_pfl};
use hetlift::problog::parse_problog;
use hetlift_core::model::isomorphic;
use hetlift_core::problog::{translate, Style};
use hetlift_core::{Model, Sym};
use proptest::prelude::*;

fn names(m: &Model) -> BTreeSet<String> {
    (0..m.symbols.len() as u32).map(|i| m.symbols.name(Sym(i)).to_string()).collect()
}

fn check(src: &str, style: Style) -> Result<(), TestCaseError> {
    let p = parse_problog(src).unwrap();
    let direct = translate(&p, style).unwrap();
    let text = print_pfl(&direct).unwrap();
    let reparsed = parse_pfl(&text).unwrap();
    prop_assert!(isomorphic(&direct, &reparsed, &names(&direct)), "{text}");
    prop_assert_eq!(print_pfl(&reparsed).unwrap(), text);
    Ok(())
}

fn style() -> impl Strategy<Value = Style> {
    prop_oneof![Just(Style::Compact), Just(Style::Verbose)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn workshops_round_trip(n in 1usize..=4, m in 1usize..=4, s in style()) {
        let src = bench::generate(Problem::WorkshopsAttributes, Sizes { n: Some(n), m: Some(m), ..Sizes::default() });
        check(&src, s)?;
    }

    #[test]
    fn plates_round_trip(x in 1usize..=3, y in 1usize..=3, s in style()) {
        let src = bench::generate(Problem::Plates, Sizes { x: Some(x), y: Some(y), ..Sizes::default() });
        check(&src, s)?;
    }

    #[test]
    fn uneven_domains_round_trip(edges in proptest::collection::btree_set((0usize..3, 0usize..3), 1..6), s in style()) {
        let mut src = String::from("0.4::r(X,Y) :- e(X,Y).\nh(X) :- e(X,Y), r(X,Y).\nh(X) :- n(X), \\+ g(X).\n0.3::g(X) :- n(X).\n");
        for i in 0..3 {
            src.push_str(&format!("n(c{i}).\n"));
        }
        for (a, b) in edges {
            src.push_str(&format!("e(c{a},c{b}).\n"));
        }
        check(&src, s)?;
    }
}
