use super::translate::{conjunction, disjunction};
use super::*;
use crate::factor::GroundAtom;
use crate::ground::query_ve1;
use crate::lifted::infer;
use crate::symbol::Symbols;
use crate::InferenceOptions;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use proptest::prelude::*;

/// `f(a,X)` style atoms; an uppercase initial marks a variable.
fn atom(s: &mut Symbols, text: &str) -> PAtom {
    let text = text.trim();
    let (name, args) = match text.find('(') {
        Some(i) => (&text[..i], &text[i + 1..text.len() - 1]),
        None => (text, ""),
    };
    let args = args
        .split(',')
        .map(str::trim)
        .filter(|a| !a.is_empty())
        .map(|a| {
            if a.starts_with(|c: char| c.is_ascii_uppercase()) {
                PTerm::Var(a.to_string())
            } else {
                PTerm::Const(s.intern(a))
            }
        })
        .collect();
    PAtom::new(s.intern(name), args)
}

/// Splits a body at top-level commas.
fn goals(body: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0, 0);
    for (i, c) in body.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&body[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&body[start..]);
    out.into_iter().map(str::trim).filter(|g| !g.is_empty()).collect()
}

/// Minimal reader for the clauses used in these tests.
fn program(clauses: &[&str]) -> Program {
    let mut p = Program::new(Symbols::new());
    for c in clauses {
        let c = c.trim().trim_end_matches('.');
        let (head, body) = match c.find(":-") {
            Some(i) => (&c[..i], Some(&c[i + 2..])),
            None => (c, None),
        };
        if let Some(i) = head.find("::") {
            let pr: f64 = head[..i].trim().parse().unwrap();
            let h = atom(&mut p.symbols, &head[i + 2..]);
            let body = body.map(goals).unwrap_or_default().into_iter().map(|g| atom(&mut p.symbols, g)).collect();
            p.prob_facts.push(ProbFact { p: pr, head: h, body });
            continue;
        }
        let h = atom(&mut p.symbols, head);
        match body {
            None => p.facts.push(h),
            Some(b) => {
                let body = goals(b)
                    .into_iter()
                    .map(|g| match g.strip_prefix("\\+") {
                        Some(rest) => Literal {
                            atom: atom(&mut p.symbols, rest),
                            positive: false,
                        },
                        None => Literal {
                            atom: atom(&mut p.symbols, g),
                            positive: true,
                        },
                    })
                    .collect();
                p.rules.push(Rule { head: h, body });
            }
        }
    }
    p
}

fn ground(p: &mut Program, text: &str) -> GroundAtom {
    atom(&mut p.symbols, text).to_ground().unwrap()
}

fn domain(pred: &str, base: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{pred}({base}{i}).")).collect()
}

fn with_domains(clauses: &[&str], domains: &[Vec<String>]) -> Program {
    let mut all: Vec<&str> = clauses.to_vec();
    for d in domains {
        all.extend(d.iter().map(String::as_str));
    }
    program(&all)
}

const WORKSHOPS: [&str; 4] = [
    "series :- person(P), attends(P), sa(P).",
    "0.501::sa(P) :- person(P).",
    "attends(P) :- person(P), attr(A), at(P,A).",
    "0.3::at(P,A) :- person(P), attr(A).",
];

const PLATES: [&str; 16] = [
    "f :- e(Y).",
    "e(Y) :- d(Y), n1(Y).",
    "e(Y) :- y(Y), \\+d(Y), n2(Y).",
    "d(Y) :- c(X,Y).",
    "c(X,Y) :- b(X), n3(X,Y).",
    "c(X,Y) :- x(X), \\+b(X), n4(X,Y).",
    "b(X) :- a, n5(X).",
    "b(X) :- \\+a, n6(X).",
    "a :- n7.",
    "0.1::n1(Y) :- y(Y).",
    "0.2::n2(Y) :- y(Y).",
    "0.3::n3(X,Y) :- x(X), y(Y).",
    "0.4::n4(X,Y) :- x(X), y(Y).",
    "0.5::n5(X) :- x(X).",
    "0.6::n6(X) :- x(X).",
    "0.7::n7.",
];

fn workshops(n: usize, m: usize) -> Program {
    with_domains(&WORKSHOPS, &[domain("person", "p", n), domain("attr", "a", m)])
}

fn plates(nx: usize, ny: usize) -> Program {
    with_domains(&PLATES, &[domain("x", "x", nx), domain("y", "y", ny)])
}

fn check_all(p: &mut Program, query: &str, evidence: &[(&str, bool)]) -> f64 {
    let q = ground(p, query);
    let ev: Vec<(GroundAtom, bool)> = evidence.iter().map(|(a, v)| (ground(p, a), *v)).collect();
    let opts = InferenceOptions::default();
    let exact = enumerate(p, &q, &ev, DEFAULT_CAP, &opts).unwrap();
    let ev1: Vec<(GroundAtom, usize)> = ev.iter().map(|(a, v)| (a.clone(), usize::from(*v))).collect();
    for style in [Style::Compact, Style::Verbose] {
        let m = translate(p, style).unwrap();
        assert!(m.validate().is_empty(), "{:?}", m.validate());
        let ve1 = query_ve1(&m, &q, &ev1, &opts).unwrap();
        let lifted = infer(&m, &q, &ev1, &opts).unwrap().distribution;
        assert!((ve1[1] - exact[1]).abs() < 1e-9, "{style:?} ve1 {ve1:?} vs {exact:?}");
        assert!((lifted[1] - exact[1]).abs() < 1e-9, "{style:?} lifted {lifted:?} vs {exact:?}");
    }
    exact[1]
}

#[test]
fn cpt_tables() {
    assert_eq!(conjunction(&[true]), IDENTITY_F);
    assert_eq!(conjunction(&[true, true]), vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    assert_eq!(conjunction(&[false, true]), vec![1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
    assert_eq!(disjunction(2), vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    assert_eq!(disjunction(1), IDENTITY_F);
}

const IDENTITY_F: [f64; 4] = crate::factor::IDENTITY;

#[test]
fn enumeration_basics() {
    let mut p = program(&["0.1::s.", "q :- s."]);
    let q = ground(&mut p, "q");
    let opts = InferenceOptions::default();
    let d = enumerate(&p, &q, &[], DEFAULT_CAP, &opts).unwrap();
    assert!((d[1] - 0.1).abs() < 1e-15);
    let nothing = ground(&mut p, "r");
    assert_eq!(enumerate(&p, &nothing, &[], DEFAULT_CAP, &opts).unwrap(), vec![1.0, 0.0]);
    let s = ground(&mut p, "s");
    assert_eq!(enumerate(&p, &q, &[(s.clone(), true)], DEFAULT_CAP, &opts).unwrap(), vec![0.0, 1.0]);
    let mut noisy = program(&["0.5::s.", "0.5::t.", "q :- s.", "q :- t.", "r :- \\+q."]);
    let r = ground(&mut noisy, "r");
    let d = enumerate(&noisy, &r, &[], DEFAULT_CAP, &opts).unwrap();
    assert!((d[1] - 0.25).abs() < 1e-15);
}

#[test]
fn enumeration_cap() {
    let mut p = workshops(5, 5);
    let q = ground(&mut p, "series");
    let r = enumerate(&p, &q, &[], DEFAULT_CAP, &InferenceOptions::default());
    assert_eq!(r, Err(crate::Error::EnumerationCap { facts: 30, cap: 24 }));
}

#[test]
fn workshops_closed_form() {
    let mut p = workshops(2, 2);
    let v = check_all(&mut p, "series", &[]);
    let attends = 1.0 - 0.7f64.powi(2);
    let expected = 1.0 - (1.0 - 0.501 * attends).powi(2);
    assert!((v - expected).abs() < 1e-12);
    assert!((v - 0.445735).abs() < 1e-6);
}

#[test]
fn plates_agree() {
    let mut p = plates(2, 2);
    check_all(&mut p, "f", &[]);
    check_all(&mut p, "e(y1)", &[("a", true)]);
    check_all(&mut p, "b(x2)", &[("d(y1)", false)]);
}

#[test]
fn running_example_agrees() {
    let clauses = [
        "series :- s.",
        "series :- attends(P).",
        "attends(P) :- at(P,A).",
        "0.1::s.",
        "0.3::at(P,A) :- person(P), attribute(A).",
    ];
    let mut p = with_domains(&clauses, &[domain("person", "p", 3), domain("attribute", "a", 2)]);
    check_all(&mut p, "series", &[]);
    check_all(&mut p, "attends(p1)", &[("series", true)]);
}

#[test]
fn constants_repeats_and_uneven_rules() {
    let clauses = [
        "0.4::e(X,Y) :- n(X), n(Y).",
        "0.3::g(X) :- n(X).",
        "h(X) :- e(X,X).",
        "h(a) :- g(b).",
        "h(X) :- n(X), \\+g(X), e(X,Y), e(Y,b).",
        "k :- h(X), \\+m(X).",
        "m(X) :- g(X), g(X).",
        "w :- g(a), \\+g(a).",
        "u :- \\+w.",
        "n(a).",
        "n(b).",
        "n(c).",
    ];
    let mut p = program(&clauses);
    for q in ["h(a)", "h(b)", "h(c)", "k", "m(a)", "u"] {
        check_all(&mut p, q, &[]);
        check_all(&mut p, q, &[("g(c)", false)]);
    }
}

#[test]
fn rejected_programs() {
    let rec = program(&["0.5::e(a,b).", "p(X,Y) :- e(X,Y).", "p(X,Y) :- e(X,Z), p(Z,Y)."]);
    assert!(translate(&rec, Style::Compact).is_err());
    let overlap = program(&["0.5::e(X) :- n(X).", "0.2::e(a).", "n(a)."]);
    assert!(translate(&overlap, Style::Compact).is_err());
    let unsafe_rule = program(&["q(X) :- \\+ r(X).", "0.1::r(a)."]);
    assert!(translate(&unsafe_rule, Style::Compact).is_err());
    let loopy = program(&["0.5::s.", "p :- \\+q, s.", "q :- \\+p."]);
    assert!(loopy.validate().is_err());
}

#[test]
fn recursion_is_fine_for_enumeration() {
    let mut p = program(&[
        "0.5::e(a,b).",
        "0.5::e(b,c).",
        "p(X,Y) :- e(X,Y).",
        "p(X,Y) :- e(X,Z), p(Z,Y).",
    ]);
    let q = ground(&mut p, "p(a,c)");
    let d = enumerate(&p, &q, &[], DEFAULT_CAP, &InferenceOptions::default()).unwrap();
    assert!((d[1] - 0.25).abs() < 1e-15);
}

#[test]
fn workshops_compact_shape() {
    let p = workshops(3, 4);
    let m = translate(&p, Style::Compact).unwrap();
    assert_eq!(m.f1.len() + m.f2.len(), 7);
    assert_eq!(m.f2.len(), 2);
    let conj: Vec<_> = m.f1.iter().filter(|g| g.atoms.len() == 3).collect();
    assert_eq!(conj.len(), 1);
    assert_eq!(conj[0].table.values, vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn translation_is_sound_on_workshops(n in 1usize..=3, m in 1usize..=3, pick in 0usize..3, ev in any::<Option<bool>>()) {
        let mut p = workshops(n, m);
        let q = ["series", "attends(p1)", "sa(p1)"][pick];
        let e: Vec<(&str, bool)> = ev.map(|v| vec![("at(p1,a1)", v)]).unwrap_or_default();
        check_all(&mut p, q, &e);
    }

    #[test]
    fn translation_is_sound_on_plates(nx in 1usize..=2, ny in 1usize..=2, pick in 0usize..4) {
        let mut p = plates(nx, ny);
        let q = ["f", "e(y1)", "c(x1,y1)", "b(x1)"][pick];
        check_all(&mut p, q, &[]);
    }
}
