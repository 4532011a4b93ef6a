use super::*;
use crate::constraint::Constraint;
use crate::ground::query_ve1;
use crate::symbol::Symbols;
use proptest::prelude::*;

struct Builder {
    m: Model,
}

impl Builder {
    fn new() -> Builder {
        Builder {
            m: Model::new(Symbols::new()),
        }
    }

    fn sym(&mut self, s: &str) -> Sym {
        self.m.symbols.intern(s)
    }

    fn consts(&mut self, base: &str, n: usize) -> Vec<Sym> {
        (1..=n).map(|i| self.sym(&alloc::format!("{base}{i}"))).collect()
    }

    fn atom(&mut self, f: &str, vars: &[Logvar]) -> Atom {
        let f = self.sym(f);
        Atom::boolean(f, vars.iter().map(|&v| Term::Var(v)).collect())
    }

    fn add(&mut self, kind: Kind, atoms: Vec<Atom>, values: Vec<f64>, schema: Vec<Logvar>, cols: Vec<Vec<Sym>>) {
        let c = Constraint::product(schema, cols).unwrap();
        self.m.add(Parfactor::new(kind, atoms, values, c).unwrap());
    }

    fn ground(&mut self, f: &str, args: &[&str]) -> GroundAtom {
        let f = self.sym(f);
        let args = args.iter().map(|a| self.sym(a)).collect();
        GroundAtom::new(f, args)
    }
}

/// Noisy-OR contribution of a cause with strength q to a deputy E'.
fn noisy(q: f64) -> Vec<f64> {
    vec![1.0, 1.0 - q, 0.0, q]
}

/// People attend when one of their attributes fires; the series happens
/// when one attendee triggers it.
fn workshops(n: usize, m: usize, pa: f64, qa: f64, s: f64) -> Builder {
    let mut b = Builder::new();
    let p = b.m.new_logvar("P");
    let a = b.m.new_logvar("A");
    let people = b.consts("p", n);
    let attrs = b.consts("a", m);
    let at = b.atom("at", &[p, a]);
    b.add(Kind::Bayes, vec![at.clone()], vec![1.0 - pa, pa], vec![p, a], vec![people.clone(), attrs.clone()]);
    let att1 = b.atom("attends1", &[p]);
    b.add(Kind::Het, vec![att1.clone(), at], noisy(qa), vec![p, a], vec![people.clone(), attrs]);
    let att = b.atom("attends", &[p]);
    b.add(Kind::Deputy, vec![att.clone(), att1], crate::factor::IDENTITY.to_vec(), vec![p], vec![people.clone()]);
    let s1 = b.atom("series1", &[]);
    b.add(Kind::Het, vec![s1.clone(), att], noisy(s), vec![p], vec![people]);
    let series = b.atom("series", &[]);
    b.add(Kind::Deputy, vec![series, s1], crate::factor::IDENTITY.to_vec(), vec![], vec![]);
    b
}

fn closed_form(n: usize, m: usize, pa: f64, qa: f64, s: f64) -> f64 {
    let attends = 1.0 - (1.0 - pa * qa).powi(m as i32);
    1.0 - (1.0 - s * attends).powi(n as i32)
}

#[test]
fn workshops_matches_closed_form() {
    for (n, m) in [(1, 1), (2, 3), (5, 10), (50, 1000)] {
        let mut b = workshops(n, m, 0.7, 0.3, 0.501);
        let q = b.ground("series", &[]);
        let r = infer(&b.m, &q, &[], &InferenceOptions::default()).unwrap();
        let expected = closed_form(n, m, 0.7, 0.3, 0.501);
        assert!((r.distribution[1] - expected).abs() < 1e-9, "n={n} m={m}");
    }
}

#[test]
fn workshops_trace_does_not_depend_on_domain_size() {
    let trace = |m: usize| {
        let mut b = workshops(7, m, 0.7, 0.3, 0.501);
        let q = b.ground("series", &[]);
        infer(&b.m, &q, &[], &InferenceOptions::default()).unwrap().trace
    };
    let t = trace(10);
    assert!(t.iter().all(|s| s.op != Op::Split));
    assert_eq!(t, trace(500));
}

#[test]
fn query_on_an_individual_splits_it_off() {
    let mut b = workshops(3, 2, 0.6, 0.5, 0.4);
    let q = b.ground("attends", &["p2"]);
    let lifted = infer(&b.m, &q, &[], &InferenceOptions::default()).unwrap();
    let ve1 = query_ve1(&b.m, &q, &[], &InferenceOptions::default()).unwrap();
    for (x, y) in lifted.distribution.iter().zip(&ve1) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn evidence_and_unknown_atoms() {
    let mut b = workshops(3, 2, 0.6, 0.5, 0.4);
    let q = b.ground("series", &[]);
    let e = vec![(b.ground("at", &["p1", "a2"]), 1), (b.ground("attends", &["p3"]), 0)];
    let lifted = infer(&b.m, &q, &e, &InferenceOptions::default()).unwrap();
    let ve1 = query_ve1(&b.m, &q, &e, &InferenceOptions::default()).unwrap();
    for (x, y) in lifted.distribution.iter().zip(&ve1) {
        assert!((x - y).abs() < 1e-12);
    }
    let unknown = b.ground("attends", &["nobody"]);
    assert!(matches!(infer(&b.m, &unknown, &[], &InferenceOptions::default()), Err(Error::UnknownQuery(_))));
    let conv = vec![(b.ground("attends1", &["p1"]), 1)];
    assert!(infer(&b.m, &q, &conv, &InferenceOptions::default()).is_err());
}

#[test]
fn inconsistent_evidence_is_reported() {
    let mut b = workshops(2, 2, 0.6, 0.5, 0.4);
    let q = b.ground("series", &[]);
    // No attribute fires, yet somebody attends.
    let mut e = Vec::new();
    for p in ["p1", "p2"] {
        for a in ["a1", "a2"] {
            e.push((b.ground("at", &[p, a]), 0));
        }
    }
    e.push((b.ground("attends", &["p1"]), 1));
    assert!(matches!(infer(&b.m, &q, &e, &InferenceOptions::default()), Err(Error::InconsistentEvidence)));
}

/// b(X) and d(Y) coupled by one pairwise factor for every (X, Y).
fn coupled(nx: usize, ny: usize, prior: [f64; 2], pair: [f64; 4]) -> Builder {
    let mut b = Builder::new();
    let x = b.m.new_logvar("X");
    let y = b.m.new_logvar("Y");
    let xs = b.consts("x", nx);
    let ys = b.consts("y", ny);
    let bx = b.atom("b", &[x]);
    let dy = b.atom("d", &[y]);
    b.add(Kind::Markov, vec![bx.clone()], prior.to_vec(), vec![x], vec![xs.clone()]);
    b.add(Kind::Markov, vec![bx, dy], pair.to_vec(), vec![x, y], vec![xs, ys]);
    b
}

#[test]
fn counting_conversion_keeps_the_model_lifted() {
    let mut b = coupled(6, 4, [0.3, 0.7], [0.9, 0.2, 0.4, 1.5]);
    let q = b.ground("b", &["x1"]);
    let r = infer(&b.m, &q, &[], &InferenceOptions::default()).unwrap();
    let ve1 = query_ve1(&b.m, &q, &[], &InferenceOptions::default()).unwrap();
    assert!((r.distribution[0] - ve1[0]).abs() < 1e-12);
    assert!(r.trace.iter().any(|s| s.op == Op::CountingConvert));
}

#[test]
fn cell_budget_is_respected() {
    let mut b = coupled(3, 3, [0.3, 0.7], [0.9, 0.2, 0.4, 1.5]);
    let q = b.ground("b", &["x1"]);
    let opts = InferenceOptions {
        cell_budget: 1,
        interrupt: None,
    };
    assert!(infer(&b.m, &q, &[], &opts).is_err());
}

#[test]
fn interrupt_aborts() {
    let mut b = workshops(3, 3, 0.5, 0.5, 0.5);
    let q = b.ground("series", &[]);
    let stop = || true;
    let opts = InferenceOptions {
        cell_budget: 1000,
        interrupt: Some(&stop),
    };
    assert!(matches!(infer(&b.m, &q, &[], &opts), Err(Error::Interrupted)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn workshops_agree_with_ve1(
        n in 1usize..=3, m in 1usize..=3,
        pa in 0.05f64..0.95, qa in 0.05f64..0.95, s in 0.05f64..0.95,
        query in 0usize..4, ev in proptest::option::of((0usize..3, any::<bool>())),
    ) {
        let mut b = workshops(n, m, pa, qa, s);
        let q = match query {
            0 => b.ground("series", &[]),
            1 => b.ground("attends", &["p1"]),
            2 => b.ground("at", &["p1", "a1"]),
            _ => b.ground("series1", &[]),
        };
        let e: Vec<(GroundAtom, usize)> = match ev {
            Some((0, v)) => vec![(b.ground("attends", &[&alloc::format!("p{n}")]), usize::from(v))],
            Some((1, v)) => vec![(b.ground("at", &[&alloc::format!("p{n}"), "a1"]), usize::from(v))],
            Some((_, v)) => vec![(b.ground("series", &[]), usize::from(v))],
            None => vec![],
        };
        let e: Vec<_> = e.into_iter().filter(|(a, _)| *a != q).collect();
        let opts = InferenceOptions::default();
        let lifted = infer(&b.m, &q, &e, &opts);
        let ve1 = query_ve1(&b.m, &q, &e, &opts);
        match (lifted, ve1) {
            (Ok(l), Ok(v)) => {
                for (x, y) in l.distribution.iter().zip(&v) {
                    prop_assert!((x - y).abs() < 1e-9, "{:?} vs {:?}", l.distribution, v);
                }
            }
            (Err(Error::InconsistentEvidence), Err(Error::InconsistentEvidence)) => {}
            (l, v) => prop_assert!(false, "{:?} vs {:?}", l.map(|r| r.distribution), v),
        }
    }

    #[test]
    fn coupled_agree_with_ve1(
        nx in 1usize..=4, ny in 1usize..=3,
        prior in proptest::array::uniform2(0.05f64..1.0),
        pair in proptest::array::uniform4(0.05f64..2.0),
        on_d in any::<bool>(),
    ) {
        let mut b = coupled(nx, ny, prior, pair);
        let q = if on_d { b.ground("d", &["y1"]) } else { b.ground("b", &["x1"]) };
        let opts = InferenceOptions::default();
        let l = infer(&b.m, &q, &[], &opts).unwrap();
        let v = query_ve1(&b.m, &q, &[], &opts).unwrap();
        prop_assert!((l.distribution[1] - v[1]).abs() < 1e-9);
    }
}
