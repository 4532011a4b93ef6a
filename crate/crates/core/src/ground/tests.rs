use super::*;
use crate::symbol::Sym;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn t(dims: Vec<usize>, v: Vec<f64>) -> Table {
    Table::new(dims, v).unwrap()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn multiply_examples() {
    let a = GroundFactor::homogeneous(vec![0], t(vec![2], vec![2.0, 3.0]));
    let b = GroundFactor::homogeneous(vec![0], t(vec![2], vec![5.0, 7.0]));
    assert_eq!(multiply(&a, &b).unwrap().table.values, vec![10.0, 21.0]);
    assert_eq!(multiply(&a, &GroundFactor::unit()).unwrap(), a);
    let het = GroundFactor::new(vec![0], t(vec![2], vec![1.0, 1.0]), vec![true]);
    assert!(matches!(multiply(&het, &het), Err(Error::NotApplicable(_))));
}

#[test]
fn sum_out_examples() {
    let s = GroundFactor::homogeneous(vec![0], t(vec![2], vec![0.9, 0.1]));
    assert!(close(&sum_out(&s, 0).unwrap().table.values, &[1.0], 1e-15));
    let ab = GroundFactor::homogeneous(vec![0, 1], t(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]));
    assert_eq!(sum_out(&ab, 1).unwrap().table.values, vec![3.0, 7.0]);
    let het = GroundFactor::new(vec![0], t(vec![2], vec![1.0, 1.0]), vec![true]);
    assert!(sum_out(&het, 0).is_err());
}

#[test]
fn het_multiply_single_convergent() {
    let (p0, p1, q0, q1) = (0.2, 0.7, 0.4, 0.9);
    let a = GroundFactor::new(vec![0], t(vec![2], vec![p0, p1]), vec![true]);
    let b = GroundFactor::new(vec![0], t(vec![2], vec![q0, q1]), vec![true]);
    let c = het_multiply(&a, &b).unwrap();
    assert!(close(&c.table.values, &[p0 * q0, p0 * q1 + p1 * q0 + p1 * q1], 1e-15));
    let unit = GroundFactor::new(vec![0], t(vec![2], vec![1.0, 0.0]), vec![true]);
    assert!(close(&het_multiply(&a, &unit).unwrap().table.values, &a.table.values, 1e-15));
}

/// Heterogeneous multiplication written out for two shared convergent randvars and one regular one.
fn eq2_two(phi: &Table, psi: &Table) -> Vec<f64> {
    let or = |x: usize, y: usize| x | y;
    let mut out = vec![0.0; 8];
    for e1 in 0..2 {
        for e2 in 0..2 {
            for a in 0..2 {
                let mut s = 0.0;
                for x1 in 0..2 {
                    for y1 in 0..2 {
                        for x2 in 0..2 {
                            for y2 in 0..2 {
                                if or(x1, y1) == e1 && or(x2, y2) == e2 {
                                    s += phi.lookup(&[x1, x2, a]).unwrap() * psi.lookup(&[y1, y2, a]).unwrap();
                                }
                            }
                        }
                    }
                }
                out[e1 * 4 + e2 * 2 + a] = s;
            }
        }
    }
    out
}

fn random_table(rng: &mut StdRng, dims: Vec<usize>) -> Table {
    let n = dims.iter().product();
    Table::new(dims, (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap()
}

#[test]
fn het_multiply_two_convergent_matches_eq2() {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..20 {
        let phi = random_table(&mut rng, vec![2, 2, 2]);
        let psi = random_table(&mut rng, vec![2, 2, 2]);
        let a = GroundFactor::new(vec![0, 1, 2], phi.clone(), vec![true, true, false]);
        let b = GroundFactor::new(vec![0, 1, 2], psi.clone(), vec![true, true, false]);
        let c = het_multiply(&a, &b).unwrap();
        assert!(close(&c.table.values, &eq2_two(&phi, &psi), 1e-12));
    }
}

#[test]
fn het_multiply_rejects_mixed_roles() {
    let a = GroundFactor::new(vec![0], t(vec![2], vec![1.0, 1.0]), vec![true]);
    let b = GroundFactor::homogeneous(vec![0], t(vec![2], vec![1.0, 1.0]));
    assert!(matches!(het_multiply(&a, &b), Err(Error::Model(_))));
}

fn ga(i: u32) -> GroundAtom {
    GroundAtom::new(Sym(i), Vec::new())
}

/// Randvars 0.. are registered with names v00, v01, ...
fn model_with(n: usize) -> GroundModel {
    let mut gm = GroundModel::default();
    for i in 0..n {
        gm.var(ga(i as u32), 2, || alloc::format!("v{i:02}"));
    }
    gm
}

/// A random noisy-OR network: roots with priors, children collecting one
/// heterogeneous contribution per parent through a deputy.
fn random_network(rng: &mut StdRng, max_vars: usize) -> GroundModel {
    let roots = rng.gen_range(1..4);
    let children = rng.gen_range(1..=((max_vars - roots) / 2).min(5));
    let mut gm = model_with(roots + 2 * children);
    for r in 0..roots {
        let p = rng.gen_range(0.05..0.95);
        gm.f1.push(GroundFactor::homogeneous(vec![r], t(vec![2], vec![1.0 - p, p])));
    }
    let mut regular: Vec<usize> = (0..roots).collect();
    for c in 0..children {
        let e = roots + 2 * c;
        let ep = e + 1;
        let k = rng.gen_range(1..=regular.len().min(3));
        let mut parents = regular.clone();
        for _ in 0..k {
            let i = rng.gen_range(0..parents.len());
            let p = parents.swap_remove(i);
            let q = rng.gen_range(0.0..1.0);
            // contribution: parent true fires with probability q, false never
            gm.f2.push(GroundFactor::new(
                vec![ep, p],
                t(vec![2, 2], vec![1.0, 1.0 - q, 0.0, q]),
                vec![true, false],
            ));
        }
        gm.f1.push(GroundFactor::homogeneous(vec![e, ep], t(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0])));
        gm.deputies.push((e, ep));
        regular.push(e);
    }
    gm
}

#[test]
fn sum_out1_without_heterogeneous_factors_is_ve() {
    let mut gm = model_with(2);
    gm.f1.push(GroundFactor::homogeneous(vec![0], t(vec![2], vec![0.9, 0.1])));
    gm.f1.push(GroundFactor::homogeneous(vec![1, 0], t(vec![2, 2], vec![0.7, 0.2, 0.3, 0.8])));
    let mut f1 = gm.f1.clone();
    let mut f2 = Vec::new();
    sum_out1(&mut f1, &mut f2, 0, &InferenceOptions::default()).unwrap();
    assert!(f2.is_empty());
    assert_eq!(f1.len(), 1);
    assert!(close(&f1[0].table.values, &[0.7 * 0.9 + 0.2 * 0.1, 0.3 * 0.9 + 0.8 * 0.1], 1e-15));
}

#[test]
fn deputy_elimination_moves_to_regular_twin() {
    // s -> E' -> E with one contribution
    let mut gm = model_with(3);
    gm.f1.push(GroundFactor::homogeneous(vec![0], t(vec![2], vec![0.9, 0.1])));
    gm.f2.push(GroundFactor::new(vec![2, 0], t(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]), vec![true, false]));
    gm.f1.push(GroundFactor::homogeneous(vec![1, 2], t(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0])));
    gm.deputies.push((1, 2));
    let mut f1 = gm.f1.clone();
    let mut f2 = gm.f2.clone();
    sum_out1(&mut f1, &mut f2, 2, &InferenceOptions::default()).unwrap();
    assert!(f2.is_empty());
    let q = run_ve1(&gm, &ga(1), &[], None, &InferenceOptions::default()).unwrap();
    assert!(close(&q, &[0.9, 0.1], 1e-15));
    // E before E' is rejected
    assert!(run_ve1(&gm, &ga(0), &[], Some(&[1, 2]), &InferenceOptions::default()).is_err());
}

#[test]
fn single_fact_and_evidence() {
    let mut gm = model_with(2);
    gm.f1.push(GroundFactor::homogeneous(vec![0], t(vec![2], vec![0.9, 0.1])));
    let q = run_ve1(&gm, &ga(0), &[], None, &InferenceOptions::default()).unwrap();
    assert!(close(&q, &[0.9, 0.1], 1e-15));
    // q <- s deterministic; observing s = f forces q = f
    gm.f1.push(GroundFactor::homogeneous(vec![1, 0], t(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0])));
    let q = run_ve1(&gm, &ga(1), &[(ga(0), 0)], None, &InferenceOptions::default()).unwrap();
    assert_eq!(q, vec![1.0, 0.0]);
    assert!(matches!(
        run_ve1(&gm, &ga(9), &[], None, &InferenceOptions::default()),
        Err(Error::UnknownQuery(_))
    ));
}

#[test]
fn toy_net_ve1_equals_ve() {
    let mut rng = StdRng::seed_from_u64(3);
    let gm = random_network(&mut rng, 7);
    let opts = InferenceOptions::default();
    for q in 0..gm.atoms.len() {
        if gm.deputies.iter().any(|d| d.1 == q) {
            continue;
        }
        let a = run_ve1(&gm, &ga(q as u32), &[], None, &opts).unwrap();
        let b = run_ve(&gm, &ga(q as u32), &[], &opts).unwrap();
        assert!(close(&a, &b, 1e-12));
    }
}

#[test]
fn full_cpt_expansion_respects_cell_budget() {
    let mut rng = StdRng::seed_from_u64(5);
    let gm = random_network(&mut rng, 10);
    let tight = InferenceOptions {
        cell_budget: 1,
        interrupt: None,
    };
    assert!(matches!(gm.expand_full_cpts(&tight), Err(Error::CellBudget { .. })));
}

/// A random elimination order respecting the deputy constraint.
fn random_order(rng: &mut StdRng, gm: &GroundModel, query: usize) -> Vec<usize> {
    let mut pending: Vec<usize> = (0..gm.atoms.len()).filter(|&v| v != query).collect();
    let mut order = Vec::new();
    while !pending.is_empty() {
        let ok: Vec<usize> = pending
            .iter()
            .copied()
            .filter(|&v| !gm.deputies.iter().any(|&(e, ep)| e == v && !order.contains(&ep) && ep != query))
            .collect();
        let v = ok[rng.gen_range(0..ok.len())];
        pending.retain(|&w| w != v);
        order.push(v);
    }
    order
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ve1_agrees_with_full_table_ve(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let gm = random_network(&mut rng, 14);
        let opts = InferenceOptions::default();
        let regular: Vec<usize> = (0..gm.atoms.len()).filter(|v| !gm.deputies.iter().any(|d| d.1 == *v)).collect();
        let q = regular[rng.gen_range(0..regular.len())];
        let a = run_ve1(&gm, &ga(q as u32), &[], None, &opts).unwrap();
        let b = run_ve(&gm, &ga(q as u32), &[], &opts).unwrap();
        prop_assert!(close(&a, &b, 1e-9), "{:?} vs {:?}", a, b);
        for _ in 0..5 {
            let order = random_order(&mut rng, &gm, q);
            let c = run_ve1(&gm, &ga(q as u32), &[], Some(&order), &opts).unwrap();
            prop_assert!(close(&a, &c, 1e-9));
        }
    }

    #[test]
    fn directed_models_have_unit_mass(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let gm = random_network(&mut rng, 14);
        let mut f1 = gm.f1.clone();
        let mut f2 = gm.f2.clone();
        let opts = InferenceOptions::default();
        for z in min_fill_order(&gm, &f1, &f2, usize::MAX) {
            sum_out1(&mut f1, &mut f2, z, &opts).unwrap();
        }
        let total: f64 = f1.iter().chain(f2.iter()).map(|f| f.table.values[0]).product();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn het_multiply_commutes_and_associates(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mk = |rng: &mut StdRng, vars: Vec<usize>| {
            let n = vars.len();
            let table = random_table(rng, vec![2; n]);
            let conv = vars.iter().map(|&v| v < 2).collect();
            GroundFactor::new(vars, table, conv)
        };
        let a = mk(&mut rng, vec![0, 1, 2]);
        let b = mk(&mut rng, vec![1, 0, 3]);
        let c = mk(&mut rng, vec![0, 4]);
        let ab = het_multiply(&a, &b).unwrap();
        let ba = het_multiply(&b, &a).unwrap();
        let ba = ba.table.expand(&ba.vars, &ab.vars, &ab.table.dims);
        prop_assert!(close(&ab.table.values, &ba.values, 1e-12));
        let l = het_multiply(&ab, &c).unwrap();
        let r = het_multiply(&a, &het_multiply(&b, &c).unwrap()).unwrap();
        let r = r.table.expand(&r.vars, &l.vars, &l.table.dims);
        prop_assert!(close(&l.table.values, &r.values, 1e-12));
    }
}
