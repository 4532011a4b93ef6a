//! Exact distribution semantics by enumerating total choices.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::ast::{PAtom, PTerm, PredKind, Program};
use crate::error::{Error, Result};
use crate::factor::GroundAtom;
use crate::ground::normalize;
use crate::InferenceOptions;

pub const DEFAULT_CAP: usize = 24;

pub type Binding = BTreeMap<String, crate::Sym>;

/// All extensions of `init` under which every atom of `goals` is in `rel`.
pub fn solve(goals: &[&PAtom], rel: &BTreeMap<crate::Sym, BTreeSet<Vec<crate::Sym>>>, init: Binding) -> Vec<Binding> {
    let mut out = vec![init];
    let empty = BTreeSet::new();
    for g in goals {
        let tuples = rel.get(&g.pred).unwrap_or(&empty);
        let mut next = Vec::new();
        for b in &out {
            'tuples: for t in tuples {
                if t.len() != g.args.len() {
                    continue;
                }
                let mut nb = b.clone();
                for (arg, &c) in g.args.iter().zip(t) {
                    match arg {
                        PTerm::Const(k) if *k != c => continue 'tuples,
                        PTerm::Const(_) => {}
                        PTerm::Var(v) => match nb.get(v) {
                            Some(&x) if x != c => continue 'tuples,
                            Some(_) => {}
                            None => {
                                nb.insert(v.clone(), c);
                            }
                        },
                    }
                }
                next.push(nb);
            }
        }
        out = next;
    }
    out
}

pub fn instantiate(a: &PAtom, b: &Binding) -> GroundAtom {
    GroundAtom::new(
        a.pred,
        a.args
            .iter()
            .map(|t| match t {
                PTerm::Const(c) => *c,
                PTerm::Var(v) => b[v],
            })
            .collect(),
    )
}

struct GroundRule {
    head: usize,
    pos: Vec<usize>,
    neg: Vec<usize>,
    stratum: usize,
}

/// The ground program: probabilistic facts and rule instances over indexed
/// random atoms.
pub struct Grounding {
    pub atoms: Vec<GroundAtom>,
    pub index: BTreeMap<GroundAtom, usize>,
    /// (atom, probability) per ground probabilistic fact.
    pub facts: Vec<(usize, f64)>,
    rules: Vec<GroundRule>,
    strata: usize,
}

impl Grounding {
    fn id(&mut self, a: GroundAtom) -> usize {
        if let Some(&i) = self.index.get(&a) {
            return i;
        }
        let i = self.atoms.len();
        self.index.insert(a.clone(), i);
        self.atoms.push(a);
        i
    }

    pub fn new(p: &Program) -> Result<Grounding> {
        p.validate()?;
        let kinds = p.kinds();
        let strata = p.strata()?;
        let rules = p.effective_rules();
        let domain = p.domain_relations();
        let mut g = Grounding {
            atoms: Vec::new(),
            index: BTreeMap::new(),
            facts: Vec::new(),
            rules: Vec::new(),
            strata: strata.values().copied().max().map_or(0, |s| s + 1),
        };
        // Atoms that may be true in some world, ignoring negation.
        let mut possible = domain.clone();
        for f in &p.prob_facts {
            let goals: Vec<&PAtom> = f.body.iter().collect();
            for b in solve(&goals, &domain, Binding::new()) {
                let a = instantiate(&f.head, &b);
                possible.entry(a.functor).or_default().insert(a.args.clone());
                let id = g.id(a);
                g.facts.push((id, f.p));
            }
        }
        loop {
            let mut changed = false;
            for r in &rules {
                let goals: Vec<&PAtom> = r.body.iter().filter(|l| l.positive).map(|l| &l.atom).collect();
                for b in solve(&goals, &possible, Binding::new()) {
                    let h = instantiate(&r.head, &b);
                    if possible.entry(h.functor).or_default().insert(h.args) {
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for r in &rules {
            let goals: Vec<&PAtom> = r.body.iter().filter(|l| l.positive).map(|l| &l.atom).collect();
            'inst: for b in solve(&goals, &possible, Binding::new()) {
                let mut pos = Vec::new();
                let mut neg = Vec::new();
                for l in &r.body {
                    let a = instantiate(&l.atom, &b);
                    let random = kinds.get(&a.functor) != Some(&PredKind::Domain);
                    match (l.positive, random) {
                        (true, true) => pos.push(g.id(a)),
                        (true, false) => {}
                        (false, false) => {
                            if domain[&a.functor].contains(&a.args) {
                                continue 'inst;
                            }
                        }
                        (false, true) => {
                            if possible.get(&a.functor).map_or(false, |s| s.contains(&a.args)) {
                                neg.push(g.id(a));
                            }
                        }
                    }
                }
                let head = g.id(instantiate(&r.head, &b));
                g.rules.push(GroundRule {
                    head,
                    pos,
                    neg,
                    stratum: strata[&r.head.pred],
                });
            }
        }
        g.rules.sort_by_key(|r| r.stratum);
        Ok(g)
    }

    /// Truth of every atom in the world selecting `chosen` facts.
    pub fn world(&self, chosen: impl Fn(usize) -> bool) -> Vec<bool> {
        let mut truth = vec![false; self.atoms.len()];
        for (i, &(a, _)) in self.facts.iter().enumerate() {
            if chosen(i) {
                truth[a] = true;
            }
        }
        let mut start = 0;
        for s in 0..self.strata {
            let end = start + self.rules[start..].iter().take_while(|r| r.stratum == s).count();
            loop {
                let mut changed = false;
                for r in &self.rules[start..end] {
                    if !truth[r.head] && r.pos.iter().all(|&a| truth[a]) && r.neg.iter().all(|&a| !truth[a]) {
                        truth[r.head] = true;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            start = end;
        }
        truth
    }
}

/// P(query | evidence) as a distribution over [false, true].
pub fn enumerate(
    p: &Program,
    query: &GroundAtom,
    evidence: &[(GroundAtom, bool)],
    cap: usize,
    opts: &InferenceOptions,
) -> Result<Vec<f64>> {
    let g = Grounding::new(p)?;
    let n = g.facts.len();
    if n > cap || n >= 64 {
        return Err(Error::EnumerationCap { facts: n, cap });
    }
    // Atoms outside the grounding are domain facts or never derivable.
    let domain = p.domain_relations();
    let lookup = |a: &GroundAtom| match g.index.get(a) {
        Some(&i) => Ok(i),
        None => Err(domain.get(&a.functor).is_some_and(|ts| ts.contains(&a.args))),
    };
    let q = lookup(query);
    let ev: Vec<(core::result::Result<usize, bool>, bool)> = evidence.iter().map(|(a, v)| (lookup(a), *v)).collect();
    let mut dist = [0.0f64; 2];
    for mask in 0u64..(1u64 << n) {
        if mask & 0xffff == 0 {
            opts.check_interrupt()?;
        }
        let mut w = 1.0;
        for (i, &(_, pr)) in g.facts.iter().enumerate() {
            w *= if mask >> i & 1 == 1 { pr } else { 1.0 - pr };
        }
        if w == 0.0 {
            continue;
        }
        let truth = g.world(|i| mask >> i & 1 == 1);
        let holds = |a: core::result::Result<usize, bool>| a.map_or_else(|fixed| fixed, |a| truth[a]);
        if ev.iter().any(|&(a, v)| holds(a) != v) {
            continue;
        }
        dist[usize::from(holds(q))] += w;
    }
    normalize(dist.to_vec())
}
