//! Syntax tree of the ProbLog subset and its static checks.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::factor::GroundAtom;
use crate::symbol::{Sym, Symbols};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PTerm {
    Var(String),
    Const(Sym),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PAtom {
    pub pred: Sym,
    pub args: Vec<PTerm>,
}

impl PAtom {
    pub fn new(pred: Sym, args: Vec<PTerm>) -> PAtom {
        PAtom { pred, args }
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            PTerm::Var(v) => Some(v.as_str()),
            PTerm::Const(_) => None,
        })
    }

    pub fn to_ground(&self) -> Option<GroundAtom> {
        let args = self
            .args
            .iter()
            .map(|t| match t {
                PTerm::Const(c) => Some(*c),
                PTerm::Var(_) => None,
            })
            .collect::<Option<Vec<_>>>()?;
        Some(GroundAtom::new(self.pred, args))
    }

    pub fn display<'a>(&'a self, syms: &'a Symbols) -> PAtomDisplay<'a> {
        PAtomDisplay { atom: self, syms }
    }
}

pub struct PAtomDisplay<'a> {
    atom: &'a PAtom,
    syms: &'a Symbols,
}

impl fmt::Display for PAtomDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.syms.name(self.atom.pred))?;
        if self.atom.args.is_empty() {
            return Ok(());
        }
        f.write_str("(")?;
        for (i, a) in self.atom.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            match a {
                PTerm::Var(v) => f.write_str(v)?,
                PTerm::Const(c) => f.write_str(self.syms.name(*c))?,
            }
        }
        f.write_str(")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub atom: PAtom,
    pub positive: bool,
}

/// `p::head :- body`, the body holding domain goals only.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbFact {
    pub p: f64,
    pub head: PAtom,
    pub body: Vec<PAtom>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub head: PAtom,
    pub body: Vec<Literal>,
}

#[derive(Clone, Debug, Default)]
pub struct Program {
    pub symbols: Symbols,
    /// Plain ground facts.
    pub facts: Vec<PAtom>,
    pub prob_facts: Vec<ProbFact>,
    pub rules: Vec<Rule>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PredKind {
    /// Defined by plain facts only: a constraint, not a randvar.
    Domain,
    Probabilistic,
    Derived,
}

impl Program {
    pub fn new(symbols: Symbols) -> Program {
        Program {
            symbols,
            ..Program::default()
        }
    }

    fn name(&self, s: Sym) -> &str {
        self.symbols.name(s)
    }

    /// Predicates with the kind each one is used as. Predicates that are
    /// referenced but never defined count as (empty) domain predicates.
    pub fn kinds(&self) -> BTreeMap<Sym, PredKind> {
        let mut out = BTreeMap::new();
        for r in &self.rules {
            for l in &r.body {
                out.insert(l.atom.pred, PredKind::Domain);
            }
        }
        for f in &self.prob_facts {
            for g in &f.body {
                out.insert(g.pred, PredKind::Domain);
            }
        }
        for f in &self.facts {
            out.insert(f.pred, PredKind::Domain);
        }
        for f in &self.prob_facts {
            out.insert(f.head.pred, PredKind::Probabilistic);
        }
        for r in &self.rules {
            out.insert(r.head.pred, PredKind::Derived);
        }
        out
    }

    /// Plain facts of a derived predicate act as rules with an empty body.
    pub fn effective_rules(&self) -> Vec<Rule> {
        let kinds = self.kinds();
        let mut out = self.rules.clone();
        for f in &self.facts {
            if kinds[&f.pred] == PredKind::Derived {
                out.push(Rule {
                    head: f.clone(),
                    body: Vec::new(),
                });
            }
        }
        out
    }

    /// Ground tuples of every domain predicate.
    pub fn domain_relations(&self) -> BTreeMap<Sym, BTreeSet<Vec<Sym>>> {
        let kinds = self.kinds();
        let mut out: BTreeMap<Sym, BTreeSet<Vec<Sym>>> = BTreeMap::new();
        for (p, k) in &kinds {
            if *k == PredKind::Domain {
                out.entry(*p).or_default();
            }
        }
        for f in &self.facts {
            if kinds[&f.pred] == PredKind::Domain {
                if let Some(g) = f.to_ground() {
                    out.entry(f.pred).or_default().insert(g.args);
                }
            }
        }
        out
    }

    /// Checks probabilities, groundness of facts, consistent arities, range
    /// restriction and stratification.
    pub fn validate(&self) -> Result<()> {
        let mut arity: BTreeMap<Sym, usize> = BTreeMap::new();
        let mut check_arity = |a: &PAtom| -> Result<()> {
            match arity.insert(a.pred, a.args.len()) {
                Some(n) if n != a.args.len() => Err(Error::Program(format!(
                    "predicate {} is used with arities {n} and {}",
                    self.name(a.pred),
                    a.args.len()
                ))),
                _ => Ok(()),
            }
        };
        for f in &self.facts {
            check_arity(f)?;
            if f.to_ground().is_none() {
                return Err(Error::Program(format!("fact {} is not ground", f.display(&self.symbols))));
            }
        }
        let kinds = self.kinds();
        for f in &self.prob_facts {
            check_arity(&f.head)?;
            if !(0.0..=1.0).contains(&f.p) || f.p.is_nan() {
                return Err(Error::Program(format!("probability {} outside [0, 1]", f.p)));
            }
            for g in &f.body {
                check_arity(g)?;
                if kinds[&g.pred] != PredKind::Domain {
                    return Err(Error::Program(format!(
                        "the body of probabilistic fact {} may only hold domain goals",
                        f.head.display(&self.symbols)
                    )));
                }
            }
            let bound: BTreeSet<&str> = f.body.iter().flat_map(|g| g.vars()).collect();
            if let Some(v) = f.head.vars().find(|v| !bound.contains(v)) {
                return Err(Error::Program(format!(
                    "variable {v} of {} is not range-restricted",
                    f.head.display(&self.symbols)
                )));
            }
        }
        for f in &self.facts {
            if kinds[&f.pred] == PredKind::Probabilistic {
                return Err(Error::Program(format!(
                    "{} is both probabilistic and a plain fact",
                    self.name(f.pred)
                )));
            }
        }
        for r in &self.rules {
            check_arity(&r.head)?;
            if self.prob_facts.iter().any(|f| f.head.pred == r.head.pred) {
                return Err(Error::Program(format!(
                    "{} is both probabilistic and derived",
                    self.name(r.head.pred)
                )));
            }
            let mut bound: BTreeSet<&str> = BTreeSet::new();
            for l in &r.body {
                check_arity(&l.atom)?;
                if l.positive {
                    bound.extend(l.atom.vars());
                }
            }
            let unbound = r
                .head
                .vars()
                .chain(r.body.iter().filter(|l| !l.positive).flat_map(|l| l.atom.vars()))
                .find(|v| !bound.contains(v));
            if let Some(v) = unbound {
                return Err(Error::Program(format!(
                    "variable {v} in the rule for {} is not range-restricted",
                    r.head.display(&self.symbols)
                )));
            }
        }
        self.strata().map(|_| ())
    }

    /// Stratum of every derived predicate; fails on negation through
    /// recursion.
    pub fn strata(&self) -> Result<BTreeMap<Sym, usize>> {
        let kinds = self.kinds();
        let rules = self.effective_rules();
        let mut stratum: BTreeMap<Sym, usize> = kinds
            .iter()
            .filter(|(_, k)| **k == PredKind::Derived)
            .map(|(p, _)| (*p, 0))
            .collect();
        let limit = stratum.len() + 1;
        loop {
            let mut changed = false;
            for r in &rules {
                let mut need = stratum[&r.head.pred];
                for l in &r.body {
                    if let Some(&s) = stratum.get(&l.atom.pred) {
                        need = need.max(if l.positive { s } else { s + 1 });
                    }
                }
                if need > stratum[&r.head.pred] {
                    if need > limit {
                        return Err(Error::Program(format!(
                            "negation through recursion involving {}",
                            self.name(r.head.pred)
                        )));
                    }
                    stratum.insert(r.head.pred, need);
                    changed = true;
                }
            }
            if !changed {
                return Ok(stratum);
            }
        }
    }

    /// Derived predicates in an order where every predicate follows the
    /// ones its rules use; fails on recursion.
    pub fn topological_order(&self) -> Result<Vec<Sym>> {
        let kinds = self.kinds();
        let rules = self.effective_rules();
        let mut deps: BTreeMap<Sym, BTreeSet<Sym>> = BTreeMap::new();
        for (p, k) in &kinds {
            if *k == PredKind::Derived {
                deps.entry(*p).or_default();
            }
        }
        for r in &rules {
            for l in &r.body {
                if kinds.get(&l.atom.pred) == Some(&PredKind::Derived) {
                    deps.entry(r.head.pred).or_default().insert(l.atom.pred);
                }
            }
        }
        let mut order = Vec::new();
        let mut done: BTreeSet<Sym> = BTreeSet::new();
        while done.len() < deps.len() {
            let next = deps
                .iter()
                .find(|(p, d)| !done.contains(p) && d.iter().all(|q| done.contains(q)))
                .map(|(p, _)| *p);
            match next {
                Some(p) => {
                    done.insert(p);
                    order.push(p);
                }
                None => {
                    let p = deps.keys().find(|p| !done.contains(p)).expect("pending predicate");
                    return Err(Error::Program(format!(
                        "recursive predicate {} cannot be translated",
                        self.name(*p)
                    )));
                }
            }
        }
        Ok(order)
    }
}
