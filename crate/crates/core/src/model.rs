//! The two-list model (homogeneous F1, heterogeneous F2), its invariants and
//! structural comparison.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::factor::{GroundAtom, Kind, Parfactor, Term};
use crate::symbol::{Logvar, Sym, Symbols};

#[derive(Clone, Debug, Default)]
pub struct Model {
    pub symbols: Symbols,
    /// Homogeneous parfactors, deputies included.
    pub f1: Vec<Parfactor>,
    /// Heterogeneous parfactors.
    pub f2: Vec<Parfactor>,
    /// Display names of logvars, indexed by id.
    pub logvar_names: Vec<String>,
    /// Value names of non-Boolean functors.
    pub ranges: BTreeMap<Sym, Vec<Sym>>,
    /// Ground domain facts, kept for printing.
    pub domains: BTreeMap<Sym, Vec<Vec<Sym>>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum DiagnosticKind {
    OrphanConvergent,
    ConvergentInHomogeneous,
    NonBooleanConvergent,
    NegativePotential,
    MisplacedFactor,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    /// Index of the offending parfactor in `f1` followed by `f2`.
    pub factor: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "factor {}: {}", self.factor + 1, self.message)
    }
}

impl Model {
    pub fn new(symbols: Symbols) -> Model {
        Model {
            symbols,
            ..Model::default()
        }
    }

    pub fn new_logvar(&mut self, name: &str) -> Logvar {
        let v = Logvar(self.logvar_names.len() as u32);
        self.logvar_names.push(name.to_string());
        v
    }

    /// Files the parfactor in F2 when it is heterogeneous, F1 otherwise.
    pub fn add(&mut self, g: Parfactor) {
        if g.is_het() {
            self.f2.push(g);
        } else {
            self.f1.push(g);
        }
    }

    pub fn parfactors(&self) -> impl Iterator<Item = &Parfactor> {
        self.f1.iter().chain(self.f2.iter())
    }

    pub fn range_names(&self, functor: Sym) -> Vec<String> {
        match self.ranges.get(&functor) {
            Some(vs) => vs.iter().map(|v| self.symbols.name(*v).to_string()).collect(),
            None => alloc::vec!["f".to_string(), "t".to_string()],
        }
    }

    pub fn range_size(&self, functor: Sym) -> usize {
        self.ranges.get(&functor).map_or(2, |v| v.len())
    }

    /// Index of a named value in the range of `functor`.
    pub fn value_index(&self, functor: Sym, name: &str) -> Result<usize> {
        self.range_names(functor)
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::Range(format!("{name} is not a value of {}", self.symbols.name(functor))))
    }

    /// Whether some parfactor has `atom` among its groundings.
    pub fn covers(&self, atom: &GroundAtom) -> bool {
        self.parfactors().any(|g| {
            g.atoms.iter().any(|a| {
                if a.functor != atom.functor || a.args.len() != atom.args.len() || a.counted.is_some() {
                    return false;
                }
                let mut bind = Vec::new();
                for (t, &c) in a.args.iter().zip(&atom.args) {
                    match t {
                        Term::Const(k) if *k != c => return false,
                        Term::Const(_) => {}
                        Term::Var(v) => {
                            if let Some(&(_, prev)) = bind.iter().find(|(w, _)| w == v) {
                                if prev != c {
                                    return false;
                                }
                            } else {
                                bind.push((*v, c));
                            }
                        }
                    }
                }
                g.constraint.select(&bind).map_or(false, |c| !c.is_empty())
            })
        })
    }

    pub fn ground_atom_name(&self, atom: &GroundAtom) -> String {
        atom.display(&self.symbols).to_string()
    }

    /// Checks the model invariants and reports every violation.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let deputised: BTreeSet<Sym> = self
            .f1
            .iter()
            .filter(|g| g.kind == Kind::Deputy)
            .map(|g| g.atoms[1].functor)
            .collect();
        let mut convergent: BTreeSet<Sym> = BTreeSet::new();
        for (i, g) in self.parfactors().enumerate() {
            let in_f2 = i >= self.f1.len();
            if in_f2 != g.is_het() {
                out.push(Diagnostic {
                    kind: DiagnosticKind::MisplacedFactor,
                    factor: i,
                    message: "heterogeneous factors belong to F2 and homogeneous ones to F1".into(),
                });
            }
            if g.table.values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                out.push(Diagnostic {
                    kind: DiagnosticKind::NegativePotential,
                    factor: i,
                    message: "potentials must be finite and non-negative".into(),
                });
            }
            for a in &g.atoms[..g.convergent] {
                convergent.insert(a.functor);
                if a.range != 2 || a.counted.is_some() {
                    out.push(Diagnostic {
                        kind: DiagnosticKind::NonBooleanConvergent,
                        factor: i,
                        message: format!("convergent variable {} is not Boolean", self.symbols.name(a.functor)),
                    });
                }
                if !deputised.contains(&a.functor) {
                    out.push(Diagnostic {
                        kind: DiagnosticKind::OrphanConvergent,
                        factor: i,
                        message: format!(
                            "orphan convergent variable {}: no deputy factor links it to a regular variable",
                            self.symbols.name(a.functor)
                        ),
                    });
                }
            }
        }
        for (i, g) in self.f1.iter().enumerate() {
            let skip = usize::from(g.kind == Kind::Deputy);
            for (j, a) in g.atoms.iter().enumerate() {
                if j == skip && skip == 1 {
                    continue;
                }
                if convergent.contains(&a.functor) {
                    out.push(Diagnostic {
                        kind: DiagnosticKind::ConvergentInHomogeneous,
                        factor: i,
                        message: format!(
                            "convergent variable {} appears in a homogeneous factor",
                            self.symbols.name(a.functor)
                        ),
                    });
                }
            }
        }
        out
    }

    /// [`Model::validate`] as an error, for the engines.
    pub fn check(&self) -> Result<()> {
        match self.validate().into_iter().next() {
            None => Ok(()),
            Some(d) => Err(Error::Model(d.to_string())),
        }
    }
}

/// A parfactor with names in place of symbols and logvars renamed by first
/// occurrence, so parfactors of different models can be compared.
#[derive(Clone, Debug, PartialEq)]
struct Canon {
    kind: Kind,
    convergent: usize,
    functors: Vec<String>,
    args: Vec<Vec<CanonTerm>>,
    counted: Vec<Option<(usize, Vec<String>)>>,
    table: Vec<f64>,
    tuples: BTreeSet<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum CanonTerm {
    Var(usize),
    Const(String),
}

fn canon(m: &Model, g: &Parfactor) -> Canon {
    let mut order: Vec<Logvar> = Vec::new();
    let see = |v: Logvar, order: &mut Vec<Logvar>| {
        if !order.contains(&v) {
            order.push(v);
        }
    };
    for a in &g.atoms {
        for t in &a.args {
            if let Term::Var(v) = t {
                see(*v, &mut order);
            }
        }
    }
    for &v in g.constraint.schema() {
        see(v, &mut order);
    }
    let idx = |v: Logvar| order.iter().position(|&o| o == v).expect("collected");
    let name = |s: Sym| m.symbols.name(s).to_string();
    let schema_in_order: Vec<Logvar> = order.iter().copied().filter(|v| g.constraint.position(*v).is_some()).collect();
    let tuples = g
        .constraint
        .project(&schema_in_order)
        .expect("schema logvars")
        .iter()
        .map(|t| t.into_iter().map(name).collect())
        .collect();
    Canon {
        kind: g.kind,
        convergent: g.convergent,
        functors: g.atoms.iter().map(|a| name(a.functor)).collect(),
        args: g
            .atoms
            .iter()
            .map(|a| {
                a.args
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => CanonTerm::Var(idx(*v)),
                        Term::Const(c) => CanonTerm::Const(name(*c)),
                    })
                    .collect()
            })
            .collect(),
        counted: g
            .atoms
            .iter()
            .map(|a| {
                a.counted
                    .as_ref()
                    .map(|c| (idx(c.logvar), c.values.iter().map(|s| name(*s)).collect()))
            })
            .collect(),
        table: g.table.values.clone(),
        tuples,
    }
}

fn same_shape(a: &Canon, b: &Canon) -> bool {
    a.kind == b.kind
        && a.convergent == b.convergent
        && a.args == b.args
        && a.counted == b.counted
        && a.tuples == b.tuples
        && a.table.len() == b.table.len()
        && a.table.iter().zip(&b.table).all(|(x, y)| (x - y).abs() <= 1e-12)
}

/// Structural equality up to a renaming of functors outside `fixed`: there is a
/// bijection between the parfactors of `a` and `b` (F1 to F1, F2 to F2) and a
/// consistent one-to-one renaming of the remaining functors under which
/// matched parfactors have the same kind, atoms, table and constraint tuples.
pub fn isomorphic(a: &Model, b: &Model, fixed: &BTreeSet<String>) -> bool {
    if a.f1.len() != b.f1.len() || a.f2.len() != b.f2.len() {
        return false;
    }
    let ca: Vec<(bool, Canon)> = a.f1.iter().map(|g| (false, canon(a, g))).chain(a.f2.iter().map(|g| (true, canon(a, g)))).collect();
    let cb: Vec<(bool, Canon)> = b.f1.iter().map(|g| (false, canon(b, g))).chain(b.f2.iter().map(|g| (true, canon(b, g)))).collect();
    let mut used = alloc::vec![false; cb.len()];
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    search(&ca, &cb, 0, &mut used, &mut map, fixed)
}

fn search(
    ca: &[(bool, Canon)],
    cb: &[(bool, Canon)],
    i: usize,
    used: &mut [bool],
    map: &mut BTreeMap<String, String>,
    fixed: &BTreeSet<String>,
) -> bool {
    if i == ca.len() {
        return true;
    }
    let (het, x) = &ca[i];
    for j in 0..cb.len() {
        let (het_b, y) = &cb[j];
        if used[j] || het != het_b || !same_shape(x, y) || x.functors.len() != y.functors.len() {
            continue;
        }
        let mut added = Vec::new();
        let mut ok = true;
        for (f, g) in x.functors.iter().zip(&y.functors) {
            if fixed.contains(f) || fixed.contains(g) {
                if f != g {
                    ok = false;
                    break;
                }
                continue;
            }
            match map.get(f) {
                Some(h) if h != g => {
                    ok = false;
                    break;
                }
                Some(_) => {}
                None => {
                    if map.values().any(|h| h == g) {
                        ok = false;
                        break;
                    }
                    map.insert(f.clone(), g.clone());
                    added.push(f.clone());
                }
            }
        }
        if ok {
            used[j] = true;
            if search(ca, cb, i + 1, used, map, fixed) {
                return true;
            }
            used[j] = false;
        }
        for f in added {
            map.remove(&f);
        }
    }
    false
}
