//! Atoms, counting formulas, histograms and parfactors.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::constraint::{Column, Constraint};
use crate::error::{Error, Result};
use crate::symbol::{Logvar, Sym, Symbols};
pub use crate::table::Table;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Logvar),
    Const(Sym),
}

/// The counted logvar of a counting formula and the constants it ranges over.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counted {
    pub logvar: Logvar,
    pub values: Column,
}

/// An atom `F(t1,...,tn)`, or the counting formula `#_X[F(...)]` when
/// `counted` is set. The counted logvar is bound by `counted.values`, not by
/// the parfactor constraint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub functor: Sym,
    pub args: Vec<Term>,
    /// Number of values of the underlying randvars (2 for Booleans).
    pub range: usize,
    pub counted: Option<Counted>,
}

impl Atom {
    pub fn new(functor: Sym, args: Vec<Term>, range: usize) -> Atom {
        Atom {
            functor,
            args,
            range,
            counted: None,
        }
    }

    pub fn boolean(functor: Sym, args: Vec<Term>) -> Atom {
        Atom::new(functor, args, 2)
    }

    /// Logvars in order of first occurrence, excluding a counted logvar.
    pub fn logvars(&self) -> Vec<Logvar> {
        let mut out = Vec::new();
        for a in &self.args {
            if let Term::Var(v) = a {
                if !out.contains(v) && self.counted.as_ref().map_or(true, |c| c.logvar != *v) {
                    out.push(*v);
                }
            }
        }
        out
    }

    pub fn is_ground(&self) -> bool {
        self.counted.is_none() && self.args.iter().all(|a| matches!(a, Term::Const(_)))
    }

    /// Number of values of the atom: the randvar range, or the number of
    /// histograms for a counting formula.
    pub fn size(&self) -> usize {
        match &self.counted {
            None => self.range,
            Some(c) => histogram_count(c.values.len(), self.range),
        }
    }

    pub fn substitute(&self, lv: Logvar, t: Term) -> Atom {
        let mut a = self.clone();
        for arg in &mut a.args {
            if *arg == Term::Var(lv) {
                *arg = t;
            }
        }
        a
    }

    pub fn rename(&self, f: impl Fn(Logvar) -> Logvar) -> Atom {
        let mut a = self.clone();
        for arg in &mut a.args {
            if let Term::Var(v) = arg {
                *v = f(*v);
            }
        }
        if let Some(c) = &mut a.counted {
            c.logvar = f(c.logvar);
        }
        a
    }

    /// Instantiates the atom under a binding of its logvars.
    pub fn ground(&self, bind: impl Fn(Logvar) -> Sym) -> GroundAtom {
        GroundAtom {
            functor: self.functor,
            args: self
                .args
                .iter()
                .map(|t| match t {
                    Term::Const(c) => *c,
                    Term::Var(v) => bind(*v),
                })
                .collect(),
        }
    }

    pub fn display<'a>(&'a self, syms: &'a Symbols, names: &'a [String]) -> AtomDisplay<'a> {
        AtomDisplay { atom: self, syms, names }
    }
}

pub struct AtomDisplay<'a> {
    atom: &'a Atom,
    syms: &'a Symbols,
    names: &'a [String],
}

impl fmt::Display for AtomDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = self.atom;
        if let Some(c) = &a.counted {
            write!(f, "#{}:", lv_name(self.names, c.logvar))?;
        }
        write!(f, "{}", self.syms.name(a.functor))?;
        if !a.args.is_empty() {
            write!(f, "(")?;
            for (i, t) in a.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                match t {
                    Term::Const(c) => write!(f, "{}", self.syms.name(*c))?,
                    Term::Var(v) => write!(f, "{}", lv_name(self.names, *v))?,
                }
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

fn lv_name(names: &[String], v: Logvar) -> String {
    names.get(v.0 as usize).cloned().unwrap_or_else(|| format!("{v}"))
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub functor: Sym,
    pub args: Vec<Sym>,
}

impl GroundAtom {
    pub fn new(functor: Sym, args: Vec<Sym>) -> GroundAtom {
        GroundAtom { functor, args }
    }

    pub fn display<'a>(&'a self, syms: &'a Symbols) -> GroundAtomDisplay<'a> {
        GroundAtomDisplay { atom: self, syms }
    }
}

pub struct GroundAtomDisplay<'a> {
    atom: &'a GroundAtom,
    syms: &'a Symbols,
}

impl fmt::Display for GroundAtomDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.syms.name(self.atom.functor))?;
        if !self.atom.args.is_empty() {
            write!(f, "(")?;
            for (i, a) in self.atom.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.syms.name(*a))?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// Counts per range value; the entries sum to the size of the counted domain.
pub type Histogram = Vec<u32>;

/// Number of histograms with `k` buckets summing to `n`.
pub fn histogram_count(n: usize, k: usize) -> usize {
    if k == 0 {
        return usize::from(n == 0);
    }
    // C(n + k - 1, k - 1), computed incrementally to stay exact.
    let mut c: usize = 1;
    for i in 1..k {
        c = c * (n + i) / i;
    }
    c
}

/// Enumerates all histograms of `n` over `k` buckets. The order is
/// lexicographic on the reversed bucket list, so for Booleans it runs
/// `(n,0), (n-1,1), ..., (0,n)`.
pub fn histograms(n: usize, k: usize) -> Histograms {
    let mut first = vec![0u32; k];
    if k > 0 {
        first[0] = n as u32;
    }
    Histograms {
        next: if k == 0 && n > 0 { None } else { Some(first) },
    }
}

pub struct Histograms {
    next: Option<Histogram>,
}

impl Iterator for Histograms {
    type Item = Histogram;

    fn next(&mut self) -> Option<Histogram> {
        let cur = self.next.take()?;
        let k = cur.len();
        let mut h = cur.clone();
        // Move one unit from the lowest nonempty bucket to its right neighbour,
        // collapsing everything below back into bucket 0.
        if let Some(i) = (0..k.saturating_sub(1)).find(|&i| h[i] > 0) {
            let rest = h[i] - 1;
            h[i] = 0;
            h[i + 1] += 1;
            h[0] += rest;
            self.next = Some(h);
        }
        Some(cur)
    }
}

/// Histogram of a value assignment over `k` range values.
pub fn histogram_of(values: &[usize], k: usize) -> Histogram {
    let mut h = vec![0u32; k];
    for &v in values {
        h[v] += 1;
    }
    h
}

/// Position of `h` in the [`histograms`] order.
pub fn histogram_index(h: &[u32]) -> usize {
    let k = h.len();
    let mut idx = 0;
    let mut remaining: usize = h.iter().map(|&c| c as usize).sum();
    // Histograms sort by the last bucket first, then the next-to-last, ...
    for j in (1..k).rev() {
        for c in 0..h[j] as usize {
            idx += histogram_count(remaining - c, j);
        }
        remaining -= h[j] as usize;
    }
    idx
}

/// Multinomial coefficient n! / Π n_i!.
pub fn mul(h: &[u32]) -> BigUint {
    let mut out = BigUint::one();
    let mut total: u64 = 0;
    for &c in h {
        // Multiply by C(total + c, c) incrementally.
        for i in 1..=c as u64 {
            total += 1;
            out *= total;
            out /= i;
        }
    }
    out
}

pub fn mul_f64(h: &[u32]) -> f64 {
    mul(h).to_f64().unwrap_or(f64::INFINITY)
}

/// Mul(A, v): 1 for regular atoms, the multiplicity of histogram `v` for
/// counting formulas.
pub fn mul_of(atom: &Atom, v: usize) -> Result<BigUint> {
    if v >= atom.size() {
        return Err(Error::Range(format!("value {v} outside a range of size {}", atom.size())));
    }
    match &atom.counted {
        None => Ok(BigUint::one()),
        Some(c) => {
            let h = histograms(c.values.len(), atom.range).nth(v).expect("index checked");
            Ok(mul(&h))
        }
    }
}

/// Mul weights of every value of an atom, as floats.
pub fn mul_weights(atom: &Atom) -> Option<Vec<f64>> {
    atom.counted
        .as_ref()
        .map(|c| histograms(c.values.len(), atom.range).map(|h| mul_f64(&h)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    Bayes,
    Markov,
    Het,
    Deputy,
}

impl Kind {
    pub fn keyword(self) -> &'static str {
        match self {
            Kind::Bayes => "bayes",
            Kind::Markov => "markov",
            Kind::Het => "het",
            Kind::Deputy => "deputy",
        }
    }
}

pub const IDENTITY: [f64; 4] = [1.0, 0.0, 0.0, 1.0];

/// `φ(atoms) | constraint`. The first `convergent` atoms are convergent.
#[derive(Clone, Debug, PartialEq)]
pub struct Parfactor {
    pub kind: Kind,
    pub atoms: Vec<Atom>,
    pub table: Table,
    pub constraint: Constraint,
    pub convergent: usize,
}

/// One grounding of a parfactor.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundInstance {
    pub atoms: Vec<GroundAtom>,
    pub table: Table,
    pub convergent: Vec<bool>,
}

impl Parfactor {
    pub fn new(kind: Kind, atoms: Vec<Atom>, values: Vec<f64>, constraint: Constraint) -> Result<Parfactor> {
        let convergent = match kind {
            Kind::Het => 1,
            _ => 0,
        };
        Self::with_convergent(kind, atoms, values, constraint, convergent)
    }

    pub fn with_convergent(
        kind: Kind,
        atoms: Vec<Atom>,
        values: Vec<f64>,
        constraint: Constraint,
        convergent: usize,
    ) -> Result<Parfactor> {
        let dims = atoms.iter().map(|a| a.size()).collect();
        let table = Table::new(dims, values)?;
        let g = Parfactor {
            kind,
            atoms,
            table,
            constraint,
            convergent,
        };
        g.check()?;
        Ok(g)
    }

    /// Structural invariants; [`crate::model::Model::validate`] reports the
    /// softer, model-level ones.
    pub fn check(&self) -> Result<()> {
        let dims: Vec<usize> = self.atoms.iter().map(|a| a.size()).collect();
        if dims != self.table.dims {
            return Err(Error::Schema("table axes do not match the atom ranges".into()));
        }
        for a in &self.atoms {
            if a.range < 2 {
                return Err(Error::Schema("an atom range needs at least two values".into()));
            }
            for v in a.logvars() {
                if self.constraint.position(v).is_none() {
                    return Err(Error::Schema(format!("logvar {v} is not bound by the constraint")));
                }
            }
            if let Some(c) = &a.counted {
                if self.constraint.position(c.logvar).is_some() {
                    return Err(Error::Schema("counted logvar also bound by the constraint".into()));
                }
            }
        }
        if self.convergent > self.atoms.len() {
            return Err(Error::Schema("more convergent atoms than atoms".into()));
        }
        match self.kind {
            Kind::Het if self.convergent == 0 => {
                Err(Error::Schema("a het parfactor needs a convergent first atom".into()))
            }
            Kind::Deputy if self.atoms.len() != 2 || self.table.values != IDENTITY => {
                Err(Error::Schema("a deputy parfactor links two Boolean atoms by identity".into()))
            }
            Kind::Bayes | Kind::Markov | Kind::Deputy if self.convergent != 0 => {
                Err(Error::Schema("only het parfactors have convergent atoms".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn is_het(&self) -> bool {
        self.convergent > 0
    }

    pub fn convergent_indices(&self) -> BTreeSet<usize> {
        (0..self.convergent).collect()
    }

    /// Logvars of the atoms in order of first occurrence.
    pub fn logvars(&self) -> Vec<Logvar> {
        let mut out = Vec::new();
        for a in &self.atoms {
            for v in a.logvars() {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }

    /// Number of groundings.
    pub fn groundings(&self) -> usize {
        self.constraint.len()
    }

    /// The ground factors this parfactor stands for, one per constraint tuple.
    /// Counting formulas expand into their constituent randvars, the table
    /// value of an assignment being that of its histogram.
    pub fn ground(&self) -> Result<Vec<GroundInstance>> {
        let schema = self.constraint.schema().to_vec();
        let mut out = Vec::with_capacity(self.constraint.len());
        for t in self.constraint.iter() {
            let bind = |v: Logvar| t[schema.iter().position(|&s| s == v).expect("bound logvar")];
            if self.atoms.iter().all(|a| a.counted.is_none()) {
                out.push(GroundInstance {
                    atoms: self.atoms.iter().map(|a| a.ground(bind)).collect(),
                    table: self.table.clone(),
                    convergent: (0..self.atoms.len()).map(|i| i < self.convergent).collect(),
                });
                continue;
            }
            // Expand every counting formula into its member randvars.
            let mut atoms = Vec::new();
            let mut dims = Vec::new();
            let mut convergent = Vec::new();
            let mut groups: Vec<(usize, usize, usize)> = Vec::new(); // (start, len, range)
            for (i, a) in self.atoms.iter().enumerate() {
                match &a.counted {
                    None => {
                        groups.push((atoms.len(), 1, 0));
                        atoms.push(a.ground(bind));
                        dims.push(a.range);
                        convergent.push(i < self.convergent);
                    }
                    Some(c) => {
                        groups.push((atoms.len(), c.values.len(), a.range));
                        for &v in c.values.iter() {
                            atoms.push(a.ground(|l| if l == c.logvar { v } else { bind(l) }));
                            dims.push(a.range);
                            convergent.push(i < self.convergent);
                        }
                    }
                }
            }
            let mut table = Table::filled(dims, 0.0);
            let mut key = vec![0usize; self.atoms.len()];
            for idx in 0..table.len() {
                let asg = table.assignment(idx);
                for (slot, &(start, len, range)) in groups.iter().enumerate() {
                    key[slot] = if range == 0 {
                        asg[start]
                    } else {
                        histogram_index(&histogram_of(&asg[start..start + len], range))
                    };
                }
                table.values[idx] = self.table.lookup(&key)?;
            }
            out.push(GroundInstance {
                atoms,
                table,
                convergent,
            });
        }
        Ok(out)
    }
}
