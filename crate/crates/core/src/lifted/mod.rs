//! Lifted variable elimination with heterogeneous parfactors.
//!
//! The model is shattered, then the cheapest applicable operator is applied
//! until only the query remains. Sum-outs are preferred; multiplication,
//! counting conversion and splitting only serve to make one applicable.

pub mod ops;
mod shatter;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::factor::{Atom, GroundAtom, Kind, Parfactor, Term};
use crate::ground::normalize;
use crate::model::Model;
use crate::symbol::{Logvar, Sym};
use crate::table::{cell_count, Table};
use crate::InferenceOptions;

use ops::Alignment;
use shatter::{Key, KeyArg};

pub use shatter::key_of;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Op {
    SumOut,
    HetSumOut,
    Multiply,
    HetMultiply,
    CountingConvert,
    Split,
}

/// One operator application: the operator and the number of atoms of each
/// operand.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TraceStep {
    pub op: Op,
    pub arities: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiftedResult {
    pub distribution: Vec<f64>,
    pub trace: Vec<TraceStep>,
}

struct Engine<'a> {
    f1: Vec<Parfactor>,
    f2: Vec<Parfactor>,
    forced: BTreeSet<Sym>,
    query: Key,
    names: &'a crate::symbol::Symbols,
    trace: Vec<TraceStep>,
    opts: &'a InferenceOptions<'a>,
}

/// Occurrence of a key: list (0 = F1, 1 = F2), parfactor, atom.
type Site = (usize, usize, usize);

enum Step {
    Eliminate(Key),
    Absorb(usize, usize, Alignment),
    Count(usize, Logvar),
    Split(Sym),
}

impl<'a> Engine<'a> {
    fn list(&self, l: usize) -> &Vec<Parfactor> {
        if l == 0 {
            &self.f1
        } else {
            &self.f2
        }
    }

    fn sites(&self) -> BTreeMap<Key, Vec<Site>> {
        let mut out: BTreeMap<Key, Vec<Site>> = BTreeMap::new();
        for l in 0..2 {
            for (i, g) in self.list(l).iter().enumerate() {
                for (j, a) in g.atoms.iter().enumerate() {
                    out.entry(key_of(g, a)).or_default().push((l, i, j));
                }
            }
        }
        out
    }

    fn key_name(&self, k: &Key) -> String {
        let mut s = String::from(self.names.name(k.functor));
        for a in &k.args {
            s.push(',');
            match a {
                KeyArg::Const(c) => s.push_str(self.names.name(*c)),
                KeyArg::Class(c, i) => {
                    s.push_str(self.names.name(*c));
                    s.push_str(&alloc::format!("/{i}"));
                }
                KeyArg::Counted(c) => {
                    s.push('#');
                    s.push_str(self.names.name(*c));
                }
            }
        }
        s
    }

    fn reshatter(&mut self) -> Result<()> {
        let all: Vec<Parfactor> = self.f1.drain(..).chain(self.f2.drain(..)).collect();
        let out = shatter::shatter(all, &mut self.forced, shatter::class_members)?;
        for g in out {
            self.push(g)?;
        }
        Ok(())
    }

    fn push(&mut self, g: Parfactor) -> Result<()> {
        if g.atoms.is_empty() {
            if g.table.values[0] == 0.0 {
                return Err(Error::InconsistentEvidence);
            }
            return Ok(());
        }
        if g.is_het() {
            self.f2.push(g);
        } else {
            self.f1.push(g);
        }
        Ok(())
    }

    /// Result size of eliminating `z`, or `None` when it cannot be
    /// eliminated yet.
    fn elimination_cost(&self, z: &Key, sites: &[Site]) -> Option<(usize, usize)> {
        // A deputy's E waits for its E', unless E' is the query.
        if self
            .f1
            .iter()
            .any(|g| g.kind == Kind::Deputy && key_of(g, &g.atoms[0]) == *z && key_of(g, &g.atoms[1]) != self.query)
        {
            return None;
        }
        let mut parfactors: BTreeSet<(usize, usize)> = BTreeSet::new();
        for &(l, i, _) in sites {
            if !parfactors.insert((l, i)) {
                return None; // the key occurs twice in one parfactor
            }
        }
        let mut atoms: BTreeSet<(Key, Vec<Term>)> = BTreeSet::new();
        let mut het = false;
        for &(l, i, j) in sites {
            let g = &self.list(l)[i];
            let zv = g.atoms[j].logvars();
            if g.logvars().iter().any(|v| !zv.contains(v)) {
                return None;
            }
            // Align the other atoms by the positions of their logvars in z.
            for (k, a) in g.atoms.iter().enumerate() {
                if k == j {
                    continue;
                }
                if k < g.convergent {
                    het = true;
                }
                let args = a
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => match g.atoms[j].args.iter().position(|u| u == t) {
                            Some(p) => Term::Var(Logvar(p as u32)),
                            None => Term::Var(*v),
                        },
                        c => *c,
                    })
                    .collect();
                atoms.insert((key_of(g, a), args));
            }
        }
        let mut size = self.list(sites[0].0)[sites[0].1].atoms[sites[0].2].size();
        let mut cells = 1usize;
        for (k, _) in &atoms {
            let s = self.atom_size(k);
            cells = cells.saturating_mul(s);
            size = size.saturating_mul(s);
        }
        if self.opts.check_cells(size).is_err() {
            return None;
        }
        Some((cells, usize::from(het)))
    }

    fn atom_size(&self, k: &Key) -> usize {
        for l in 0..2 {
            for g in self.list(l) {
                for a in &g.atoms {
                    if key_of(g, a) == *k {
                        return a.size();
                    }
                }
            }
        }
        2
    }

    fn choose(&self) -> Option<Step> {
        let sites = self.sites();
        let mut best: Option<((usize, usize, String), Key)> = None;
        for (k, s) in &sites {
            if *k == self.query {
                continue;
            }
            if let Some((cells, het)) = self.elimination_cost(k, s) {
                let rank = (cells, het, self.key_name(k));
                if best.as_ref().map_or(true, |(r, _)| rank < *r) {
                    best = Some((rank, k.clone()));
                }
            }
        }
        if let Some((_, k)) = best {
            return Some(Step::Eliminate(k));
        }
        if let Some(s) = self.absorb_candidate() {
            return Some(s);
        }
        if let Some(s) = self.count_candidate(&sites) {
            return Some(s);
        }
        self.split_candidate().map(Step::Split)
    }

    /// A homogeneous parfactor whose atoms all occur in another one.
    fn absorb_candidate(&self) -> Option<Step> {
        let mut best: Option<(usize, usize, usize, Alignment)> = None;
        for (h, gh) in self.f1.iter().enumerate() {
            if gh.kind == Kind::Deputy {
                continue;
            }
            for (g, gg) in self.f1.iter().enumerate() {
                if g == h || gg.kind == Kind::Deputy || gg.atoms.len() < gh.atoms.len() {
                    continue;
                }
                let Some(theta) = embed(gh, gg) else { continue };
                let cells = gg.table.len();
                if best.as_ref().map_or(true, |b| cells < b.0) {
                    best = Some((cells, h, g, theta));
                }
            }
        }
        best.map(|(_, h, g, t)| Step::Absorb(h, g, t))
    }

    fn count_candidate(&self, sites: &BTreeMap<Key, Vec<Site>>) -> Option<Step> {
        let mut best: Option<(usize, usize, Logvar)> = None;
        for (i, g) in self.f1.iter().enumerate() {
            if g.kind == Kind::Deputy || g.atoms.len() < 2 {
                continue;
            }
            for x in g.logvars() {
                let holders: Vec<usize> = (0..g.atoms.len())
                    .filter(|&j| g.atoms[j].args.contains(&Term::Var(x)))
                    .collect();
                if holders.len() != 1 {
                    continue;
                }
                let a = &g.atoms[holders[0]];
                if a.counted.is_some() || a.args.iter().filter(|t| **t == Term::Var(x)).count() != 1 {
                    continue;
                }
                if sites[&key_of(g, a)].len() != 1 {
                    continue;
                }
                let n = g.constraint.values(x).map(|c| c.len()).unwrap_or(0);
                let dims: Vec<usize> = g
                    .atoms
                    .iter()
                    .enumerate()
                    .map(|(j, b)| if j == holders[0] { crate::factor::histogram_count(n, b.range) } else { b.size() })
                    .collect();
                let cells = cell_count(&dims).unwrap_or(usize::MAX);
                if self.opts.check_cells(cells).is_err() {
                    continue;
                }
                if best.map_or(true, |b| cells < b.0) {
                    best = Some((cells, i, x));
                }
            }
        }
        best.map(|(_, i, x)| Step::Count(i, x))
    }

    /// The smallest class still shared by several constants.
    fn split_candidate(&self) -> Option<Sym> {
        let mut best: Option<(usize, Sym)> = None;
        let mut counted: BTreeSet<Sym> = BTreeSet::new();
        for g in self.f1.iter().chain(&self.f2) {
            for a in &g.atoms {
                if let Some(c) = &a.counted {
                    counted.insert(c.values[0]);
                }
            }
        }
        for g in self.f1.iter().chain(&self.f2) {
            for c in g.constraint.as_product().unwrap_or(&[]) {
                if c.len() > 1 && !counted.contains(&c[0]) && best.map_or(true, |b| (c.len(), c[0]) < b) {
                    best = Some((c.len(), c[0]));
                }
            }
        }
        best.map(|b| b.1)
    }

    fn record(&mut self, op: Op, operands: &[&Parfactor]) {
        self.trace.push(TraceStep {
            op,
            arities: operands.iter().map(|g| g.atoms.len()).collect(),
        });
    }

    fn eliminate(&mut self, z: &Key) -> Result<()> {
        let mut g1 = Vec::new();
        let mut g2 = Vec::new();
        let f1 = core::mem::take(&mut self.f1);
        for g in f1 {
            match g.atoms.iter().position(|a| key_of(&g, a) == *z) {
                Some(j) => g1.push(shatter::canonical(&g, j)?),
                None => self.f1.push(g),
            }
        }
        let f2 = core::mem::take(&mut self.f2);
        for g in f2 {
            match g.atoms.iter().position(|a| key_of(&g, a) == *z) {
                Some(j) => g2.push(shatter::canonical(&g, j)?),
                None => self.f2.push(g),
            }
        }
        let mut phi: Option<Parfactor> = None;
        for g in g1 {
            phi = Some(match phi {
                None => g,
                Some(p) => {
                    self.record(Op::Multiply, &[&p, &g]);
                    ops::lifted_multiply(&p, &g, &identity(&p))?
                }
            });
        }
        let mut psi: Option<Parfactor> = None;
        for g in g2 {
            psi = Some(match psi {
                None => g,
                Some(p) => {
                    let shared = p.atoms[..p.convergent].iter().any(|a| g.atoms[..g.convergent].contains(a));
                    if shared {
                        self.record(Op::HetMultiply, &[&p, &g]);
                        ops::het_multiply(&p, &g, &identity(&p))?
                    } else {
                        self.record(Op::Multiply, &[&p, &g]);
                        ops::lifted_multiply(&p, &g, &identity(&p))?
                    }
                }
            });
        }
        let combined = match (psi, phi) {
            (Some(p), Some(f)) => {
                self.record(Op::Multiply, &[&p, &f]);
                ops::lifted_multiply(&p, &f, &identity(&p))?
            }
            (Some(p), None) => p,
            (None, Some(f)) => f,
            (None, None) => return Ok(()),
        };
        self.opts.check_cells(combined.table.len())?;
        let j = combined
            .atoms
            .iter()
            .position(|a| key_of(&combined, a) == *z)
            .expect("eliminated key is present");
        let out = if combined.is_het() {
            self.record(Op::HetSumOut, &[&combined]);
            ops::het_sum_out(&combined, j)?
        } else {
            self.record(Op::SumOut, &[&combined]);
            ops::lifted_sum_out(&combined, j)?
        };
        self.push(out)
    }

    fn absorb(&mut self, h: usize, g: usize, theta: Alignment) -> Result<()> {
        let gh = self.f1[h].clone();
        let gg = self.f1[g].clone();
        self.record(Op::Multiply, &[&gh, &gg]);
        let out = ops::lifted_multiply(&gh, &gg, &theta)?;
        let (a, b) = if h > g { (h, g) } else { (g, h) };
        self.f1.remove(a);
        self.f1.remove(b);
        self.push(out)
    }

    fn count(&mut self, i: usize, x: Logvar) -> Result<()> {
        let g = self.f1.remove(i);
        self.record(Op::CountingConvert, &[&g]);
        let out = ops::counting_convert(&g, x)?;
        self.push(out)
    }

    fn split(&mut self, rep: Sym) -> Result<()> {
        let all: Vec<Parfactor> = self.f1.iter().chain(&self.f2).cloned().collect();
        let members = shatter::class_members(&all, rep);
        self.trace.push(TraceStep {
            op: Op::Split,
            arities: vec![members.len().min(1)],
        });
        self.forced.extend(members);
        self.reshatter()
    }

    fn finish(&mut self, range: usize) -> Result<Vec<f64>> {
        let mut gamma = Table::filled(vec![range], 1.0);
        let f1 = core::mem::take(&mut self.f1);
        let f2 = core::mem::take(&mut self.f2);
        let mut psi: Option<Parfactor> = None;
        for g in f2 {
            psi = Some(match psi {
                None => g,
                Some(p) => ops::het_multiply(&p, &g, &Alignment::default())?,
            });
        }
        for g in f1.iter().chain(psi.iter()) {
            // Only the query atom is left.
            if g.atoms.len() != 1 {
                return Err(Error::Model("unexpected atoms left after elimination".into()));
            }
            let t = &g.table;
            for (x, y) in gamma.values.iter_mut().zip(&t.values) {
                *x *= y;
            }
        }
        normalize(gamma.values)
    }
}

fn identity(g: &Parfactor) -> Alignment {
    let mut vars = g.logvars();
    for v in g.constraint.schema() {
        if !vars.contains(v) {
            vars.push(*v);
        }
    }
    Alignment::identity(&vars)
}

/// A renaming of `h`'s logvars under which every atom of `h` is an atom of
/// `g` with the same key.
fn embed(h: &Parfactor, g: &Parfactor) -> Option<Alignment> {
    let mut map: BTreeMap<Logvar, Logvar> = BTreeMap::new();
    let gkeys: Vec<Key> = g.atoms.iter().map(|a| key_of(g, a)).collect();
    for a in &h.atoms {
        if a.counted.is_some() {
            return None;
        }
        let k = key_of(h, a);
        let j = gkeys.iter().position(|x| *x == k)?;
        if gkeys[j + 1..].contains(&k) {
            return None;
        }
        for (s, t) in a.args.iter().zip(&g.atoms[j].args) {
            if let (Term::Var(u), Term::Var(v)) = (s, t) {
                if *map.entry(*u).or_insert(*v) != *v {
                    return None;
                }
            }
        }
    }
    let mut targets: Vec<Logvar> = map.values().copied().collect();
    targets.sort();
    targets.dedup();
    if targets.len() != map.len() {
        return None;
    }
    Some(Alignment(map.into_iter().collect()))
}

/// Posterior of `query` given `evidence` (atom, value index).
pub fn infer(
    m: &Model,
    query: &GroundAtom,
    evidence: &[(GroundAtom, usize)],
    opts: &InferenceOptions,
) -> Result<LiftedResult> {
    m.check()?;
    let range = m.range_size(query.functor);
    if !m.covers(query) {
        return Err(Error::UnknownQuery(m.ground_atom_name(query)));
    }
    let mut forced: BTreeSet<Sym> = query.args.iter().copied().collect();
    let mut start = Vec::new();
    for g in m.parfactors() {
        for a in &g.atoms {
            for t in &a.args {
                if let Term::Const(c) = t {
                    forced.insert(*c);
                }
            }
        }
        start.extend(shatter::prepare(g)?);
    }
    for (e, _) in evidence {
        if !m.covers(e) {
            return Err(Error::UnknownQuery(m.ground_atom_name(e)));
        }
        forced.extend(e.args.iter().copied());
    }
    let mut engine = Engine {
        f1: Vec::new(),
        f2: Vec::new(),
        forced,
        query: Key::ground(query.functor, &query.args),
        names: &m.symbols,
        trace: Vec::new(),
        opts,
    };
    let out = shatter::shatter(start, &mut engine.forced, shatter::class_members)?;
    for g in out {
        engine.push(g)?;
    }
    let sites = engine.sites();
    for (e, v) in evidence {
        let k = Key::ground(e.functor, &e.args);
        match sites.get(&k) {
            Some(s) if s.iter().any(|&(l, i, j)| j < engine.list(l)[i].convergent) => {
                return Err(Error::Model("evidence on a convergent atom".into()))
            }
            Some(_) => {}
            None => return Err(Error::UnknownQuery(m.ground_atom_name(e))),
        }
        let r = m.range_size(e.functor);
        if *v >= r {
            return Err(Error::Range(alloc::format!("evidence value {v} outside range {r}")));
        }
        let mut values = vec![0.0; r];
        values[*v] = 1.0;
        let atom = Atom::new(e.functor, e.args.iter().map(|&c| Term::Const(c)).collect(), r);
        engine.f1.push(Parfactor::new(Kind::Bayes, vec![atom], values, crate::Constraint::unit())?);
    }
    if !sites.contains_key(&engine.query) {
        return Err(Error::UnknownQuery(m.ground_atom_name(query)));
    }
    loop {
        opts.check_interrupt()?;
        if engine.sites().keys().all(|k| *k == engine.query) {
            break;
        }
        match engine.choose() {
            None => return Err(Error::NotApplicable("no lifted operator applies".into())),
            Some(Step::Eliminate(z)) => engine.eliminate(&z)?,
            Some(Step::Absorb(h, g, t)) => engine.absorb(h, g, t)?,
            Some(Step::Count(i, x)) => engine.count(i, x)?,
            Some(Step::Split(rep)) => engine.split(rep)?,
        }
    }
    let distribution = engine.finish(range)?;
    Ok(LiftedResult {
        distribution,
        trace: engine.trace,
    })
}

#[cfg(test)]
mod tests;
