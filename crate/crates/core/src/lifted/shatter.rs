//! Shattering: every logvar ranges over one class of interchangeable
//! constants, and atoms with the same key denote the same randvars.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::constraint::{Column, Constraint};
use crate::error::{Error, Result};
use crate::factor::{Atom, Parfactor, Term};
use crate::symbol::{Logvar, Sym};
use crate::table::Table;

use super::ops;

/// Identifies the randvars of an atom inside a shattered model. Classes are
/// named by their smallest constant; the index records the first position of
/// the same logvar in the atom.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KeyArg {
    Const(Sym),
    Class(Sym, usize),
    Counted(Sym),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Key {
    pub functor: Sym,
    pub args: Vec<KeyArg>,
}

impl Key {
    pub fn ground(functor: Sym, args: &[Sym]) -> Key {
        Key {
            functor,
            args: args.iter().map(|&c| KeyArg::Const(c)).collect(),
        }
    }

    fn classes(&self) -> impl Iterator<Item = Sym> + '_ {
        self.args.iter().filter_map(|a| match a {
            KeyArg::Class(c, _) | KeyArg::Counted(c) => Some(*c),
            KeyArg::Const(_) => None,
        })
    }

    /// The key without equality information.
    fn shape(&self) -> Vec<Option<Sym>> {
        self.args
            .iter()
            .map(|a| match a {
                KeyArg::Const(c) => Some(*c),
                KeyArg::Class(..) | KeyArg::Counted(_) => None,
            })
            .collect()
    }
}

pub fn key_of(g: &Parfactor, a: &Atom) -> Key {
    let mut args = Vec::with_capacity(a.args.len());
    for (i, t) in a.args.iter().enumerate() {
        args.push(match t {
            Term::Const(c) => KeyArg::Const(*c),
            Term::Var(v) => match &a.counted {
                Some(c) if c.logvar == *v => KeyArg::Counted(c.values[0]),
                _ => {
                    let first = a.args.iter().position(|u| u == t).unwrap_or(i);
                    let col = g.constraint.values(*v).expect("shattered parfactor binds its logvars");
                    KeyArg::Class(col[0], first)
                }
            },
        });
    }
    Key {
        functor: a.functor,
        args,
    }
}

/// Expands a parfactor into one parfactor per constraint tuple.
fn propositionalize(g: &Parfactor) -> Result<Vec<Parfactor>> {
    let schema = g.constraint.schema().to_vec();
    let mut out = Vec::new();
    for t in g.constraint.iter() {
        let atoms = g
            .atoms
            .iter()
            .map(|a| {
                let mut a = a.clone();
                for (v, c) in schema.iter().zip(t.iter()) {
                    a = a.substitute(*v, Term::Const(*c));
                }
                a
            })
            .collect();
        out.push(Parfactor {
            kind: g.kind,
            atoms,
            table: g.table.clone(),
            constraint: Constraint::unit(),
            convergent: g.convergent,
        });
    }
    Ok(out)
}

/// Brings a model parfactor into product form without constraint-only
/// logvars.
pub fn prepare(g: &Parfactor) -> Result<Vec<Parfactor>> {
    if g.constraint.is_empty() {
        return Ok(Vec::new());
    }
    let parts = if g.constraint.is_product() {
        vec![g.clone()]
    } else {
        propositionalize(g)?
    };
    parts.iter().map(ops::absorb).collect()
}

/// The coarsest partition of the constants in which every column is a union
/// of classes and every constant of `forced` is alone.
pub struct Classes {
    /// Class representative (smallest member) of every constant.
    pub of: BTreeMap<Sym, Sym>,
    pub members: BTreeMap<Sym, Column>,
}

impl Classes {
    pub fn compute(gs: &[&Parfactor], forced: &BTreeSet<Sym>) -> Classes {
        let mut sig: BTreeMap<Sym, Vec<usize>> = BTreeMap::new();
        let mut id = 0usize;
        let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
        let mut visit = |col: &Column, sig: &mut BTreeMap<Sym, Vec<usize>>| {
            let ptr = Arc::as_ptr(col) as *const Sym as usize;
            let cid = *seen.entry(ptr).or_insert_with(|| {
                id += 1;
                id
            });
            for &c in col.iter() {
                let s = sig.entry(c).or_default();
                if s.last() != Some(&cid) {
                    s.push(cid);
                }
            }
        };
        for g in gs {
            if let Some(cols) = g.constraint.as_product() {
                for col in cols {
                    visit(col, &mut sig);
                }
            }
            for a in &g.atoms {
                if let Some(c) = &a.counted {
                    visit(&c.values, &mut sig);
                }
            }
        }
        let mut groups: BTreeMap<Vec<usize>, Vec<Sym>> = BTreeMap::new();
        let mut of = BTreeMap::new();
        let mut members = BTreeMap::new();
        for (c, mut s) in sig {
            if forced.contains(&c) {
                of.insert(c, c);
                members.insert(c, Arc::from(vec![c]));
                continue;
            }
            s.sort_unstable();
            s.dedup();
            groups.entry(s).or_default().push(c);
        }
        for (_, g) in groups {
            let col: Column = Arc::from(g);
            for &c in col.iter() {
                of.insert(c, col[0]);
            }
            members.insert(col[0], col);
        }
        Classes { of, members }
    }

    /// The classes making up a column.
    fn parts(&self, col: &Column) -> Vec<Column> {
        let mut reps: Vec<Sym> = col.iter().map(|c| self.of[c]).collect();
        reps.sort_unstable();
        reps.dedup();
        reps.into_iter().map(|r| self.members[&r].clone()).collect()
    }
}

/// Splits a product parfactor into one parfactor per combination of classes,
/// replacing single-constant logvars by their constant.
pub fn split(g: &Parfactor, classes: &Classes) -> Result<Vec<Parfactor>> {
    let cols = g
        .constraint
        .as_product()
        .ok_or_else(|| Error::Precondition("splitting needs a product constraint".into()))?;
    for a in &g.atoms {
        if let Some(c) = &a.counted {
            if classes.parts(&c.values).len() != 1 {
                return Err(Error::NotApplicable("cannot split the domain of a counting formula".into()));
            }
        }
    }
    let schema = g.constraint.schema().to_vec();
    let parts: Vec<Vec<Column>> = cols.iter().map(|c| classes.parts(c)).collect();
    if parts.iter().all(|p| p.len() == 1 && p[0].len() > 1) {
        return Ok(vec![g.clone()]);
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; parts.len()];
    loop {
        let chosen: Vec<Column> = idx.iter().zip(&parts).map(|(&i, p)| p[i].clone()).collect();
        let mut atoms = g.atoms.clone();
        let mut keep_vars = Vec::new();
        let mut keep_cols = Vec::new();
        for (v, col) in schema.iter().zip(chosen) {
            if col.len() == 1 {
                atoms = atoms.iter().map(|a| a.substitute(*v, Term::Const(col[0]))).collect();
            } else {
                keep_vars.push(*v);
                keep_cols.push(col);
            }
        }
        out.push(Parfactor {
            kind: g.kind,
            atoms,
            table: g.table.clone(),
            constraint: Constraint::from_columns(keep_vars, keep_cols),
            convergent: g.convergent,
        });
        let mut k = idx.len();
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < parts[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Removes the later of two identical atoms by keeping only the diagonal of
/// the table.
fn merge_duplicates(g: &Parfactor) -> Result<Parfactor> {
    let mut g = g.clone();
    'outer: loop {
        for i in 0..g.atoms.len() {
            for j in i + 1..g.atoms.len() {
                if g.atoms[i] != g.atoms[j] {
                    continue;
                }
                if (i < g.convergent) != (j < g.convergent) {
                    return Err(Error::Model("atom is both convergent and regular in one factor".into()));
                }
                let mut dims = g.table.dims.clone();
                dims.remove(j);
                let mut t = Table::filled(dims, 0.0);
                for idx in 0..t.len() {
                    let mut asg = t.assignment(idx);
                    asg.insert(j, asg[i]);
                    t.values[idx] = g.table.lookup(&asg)?;
                }
                g.atoms.remove(j);
                if j < g.convergent {
                    g.convergent -= 1;
                }
                g.table = t;
                continue 'outer;
            }
        }
        return Ok(g);
    }
}

/// Splits, merges duplicate atoms and detects overlapping keys. Returns the
/// classes whose constants must be separated before the model is shattered.
pub fn refine(gs: Vec<Parfactor>, forced: &BTreeSet<Sym>) -> Result<(Vec<Parfactor>, BTreeSet<Sym>)> {
    let classes = Classes::compute(&gs.iter().collect::<Vec<_>>(), forced);
    let mut out = Vec::new();
    for g in &gs {
        for p in split(g, &classes)? {
            out.push(merge_duplicates(&p)?);
        }
    }
    let mut bad = BTreeSet::new();
    let mut shapes: BTreeMap<(Sym, Vec<Option<Sym>>), BTreeSet<Key>> = BTreeMap::new();
    for g in &out {
        let keys: Vec<Key> = g.atoms.iter().map(|a| key_of(g, a)).collect();
        for (i, k) in keys.iter().enumerate() {
            if keys[i + 1..].contains(k) {
                bad.extend(k.classes());
            }
            shapes.entry((k.functor, k.shape())).or_default().insert(k.clone());
        }
    }
    // Keys that agree on every constant may still overlap when their class
    // slots intersect.
    for keys in shapes.values() {
        let keys: Vec<&Key> = keys.iter().collect();
        for (i, a) in keys.iter().enumerate() {
            for b in &keys[i + 1..] {
                if overlap(a, b) {
                    bad.extend(a.classes());
                    bad.extend(b.classes());
                }
            }
        }
    }
    Ok((out, bad))
}

fn overlap(a: &Key, b: &Key) -> bool {
    a.args.iter().zip(&b.args).all(|(x, y)| match (x, y) {
        (KeyArg::Const(c), KeyArg::Const(d)) => c == d,
        (KeyArg::Class(c, _) | KeyArg::Counted(c), KeyArg::Class(d, _) | KeyArg::Counted(d)) => c == d,
        _ => false,
    })
}

/// Repeats [`refine`] until no keys overlap.
pub fn shatter(mut gs: Vec<Parfactor>, forced: &mut BTreeSet<Sym>, classes_of: impl Fn(&[Parfactor], Sym) -> Vec<Sym>) -> Result<Vec<Parfactor>> {
    loop {
        let (out, bad) = refine(gs, forced)?;
        if bad.is_empty() {
            return Ok(out);
        }
        let before = forced.len();
        for rep in bad {
            forced.extend(classes_of(&out, rep));
        }
        if forced.len() == before {
            return Err(Error::NotApplicable("cannot separate overlapping atoms".into()));
        }
        gs = out;
    }
}

/// Members of the class named `rep` among the parfactors.
pub fn class_members(gs: &[Parfactor], rep: Sym) -> Vec<Sym> {
    for g in gs {
        if let Some(cols) = g.constraint.as_product() {
            for c in cols {
                if c[0] == rep {
                    return c.to_vec();
                }
            }
        }
        for a in &g.atoms {
            if let Some(c) = &a.counted {
                if c.values[0] == rep {
                    return c.values.to_vec();
                }
            }
        }
    }
    vec![rep]
}

/// Renames the logvars of `g` by their position in `a`, its atom with the
/// given key, so that parfactors sharing that key line up.
pub fn canonical(g: &Parfactor, a: usize) -> Result<Parfactor> {
    let mut map: BTreeMap<Logvar, Logvar> = BTreeMap::new();
    for (i, t) in g.atoms[a].args.iter().enumerate() {
        if let Term::Var(v) = t {
            map.entry(*v).or_insert(Logvar(i as u32));
        }
    }
    let n = g.atoms[a].args.len() as u32;
    let mut next = n;
    for v in g.constraint.schema() {
        map.entry(*v).or_insert_with(|| {
            next += 1;
            Logvar(next)
        });
    }
    for at in &g.atoms {
        if let Some(c) = &at.counted {
            map.entry(c.logvar).or_insert_with(|| {
                next += 1;
                Logvar(next)
            });
        }
    }
    Ok(Parfactor {
        kind: g.kind,
        atoms: g.atoms.iter().map(|at| at.rename(|v| map[&v])).collect(),
        table: g.table.clone(),
        constraint: g.constraint.rename(&map)?,
        convergent: g.convergent,
    })
}
