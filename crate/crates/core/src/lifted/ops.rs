//! The lifted operators on parfactors.
//!
//! Heterogeneous factors that a parfactor groups together are combined with
//! ⊗, which is a pointwise product once every convergent axis is replaced by
//! its cumulative sums over the order f < t. Roots and powers of a
//! heterogeneous factor (one grounding standing for several, or several for
//! one) are therefore taken in that cumulative domain.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::factor::{mul_weights, Atom, Counted, Kind, Parfactor, Term};
use crate::symbol::Logvar;
use crate::table::{powf, Table};

/// A one-to-one renaming of logvars of one parfactor onto another's.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Alignment(pub Vec<(Logvar, Logvar)>);

impl Alignment {
    pub fn identity(vars: &[Logvar]) -> Alignment {
        Alignment(vars.iter().map(|&v| (v, v)).collect())
    }
}

fn kind_for(convergent: usize) -> Kind {
    if convergent > 0 {
        Kind::Het
    } else {
        Kind::Markov
    }
}

/// Cumulative sums along the given Boolean axes.
pub fn zeta(t: &Table, axes: impl IntoIterator<Item = usize>) -> Table {
    let mut t = t.clone();
    for a in axes {
        t.zeta_axis(a);
    }
    t
}

/// Inverse of [`zeta`].
pub fn mobius(t: &Table, axes: impl IntoIterator<Item = usize>) -> Table {
    let mut t = t.clone();
    for a in axes {
        t.mobius_axis(a);
    }
    t
}

/// The factor whose `e`-fold ⊗-combination with itself gives `t` back (or,
/// for integer `e`, that combination itself). With no convergent axes this is
/// the plain power `t^e`.
pub fn het_power(t: &Table, convergent: usize, e: f64) -> Table {
    if convergent == 0 {
        return t.pow(e);
    }
    mobius(&zeta(t, 0..convergent).pow(e), 0..convergent)
}

fn max_logvar(gs: &[&Parfactor]) -> u32 {
    let mut m = 0;
    for g in gs {
        for v in g.constraint.schema() {
            m = m.max(v.0 + 1);
        }
        for a in &g.atoms {
            for t in &a.args {
                if let Term::Var(v) = t {
                    m = m.max(v.0 + 1);
                }
            }
        }
    }
    m
}

/// Applies θ to `g1` and moves its other logvars out of `g2`'s way.
fn apply_alignment(g1: &Parfactor, g2: &Parfactor, theta: &Alignment) -> Result<Parfactor> {
    let mut targets: Vec<Logvar> = theta.0.iter().map(|p| p.1).collect();
    targets.sort();
    targets.dedup();
    if targets.len() != theta.0.len() {
        return Err(Error::Precondition("alignment is not one-to-one".into()));
    }
    let mut map: BTreeMap<Logvar, Logvar> = theta.0.iter().copied().collect();
    let mut next = max_logvar(&[g1, g2]);
    let mut own: Vec<Logvar> = g1.constraint.schema().to_vec();
    for a in &g1.atoms {
        if let Some(c) = &a.counted {
            own.push(c.logvar);
        }
    }
    for v in own {
        map.entry(v).or_insert_with(|| {
            next += 1;
            Logvar(next)
        });
    }
    Ok(Parfactor {
        kind: g1.kind,
        atoms: g1.atoms.iter().map(|a| a.rename(|v| map[&v])).collect(),
        table: g1.table.clone(),
        constraint: g1.constraint.rename(&map)?,
        convergent: g1.convergent,
    })
}

struct Joined {
    atoms: Vec<Atom>,
    convergent: Vec<bool>,
    /// Output position of every atom of g1 and g2.
    pos1: Vec<usize>,
    pos2: Vec<usize>,
    constraint: Constraint,
    /// Copies of each g1 (g2) grounding among the joined groundings.
    r_of_1: usize,
    r_of_2: usize,
}

/// Shared part of both multiplications: atom union, constraint join and the
/// instance counts r.
fn join(g1: &Parfactor, g2: &Parfactor) -> Result<Joined> {
    let mut all: Vec<(Atom, bool)> = Vec::new();
    let mut pos1 = Vec::new();
    let mut pos2 = Vec::new();
    for (i, a) in g1.atoms.iter().enumerate() {
        pos1.push(all.len());
        all.push((a.clone(), i < g1.convergent));
    }
    for (i, a) in g2.atoms.iter().enumerate() {
        let c = i < g2.convergent;
        match all.iter().position(|(b, _)| b == a) {
            Some(p) => {
                pos2.push(p);
                all[p].1 |= c;
            }
            None => {
                pos2.push(all.len());
                all.push((a.clone(), c));
            }
        }
    }
    // Convergent atoms first.
    let mut order: Vec<usize> = (0..all.len()).filter(|&i| all[i].1).collect();
    order.extend((0..all.len()).filter(|&i| !all[i].1));
    let inv: Vec<usize> = (0..all.len()).map(|i| order.iter().position(|&o| o == i).unwrap()).collect();
    let atoms: Vec<Atom> = order.iter().map(|&i| all[i].0.clone()).collect();
    let convergent: Vec<bool> = order.iter().map(|&i| all[i].1).collect();

    let shared: Vec<Logvar> = g1
        .constraint
        .schema()
        .iter()
        .copied()
        .filter(|v| g2.constraint.position(*v).is_some())
        .collect();
    if g1.constraint.project(&shared)? != g2.constraint.project(&shared)? {
        return Err(Error::Precondition(
            "the aligned logvars range over different tuples; split first".into(),
        ));
    }
    let constraint = g1.constraint.join(&g2.constraint)?;
    let count = |own: &Constraint| -> Result<usize> {
        let rest: Vec<Logvar> = constraint
            .schema()
            .iter()
            .copied()
            .filter(|v| own.position(*v).is_none())
            .collect();
        constraint
            .conditional_count(&rest, own.schema())?
            .ok_or_else(|| Error::Precondition("logvars are not count-normalized; split first".into()))
    };
    let r_of_1 = count(&g1.constraint)?;
    let r_of_2 = count(&g2.constraint)?;
    Ok(Joined {
        atoms,
        convergent,
        pos1: pos1.into_iter().map(|p| inv[p]).collect(),
        pos2: pos2.into_iter().map(|p| inv[p]).collect(),
        constraint,
        r_of_1,
        r_of_2,
    })
}

fn finish_product(j: Joined, table: Table) -> Result<Parfactor> {
    let k = j.convergent.iter().filter(|&&c| c).count();
    Parfactor::with_convergent(kind_for(k), j.atoms, table.values, j.constraint, k)
}

/// Lifted multiplication of two parfactors that share no atom convergent in
/// both. Each potential is rooted by the number of groundings it is spread
/// over, so the product grounds to the same set of factors.
///
/// An atom convergent in one operand and regular in the other (a deputy
/// factor meeting its heterogeneous factors) is allowed and stays convergent;
/// the engine sums it out right away.
pub fn lifted_multiply(g1: &Parfactor, g2: &Parfactor, theta: &Alignment) -> Result<Parfactor> {
    let g1 = apply_alignment(g1, g2, theta)?;
    let j = join(&g1, g2)?;
    for (i, a) in g1.atoms.iter().enumerate() {
        if i < g1.convergent {
            if let Some(b) = g2.atoms.iter().position(|b| b == a) {
                if b < g2.convergent {
                    return Err(Error::NotApplicable(
                        "shared convergent atoms need heterogeneous multiplication".into(),
                    ));
                }
            }
        }
    }
    let p1 = het_power(&g1.table, g1.convergent, 1.0 / j.r_of_1 as f64);
    let p2 = het_power(&g2.table, g2.convergent, 1.0 / j.r_of_2 as f64);
    let dims: Vec<usize> = j.atoms.iter().map(|a| a.size()).collect();
    let x = p1.expand(&j.pos1, &(0..dims.len()).collect::<Vec<_>>(), &dims);
    let y = p2.expand(&j.pos2, &(0..dims.len()).collect::<Vec<_>>(), &dims);
    let values = x.values.iter().zip(&y.values).map(|(a, b)| a * b).collect();
    finish_product(j, Table { dims, values })
}

/// Heterogeneous lifted multiplication: the groundings sharing convergent
/// atoms are ⊗-combined.
pub fn het_multiply(g1: &Parfactor, g2: &Parfactor, theta: &Alignment) -> Result<Parfactor> {
    let g1 = apply_alignment(g1, g2, theta)?;
    let mut shared_convergent = false;
    for (i, a) in g1.atoms.iter().enumerate() {
        if let Some(b) = g2.atoms.iter().position(|b| b == a) {
            let (c1, c2) = (i < g1.convergent, b < g2.convergent);
            if c1 != c2 {
                return Err(Error::Model("atom is convergent in one factor and regular in the other".into()));
            }
            shared_convergent |= c1;
        }
    }
    if !shared_convergent {
        return Err(Error::NotApplicable("no shared convergent atom; use lifted multiplication".into()));
    }
    let j = join(&g1, g2)?;
    let z1 = zeta(&g1.table, 0..g1.convergent).pow(1.0 / j.r_of_1 as f64);
    let z2 = zeta(&g2.table, 0..g2.convergent).pow(1.0 / j.r_of_2 as f64);
    let dims: Vec<usize> = j.atoms.iter().map(|a| a.size()).collect();
    let x = z1.expand(&j.pos1, &(0..dims.len()).collect::<Vec<_>>(), &dims);
    let y = z2.expand(&j.pos2, &(0..dims.len()).collect::<Vec<_>>(), &dims);
    let values = x.values.iter().zip(&y.values).map(|(a, b)| a * b).collect();
    let k = j.convergent.iter().filter(|&&c| c).count();
    let table = mobius(&Table { dims, values }, 0..k);
    finish_product(j, table)
}

/// Whether two atoms of `g` can ground to a common randvar, judged position
/// by position.
fn may_overlap(g: &Parfactor, a: &Atom, b: &Atom) -> Result<bool> {
    if a.functor != b.functor || a.args.len() != b.args.len() {
        return Ok(false);
    }
    let domain = |t: &Term, at: &Atom| -> Result<Option<crate::constraint::Column>> {
        match t {
            Term::Const(_) => Ok(None),
            Term::Var(v) => match &at.counted {
                Some(c) if c.logvar == *v => Ok(Some(c.values.clone())),
                _ => g.constraint.values(*v).map(Some),
            },
        }
    };
    for (s, t) in a.args.iter().zip(&b.args) {
        let disjoint = match (domain(s, a)?, domain(t, b)?, s, t) {
            (None, None, Term::Const(x), Term::Const(y)) => x != y,
            (Some(d), None, _, Term::Const(y)) | (None, Some(d), Term::Const(y), _) => d.binary_search(y).is_err(),
            (Some(d), Some(e), _, _) => !d.iter().any(|x| e.binary_search(x).is_ok()),
            _ => false,
        };
        if disjoint {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Common checks of the two sum-out operators. Returns the kept atom
/// indices, their logvars and the exclusive count r.
fn sum_out_setup(g: &Parfactor, a: usize) -> Result<(Vec<usize>, Vec<Logvar>, usize)> {
    if a >= g.atoms.len() {
        return Err(Error::Schema(format!("no atom {a}")));
    }
    let logvars = g.logvars();
    if g.constraint.schema().iter().any(|v| !logvars.contains(v)) {
        return Err(Error::Precondition(
            "the constraint has logvars outside the atoms; absorb them first".into(),
        ));
    }
    let target = &g.atoms[a];
    for (i, b) in g.atoms.iter().enumerate() {
        if i != a && may_overlap(g, b, target)? {
            return Err(Error::Precondition("the summed atom may share randvars with another atom".into()));
        }
    }
    let tv = target.logvars();
    for v in &logvars {
        if !tv.contains(v) && g.constraint.values(*v)?.len() > 1 {
            return Err(Error::Precondition(format!(
                "the summed atom lacks the non-singleton logvar {v}"
            )));
        }
    }
    let kept: Vec<usize> = (0..g.atoms.len()).filter(|&i| i != a).collect();
    let mut rest: Vec<Logvar> = Vec::new();
    for &i in &kept {
        for v in g.atoms[i].logvars() {
            if !rest.contains(&v) {
                rest.push(v);
            }
        }
    }
    let excl: Vec<Logvar> = tv.iter().copied().filter(|v| !rest.contains(v)).collect();
    let com: Vec<Logvar> = tv.iter().copied().filter(|v| rest.contains(v)).collect();
    let r = g
        .constraint
        .conditional_count(&excl, &com)?
        .ok_or_else(|| Error::Precondition("exclusive logvars are not count-normalized; split first".into()))?;
    Ok((kept, rest, r))
}

/// Σ over the values of atom `a`, weighted by their multiplicities.
fn inner_sum(g: &Parfactor, a: usize) -> Table {
    let w = mul_weights(&g.atoms[a]);
    g.table.sum_axis(a, w.as_deref())
}

/// Lifted sum-out of a regular atom from a homogeneous parfactor:
/// (Σ_v Mul(A, v) φ)^r.
pub fn lifted_sum_out(g: &Parfactor, a: usize) -> Result<Parfactor> {
    if g.is_het() {
        return Err(Error::NotApplicable("heterogeneous parfactor; use het-sum-out".into()));
    }
    let (kept, rest, r) = sum_out_setup(g, a)?;
    let table = inner_sum(g, a).pow(r as f64);
    Parfactor::with_convergent(
        Kind::Markov,
        kept.iter().map(|&i| g.atoms[i].clone()).collect(),
        table.values,
        g.constraint.project(&rest)?,
        0,
    )
}

/// Evaluates φ'(a', b) = (Σ_{a ≤ a'} T(a, b))^r − Σ_{a < a'} φ'(a, b) for the
/// first `k` (Boolean, convergent) axes of `t`, visiting the convergent
/// tuples by increasing number of `t` values.
pub fn het_sum_out_recurrence(t: &Table, k: usize, r: usize) -> Table {
    let rest: usize = t.dims[k..].iter().product();
    let mut masks: Vec<usize> = (0..1usize << k).collect();
    masks.sort_by_key(|m| m.count_ones());
    // A mask bit i stands for axis i, i.e. bit k-1-i of the row index.
    let row = |m: usize| -> usize { (0..k).fold(0, |acc, i| (acc << 1) | ((m >> i) & 1)) };
    let mut out = vec![0.0; t.len()];
    for b in 0..rest {
        for &m in &masks {
            let mut s = 0.0;
            let mut sub = m;
            loop {
                s += t.values[row(sub) * rest + b];
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & m;
            }
            let mut v = powf(s, r as f64);
            let mut sub = m;
            while sub != 0 {
                sub = (sub - 1) & m;
                v -= out[row(sub) * rest + b];
            }
            out[row(m) * rest + b] = v;
        }
    }
    Table {
        dims: t.dims.clone(),
        values: out,
    }
}

/// Heterogeneous sum-out of atom `a` from a parfactor whose first
/// `g.convergent` atoms are convergent. A convergent `a` leaves the
/// convergent set.
pub fn het_sum_out(g: &Parfactor, a: usize) -> Result<Parfactor> {
    let (kept, rest, r) = sum_out_setup(g, a)?;
    let k = g.convergent - usize::from(a < g.convergent);
    let t = inner_sum(g, a);
    let table = het_sum_out_recurrence(&t, k, r);
    Parfactor::with_convergent(
        kind_for(k),
        kept.iter().map(|&i| g.atoms[i].clone()).collect(),
        table.values,
        g.constraint.project(&rest)?,
        k,
    )
}

/// Replaces the atom holding `x` by the counting formula #_x[...]. The new
/// potential of histogram h is Π_v φ(..., v, ...)^{h_v}.
pub fn counting_convert(g: &Parfactor, x: Logvar) -> Result<Parfactor> {
    if g.is_het() {
        return Err(Error::NotApplicable("counting conversion applies to homogeneous parfactors".into()));
    }
    let holders: Vec<usize> = (0..g.atoms.len())
        .filter(|&i| g.atoms[i].args.contains(&Term::Var(x)))
        .collect();
    if holders.len() != 1 {
        return Err(Error::NotApplicable(format!("{x} must occur in exactly one atom")));
    }
    let i = holders[0];
    let atom = &g.atoms[i];
    if atom.counted.is_some() || atom.args.iter().filter(|t| **t == Term::Var(x)).count() != 1 {
        return Err(Error::NotApplicable(format!("{x} must occur once in a plain atom")));
    }
    if g.constraint.schema().iter().any(|v| !g.logvars().contains(v)) {
        return Err(Error::Precondition(
            "the constraint has logvars outside the atoms; absorb them first".into(),
        ));
    }
    let others: Vec<Logvar> = g.constraint.schema().iter().copied().filter(|&v| v != x).collect();
    let values = g.constraint.values(x)?;
    let n = g.constraint.conditional_count(&[x], &others)?;
    if n != Some(values.len()) {
        return Err(Error::Precondition(format!(
            "{x} does not range over the same constants for every other binding"
        )));
    }
    let mut new_atom = atom.clone();
    new_atom.counted = Some(Counted { logvar: x, values });
    let mut atoms = g.atoms.clone();
    atoms[i] = new_atom;
    let dims: Vec<usize> = atoms.iter().map(|a| a.size()).collect();
    let hists: Vec<_> = crate::factor::histograms(n.unwrap_or(0), atom.range).collect();
    let mut table = Table::filled(dims, 0.0);
    let mut key = vec![0usize; g.atoms.len()];
    for idx in 0..table.len() {
        let asg = table.assignment(idx);
        let h = &hists[asg[i]];
        key.copy_from_slice(&asg);
        let mut v = 1.0;
        for (val, &c) in h.iter().enumerate() {
            if c > 0 {
                key[i] = val;
                v *= powf(g.table.lookup(&key)?, c as f64);
            }
        }
        table.values[idx] = v;
    }
    Parfactor::with_convergent(Kind::Markov, atoms, table.values, g.constraint.project(&others)?, 0)
}

/// Folds constraint logvars that occur in no atom into the potential: the
/// groundings differing only in them are identical factors.
pub fn absorb(g: &Parfactor) -> Result<Parfactor> {
    let logvars = g.logvars();
    let extra: Vec<Logvar> = g
        .constraint
        .schema()
        .iter()
        .copied()
        .filter(|v| !logvars.contains(v))
        .collect();
    if extra.is_empty() {
        return Ok(g.clone());
    }
    let r = g
        .constraint
        .conditional_count(&extra, &logvars)?
        .ok_or_else(|| Error::Precondition("constraint-only logvars are not count-normalized".into()))?;
    let table = het_power(&g.table, g.convergent, r as f64);
    Ok(Parfactor {
        kind: if g.kind == Kind::Deputy { Kind::Deputy } else { kind_for(g.convergent) },
        atoms: g.atoms.clone(),
        table: if g.kind == Kind::Deputy { g.table.clone() } else { table },
        constraint: g.constraint.project(&logvars)?,
        convergent: g.convergent,
    })
}
