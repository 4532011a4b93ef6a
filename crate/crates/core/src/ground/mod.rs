//! Ground variable elimination: plain VE and VE1 with heterogeneous factors.

mod order;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::factor::{GroundAtom, GroundInstance, Kind};
use crate::model::Model;
use crate::table::{self, cell_count, Table};
use crate::InferenceOptions;

pub use order::min_fill_order;

/// A factor over ground randvars, identified by their index in a
/// [`GroundModel`].
#[derive(Clone, Debug, PartialEq)]
pub struct GroundFactor {
    pub vars: Vec<usize>,
    pub table: Table,
    pub convergent: Vec<bool>,
}

impl GroundFactor {
    pub fn new(vars: Vec<usize>, table: Table, convergent: Vec<bool>) -> GroundFactor {
        debug_assert_eq!(vars.len(), table.dims.len());
        debug_assert_eq!(vars.len(), convergent.len());
        GroundFactor {
            vars,
            table,
            convergent,
        }
    }

    pub fn homogeneous(vars: Vec<usize>, table: Table) -> GroundFactor {
        let n = vars.len();
        GroundFactor::new(vars, table, vec![false; n])
    }

    pub fn unit() -> GroundFactor {
        GroundFactor::homogeneous(Vec::new(), Table::scalar(1.0))
    }

    pub fn is_het(&self) -> bool {
        self.convergent.iter().any(|&c| c)
    }

    pub fn has(&self, v: usize) -> bool {
        self.vars.contains(&v)
    }

    fn is_convergent(&self, v: usize) -> Option<bool> {
        self.vars.iter().position(|&w| w == v).map(|i| self.convergent[i])
    }
}

/// Pointwise product. Shared convergent randvars need [`het_multiply`].
pub fn multiply(a: &GroundFactor, b: &GroundFactor) -> Result<GroundFactor> {
    for (i, &v) in a.vars.iter().enumerate() {
        match b.is_convergent(v) {
            Some(true) if a.convergent[i] => {
                return Err(Error::NotApplicable(
                    "factors share a convergent randvar; combine them heterogeneously".into(),
                ))
            }
            Some(c) if c != a.convergent[i] => {
                return Err(Error::Model("randvar is convergent in one factor and regular in the other".into()))
            }
            _ => {}
        }
    }
    let (table, vars) = table::product(&a.table, &a.vars, &b.table, &b.vars);
    let convergent = vars
        .iter()
        .map(|v| a.is_convergent(*v).or(b.is_convergent(*v)).unwrap_or(false))
        .collect();
    Ok(GroundFactor::new(vars, table, convergent))
}

/// Sums a regular randvar out of a factor.
pub fn sum_out(f: &GroundFactor, v: usize) -> Result<GroundFactor> {
    let i = f
        .vars
        .iter()
        .position(|&w| w == v)
        .ok_or_else(|| Error::Precondition(format!("randvar {v} is not in the factor")))?;
    if f.convergent[i] {
        return Err(Error::Precondition("cannot sum out a convergent randvar directly".into()));
    }
    let mut vars = f.vars.clone();
    vars.remove(i);
    let mut conv = f.convergent.clone();
    conv.remove(i);
    Ok(GroundFactor::new(vars, f.table.sum_axis(i, None), conv))
}

/// Heterogeneous multiplication φ ⊗ ψ: for every shared convergent randvar the
/// value α collects the products over all splits α1 ∨ α2 = α.
pub fn het_multiply(a: &GroundFactor, b: &GroundFactor) -> Result<GroundFactor> {
    let mut shared = Vec::new();
    for (i, &v) in a.vars.iter().enumerate() {
        if let Some(c) = b.is_convergent(v) {
            if c != a.convergent[i] {
                return Err(Error::Model("randvar is convergent in one factor and regular in the other".into()));
            }
            if c {
                shared.push(v);
            }
        }
    }
    let (vars, dims) = table::union_axes(&a.vars, &a.table.dims, &b.vars, &b.table.dims);
    let convergent: Vec<bool> = vars
        .iter()
        .map(|v| a.is_convergent(*v).or(b.is_convergent(*v)).unwrap_or(false))
        .collect();
    let mut out = Table::filled(dims.clone(), 0.0);
    let shared_pos: Vec<usize> = shared.iter().map(|v| vars.iter().position(|w| w == v).unwrap()).collect();
    let apos: Vec<usize> = a.vars.iter().map(|v| vars.iter().position(|w| w == v).unwrap()).collect();
    let bpos: Vec<usize> = b.vars.iter().map(|v| vars.iter().position(|w| w == v).unwrap()).collect();
    let mut ka = vec![0usize; a.vars.len()];
    let mut kb = vec![0usize; b.vars.len()];
    for idx in 0..out.len() {
        let asg = out.assignment(idx);
        let trues: Vec<usize> = shared_pos.iter().copied().filter(|&p| asg[p] == 1).collect();
        // Each true shared value splits three ways: (f,t), (t,f), (t,t).
        let mut total = 0.0;
        let combos = 3usize.pow(trues.len() as u32);
        for code in 0..combos {
            let mut sa = asg.clone();
            let mut sb = asg.clone();
            let mut c = code;
            for &p in &trues {
                let (x, y) = [(0, 1), (1, 0), (1, 1)][c % 3];
                c /= 3;
                sa[p] = x;
                sb[p] = y;
            }
            for (k, &p) in apos.iter().enumerate() {
                ka[k] = sa[p];
            }
            for (k, &p) in bpos.iter().enumerate() {
                kb[k] = sb[p];
            }
            total += a.table.lookup(&ka)? * b.table.lookup(&kb)?;
        }
        out.values[idx] = total;
    }
    Ok(GroundFactor::new(vars, out, convergent))
}

/// Restricts a table whose variables repeat to the cells where the copies
/// agree.
fn diagonal(vars: Vec<usize>, table: Table, convergent: Vec<bool>) -> GroundFactor {
    let mut uniq: Vec<usize> = Vec::new();
    let mut conv = Vec::new();
    let mut dims = Vec::new();
    for (i, &v) in vars.iter().enumerate() {
        match uniq.iter().position(|&u| u == v) {
            Some(j) => conv[j] |= convergent[i],
            None => {
                uniq.push(v);
                conv.push(convergent[i]);
                dims.push(table.dims[i]);
            }
        }
    }
    if uniq.len() == vars.len() {
        return GroundFactor::new(vars, table, convergent);
    }
    let pos: Vec<usize> = vars.iter().map(|v| uniq.iter().position(|u| u == v).expect("merged var")).collect();
    let mut out = Table::filled(dims, 0.0);
    for idx in 0..out.len() {
        let a = out.assignment(idx);
        let full: Vec<usize> = pos.iter().map(|&j| a[j]).collect();
        out.values[idx] = table.lookup(&full).expect("in range");
    }
    GroundFactor::new(uniq, out, conv)
}

/// A propositional model in the two-list form used by VE1.
#[derive(Clone, Debug, Default)]
pub struct GroundModel {
    pub atoms: Vec<GroundAtom>,
    pub names: Vec<String>,
    pub ranges: Vec<usize>,
    pub index: BTreeMap<GroundAtom, usize>,
    pub f1: Vec<GroundFactor>,
    pub f2: Vec<GroundFactor>,
    /// Deputy pairs (E, E').
    pub deputies: Vec<(usize, usize)>,
}

impl GroundModel {
    pub fn var(&mut self, atom: GroundAtom, range: usize, name: impl FnOnce() -> String) -> usize {
        if let Some(&i) = self.index.get(&atom) {
            return i;
        }
        let i = self.atoms.len();
        self.index.insert(atom.clone(), i);
        self.atoms.push(atom);
        self.names.push(name());
        self.ranges.push(range);
        i
    }

    fn push_instance(&mut self, m: &Model, g: GroundInstance, kind: Kind) {
        let vars: Vec<usize> = g
            .atoms
            .iter()
            .zip(&g.table.dims)
            .map(|(a, &d)| self.var(a.clone(), d, || m.ground_atom_name(a)))
            .collect();
        if kind == Kind::Deputy {
            self.deputies.push((vars[0], vars[1]));
        }
        let f = diagonal(vars, g.table, g.convergent);
        if f.is_het() {
            self.f2.push(f);
        } else {
            self.f1.push(f);
        }
    }

    /// Grounds every parfactor of the model.
    pub fn from_model(m: &Model, opts: &InferenceOptions) -> Result<GroundModel> {
        m.check()?;
        let mut gm = GroundModel::default();
        let mut cells = 0usize;
        for g in m.parfactors() {
            opts.check_interrupt()?;
            let per = cell_count(&g.atoms.iter().map(|a| if a.counted.is_some() { 0 } else { a.size() }).collect::<Vec<_>>())
                .unwrap_or(usize::MAX);
            cells = cells.saturating_add(per.saturating_mul(g.groundings()));
            opts.check_cells(cells)?;
            for inst in g.ground()? {
                cells = cells.saturating_add(inst.table.len());
                opts.check_cells(cells)?;
                gm.push_instance(m, inst, g.kind);
            }
        }
        Ok(gm)
    }

    pub fn lookup(&self, atom: &GroundAtom) -> Option<usize> {
        self.index.get(atom).copied()
    }

    /// Replaces every heterogeneous group by its full conditional table,
    /// built by brute-force OR-composition of the contributions. The result
    /// has no heterogeneous factors and can be solved by plain VE.
    pub fn expand_full_cpts(&self, opts: &InferenceOptions) -> Result<GroundModel> {
        let mut out = self.clone();
        out.f2.clear();
        let mut groups: BTreeMap<usize, Vec<&GroundFactor>> = BTreeMap::new();
        for f in &self.f2 {
            let conv: Vec<usize> = f.vars.iter().zip(&f.convergent).filter(|(_, &c)| c).map(|(v, _)| *v).collect();
            if conv.len() != 1 {
                return Err(Error::NotApplicable(
                    "full-table expansion needs one convergent randvar per heterogeneous factor".into(),
                ));
            }
            groups.entry(conv[0]).or_default().push(f);
        }
        for (e, fs) in groups {
            opts.check_interrupt()?;
            let mut parents: Vec<usize> = Vec::new();
            for f in &fs {
                for &v in &f.vars {
                    if v != e && !parents.contains(&v) {
                        parents.push(v);
                    }
                }
            }
            let mut dims: Vec<usize> = vec![2];
            dims.extend(parents.iter().map(|&p| self.ranges[p]));
            let cells = cell_count(&dims).unwrap_or(usize::MAX);
            opts.check_cells(cells)?;
            let splits = 1usize.checked_shl(fs.len() as u32).unwrap_or(usize::MAX);
            opts.check_cells(splits)?;
            let mut cpt = Table::filled(dims, 0.0);
            let pos: Vec<Vec<usize>> = fs
                .iter()
                .map(|f| {
                    f.vars
                        .iter()
                        .map(|v| if *v == e { 0 } else { 1 + parents.iter().position(|p| p == v).unwrap() })
                        .collect()
                })
                .collect();
            let rows = cells / 2;
            for row in 0..rows {
                let mut asg = cpt.assignment(row);
                for code in 0..splits {
                    let mut w = 1.0;
                    for (i, f) in fs.iter().enumerate() {
                        asg[0] = (code >> i) & 1;
                        let key: Vec<usize> = pos[i].iter().map(|&p| asg[p]).collect();
                        w *= f.table.lookup(&key)?;
                        if w == 0.0 {
                            break;
                        }
                    }
                    asg[0] = usize::from(code != 0);
                    let idx = cpt.index(&asg)?;
                    cpt.values[idx] += w;
                }
                opts.check_interrupt()?;
            }
            let mut vars = vec![e];
            vars.extend(parents);
            out.f1.push(GroundFactor::homogeneous(vars, cpt));
        }
        Ok(out)
    }
}

/// Slices evidence into every factor.
fn apply_evidence(fs: &mut Vec<GroundFactor>, evidence: &[(usize, usize)]) -> Result<()> {
    for f in fs.iter_mut() {
        for &(v, val) in evidence {
            if let Some(i) = f.vars.iter().position(|&w| w == v) {
                if f.convergent[i] {
                    return Err(Error::Precondition("evidence on a convergent randvar is not supported".into()));
                }
                if val >= f.table.dims[i] {
                    return Err(Error::Range(format!("evidence value {val} outside the range")));
                }
                f.table = f.table.slice_axis(i, val);
                f.vars.remove(i);
                f.convergent.remove(i);
            }
        }
    }
    Ok(())
}

/// One step of VE1: eliminates `z` from the two factor lists.
pub fn sum_out1(
    f1: &mut Vec<GroundFactor>,
    f2: &mut Vec<GroundFactor>,
    z: usize,
    opts: &InferenceOptions,
) -> Result<()> {
    let (with, rest): (Vec<_>, Vec<_>) = core::mem::take(f1).into_iter().partition(|f| f.has(z));
    *f1 = rest;
    let mut phi = GroundFactor::unit();
    for f in &with {
        phi = multiply(&phi, f)?;
        opts.check_cells(phi.table.len())?;
    }
    let (hwith, hrest): (Vec<_>, Vec<_>) = core::mem::take(f2).into_iter().partition(|f| f.has(z));
    *f2 = hrest;
    let mut psi: Option<GroundFactor> = None;
    for f in &hwith {
        psi = Some(match psi {
            None => f.clone(),
            Some(p) => het_multiply(&p, f)?,
        });
        opts.check_cells(psi.as_ref().map_or(0, |p| p.table.len()))?;
    }
    match psi {
        None => f1.push(sum_out(&phi, z)?),
        Some(psi) => {
            let (table, vars) = table::product(&phi.table, &phi.vars, &psi.table, &psi.vars);
            opts.check_cells(table.len())?;
            let convergent: Vec<bool> = vars.iter().map(|v| psi.is_convergent(*v).unwrap_or(false)).collect();
            let i = vars.iter().position(|&w| w == z).expect("z present");
            let mut vars = vars;
            vars.remove(i);
            let mut convergent = convergent;
            convergent.remove(i);
            let out = GroundFactor::new(vars, table.sum_axis(i, None), convergent);
            if out.is_het() {
                f2.push(out);
            } else {
                f1.push(out);
            }
        }
    }
    Ok(())
}

/// Checks that `order` eliminates every randvar of the factors except the
/// query and evidence, and that deputies E' come before their E.
fn check_order(gm: &GroundModel, fs: &[&GroundFactor], query: usize, order: &[usize]) -> Result<()> {
    let mut pos = BTreeMap::new();
    for (i, &v) in order.iter().enumerate() {
        pos.insert(v, i);
    }
    for f in fs {
        for &v in &f.vars {
            if v != query && !pos.contains_key(&v) {
                return Err(Error::Precondition(format!("order misses randvar {}", gm.names[v])));
            }
        }
    }
    for &(e, ep) in &gm.deputies {
        if let (Some(a), Some(b)) = (pos.get(&ep), pos.get(&e)) {
            if a > b {
                return Err(Error::Precondition(format!(
                    "deputy {} must be eliminated before {}",
                    gm.names[ep], gm.names[e]
                )));
            }
        }
    }
    Ok(())
}

/// Answers `P(query | evidence)` with VE1. Without an explicit order, greedy
/// min-fill with the deputy constraint is used.
pub fn run_ve1(
    gm: &GroundModel,
    query: &GroundAtom,
    evidence: &[(GroundAtom, usize)],
    order: Option<&[usize]>,
    opts: &InferenceOptions,
) -> Result<Vec<f64>> {
    let q = gm
        .lookup(query)
        .ok_or_else(|| Error::UnknownQuery(format!("{:?}", query)))?;
    let mut ev = Vec::new();
    // Evidence on the query itself only masks the final distribution.
    let mut mask = vec![1.0; gm.ranges[q]];
    for (a, v) in evidence {
        let i = gm.lookup(a).ok_or_else(|| Error::UnknownQuery(format!("evidence atom {:?}", a)))?;
        if i == q {
            if *v >= mask.len() {
                return Err(Error::Range(format!("evidence value {v} outside range {}", mask.len())));
            }
            for (k, m) in mask.iter_mut().enumerate() {
                if k != *v {
                    *m = 0.0;
                }
            }
        } else {
            ev.push((i, *v));
        }
    }
    let mut f1 = gm.f1.clone();
    let mut f2 = gm.f2.clone();
    apply_evidence(&mut f1, &ev)?;
    apply_evidence(&mut f2, &ev)?;
    let order: Vec<usize> = match order {
        Some(o) => {
            check_order(gm, &f1.iter().chain(f2.iter()).collect::<Vec<_>>(), q, o)?;
            o.iter().copied().filter(|v| *v != q && !ev.iter().any(|e| e.0 == *v)).collect()
        }
        None => min_fill_order(gm, &f1, &f2, q),
    };
    for z in order {
        opts.check_interrupt()?;
        sum_out1(&mut f1, &mut f2, z, opts)?;
    }
    let p = finish(&f1, &f2, q, gm.ranges[q])?;
    normalize(p.iter().zip(&mask).map(|(a, b)| a * b).collect())
}

/// Combines the remaining factors over the query and normalizes.
fn finish(f1: &[GroundFactor], f2: &[GroundFactor], q: usize, range: usize) -> Result<Vec<f64>> {
    let mut phi = GroundFactor::homogeneous(vec![q], Table::filled(vec![range], 1.0));
    for f in f1 {
        phi = multiply(&phi, f)?;
    }
    let mut psi: Option<GroundFactor> = None;
    for f in f2 {
        psi = Some(match psi {
            None => f.clone(),
            Some(p) => het_multiply(&p, f)?,
        });
    }
    let mut gamma = phi.table.expand(&phi.vars, &[q], &[range]);
    if let Some(psi) = psi {
        let t = psi.table.expand(&psi.vars, &[q], &[range]);
        for (g, p) in gamma.values.iter_mut().zip(&t.values) {
            *g *= p;
        }
    }
    normalize(gamma.values)
}

pub(crate) fn normalize(mut v: Vec<f64>) -> Result<Vec<f64>> {
    let z: f64 = v.iter().sum();
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::InconsistentEvidence);
    }
    for x in &mut v {
        *x /= z;
    }
    Ok(v)
}

/// Answers `P(query | evidence)` with plain VE on the full-table expansion of
/// the heterogeneous factors.
pub fn run_ve(
    gm: &GroundModel,
    query: &GroundAtom,
    evidence: &[(GroundAtom, usize)],
    opts: &InferenceOptions,
) -> Result<Vec<f64>> {
    let full = gm.expand_full_cpts(opts)?;
    run_ve1(&full, query, evidence, None, opts)
}

/// Propositionalizes `m` and answers the query with VE1.
pub fn query_ve1(m: &Model, query: &GroundAtom, evidence: &[(GroundAtom, usize)], opts: &InferenceOptions) -> Result<Vec<f64>> {
    let gm = GroundModel::from_model(m, opts)?;
    run_ve1(&gm, query, evidence, None, opts).map_err(|e| name_query(e, m, query))
}

/// Propositionalizes `m` and answers the query with plain VE.
pub fn query_ve(m: &Model, query: &GroundAtom, evidence: &[(GroundAtom, usize)], opts: &InferenceOptions) -> Result<Vec<f64>> {
    let gm = GroundModel::from_model(m, opts)?;
    run_ve(&gm, query, evidence, opts).map_err(|e| name_query(e, m, query))
}

fn name_query(e: Error, m: &Model, query: &GroundAtom) -> Error {
    match e {
        Error::UnknownQuery(_) => Error::UnknownQuery(m.ground_atom_name(query).to_string()),
        e => e,
    }
}

#[cfg(test)]
mod tests;
