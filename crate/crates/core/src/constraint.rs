//! Extensional constraints: finite sets of equal-arity constant tuples over an
//! ordered schema of logvars.
//!
//! Constraints that are a full cartesian product of per-column value sets are
//! kept factored, so `person × attr` with 10^5 attributes costs one column per
//! logvar instead of millions of tuples. Every operation keeps the factored form
//! whenever its result is still a product.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::symbol::{Logvar, Sym};

pub type Tuple = Vec<Sym>;

/// Sorted, duplicate-free value set of one column.
pub type Column = Arc<[Sym]>;

#[derive(Clone, Debug)]
enum Body {
    /// Cartesian product of the columns (one per schema entry).
    Product(Vec<Column>),
    /// Explicit tuples, sorted and deduplicated.
    Tuples(Vec<Tuple>),
}

#[derive(Clone, Debug)]
pub struct Constraint {
    schema: Vec<Logvar>,
    body: Body,
}

fn column_of(mut vals: Vec<Sym>) -> Column {
    vals.sort_unstable();
    vals.dedup();
    Arc::from(vals)
}

fn check_unique(schema: &[Logvar]) -> Result<()> {
    let set: BTreeSet<_> = schema.iter().collect();
    if set.len() != schema.len() {
        return Err(Error::Schema(format!("duplicate logvar in schema {schema:?}")));
    }
    Ok(())
}

impl Constraint {
    /// The constraint with no logvars and exactly one (empty) tuple.
    pub fn unit() -> Self {
        Constraint {
            schema: Vec::new(),
            body: Body::Product(Vec::new()),
        }
    }

    pub fn empty(schema: Vec<Logvar>) -> Self {
        Constraint {
            schema,
            body: Body::Tuples(Vec::new()),
        }
    }

    /// Cartesian product of the given value lists.
    pub fn product(schema: Vec<Logvar>, columns: Vec<Vec<Sym>>) -> Result<Self> {
        check_unique(&schema)?;
        if schema.len() != columns.len() {
            return Err(Error::Schema(format!(
                "{} columns for a schema of {} logvars",
                columns.len(),
                schema.len()
            )));
        }
        Ok(Self::from_columns(schema, columns.into_iter().map(column_of).collect()))
    }

    /// Product constraint over already-normalized shared columns.
    pub fn from_columns(schema: Vec<Logvar>, columns: Vec<Column>) -> Self {
        debug_assert_eq!(schema.len(), columns.len());
        if columns.iter().any(|c| c.is_empty()) {
            return Self::empty(schema);
        }
        Constraint {
            schema,
            body: Body::Product(columns),
        }
    }

    /// Builds a constraint from explicit tuples. Duplicates are dropped; the
    /// result is stored factored when the tuples happen to form a product.
    pub fn from_tuples(schema: Vec<Logvar>, tuples: Vec<Tuple>) -> Result<Self> {
        check_unique(&schema)?;
        if let Some(t) = tuples.iter().find(|t| t.len() != schema.len()) {
            return Err(Error::Schema(format!(
                "tuple of arity {} for a schema of {} logvars",
                t.len(),
                schema.len()
            )));
        }
        Ok(Self::from_tuples_unchecked(schema, tuples))
    }

    fn from_tuples_unchecked(schema: Vec<Logvar>, mut tuples: Vec<Tuple>) -> Self {
        tuples.sort_unstable();
        tuples.dedup();
        if tuples.is_empty() {
            return Self::empty(schema);
        }
        let mut cols: Vec<BTreeSet<Sym>> = vec![BTreeSet::new(); schema.len()];
        for t in &tuples {
            for (c, v) in cols.iter_mut().zip(t) {
                c.insert(*v);
            }
        }
        let full: Option<usize> = cols
            .iter()
            .try_fold(1usize, |acc, c| acc.checked_mul(c.len()));
        if full == Some(tuples.len()) {
            let columns = cols.into_iter().map(|c| Arc::from(c.into_iter().collect::<Vec<_>>())).collect();
            return Constraint {
                schema,
                body: Body::Product(columns),
            };
        }
        Constraint {
            schema,
            body: Body::Tuples(tuples),
        }
    }

    pub fn schema(&self) -> &[Logvar] {
        &self.schema
    }

    pub fn position(&self, lv: Logvar) -> Option<usize> {
        self.schema.iter().position(|&l| l == lv)
    }

    fn positions(&self, vars: &[Logvar]) -> Result<Vec<usize>> {
        vars.iter()
            .map(|&v| {
                self.position(v)
                    .ok_or_else(|| Error::Schema(format!("logvar {v} not in schema {:?}", self.schema)))
            })
            .collect()
    }

    /// Number of tuples.
    pub fn len(&self) -> usize {
        match &self.body {
            Body::Product(cols) => cols.iter().map(|c| c.len()).product(),
            Body::Tuples(ts) => ts.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The columns, when the constraint is a cartesian product.
    pub fn as_product(&self) -> Option<&[Column]> {
        match &self.body {
            Body::Product(c) => Some(c),
            Body::Tuples(_) => None,
        }
    }

    pub fn is_product(&self) -> bool {
        matches!(self.body, Body::Product(_))
    }

    /// Distinct values of one logvar.
    pub fn values(&self, lv: Logvar) -> Result<Column> {
        let p = self.positions(&[lv])?[0];
        Ok(match &self.body {
            Body::Product(cols) => cols[p].clone(),
            Body::Tuples(ts) => column_of(ts.iter().map(|t| t[p]).collect()),
        })
    }

    /// Iterates the tuples in lexicographic order of the schema.
    pub fn iter(&self) -> TupleIter<'_> {
        match &self.body {
            Body::Product(cols) => TupleIter::Product {
                cols,
                idx: vec![0; cols.len()],
                done: cols.iter().any(|c| c.is_empty()),
            },
            Body::Tuples(ts) => TupleIter::Tuples(ts.iter()),
        }
    }

    pub fn tuples(&self) -> Vec<Tuple> {
        self.iter().collect()
    }

    pub fn contains(&self, t: &[Sym]) -> bool {
        if t.len() != self.schema.len() {
            return false;
        }
        match &self.body {
            Body::Product(cols) => cols.iter().zip(t).all(|(c, v)| c.binary_search(v).is_ok()),
            Body::Tuples(ts) => ts.binary_search_by(|x| x.as_slice().cmp(t)).is_ok(),
        }
    }

    /// Distinct tuples restricted to `vars`, with the schema reordered to `vars`.
    pub fn project(&self, vars: &[Logvar]) -> Result<Constraint> {
        check_unique(vars)?;
        let pos = self.positions(vars)?;
        Ok(match &self.body {
            Body::Product(cols) => Constraint {
                schema: vars.to_vec(),
                body: Body::Product(pos.iter().map(|&p| cols[p].clone()).collect()),
            },
            Body::Tuples(ts) => Self::from_tuples_unchecked(
                vars.to_vec(),
                ts.iter().map(|t| pos.iter().map(|&p| t[p]).collect()).collect(),
            ),
        })
    }

    /// Tuples agreeing with every binding; the schema is unchanged.
    pub fn select(&self, bindings: &[(Logvar, Sym)]) -> Result<Constraint> {
        let pos = self.positions(&bindings.iter().map(|b| b.0).collect::<Vec<_>>())?;
        Ok(match &self.body {
            Body::Product(cols) => {
                let mut cols = cols.clone();
                for (&p, &(_, v)) in pos.iter().zip(bindings) {
                    cols[p] = if cols[p].binary_search(&v).is_ok() {
                        Arc::from(vec![v])
                    } else {
                        Arc::from(Vec::new())
                    };
                }
                Self::from_columns(self.schema.clone(), cols)
            }
            Body::Tuples(ts) => Constraint {
                schema: self.schema.clone(),
                body: Body::Tuples(
                    ts.iter()
                        .filter(|t| pos.iter().zip(bindings).all(|(&p, &(_, v))| t[p] == v))
                        .cloned()
                        .collect(),
                ),
            },
        })
    }

    /// Keeps the tuples satisfying `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&[Sym]) -> bool) -> Constraint {
        Self::from_tuples_unchecked(self.schema.clone(), self.iter().filter(|t| keep(t)).collect())
    }

    /// Natural join on shared logvars; the schema is `self`'s followed by the
    /// logvars only in `other`, in `other`'s order.
    pub fn join(&self, other: &Constraint) -> Result<Constraint> {
        let extra: Vec<(usize, Logvar)> = other
            .schema
            .iter()
            .enumerate()
            .filter(|(_, l)| self.position(**l).is_none())
            .map(|(i, &l)| (i, l))
            .collect();
        let mut schema = self.schema.clone();
        schema.extend(extra.iter().map(|e| e.1));
        if let (Body::Product(a), Body::Product(b)) = (&self.body, &other.body) {
            let mut cols: Vec<Column> = a.clone();
            for (j, l) in other.schema.iter().enumerate() {
                if let Some(i) = self.position(*l) {
                    cols[i] = intersect(&cols[i], &b[j]);
                }
            }
            cols.extend(extra.iter().map(|&(j, _)| b[j].clone()));
            return Ok(Self::from_columns(schema, cols));
        }
        let shared: Vec<(usize, usize)> = other
            .schema
            .iter()
            .enumerate()
            .filter_map(|(j, l)| self.position(*l).map(|i| (i, j)))
            .collect();
        let mut index: BTreeMap<Vec<Sym>, Vec<Vec<Sym>>> = BTreeMap::new();
        for t in other.iter() {
            let key: Vec<Sym> = shared.iter().map(|&(_, j)| t[j]).collect();
            index
                .entry(key)
                .or_default()
                .push(extra.iter().map(|&(j, _)| t[j]).collect());
        }
        let mut out = Vec::new();
        for t in self.iter() {
            let key: Vec<Sym> = shared.iter().map(|&(i, _)| t[i]).collect();
            if let Some(rest) = index.get(&key) {
                for r in rest {
                    let mut row = t.clone();
                    row.extend_from_slice(r);
                    out.push(row);
                }
            }
        }
        Ok(Self::from_tuples_unchecked(schema, out))
    }

    /// Set union of two constraints over the same logvars (`other` may order them differently).
    pub fn union(&self, other: &Constraint) -> Result<Constraint> {
        let other = other.project(&self.schema)?;
        if other.schema.len() != self.schema.len() {
            return Err(Error::Schema("union of constraints over different logvars".into()));
        }
        if self.is_empty() {
            return Ok(other);
        }
        if other.is_empty() {
            return Ok(self.clone());
        }
        if let (Body::Product(a), Body::Product(b)) = (&self.body, &other.body) {
            let differing: Vec<usize> = (0..a.len()).filter(|&i| a[i] != b[i]).collect();
            match differing.as_slice() {
                [] => return Ok(self.clone()),
                [i] => {
                    let mut cols = a.clone();
                    cols[*i] = column_of(a[*i].iter().chain(b[*i].iter()).copied().collect());
                    return Ok(Self::from_columns(self.schema.clone(), cols));
                }
                _ => {}
            }
        }
        let mut ts = self.tuples();
        ts.extend(other.iter());
        Ok(Self::from_tuples_unchecked(self.schema.clone(), ts))
    }

    /// Tuples of `self` not in `other` (same logvars).
    pub fn difference(&self, other: &Constraint) -> Result<Constraint> {
        let other = other.project(&self.schema)?;
        Ok(self.filter(|t| !other.contains(t)))
    }

    /// |π_Y(σ_{Z = π_Z(t)}(c))|, and 1 when `y` is empty.
    pub fn count_given(&self, y: &[Logvar], z: &[Logvar], t: &[Sym]) -> Result<usize> {
        if !self.contains(t) {
            return Err(Error::Precondition(format!("tuple {t:?} is not in the constraint")));
        }
        let ypos = self.positions(y)?;
        let zpos = self.positions(z)?;
        if ypos.iter().any(|p| zpos.contains(p)) {
            return Err(Error::Schema("Y and Z overlap".into()));
        }
        if y.is_empty() {
            return Ok(1);
        }
        Ok(match &self.body {
            Body::Product(cols) => ypos.iter().map(|&p| cols[p].len()).product(),
            Body::Tuples(ts) => {
                let seen: BTreeSet<Vec<Sym>> = ts
                    .iter()
                    .filter(|u| zpos.iter().all(|&p| u[p] == t[p]))
                    .map(|u| ypos.iter().map(|&p| u[p]).collect())
                    .collect();
                seen.len()
            }
        })
    }

    /// The conditional count of `y` given `z` when it is the same for every
    /// tuple, `None` when the constraint is not count-normalized.
    pub fn conditional_count(&self, y: &[Logvar], z: &[Logvar]) -> Result<Option<usize>> {
        let ypos = self.positions(y)?;
        let zpos = self.positions(z)?;
        if ypos.iter().any(|p| zpos.contains(p)) {
            return Err(Error::Schema("Y and Z overlap".into()));
        }
        if y.is_empty() {
            return Ok(Some(1));
        }
        match &self.body {
            Body::Product(cols) => Ok(Some(ypos.iter().map(|&p| cols[p].len()).product())),
            Body::Tuples(ts) => {
                let mut groups: BTreeMap<Vec<Sym>, BTreeSet<Vec<Sym>>> = BTreeMap::new();
                for t in ts {
                    groups
                        .entry(zpos.iter().map(|&p| t[p]).collect())
                        .or_default()
                        .insert(ypos.iter().map(|&p| t[p]).collect());
                }
                let mut counts = groups.values().map(|s| s.len());
                let first = match counts.next() {
                    Some(n) => n,
                    None => return Ok(Some(0)),
                };
                Ok(if counts.all(|n| n == first) { Some(first) } else { None })
            }
        }
    }

    /// Partitions into the tuples with `x = a` and those with `x ≠ a`.
    pub fn split_on_constant(&self, x: Logvar, a: Sym) -> Result<(Constraint, Constraint)> {
        let p = self.positions(&[x])?[0];
        Ok(match &self.body {
            Body::Product(cols) => {
                let mut with = cols.clone();
                let mut without = cols.clone();
                if cols[p].binary_search(&a).is_ok() {
                    with[p] = Arc::from(vec![a]);
                    without[p] = Arc::from(cols[p].iter().copied().filter(|&v| v != a).collect::<Vec<_>>());
                } else {
                    with[p] = Arc::from(Vec::new());
                }
                (
                    Self::from_columns(self.schema.clone(), with),
                    Self::from_columns(self.schema.clone(), without),
                )
            }
            Body::Tuples(ts) => {
                let (w, wo): (Vec<Tuple>, Vec<Tuple>) = ts.iter().cloned().partition(|t| t[p] == a);
                (
                    Self::from_tuples_unchecked(self.schema.clone(), w),
                    Self::from_tuples_unchecked(self.schema.clone(), wo),
                )
            }
        })
    }

    /// Partitions the column of `x` by the given disjoint value groups; a
    /// product stays a product. Groups not meeting the column are skipped.
    pub fn split_by_groups(&self, x: Logvar, groups: &[Column]) -> Result<Vec<Constraint>> {
        let p = self.positions(&[x])?[0];
        let mut out = Vec::new();
        for g in groups {
            let part = match &self.body {
                Body::Product(cols) => {
                    let mut c = cols.clone();
                    c[p] = intersect(&cols[p], g);
                    Self::from_columns(self.schema.clone(), c)
                }
                Body::Tuples(_) => self.filter(|t| g.binary_search(&t[p]).is_ok()),
            };
            if !part.is_empty() {
                out.push(part);
            }
        }
        Ok(out)
    }

    /// Renames logvars; unmapped ones are kept.
    pub fn rename(&self, map: &BTreeMap<Logvar, Logvar>) -> Result<Constraint> {
        let schema: Vec<Logvar> = self.schema.iter().map(|l| *map.get(l).unwrap_or(l)).collect();
        check_unique(&schema)?;
        Ok(Constraint {
            schema,
            body: self.body.clone(),
        })
    }

    /// Drops the logvar `x` whose column is the single value `v`.
    pub fn drop_singleton(&self, x: Logvar) -> Result<(Constraint, Sym)> {
        let vals = self.values(x)?;
        if vals.len() != 1 {
            return Err(Error::Precondition(format!("logvar {x} is not a singleton")));
        }
        let keep: Vec<Logvar> = self.schema.iter().copied().filter(|&l| l != x).collect();
        let rest = self.select(&[(x, vals[0])])?.project(&keep)?;
        Ok((rest, vals[0]))
    }
}

fn intersect(a: &Column, b: &Column) -> Column {
    if Arc::ptr_eq(a, b) || a == b {
        return a.clone();
    }
    Arc::from(a.iter().copied().filter(|v| b.binary_search(v).is_ok()).collect::<Vec<_>>())
}

impl PartialEq for Constraint {
    /// Equal schemas (in order) and equal tuple sets.
    fn eq(&self, other: &Self) -> bool {
        if self.schema != other.schema {
            return false;
        }
        match (&self.body, &other.body) {
            (Body::Product(a), Body::Product(b)) => a == b,
            _ => self.len() == other.len() && self.iter().eq(other.iter()),
        }
    }
}

pub enum TupleIter<'a> {
    Product {
        cols: &'a [Column],
        idx: Vec<usize>,
        done: bool,
    },
    Tuples(core::slice::Iter<'a, Tuple>),
}

impl Iterator for TupleIter<'_> {
    type Item = Tuple;

    fn next(&mut self) -> Option<Tuple> {
        match self {
            TupleIter::Tuples(it) => it.next().cloned(),
            TupleIter::Product { cols, idx, done } => {
                if *done {
                    return None;
                }
                let t: Tuple = cols.iter().zip(idx.iter()).map(|(c, &i)| c[i]).collect();
                let mut k = cols.len();
                loop {
                    if k == 0 {
                        *done = true;
                        break;
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < cols[k].len() {
                        break;
                    }
                    idx[k] = 0;
                }
                Some(t)
            }
        }
    }
}
