//! Extended PFL: `bayes`, `markov`, `het` and `deputy` parfactors, named
//! tables, domain facts and `range f/n = [v1, ...]` declarations.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use hetlift_core::constraint::Constraint;
use hetlift_core::factor::{Atom, Kind, Parfactor, Term, IDENTITY};
use hetlift_core::problog::translate::{goal_constraint, positional};
use hetlift_core::{Logvar, Model, Sym, Symbols};

use crate::error::{Error, Result};
use crate::problog::lower;
use crate::syntax::{Cursor, RawAtom, RawTerm, Tok};

enum TableSrc {
    Inline(Vec<f64>),
    Named(String),
    Fixed,
}

struct FactorDecl {
    kind: Kind,
    atoms: Vec<RawAtom>,
    table: TableSrc,
    goals: Vec<RawAtom>,
    line: usize,
}

fn kind_of(name: &str) -> Option<Kind> {
    match name {
        "bayes" => Some(Kind::Bayes),
        "markov" => Some(Kind::Markov),
        "het" => Some(Kind::Het),
        "deputy" => Some(Kind::Deputy),
        _ => None,
    }
}

fn goal_list(cur: &mut Cursor) -> Result<Vec<RawAtom>> {
    cur.expect("[")?;
    let mut out = Vec::new();
    if cur.eat("]") {
        return Ok(out);
    }
    loop {
        out.push(cur.atom()?);
        if cur.eat("]") {
            return Ok(out);
        }
        cur.expect(",")?;
    }
}

pub fn parse_pfl(src: &str) -> Result<Model> {
    let mut cur = Cursor::new(src)?;
    let mut decls = Vec::new();
    let mut tables: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut facts: Vec<RawAtom> = Vec::new();
    let mut ranges: Vec<(String, Vec<String>)> = Vec::new();
    while !cur.at_end() {
        let (first, second) = (cur.peek().clone(), cur.peek2().clone());
        let line = cur.line();
        match (first, second) {
            (Tok::Name(k), Tok::Name(_) | Tok::Var(_)) if k == "range" => {
                cur.next();
                let name = cur.name()?;
                cur.expect("/")?;
                cur.number()?;
                cur.expect("=")?;
                cur.expect("[")?;
                let mut values = Vec::new();
                loop {
                    values.push(cur.name()?);
                    if cur.eat("]") {
                        break;
                    }
                    cur.expect(",")?;
                }
                cur.expect(".")?;
                if values.len() < 2 {
                    return Err(Error::parse(line, 1, format!("range of {name} needs two values at least")));
                }
                ranges.push((name, values));
            }
            (Tok::Name(k), Tok::Name(_)) if kind_of(&k).is_some() => {
                cur.next();
                let kind = kind_of(&k).expect("checked");
                let mut atoms = vec![cur.atom()?];
                while cur.eat(",") {
                    atoms.push(cur.atom()?);
                }
                let mut goals = Vec::new();
                let table = if kind == Kind::Deputy {
                    if cur.eat(";") {
                        if cur.is("[") && matches!(cur.peek2(), Tok::Num(..)) || matches!(cur.peek(), Tok::Name(_)) {
                            return Err(cur.error("a deputy factor has a fixed table that is not written"));
                        }
                        goals = goal_list(&mut cur)?;
                    }
                    TableSrc::Fixed
                } else {
                    cur.expect(";")?;
                    let t = if cur.is("[") {
                        TableSrc::Inline(cur.numbers()?)
                    } else {
                        TableSrc::Named(cur.name()?)
                    };
                    if cur.eat(";") {
                        goals = goal_list(&mut cur)?;
                    }
                    t
                };
                cur.expect(".")?;
                decls.push(FactorDecl {
                    kind,
                    atoms,
                    table,
                    goals,
                    line,
                });
            }
            (Tok::Name(name), Tok::Punct("(")) if cur.peek3_is("[") => {
                cur.next();
                cur.expect("(")?;
                let values = cur.numbers()?;
                cur.expect(")")?;
                cur.expect(".")?;
                tables.insert(name, values);
            }
            _ => {
                let a = cur.atom()?;
                cur.expect(".")?;
                if a.args.iter().any(|t| matches!(t, RawTerm::Var(_))) {
                    return Err(Error::parse(a.line, 1, format!("domain fact {} is not ground", a.name)));
                }
                facts.push(a);
            }
        }
    }
    build(decls, tables, facts, ranges)
}

fn build(
    decls: Vec<FactorDecl>,
    tables: BTreeMap<String, Vec<f64>>,
    facts: Vec<RawAtom>,
    ranges: Vec<(String, Vec<String>)>,
) -> Result<Model> {
    let mut m = Model::new(Symbols::new());
    for (name, values) in ranges {
        let f = m.symbols.intern(&name);
        let vs = values.iter().map(|v| m.symbols.intern(v)).collect();
        m.ranges.insert(f, vs);
    }
    let mut arity: BTreeMap<Sym, usize> = BTreeMap::new();
    for a in &facts {
        let g = lower(a, &mut m.symbols).to_ground().expect("ground fact");
        if *arity.entry(g.functor).or_insert(g.args.len()) != g.args.len() {
            return Err(Error::parse(a.line, 1, format!("{} is used with two arities", a.name)));
        }
        let tuples = m.domains.entry(g.functor).or_default();
        if !tuples.contains(&g.args) {
            tuples.push(g.args);
        }
    }
    let relations: BTreeMap<Sym, Constraint> = m
        .domains
        .iter()
        .map(|(p, ts)| (*p, Constraint::from_tuples(positional(arity[p]), ts.clone()).expect("arity checked")))
        .collect();
    for d in decls {
        let err = |msg: String| Error::parse(d.line, 1, msg);
        let mut vars: BTreeMap<String, Logvar> = BTreeMap::new();
        let mut atoms = Vec::new();
        for a in &d.atoms {
            let pa = lower(a, &mut m.symbols);
            let mut args = Vec::new();
            for t in &pa.args {
                args.push(match t {
                    hetlift_core::problog::PTerm::Const(c) => Term::Const(*c),
                    hetlift_core::problog::PTerm::Var(v) => {
                        let next = match vars.get(v) {
                            Some(&l) => l,
                            None => {
                                let l = m.new_logvar(v);
                                vars.insert(v.clone(), l);
                                l
                            }
                        };
                        Term::Var(next)
                    }
                });
            }
            atoms.push(Atom::new(pa.pred, args, m.range_size(pa.pred)));
        }
        let mut c = Constraint::unit();
        for g in &d.goals {
            let pg = lower(g, &mut m.symbols);
            let rel = relations
                .get(&pg.pred)
                .ok_or_else(|| err(format!("constraint goal {} has no domain facts", g.name)))?;
            if arity[&pg.pred] != pg.args.len() {
                return Err(err(format!("constraint goal {} has the wrong arity", g.name)));
            }
            for v in pg.vars() {
                if !vars.contains_key(v) {
                    let l = m.new_logvar(v);
                    vars.insert(v.to_string(), l);
                }
            }
            c = c.join(&goal_constraint(rel, &pg, &vars)?)?;
        }
        let mut lvs: Vec<Logvar> = Vec::new();
        for a in &atoms {
            for v in a.logvars() {
                if !lvs.contains(&v) {
                    lvs.push(v);
                }
            }
        }
        if let Some(v) = lvs.iter().find(|v| c.position(**v).is_none()) {
            return Err(err(format!(
                "logvar {} is not bound by the constraint",
                m.logvar_names[v.0 as usize]
            )));
        }
        let c = c.project(&lvs)?;
        let values = match d.table {
            TableSrc::Inline(v) => v,
            TableSrc::Named(n) => tables.get(&n).cloned().ok_or_else(|| err(format!("undefined table {n}")))?,
            TableSrc::Fixed => IDENTITY.to_vec(),
        };
        let expected: usize = atoms.iter().map(|a| a.size()).product();
        if values.len() != expected {
            return Err(err(format!("table has {} entries, expected {expected}", values.len())));
        }
        m.add(Parfactor::new(d.kind, atoms, values, c)?);
    }
    Ok(m)
}

struct Printer<'a> {
    m: &'a Model,
    syms: Symbols,
    domains: BTreeMap<Sym, Vec<Vec<Sym>>>,
}

impl Printer<'_> {
    /// A domain predicate whose tuples are exactly `tuples`, made up when
    /// none exists.
    fn relation(&mut self, tuples: Vec<Vec<Sym>>, arity: usize) -> Sym {
        let mut want = tuples;
        want.sort();
        want.dedup();
        for (p, ts) in &self.domains {
            if ts.first().map_or(arity == 0, |t| t.len() == arity) {
                let mut have = ts.clone();
                have.sort();
                have.dedup();
                if have == want {
                    return *p;
                }
            }
        }
        let name = self.syms.fresh_name(if arity == 1 { "dom" } else { "rel" });
        let p = self.syms.intern(&name);
        self.domains.insert(p, want);
        p
    }

    fn constraint(&mut self, c: &Constraint, names: &BTreeMap<Logvar, String>) -> String {
        let schema = c.schema().to_vec();
        if schema.is_empty() {
            return "[]".into();
        }
        let mut goals = Vec::new();
        match c.as_product() {
            Some(cols) => {
                for (v, col) in schema.iter().zip(cols) {
                    let p = self.relation(col.iter().map(|s| vec![*s]).collect(), 1);
                    goals.push(format!("{}({})", self.syms.name(p), names[v]));
                }
            }
            None => {
                let p = self.relation(c.tuples(), schema.len());
                let args: Vec<&str> = schema.iter().map(|v| names[v].as_str()).collect();
                goals.push(format!("{}({})", self.syms.name(p), args.join(",")));
            }
        }
        format!("[{}]", goals.join(","))
    }

    fn atom(&self, a: &Atom, names: &BTreeMap<Logvar, String>) -> Result<String> {
        if a.counted.is_some() {
            return Err(Error::Usage("counting formulas have no PFL syntax".into()));
        }
        let mut s = self.syms.name(a.functor).to_string();
        if !a.args.is_empty() {
            let args: Vec<String> = a
                .args
                .iter()
                .map(|t| match t {
                    Term::Var(v) => names[v].clone(),
                    Term::Const(c) => self.syms.name(*c).to_string(),
                })
                .collect();
            let _ = write!(s, "({})", args.join(","));
        }
        Ok(s)
    }

    fn parfactor(&mut self, g: &Parfactor) -> Result<Option<String>> {
        if g.constraint.is_empty() {
            return Ok(None);
        }
        let mut names: BTreeMap<Logvar, String> = BTreeMap::new();
        for v in g.logvars().into_iter().chain(g.constraint.schema().iter().copied()) {
            if names.contains_key(&v) {
                continue;
            }
            let base = self.m.logvar_names.get(v.0 as usize).cloned().unwrap_or_else(|| "X".into());
            let mut base = if base.starts_with(|c: char| c.is_ascii_uppercase()) { base } else { format!("X{base}") };
            if names.values().any(|n| *n == base) {
                let mut i = 1;
                while names.values().any(|n| *n == format!("{base}{i}")) {
                    i += 1;
                }
                base = format!("{base}{i}");
            }
            names.insert(v, base);
        }
        let atoms: Vec<String> = g.atoms.iter().map(|a| self.atom(a, &names)).collect::<Result<_>>()?;
        let c = self.constraint(&g.constraint, &names);
        let head = format!("{} {}", g.kind.keyword(), atoms.join(","));
        Ok(Some(if g.kind == Kind::Deputy {
            format!("{head};{c}.")
        } else {
            let vals: Vec<String> = g.table.values.iter().map(|v| format!("{v}")).collect();
            format!("{head};[{}];{c}.", vals.join(","))
        }))
    }
}

/// Canonical text of a model: ranges, domain facts, then the parfactors of
/// F1 and F2 in order. Parfactors with an empty constraint are omitted.
pub fn print_pfl(m: &Model) -> Result<String> {
    let mut pr = Printer {
        m,
        syms: m.symbols.clone(),
        domains: m.domains.clone(),
    };
    let mut factors = Vec::new();
    for g in m.parfactors() {
        if let Some(s) = pr.parfactor(g)? {
            factors.push(s);
        }
    }
    let mut out = String::new();
    for (f, vs) in &m.ranges {
        let vs: Vec<&str> = vs.iter().map(|v| pr.syms.name(*v)).collect();
        let arity = domain_arity(m, *f);
        let _ = writeln!(out, "range {}/{arity} = [{}].", pr.syms.name(*f), vs.join(","));
    }
    let mut preds: Vec<(&str, &Vec<Vec<Sym>>)> = pr.domains.iter().map(|(p, ts)| (pr.syms.name(*p), ts)).collect();
    preds.sort_by(|a, b| a.0.cmp(b.0));
    for (p, ts) in preds {
        for t in ts {
            if t.is_empty() {
                let _ = writeln!(out, "{p}.");
            } else {
                let args: Vec<&str> = t.iter().map(|s| pr.syms.name(*s)).collect();
                let _ = writeln!(out, "{p}({}).", args.join(","));
            }
        }
    }
    if !out.is_empty() {
        out.push('\n');
    }
    for f in factors {
        out.push_str(&f);
        out.push('\n');
    }
    Ok(out)
}

fn domain_arity(m: &Model, f: Sym) -> usize {
    m.parfactors()
        .flat_map(|g| g.atoms.iter())
        .find(|a| a.functor == f)
        .map_or(0, |a| a.args.len())
}
