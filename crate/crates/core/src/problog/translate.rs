//! ProbLog to extended PFL.
//!
//! Domain predicates (plain facts only) become constraints. Every rule whose
//! body has variables not in its head becomes a `het` factor on a convergent
//! copy of the head plus a `deputy` factor; rules without such variables
//! become ordinary conjunction CPTs, and several rules for one predicate are
//! joined by a disjunction CPT.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::ast::{Literal, PAtom, PTerm, PredKind, Program, Rule};
use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::factor::{Atom, Kind, Parfactor, Term, IDENTITY};
use crate::model::Model;
use crate::symbol::{Logvar, Sym};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Style {
    /// Conjunction CPTs for rules without extra variables and a single
    /// `het`/`deputy` pair per aggregating rule.
    #[default]
    Compact,
    /// A `het`/`deputy` pair for every rule, joined by an identity or
    /// disjunction CPT.
    Verbose,
}

/// CPT of `node ⇔ l1 ∧ … ∧ lk`, literal i being negated when `signs[i]` is
/// false. The node is the first (slowest) axis.
pub fn conjunction(signs: &[bool]) -> Vec<f64> {
    let k = signs.len();
    let mut out = Vec::with_capacity(2 << k);
    for node in 0..2 {
        for a in 0..1usize << k {
            let holds = (0..k).all(|i| (a >> (k - 1 - i) & 1 == 1) == signs[i]);
            out.push(if (node == 1) == holds { 1.0 } else { 0.0 });
        }
    }
    out
}

/// CPT of `node ⇔ p1 ∨ … ∨ pk`.
pub fn disjunction(k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 << k);
    for node in 0..2 {
        for a in 0..1usize << k {
            out.push(if (node == 1) == (a != 0) { 1.0 } else { 0.0 });
        }
    }
    out
}

/// Schema entry `i` of a relation stored positionally.
fn pos(i: usize) -> Logvar {
    Logvar(u32::MAX - i as u32)
}

pub fn positional(arity: usize) -> Vec<Logvar> {
    (0..arity).map(pos).collect()
}

/// A rule after its body has been resolved against the extents.
struct Resolved {
    head: Atom,
    head_vars: Vec<Logvar>,
    extra: Vec<Logvar>,
    lits: Vec<(Atom, bool)>,
    constraint: Constraint,
    /// Head tuples, positionally.
    relation: Constraint,
}

struct Translator<'a> {
    p: &'a Program,
    m: Model,
    kinds: BTreeMap<Sym, PredKind>,
    arity: BTreeMap<Sym, usize>,
    domain: BTreeMap<Sym, Constraint>,
    extent: BTreeMap<Sym, Constraint>,
    /// Atoms that occur negated but can never be true.
    falsified: BTreeMap<Sym, Constraint>,
    style: Style,
    aux: usize,
}

pub fn translate(p: &Program, style: Style) -> Result<Model> {
    p.validate()?;
    let order = p.topological_order()?;
    let mut t = Translator::new(p, style);
    t.facts()?;
    let rules = p.effective_rules();
    for pred in order {
        let rs: Vec<&Rule> = rules.iter().filter(|r| r.head.pred == pred).collect();
        t.predicate(pred, &rs)?;
    }
    t.falsified()?;
    Ok(t.m)
}

impl<'a> Translator<'a> {
    fn new(p: &'a Program, style: Style) -> Self {
        let kinds = p.kinds();
        let mut arity = BTreeMap::new();
        let atoms = p
            .facts
            .iter()
            .chain(p.prob_facts.iter().flat_map(|f| core::iter::once(&f.head).chain(&f.body)))
            .chain(p.rules.iter().flat_map(|r| core::iter::once(&r.head).chain(r.body.iter().map(|l| &l.atom))));
        for a in atoms {
            arity.insert(a.pred, a.args.len());
        }
        let mut m = Model::new(p.symbols.clone());
        let mut domain = BTreeMap::new();
        for (pred, tuples) in p.domain_relations() {
            let ts: Vec<Vec<Sym>> = tuples.into_iter().collect();
            m.domains.insert(pred, ts.clone());
            domain.insert(pred, Constraint::from_tuples(positional(arity[&pred]), ts).expect("uniform arity"));
        }
        Translator {
            p,
            m,
            kinds,
            arity,
            domain,
            extent: BTreeMap::new(),
            falsified: BTreeMap::new(),
            style,
            aux: 0,
        }
    }

    fn relation(&self, pred: Sym) -> Constraint {
        let rel = match self.kinds[&pred] {
            PredKind::Domain => self.domain.get(&pred),
            _ => self.extent.get(&pred),
        };
        rel.cloned().unwrap_or_else(|| Constraint::empty(positional(self.arity[&pred])))
    }

    fn fresh(&mut self, base: &str) -> Sym {
        let name = self.m.symbols.fresh_name(base);
        self.m.symbols.intern(&name)
    }

    fn atom(&self, a: &PAtom, vars: &BTreeMap<String, Logvar>) -> Atom {
        let args = a
            .args
            .iter()
            .map(|t| match t {
                PTerm::Var(v) => Term::Var(vars[v]),
                PTerm::Const(c) => Term::Const(*c),
            })
            .collect();
        Atom::boolean(a.pred, args)
    }

    fn add(&mut self, kind: Kind, atoms: Vec<Atom>, values: Vec<f64>, c: Constraint) -> Result<()> {
        let g = Parfactor::new(kind, atoms, values, c)?;
        self.m.add(g);
        Ok(())
    }

    fn facts(&mut self) -> Result<()> {
        for f in &self.p.prob_facts {
            let mut vars = BTreeMap::new();
            for v in f.head.vars().chain(f.body.iter().flat_map(|g| g.vars())) {
                if !vars.contains_key(v) {
                    vars.insert(String::from(v), self.m.new_logvar(v));
                }
            }
            let mut c = Constraint::unit();
            for g in &f.body {
                c = c.join(&goal_constraint(&self.relation(g.pred), g, &vars)?)?;
            }
            let hv = distinct_vars(&f.head, &vars);
            let c = c.project(&hv)?;
            if c.is_empty() {
                continue;
            }
            let rel = head_relation(&c, &f.head, &vars)?;
            let ext = match self.extent.get(&f.head.pred) {
                Some(prev) => {
                    if !prev.join(&rel)?.is_empty() {
                        return Err(Error::Program(format!(
                            "probabilistic facts for {} overlap",
                            self.p.symbols.name(f.head.pred)
                        )));
                    }
                    prev.union(&rel)?
                }
                None => rel,
            };
            self.extent.insert(f.head.pred, ext);
            let head = self.atom(&f.head, &vars);
            self.add(Kind::Bayes, vec![head], vec![1.0 - f.p, f.p], c)?;
        }
        Ok(())
    }

    fn resolve(&mut self, r: &Rule) -> Result<Option<Resolved>> {
        let mut body: Vec<&Literal> = Vec::new();
        for l in &r.body {
            if body.iter().any(|b| b.atom == l.atom && b.positive != l.positive) {
                return Ok(None);
            }
            if !body.contains(&l) {
                body.push(l);
            }
        }
        let mut vars = BTreeMap::new();
        for v in r.head.vars().chain(body.iter().flat_map(|l| l.atom.vars())) {
            if !vars.contains_key(v) {
                vars.insert(String::from(v), self.m.new_logvar(v));
            }
        }
        let mut c = Constraint::unit();
        for l in body.iter().filter(|l| l.positive) {
            c = c.join(&goal_constraint(&self.relation(l.atom.pred), &l.atom, &vars)?)?;
        }
        let negated: Vec<&PAtom> = body
            .iter()
            .filter(|l| !l.positive && self.kinds[&l.atom.pred] == PredKind::Domain)
            .map(|l| &l.atom)
            .collect();
        if !negated.is_empty() {
            let schema = c.schema().to_vec();
            let domain = &self.domain;
            c = c.filter(|t| {
                negated.iter().all(|a| {
                    let inst: Vec<Sym> = a
                        .args
                        .iter()
                        .map(|x| match x {
                            PTerm::Const(k) => *k,
                            PTerm::Var(v) => t[schema.iter().position(|s| *s == vars[v]).expect("bound")],
                        })
                        .collect();
                    !domain[&a.pred].contains(&inst)
                })
            });
        }
        let random: Vec<&Literal> = body
            .iter()
            .copied()
            .filter(|l| self.kinds[&l.atom.pred] != PredKind::Domain)
            .collect();
        let head_vars = distinct_vars(&r.head, &vars);
        let mut keep = head_vars.clone();
        for l in &random {
            for v in distinct_vars(&l.atom, &vars) {
                if !keep.contains(&v) {
                    keep.push(v);
                }
            }
        }
        let c = c.project(&keep)?;
        if c.is_empty() {
            return Ok(None);
        }
        for l in random.iter().filter(|l| !l.positive) {
            let inst = head_relation(&c, &l.atom, &vars)?;
            let ext = self.relation(l.atom.pred);
            let outside = inst.filter(|t| !ext.contains(t));
            if !outside.is_empty() {
                let all = match self.falsified.get(&l.atom.pred) {
                    Some(prev) => prev.union(&outside)?,
                    None => outside,
                };
                self.falsified.insert(l.atom.pred, all);
            }
        }
        Ok(Some(Resolved {
            head: self.atom(&r.head, &vars),
            extra: keep[head_vars.len()..].to_vec(),
            lits: random.iter().map(|l| (self.atom(&l.atom, &vars), l.positive)).collect(),
            relation: head_relation(&c, &r.head, &vars)?,
            head_vars,
            constraint: c,
        }))
    }

    /// The node a `het` factor aggregates: the literal itself, or a fresh
    /// conjunction of all literals over head and extra variables.
    fn aggregated(&mut self, r: &Resolved) -> Result<(Atom, bool)> {
        if let [(a, sign)] = r.lits.as_slice() {
            return Ok((a.clone(), *sign));
        }
        self.aux += 1;
        let f = self.fresh(&format!("ch{}", self.aux));
        let args = r.head_vars.iter().chain(&r.extra).map(|&v| Term::Var(v)).collect();
        let node = Atom::boolean(f, args);
        let signs: Vec<bool> = r.lits.iter().map(|l| l.1).collect();
        let mut atoms = vec![node.clone()];
        atoms.extend(r.lits.iter().map(|l| l.0.clone()));
        self.add(Kind::Bayes, atoms, conjunction(&signs), r.constraint.clone())?;
        Ok((node, true))
    }

    /// Factors making `node` the truth value of the body of `r`.
    fn define(&mut self, node: Atom, r: &Resolved, name: &str) -> Result<()> {
        if r.lits.is_empty() {
            return self.add(Kind::Bayes, vec![node], vec![0.0, 1.0], r.constraint.clone());
        }
        let verbose = self.style == Style::Verbose;
        if r.extra.is_empty() && !verbose {
            let signs: Vec<bool> = r.lits.iter().map(|l| l.1).collect();
            let mut atoms = vec![node];
            atoms.extend(r.lits.iter().map(|l| l.0.clone()));
            return self.add(Kind::Bayes, atoms, conjunction(&signs), r.constraint.clone());
        }
        let conv = Atom::boolean(self.fresh(name), node.args.clone());
        if verbose {
            let signs: Vec<bool> = r.lits.iter().map(|l| l.1).collect();
            let mut atoms = vec![conv.clone()];
            atoms.extend(r.lits.iter().map(|l| l.0.clone()));
            self.add(Kind::Het, atoms, conjunction(&signs), r.constraint.clone())?;
        } else {
            let (agg, sign) = self.aggregated(r)?;
            self.add(Kind::Het, vec![conv.clone(), agg], conjunction(&[sign]), r.constraint.clone())?;
        }
        let c = r.constraint.project(&r.head_vars)?;
        self.add(Kind::Deputy, vec![node, conv], IDENTITY.to_vec(), c)
    }

    fn predicate(&mut self, pred: Sym, rules: &[&Rule]) -> Result<()> {
        let mut rs = Vec::new();
        for r in rules {
            if let Some(x) = self.resolve(r)? {
                rs.push(x);
            }
        }
        let arity = self.arity[&pred];
        let mut ext = Constraint::empty(positional(arity));
        for r in &rs {
            ext = ext.union(&r.relation)?;
        }
        self.extent.insert(pred, ext);
        let name = String::from(self.p.symbols.name(pred));
        if rs.len() == 1 && self.style == Style::Compact {
            let r = &rs[0];
            return self.define(r.head.clone(), r, &format!("{name}1"));
        }
        let mut nodes = Vec::new();
        for (i, r) in rs.iter().enumerate() {
            let f = self.fresh(&format!("{name}{}", i + 1));
            let node = Atom::boolean(f, r.head.args.clone());
            self.define(node, r, &format!("{name}{}p", i + 1))?;
            nodes.push(f);
        }
        // One combining CPT per set of rules sharing the same head tuples.
        let cells: Vec<(Vec<usize>, Constraint)> = if rs.windows(2).all(|w| w[0].relation == w[1].relation) {
            match rs.first() {
                Some(r) => vec![((0..rs.len()).collect(), r.relation.clone())],
                None => Vec::new(),
            }
        } else {
            let all = rs.iter().fold(Constraint::empty(positional(arity)), |acc, r| acc.union(&r.relation).expect("same schema"));
            let mut groups: BTreeMap<Vec<usize>, Vec<Vec<Sym>>> = BTreeMap::new();
            for t in all.iter() {
                let set = (0..rs.len()).filter(|&i| rs[i].relation.contains(&t)).collect();
                groups.entry(set).or_default().push(t);
            }
            groups
                .into_iter()
                .map(|(s, ts)| (s, Constraint::from_tuples(positional(arity), ts).expect("arity")))
                .collect()
        };
        let names: Vec<String> = match rs.first().map(|r| &r.head) {
            Some(h) if h.args.iter().all(|t| matches!(t, Term::Var(_))) && h.logvars().len() == arity => {
                h.logvars().iter().map(|v| self.m.logvar_names[v.0 as usize].clone()).collect()
            }
            _ => (1..=arity).map(|j| format!("V{j}")).collect(),
        };
        for (set, rel) in cells {
            let vs: Vec<Logvar> = names.iter().map(|n| self.m.new_logvar(n)).collect();
            let map: BTreeMap<Logvar, Logvar> = (0..arity).map(|j| (pos(j), vs[j])).collect();
            let args: Vec<Term> = vs.iter().map(|&v| Term::Var(v)).collect();
            let mut atoms = vec![Atom::boolean(pred, args.clone())];
            atoms.extend(set.iter().map(|&i| Atom::boolean(nodes[i], args.clone())));
            self.add(Kind::Bayes, atoms, disjunction(set.len()), rel.rename(&map)?)?;
        }
        Ok(())
    }

    fn falsified(&mut self) -> Result<()> {
        let falsified = core::mem::take(&mut self.falsified);
        for (pred, rel) in falsified {
            let arity = self.arity[&pred];
            let vs: Vec<Logvar> = (1..=arity).map(|j| self.m.new_logvar(&format!("V{j}"))).collect();
            let map: BTreeMap<Logvar, Logvar> = (0..arity).map(|j| (pos(j), vs[j])).collect();
            let atom = Atom::boolean(pred, vs.iter().map(|&v| Term::Var(v)).collect());
            self.add(Kind::Bayes, vec![atom], vec![1.0, 0.0], rel.rename(&map)?)?;
        }
        Ok(())
    }
}

fn distinct_vars(a: &PAtom, vars: &BTreeMap<String, Logvar>) -> Vec<Logvar> {
    let mut out = Vec::new();
    for v in a.vars() {
        let l = vars[v];
        if !out.contains(&l) {
            out.push(l);
        }
    }
    out
}

/// Instances of `a` in the positional relation `rel`, over the variables of
/// `a` in order of first occurrence.
pub fn goal_constraint(rel: &Constraint, a: &PAtom, vars: &BTreeMap<String, Logvar>) -> Result<Constraint> {
    let consts: Vec<(Logvar, Sym)> = a
        .args
        .iter()
        .enumerate()
        .filter_map(|(i, t)| match t {
            PTerm::Const(c) => Some((pos(i), *c)),
            PTerm::Var(_) => None,
        })
        .collect();
    let mut c = rel.select(&consts)?;
    let mut first: Vec<(&str, usize)> = Vec::new();
    let mut eqs: Vec<(usize, usize)> = Vec::new();
    for (i, t) in a.args.iter().enumerate() {
        if let PTerm::Var(v) = t {
            match first.iter().find(|(w, _)| w == v) {
                Some(&(_, j)) => eqs.push((j, i)),
                None => first.push((v, i)),
            }
        }
    }
    if !eqs.is_empty() {
        c = c.filter(|t| eqs.iter().all(|&(i, j)| t[i] == t[j]));
    }
    let c = c.project(&first.iter().map(|&(_, i)| pos(i)).collect::<Vec<_>>())?;
    let map = first.iter().map(|&(v, i)| (pos(i), vars[v])).collect();
    c.rename(&map)
}

/// Ground instances of `a` under `c`, positionally.
fn head_relation(c: &Constraint, a: &PAtom, vars: &BTreeMap<String, Logvar>) -> Result<Constraint> {
    let distinct = distinct_vars(a, vars);
    if a.args.iter().all(|t| matches!(t, PTerm::Var(_))) && distinct.len() == a.args.len() {
        let map = distinct.iter().enumerate().map(|(i, &v)| (v, pos(i))).collect();
        return c.project(&distinct)?.rename(&map);
    }
    let schema = c.schema().to_vec();
    let tuples = c
        .iter()
        .map(|t| {
            a.args
                .iter()
                .map(|x| match x {
                    PTerm::Const(k) => *k,
                    PTerm::Var(v) => t[schema.iter().position(|s| *s == vars[v]).expect("bound")],
                })
                .collect()
        })
        .collect();
    Constraint::from_tuples(positional(a.args.len()), tuples)
}
