//! Reader for the ProbLog subset: probabilistic facts `p::f.` and
//! `p::f(X) :- goals.`, plain facts, and rules with `\+` negation.

use hetlift_core::problog::{Literal, PAtom, PTerm, ProbFact, Program, Rule};
use hetlift_core::Symbols;

use crate::error::{Error, Result};
use crate::syntax::{Cursor, RawAtom, RawTerm, Tok};

pub(crate) fn lower(a: &RawAtom, syms: &mut Symbols) -> PAtom {
    let args = a
        .args
        .iter()
        .map(|t| match t {
            RawTerm::Var(v) => PTerm::Var(v.clone()),
            RawTerm::Const(c) => PTerm::Const(syms.intern(c)),
        })
        .collect();
    PAtom::new(syms.intern(&a.name), args)
}

/// Parses and validates a program.
pub fn parse_problog(src: &str) -> Result<Program> {
    let p = read(src)?;
    p.validate()?;
    Ok(p)
}

/// Parses without the semantic checks.
pub fn read(src: &str) -> Result<Program> {
    let mut cur = Cursor::new(src)?;
    let mut p = Program::new(Symbols::new());
    while !cur.at_end() {
        let prob = match (cur.peek().clone(), cur.peek2().clone()) {
            (Tok::Num(v, _), Tok::Punct("::")) => {
                cur.next();
                cur.next();
                Some(v)
            }
            _ => None,
        };
        let head = cur.atom()?;
        let head = lower(&head, &mut p.symbols);
        let mut body = Vec::new();
        if cur.eat(":-") {
            loop {
                let positive = !cur.eat("\\+");
                let paren = !positive && cur.eat("(");
                let a = cur.atom()?;
                if paren {
                    cur.expect(")")?;
                }
                body.push(Literal {
                    atom: lower(&a, &mut p.symbols),
                    positive,
                });
                if !cur.eat(",") {
                    break;
                }
            }
        }
        cur.expect(".")?;
        match prob {
            Some(pr) => {
                if body.iter().any(|l| !l.positive) {
                    return Err(cur.error("the body of a probabilistic fact may not contain negation"));
                }
                p.prob_facts.push(ProbFact {
                    p: pr,
                    head,
                    body: body.into_iter().map(|l| l.atom).collect(),
                });
            }
            None if body.is_empty() => p.facts.push(head),
            None => p.rules.push(Rule { head, body }),
        }
    }
    Ok(p)
}

/// Parses a ground atom such as `attends(p1)` against known symbols.
pub fn ground_atom(text: &str, syms: &Symbols) -> Result<hetlift_core::GroundAtom> {
    let mut cur = Cursor::new(text)?;
    let a = cur.atom()?;
    if !cur.at_end() {
        return Err(cur.error("trailing input after atom"));
    }
    let unknown = || Error::Core(hetlift_core::Error::UnknownQuery(text.trim().to_string()));
    let functor = syms.get(&a.name).ok_or_else(unknown)?;
    let mut args = Vec::new();
    for t in &a.args {
        match t {
            RawTerm::Const(c) => args.push(syms.get(c).ok_or_else(unknown)?),
            RawTerm::Var(_) => return Err(Error::Usage(format!("{} is not ground", text.trim()))),
        }
    }
    Ok(hetlift_core::GroundAtom::new(functor, args))
}
