//! Tokenizer shared by the `.pl` and `.pfl` readers.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    /// Lowercase-initial identifier.
    Name(String),
    /// Uppercase- or underscore-initial identifier.
    Var(String),
    /// A number, with its source text.
    Num(f64, String),
    Punct(&'static str),
    End,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const PUNCT: [&str; 12] = [":-", "::", "\\+", "(", ")", "[", "]", ",", ";", "=", "/", "."];

pub fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for k in 0..n {
            if chars[*i + k] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        }
        *i += n;
    };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        let (l, c0) = (line, col);
        let negative_number = c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit());
        if c.is_ascii_digit() || negative_number {
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                j += 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
            }
            if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                let mut k = j + 1;
                if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                    j = k;
                }
            }
            let text: String = chars[i..j].iter().collect();
            let v: f64 = text.parse().map_err(|_| Error::parse(l, c0, format!("bad number {text}")))?;
            out.push(Token {
                tok: Tok::Num(v, text),
                line: l,
                col: c0,
            });
            let n = j - i;
            advance(&mut i, &mut line, &mut col, n);
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let text: String = chars[i..j].iter().collect();
            let tok = if c.is_uppercase() || c == '_' { Tok::Var(text) } else { Tok::Name(text) };
            out.push(Token { tok, line: l, col: c0 });
            let n = j - i;
            advance(&mut i, &mut line, &mut col, n);
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match PUNCT.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                out.push(Token {
                    tok: Tok::Punct(p),
                    line: l,
                    col: c0,
                });
                advance(&mut i, &mut line, &mut col, p.len());
            }
            None => return Err(Error::parse(l, c0, format!("unexpected character {c:?}"))),
        }
    }
    out.push(Token {
        tok: Tok::End,
        line,
        col,
    });
    Ok(out)
}

/// Cursor over a token stream.
pub struct Cursor {
    toks: Vec<Token>,
    pos: usize,
    anon: usize,
}

impl Cursor {
    pub fn new(src: &str) -> Result<Cursor> {
        Ok(Cursor {
            toks: tokenize(src)?,
            pos: 0,
            anon: 0,
        })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    pub fn peek3_is(&self, p: &str) -> bool {
        matches!(&self.toks[(self.pos + 2).min(self.toks.len() - 1)].tok, Tok::Punct(q) if *q == p)
    }

    pub fn line(&self) -> usize {
        self.toks[self.pos].line
    }

    pub fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn at_end(&self) -> bool {
        *self.peek() == Tok::End
    }

    pub fn error(&self, msg: impl Into<String>) -> Error {
        let t = &self.toks[self.pos];
        Error::parse(t.line, t.col, msg.into())
    }

    pub fn is(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    pub fn eat(&mut self, p: &str) -> bool {
        if self.is(p) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, p: &str) -> Result<()> {
        if self.eat(p) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{p}`, found {}", describe(self.peek()))))
        }
    }

    pub fn name(&mut self) -> Result<String> {
        match self.next() {
            Tok::Name(n) => Ok(n),
            t => {
                self.pos -= 1;
                Err(self.error(format!("expected a name, found {}", describe(&t))))
            }
        }
    }

    pub fn number(&mut self) -> Result<f64> {
        match self.next() {
            Tok::Num(v, _) => Ok(v),
            t => {
                self.pos -= 1;
                Err(self.error(format!("expected a number, found {}", describe(&t))))
            }
        }
    }

    /// `[n1, n2, ...]`
    pub fn numbers(&mut self) -> Result<Vec<f64>> {
        self.expect("[")?;
        let mut out = Vec::new();
        if self.eat("]") {
            return Ok(out);
        }
        loop {
            out.push(self.number()?);
            if self.eat("]") {
                return Ok(out);
            }
            self.expect(",")?;
        }
    }

    /// `name` or `name(t1, ..., tn)` with raw terms.
    pub fn atom(&mut self) -> Result<RawAtom> {
        let line = self.toks[self.pos].line;
        let name = self.name()?;
        let mut args = Vec::new();
        if self.eat("(") {
            loop {
                args.push(self.term()?);
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        Ok(RawAtom { name, args, line })
    }

    fn term(&mut self) -> Result<RawTerm> {
        match self.next() {
            Tok::Name(n) => Ok(RawTerm::Const(n)),
            Tok::Num(_, text) => Ok(RawTerm::Const(text)),
            Tok::Var(v) if v == "_" => {
                self.anon += 1;
                Ok(RawTerm::Var(format!("_G{}", self.anon)))
            }
            Tok::Var(v) => Ok(RawTerm::Var(v)),
            t => {
                self.pos -= 1;
                Err(self.error(format!("expected a term, found {}", describe(&t))))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RawTerm {
    Var(String),
    Const(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawAtom {
    pub name: String,
    pub args: Vec<RawTerm>,
    pub line: usize,
}

pub fn describe(t: &Tok) -> String {
    match t {
        Tok::Name(n) | Tok::Var(n) => format!("`{n}`"),
        Tok::Num(_, s) => format!("`{s}`"),
        Tok::Punct(p) => format!("`{p}`"),
        Tok::End => "end of input".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_and_terminators() {
        let toks: Vec<Tok> = tokenize("0.7::n7. % c\nx(1).").unwrap().into_iter().map(|t| t.tok).collect();
        assert_eq!(
            toks,
            vec![
                Tok::Num(0.7, "0.7".into()),
                Tok::Punct("::"),
                Tok::Name("n7".into()),
                Tok::Punct("."),
                Tok::Name("x".into()),
                Tok::Punct("("),
                Tok::Num(1.0, "1".into()),
                Tok::Punct(")"),
                Tok::Punct("."),
                Tok::End
            ]
        );
    }

    #[test]
    fn negation_and_vars() {
        let toks: Vec<Tok> = tokenize("e(Y) :- \\+ d(Y), _x.").unwrap().into_iter().map(|t| t.tok).collect();
        assert_eq!(toks[4], Tok::Punct(":-"));
        assert_eq!(toks[5], Tok::Punct("\\+"));
        assert_eq!(toks[11], Tok::Var("_x".into()));
        assert!(tokenize("a & b").is_err());
    }
}
