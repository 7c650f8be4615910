//! Problem-source grammar.
//!
//! ```text
//! vars x1, x2; params p1, p2; aux a;
//! poly x1^2 + p1*x1 + p2;
//! poly (1+2i)*x1*x2 - 3;
//! ```
//!
//! `#` starts a comment that runs to the end of the line.

use super::polynomial::{Monomial, Polynomial};
use super::system::{PolySystem, Role};
use crate::error::{Error, Result};
use crate::C64;
use std::collections::HashMap;
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num { value: f64, text: String, imag: bool },
    Sym(char),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token { tok: Tok::Ident(s), line: l0, col: c0 });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value: f64 = text.parse().map_err(|_| Error::Syntax {
                line: l0,
                col: c0,
                msg: format!("malformed number `{text}`"),
            })?;
            let mut imag = false;
            if i < chars.len()
                && chars[i] == 'i'
                && !chars.get(i + 1).is_some_and(|d| d.is_ascii_alphanumeric() || *d == '_')
            {
                imag = true;
                i += 1;
            }
            col += i - start;
            out.push(Token { tok: Tok::Num { value, text, imag }, line: l0, col: c0 });
            continue;
        }
        if "+-*^(),;".contains(c) {
            out.push(Token { tok: Tok::Sym(c), line: l0, col: c0 });
            i += 1;
            col += 1;
            continue;
        }
        return Err(Error::Syntax { line: l0, col: c0, msg: format!("unexpected character `{c}`") });
    }
    Ok(out)
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    names: HashMap<String, usize>,
    arity: usize,
    end: (usize, usize),
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map_or(self.end, |t| (t.line, t.col))
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let (line, col) = self.here();
        Err(Error::Syntax { line, col, msg: msg.into() })
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn expr(&mut self) -> Result<Polynomial> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Sym('+')) => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(Tok::Sym('-')) => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial> {
        let mut acc = self.unary()?;
        while self.peek() == Some(&Tok::Sym('*')) {
            self.pos += 1;
            acc = &acc * &self.unary()?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Polynomial> {
        match self.peek() {
            Some(Tok::Sym('-')) => {
                self.pos += 1;
                Ok(-&self.unary()?)
            }
            Some(Tok::Sym('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Sym('^')) {
            return Ok(base);
        }
        self.pos += 1;
        let (line, col) = self.here();
        match self.peek().cloned() {
            Some(Tok::Num { value, text, imag }) => {
                let integral = !imag && !text.contains(['.', 'e', 'E']) && value <= u32::MAX as f64;
                if !integral {
                    return Err(Error::NonIntegerExponent { line, col });
                }
                self.pos += 1;
                Ok(base.pow(value as u32))
            }
            Some(Tok::Sym('-')) => Err(Error::NonIntegerExponent { line, col }),
            _ => self.err("expected integer exponent"),
        }
    }

    fn atom(&mut self) -> Result<Polynomial> {
        let (line, col) = self.here();
        match self.peek().cloned() {
            Some(Tok::Num { value, imag, .. }) => {
                self.pos += 1;
                let c = if imag { C64::new(0.0, value) } else { C64::new(value, 0.0) };
                Ok(Polynomial::constant(self.arity, c))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match self.names.get(&name) {
                    Some(&i) => Ok(Polynomial::var(self.arity, i)),
                    None => Err(Error::Undeclared { name, line, col }),
                }
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            _ => self.err("expected number, indeterminate or `(`"),
        }
    }
}

fn role_keyword(s: &str) -> Option<Role> {
    match s {
        "vars" => Some(Role::Variable),
        "params" => Some(Role::Parameter),
        "aux" => Some(Role::Auxiliary),
        "mults" => Some(Role::Multiplier),
        "path" => Some(Role::Path),
        _ => None,
    }
}

fn role_keyword_of(r: Role) -> &'static str {
    match r {
        Role::Variable => "vars",
        Role::Parameter => "params",
        Role::Auxiliary => "aux",
        Role::Multiplier => "mults",
        Role::Path => "path",
    }
}

pub fn parse_system(text: &str) -> Result<PolySystem> {
    let toks = lex(text)?;
    let end = toks.last().map_or((1, 1), |t| (t.line, t.col + 1));

    // Declarations may appear anywhere; collect them first so arity is known.
    let mut names = Vec::new();
    let mut roles = Vec::new();
    let mut index = HashMap::new();
    let mut bodies = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let t = &toks[i];
        let kw = match &t.tok {
            Tok::Ident(s) => s.as_str(),
            _ => return Err(Error::Syntax { line: t.line, col: t.col, msg: "expected declaration or `poly`".into() }),
        };
        let stmt_end = toks[i..]
            .iter()
            .position(|t| t.tok == Tok::Sym(';'))
            .map(|k| i + k)
            .ok_or(Error::Syntax { line: end.0, col: end.1, msg: "missing `;`".into() })?;
        if kw == "poly" {
            bodies.push((i + 1, stmt_end));
        } else if let Some(role) = role_keyword(kw) {
            let mut j = i + 1;
            while j < stmt_end {
                match &toks[j].tok {
                    Tok::Ident(n) if role_keyword(n).is_none() && n != "poly" => {
                        if index.insert(n.clone(), names.len()).is_some() {
                            return Err(Error::Syntax {
                                line: toks[j].line,
                                col: toks[j].col,
                                msg: format!("`{n}` declared twice"),
                            });
                        }
                        names.push(n.clone());
                        roles.push(role);
                    }
                    _ => {
                        return Err(Error::Syntax {
                            line: toks[j].line,
                            col: toks[j].col,
                            msg: "expected indeterminate name".into(),
                        })
                    }
                }
                j += 1;
                if j < stmt_end {
                    if toks[j].tok != Tok::Sym(',') {
                        return Err(Error::Syntax { line: toks[j].line, col: toks[j].col, msg: "expected `,`".into() });
                    }
                    j += 1;
                    if j == stmt_end {
                        return Err(Error::Syntax { line: toks[j].line, col: toks[j].col, msg: "trailing `,`".into() });
                    }
                }
            }
        } else {
            return Err(Error::Syntax { line: t.line, col: t.col, msg: format!("unknown statement `{kw}`") });
        }
        i = stmt_end + 1;
    }

    let arity = names.len();
    let mut polys = Vec::new();
    for (a, b) in bodies {
        let semicolon = (toks[b].line, toks[b].col);
        let mut p = Parser { toks: &toks[a..b], pos: 0, names: index.clone(), arity, end: semicolon };
        if p.toks.is_empty() {
            return p.err("empty polynomial");
        }
        let e = p.expr()?;
        if p.pos != p.toks.len() {
            return p.err("unexpected token");
        }
        polys.push(e);
    }
    PolySystem::new(names, roles, polys)
}

fn fmt_real(x: f64) -> String {
    format!("{x:?}")
}

fn fmt_coef(c: C64) -> String {
    if c.im == 0.0 {
        fmt_real(c.re)
    } else if c.re == 0.0 {
        format!("{}i", fmt_real(c.im))
    } else if c.im < 0.0 {
        format!("({}-{}i)", fmt_real(c.re), fmt_real(-c.im))
    } else {
        format!("({}+{}i)", fmt_real(c.re), fmt_real(c.im))
    }
}

fn fmt_term(m: &Monomial, c: C64, names: &[String]) -> String {
    let mut s = fmt_coef(c);
    for &(v, e) in m.factors() {
        let _ = write!(s, "*{}", names[v]);
        if e > 1 {
            let _ = write!(s, "^{e}");
        }
    }
    s
}

/// Serialize in the problem-source grammar; `parse_system` reads it back exactly.
pub fn to_source(sys: &PolySystem) -> String {
    let mut out = String::new();
    for role in [Role::Variable, Role::Parameter, Role::Auxiliary, Role::Multiplier, Role::Path] {
        let ns: Vec<&str> = sys
            .indices_of(role)
            .into_iter()
            .map(|i| sys.names()[i].as_str())
            .collect();
        if !ns.is_empty() {
            let _ = writeln!(out, "{} {};", role_keyword_of(role), ns.join(", "));
        }
    }
    for p in sys.polys() {
        let terms: Vec<String> = p.terms().map(|(m, c)| fmt_term(m, *c, sys.names())).collect();
        let body = if terms.is_empty() { "0".to_string() } else { terms.join(" + ") };
        let _ = writeln!(out, "poly {body};");
    }
    out
}
