//! Concrete syntax.
//!
//! ```text
//! # comment
//! high h, k
//! C := h.l.C + l.C
//! main := C | l.0
//! ```
//!
//! Actions are lowercase identifiers (`tau` is the silent action), constants
//! start with an uppercase letter and may carry primes (`C'`). Prefix binds
//! tightest and associates to the right, `+` and `|` associate to the left,
//! and `|` binds loosest. One statement per line.

use std::collections::{BTreeMap, BTreeSet};

use super::{Action, Spec, Term, TAU};
use crate::error::{ParseError, ParseErrorKind};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Zero,
    Dot,
    Plus,
    Bar,
    LParen,
    RParen,
    Assign,
    Comma,
    Newline,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Zero => "`0`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Bar => "`|`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Assign => "`:=`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

type Pos = (usize, usize);

fn err(pos: Pos, kind: ParseErrorKind) -> ParseError {
    ParseError {
        line: pos.0,
        column: pos.1,
        kind,
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut j = 0;
        while j < chars.len() {
            let c = chars[j];
            let pos = (line_no, j + 1);
            match c {
                '#' => break,
                c if c.is_whitespace() => j += 1,
                '.' => {
                    out.push((Tok::Dot, pos));
                    j += 1;
                }
                '+' => {
                    out.push((Tok::Plus, pos));
                    j += 1;
                }
                '|' => {
                    out.push((Tok::Bar, pos));
                    j += 1;
                }
                '(' => {
                    out.push((Tok::LParen, pos));
                    j += 1;
                }
                ')' => {
                    out.push((Tok::RParen, pos));
                    j += 1;
                }
                ',' => {
                    out.push((Tok::Comma, pos));
                    j += 1;
                }
                ':' if chars.get(j + 1) == Some(&'=') => {
                    out.push((Tok::Assign, pos));
                    j += 2;
                }
                '0' if !chars.get(j + 1).copied().is_some_and(is_ident_char) => {
                    out.push((Tok::Zero, pos));
                    j += 1;
                }
                c if c.is_ascii_alphabetic() => {
                    let start = j;
                    while j < chars.len() && is_ident_char(chars[j]) {
                        j += 1;
                    }
                    out.push((Tok::Ident(chars[start..j].iter().collect()), pos));
                }
                other => return Err(err(pos, ParseErrorKind::Lexical(other))),
            }
        }
        out.push((Tok::Newline, (line_no, chars.len() + 1)));
    }
    let end = (text.lines().count().max(1), 1);
    out.push((Tok::Eof, end));
    Ok(out)
}

/// Untyped syntax tree as written, before the category check.
#[derive(Debug)]
enum Raw {
    Nil,
    Prefix(String, Box<RawNode>),
    Sum(Box<RawNode>, Box<RawNode>),
    Const(String),
    Par(Box<RawNode>, Box<RawNode>),
}

#[derive(Debug)]
struct RawNode {
    pos: Pos,
    raw: Raw,
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        err(
            self.pos(),
            ParseErrorKind::Unexpected {
                found: self.peek().describe(),
                expected: expected.into(),
            },
        )
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<Pos, ParseError> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn par(&mut self) -> Result<RawNode, ParseError> {
        let mut left = self.sum()?;
        while *self.peek() == Tok::Bar {
            self.bump();
            let right = self.sum()?;
            left = RawNode {
                pos: left.pos,
                raw: Raw::Par(Box::new(left), Box::new(right)),
            };
        }
        Ok(left)
    }

    fn sum(&mut self) -> Result<RawNode, ParseError> {
        let mut left = self.prefix()?;
        while *self.peek() == Tok::Plus {
            self.bump();
            let right = self.prefix()?;
            left = RawNode {
                pos: left.pos,
                raw: Raw::Sum(Box::new(left), Box::new(right)),
            };
        }
        Ok(left)
    }

    fn prefix(&mut self) -> Result<RawNode, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Zero => {
                self.bump();
                Ok(RawNode { pos, raw: Raw::Nil })
            }
            Tok::LParen => {
                self.bump();
                let mut inner = self.par()?;
                self.expect(Tok::RParen, "`)`")?;
                inner.pos = pos;
                Ok(inner)
            }
            Tok::Ident(name) if name.starts_with(|c: char| c.is_ascii_uppercase()) => {
                self.bump();
                Ok(RawNode {
                    pos,
                    raw: Raw::Const(name),
                })
            }
            Tok::Ident(name) => {
                if name.contains('\'') {
                    return Err(err(
                        pos,
                        ParseErrorKind::Unexpected {
                            found: format!("`{name}`"),
                            expected: "an action name without primes".into(),
                        },
                    ));
                }
                self.bump();
                self.expect(Tok::Dot, "`.` after an action")?;
                let body = self.prefix()?;
                Ok(RawNode {
                    pos,
                    raw: Raw::Prefix(name, Box::new(body)),
                })
            }
            _ => Err(self.unexpected("a process term")),
        }
    }
}

/// Conversion of raw trees into categorized terms.
struct Checker<'a> {
    high: &'a BTreeSet<String>,
    defined: Option<&'a BTreeSet<String>>,
}

impl Checker<'_> {
    fn category(pos: Pos, msg: &str) -> ParseError {
        err(pos, ParseErrorKind::Category(msg.into()))
    }

    fn parallel(&self, n: &RawNode) -> Result<Term, ParseError> {
        match &n.raw {
            Raw::Par(l, r) => Ok(Term::par(self.parallel(l)?, self.parallel(r)?)),
            _ => self.sequential(n),
        }
    }

    fn sequential(&self, n: &RawNode) -> Result<Term, ParseError> {
        match &n.raw {
            Raw::Const(c) => {
                if let Some(defined) = self.defined {
                    if !defined.contains(c) {
                        return Err(err(n.pos, ParseErrorKind::UnknownConstant(c.clone())));
                    }
                }
                Ok(Term::Const(c.clone()))
            }
            _ => self.guarded(n),
        }
    }

    fn guarded(&self, n: &RawNode) -> Result<Term, ParseError> {
        match &n.raw {
            Raw::Nil => Ok(Term::Nil),
            Raw::Prefix(a, body) => {
                if let Raw::Par(..) = body.raw {
                    return Err(Self::category(
                        body.pos,
                        "parallel composition under action prefix",
                    ));
                }
                let action = Action::classify(a, self.high);
                Ok(Term::prefix(action, self.sequential(body)?))
            }
            Raw::Sum(l, r) => Ok(Term::sum(self.summand(l)?, self.summand(r)?)),
            Raw::Const(_) => Err(Self::category(
                n.pos,
                "constant where a guarded process is required",
            )),
            Raw::Par(..) => Err(Self::category(
                n.pos,
                "parallel composition where a guarded process is required",
            )),
        }
    }

    fn summand(&self, n: &RawNode) -> Result<Term, ParseError> {
        match &n.raw {
            Raw::Const(_) => Err(Self::category(n.pos, "constant used as a summand")),
            Raw::Par(..) => Err(Self::category(n.pos, "parallel composition under choice")),
            _ => self.guarded(n),
        }
    }
}

enum Stmt {
    High(Vec<(String, Pos)>),
    Def(String, Pos, RawNode),
    Main(Pos, RawNode),
}

fn statements(text: &str) -> Result<Vec<Stmt>, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
    };
    let mut out = Vec::new();
    loop {
        match p.peek().clone() {
            Tok::Eof => break,
            Tok::Newline => {
                p.bump();
                continue;
            }
            Tok::Ident(kw) if kw == "high" => {
                p.bump();
                let mut names = Vec::new();
                loop {
                    let pos = p.pos();
                    match p.bump().0 {
                        Tok::Ident(n) => names.push((n, pos)),
                        _ => {
                            p.at -= 1;
                            return Err(p.unexpected("an action name"));
                        }
                    }
                    if *p.peek() == Tok::Comma {
                        p.bump();
                    } else {
                        break;
                    }
                }
                out.push(Stmt::High(names));
            }
            Tok::Ident(kw) if kw == "main" => {
                let pos = p.bump().1;
                p.expect(Tok::Assign, "`:=`")?;
                out.push(Stmt::Main(pos, p.par()?));
            }
            Tok::Ident(name) if name.starts_with(|c: char| c.is_ascii_uppercase()) => {
                let pos = p.bump().1;
                p.expect(Tok::Assign, "`:=`")?;
                out.push(Stmt::Def(name, pos, p.par()?));
            }
            _ => return Err(p.unexpected("`high`, `main` or a constant definition")),
        }
        match p.peek() {
            Tok::Newline | Tok::Eof => {}
            _ => return Err(p.unexpected("end of line")),
        }
    }
    Ok(out)
}

fn high_set(stmts: &[Stmt]) -> Result<BTreeSet<String>, ParseError> {
    let mut high = BTreeSet::new();
    for stmt in stmts {
        if let Stmt::High(names) = stmt {
            for (n, pos) in names {
                if n == TAU {
                    return Err(err(*pos, ParseErrorKind::TauDeclaredHigh));
                }
                if !n.starts_with(|c: char| c.is_ascii_lowercase()) || n.contains('\'') {
                    return Err(err(*pos, ParseErrorKind::InvalidHighName(n.clone())));
                }
                high.insert(n.clone());
            }
        }
    }
    Ok(high)
}

/// Parses a whole specification.
pub fn parse_spec(text: &str) -> Result<Spec, ParseError> {
    let stmts = statements(text)?;
    let high = high_set(&stmts)?;

    let mut defined = BTreeSet::new();
    for stmt in &stmts {
        if let Stmt::Def(name, pos, _) = stmt {
            if !defined.insert(name.clone()) {
                return Err(err(*pos, ParseErrorKind::DuplicateDefinition(name.clone())));
            }
        }
    }

    let checker = Checker {
        high: &high,
        defined: Some(&defined),
    };
    let mut defs = BTreeMap::new();
    let mut main = None;
    for stmt in &stmts {
        match stmt {
            Stmt::High(_) => {}
            Stmt::Def(name, _, body) => {
                let term = match &body.raw {
                    Raw::Const(_) | Raw::Par(..) => {
                        return Err(Checker::category(
                            body.pos,
                            "constant body must be a guarded process",
                        ))
                    }
                    _ => checker.guarded(body)?,
                };
                defs.insert(name.clone(), term);
            }
            Stmt::Main(pos, body) => {
                if main.is_some() {
                    return Err(err(*pos, ParseErrorKind::DuplicateMain));
                }
                main = Some(checker.parallel(body)?);
            }
        }
    }
    let main = main.ok_or_else(|| {
        err(
            (text.lines().count().max(1), 1),
            ParseErrorKind::MissingMain,
        )
    })?;
    Ok(Spec::from_parts_unchecked(high, defs, main, BTreeMap::new()))
}

/// Parses a single parallel term; constants are not resolved.
pub(crate) fn parse_term_with(text: &str, high: &BTreeSet<String>) -> Result<Term, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
    };
    let node = p.par()?;
    while *p.peek() == Tok::Newline {
        p.bump();
    }
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("end of input"));
    }
    Checker {
        high,
        defined: None,
    }
    .parallel(&node)
}
