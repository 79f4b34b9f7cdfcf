//! Abstract syntax of CFM processes.
//!
//! Terms live in three syntactic categories:
//!
//! ```text
//! s ::= 0 | μ.q | s + s      guarded
//! q ::= s | C                sequential
//! p ::= q | p | p            parallel
//! ```
//!
//! The [`Term`] enum is a single type for all three; the category
//! predicates below and the constructors used by the parser keep values
//! inside the grammar. The canonical printer ([`fmt::Display`]) emits text
//! that parses back to the same term and is used as the identity of
//! places in the net semantics.

mod ops;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use ops::{
    initials, is_observationally_guarded, normalize_parallel, normalize_sum, restrict_syntactic,
    sort, summands,
};
pub use parse::parse_spec;

use crate::error::SpecError;

/// Keyword used for the silent action in the concrete syntax.
pub const TAU: &str = "tau";

/// An action: a low-level or high-level visible action, or the silent `tau`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Tau,
    Low(String),
    High(String),
}

impl Action {
    pub fn is_high(&self) -> bool {
        matches!(self, Action::High(_))
    }

    pub fn is_tau(&self) -> bool {
        matches!(self, Action::Tau)
    }

    /// The printed name (`tau` for the silent action).
    pub fn name(&self) -> &str {
        match self {
            Action::Tau => TAU,
            Action::Low(n) | Action::High(n) => n,
        }
    }

    /// Classifies a label string against a set of high action names.
    pub fn classify(name: &str, high: &BTreeSet<String>) -> Action {
        if name == TAU {
            Action::Tau
        } else if high.contains(name) {
            Action::High(name.to_string())
        } else {
            Action::Low(name.to_string())
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A CFM process term.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Nil,
    Prefix(Action, Box<Term>),
    Sum(Box<Term>, Box<Term>),
    Const(String),
    Par(Box<Term>, Box<Term>),
}

impl Term {
    pub fn prefix(action: Action, body: Term) -> Term {
        Term::Prefix(action, Box::new(body))
    }

    pub fn sum(left: Term, right: Term) -> Term {
        Term::Sum(Box::new(left), Box::new(right))
    }

    pub fn par(left: Term, right: Term) -> Term {
        Term::Par(Box::new(left), Box::new(right))
    }

    pub fn constant(name: impl Into<String>) -> Term {
        Term::Const(name.into())
    }

    /// The deadlock process `0 + 0`.
    pub fn stuck() -> Term {
        Term::sum(Term::Nil, Term::Nil)
    }

    /// Left-associated sum of `terms`; `None` when the list is empty.
    pub fn sum_of(terms: impl IntoIterator<Item = Term>) -> Option<Term> {
        terms.into_iter().reduce(Term::sum)
    }

    /// Left-associated parallel composition of `terms`; `None` when empty.
    pub fn par_of(terms: impl IntoIterator<Item = Term>) -> Option<Term> {
        terms.into_iter().reduce(Term::par)
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Term::Nil)
    }

    /// Category `s`.
    pub fn is_guarded(&self) -> bool {
        match self {
            Term::Nil => true,
            Term::Prefix(_, body) => body.is_sequential(),
            Term::Sum(l, r) => l.is_guarded() && r.is_guarded(),
            Term::Const(_) | Term::Par(..) => false,
        }
    }

    /// Category `q`.
    pub fn is_sequential(&self) -> bool {
        matches!(self, Term::Const(_)) || self.is_guarded()
    }

    /// Category `p`.
    pub fn is_parallel(&self) -> bool {
        match self {
            Term::Par(l, r) => l.is_parallel() && r.is_parallel(),
            _ => self.is_sequential(),
        }
    }

    /// `const(t)`: the constants occurring syntactically in `t`.
    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_constants(&mut out);
        out
    }

    fn collect_constants(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Nil => {}
            Term::Prefix(_, b) => b.collect_constants(out),
            Term::Sum(l, r) | Term::Par(l, r) => {
                l.collect_constants(out);
                r.collect_constants(out);
            }
            Term::Const(c) => {
                out.insert(c.clone());
            }
        }
    }

    /// Actions occurring syntactically in `t` (constant bodies excluded).
    pub fn actions(&self) -> BTreeSet<Action> {
        let mut out = BTreeSet::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            match t {
                Term::Nil | Term::Const(_) => {}
                Term::Prefix(a, b) => {
                    out.insert(a.clone());
                    stack.push(b);
                }
                Term::Sum(l, r) | Term::Par(l, r) => {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        out
    }

    /// Renames constants according to `map`; unmapped names are kept.
    pub fn rename_constants(&self, map: &BTreeMap<String, String>) -> Term {
        match self {
            Term::Nil => Term::Nil,
            Term::Prefix(a, b) => Term::prefix(a.clone(), b.rename_constants(map)),
            Term::Sum(l, r) => Term::sum(l.rename_constants(map), r.rename_constants(map)),
            Term::Par(l, r) => Term::par(l.rename_constants(map), r.rename_constants(map)),
            Term::Const(c) => Term::Const(map.get(c).cloned().unwrap_or_else(|| c.clone())),
        }
    }

    /// Sequential components of a parallel term, left to right.
    pub fn components(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            match t {
                Term::Par(l, r) => {
                    stack.push(r);
                    stack.push(l);
                }
                other => out.push(other),
            }
        }
        out
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Nil => f.write_str("0"),
            Term::Const(c) => f.write_str(c),
            Term::Prefix(a, body) => match body.as_ref() {
                Term::Sum(..) | Term::Par(..) => write!(f, "{a}.({body})"),
                _ => write!(f, "{a}.{body}"),
            },
            Term::Sum(l, r) => match r.as_ref() {
                Term::Sum(..) | Term::Par(..) => write!(f, "{l} + ({r})"),
                _ => write!(f, "{l} + {r}"),
            },
            Term::Par(l, r) => match r.as_ref() {
                Term::Par(..) => write!(f, "{l} | ({r})"),
                _ => write!(f, "{l} | {r}"),
            },
        }
    }
}

/// A specification: high actions, constant definitions and the main process.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spec {
    high: BTreeSet<String>,
    defs: BTreeMap<String, Term>,
    main: Term,
    /// Memo of the restriction function: source constant to its primed copy.
    restricted: BTreeMap<String, String>,
}

impl Spec {
    /// Builds a validated specification.
    pub fn new(
        high: BTreeSet<String>,
        defs: BTreeMap<String, Term>,
        main: Term,
    ) -> Result<Spec, SpecError> {
        let spec = Spec {
            high,
            defs,
            main,
            restricted: BTreeMap::new(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub(crate) fn from_parts_unchecked(
        high: BTreeSet<String>,
        defs: BTreeMap<String, Term>,
        main: Term,
        restricted: BTreeMap<String, String>,
    ) -> Spec {
        Spec {
            high,
            defs,
            main,
            restricted,
        }
    }

    /// Checks the category and closedness invariants.
    pub fn validate(&self) -> Result<(), SpecError> {
        if self.high.contains(TAU) {
            return Err(SpecError::TauDeclaredHigh);
        }
        for (name, body) in &self.defs {
            if !body.is_guarded() {
                return Err(SpecError::UnguardedBody(name.clone()));
            }
            self.check_actions(body)?;
            self.check_closed(body)?;
        }
        if !self.main.is_parallel() {
            return Err(SpecError::Category(self.main.to_string()));
        }
        self.check_actions(&self.main)?;
        self.check_closed(&self.main)
    }

    fn check_closed(&self, t: &Term) -> Result<(), SpecError> {
        match t.constants().into_iter().find(|c| !self.defs.contains_key(c)) {
            Some(c) => Err(SpecError::UnknownConstant(c)),
            None => Ok(()),
        }
    }

    fn check_actions(&self, t: &Term) -> Result<(), SpecError> {
        for a in t.actions() {
            let ok = match &a {
                Action::Tau => true,
                Action::High(n) => self.high.contains(n),
                Action::Low(n) => !self.high.contains(n) && n != TAU,
            };
            if !ok {
                return Err(SpecError::Misclassified(a.to_string()));
            }
        }
        Ok(())
    }

    pub fn high_actions(&self) -> &BTreeSet<String> {
        &self.high
    }

    pub fn defs(&self) -> &BTreeMap<String, Term> {
        &self.defs
    }

    pub fn main(&self) -> &Term {
        &self.main
    }

    pub fn body(&self, constant: &str) -> Option<&Term> {
        self.defs.get(constant)
    }

    /// The memo table of the restriction function (source to primed name).
    pub fn restricted_names(&self) -> &BTreeMap<String, String> {
        &self.restricted
    }

    /// Classifies an action name under this specification's high set.
    pub fn action(&self, name: &str) -> Action {
        Action::classify(name, &self.high)
    }

    /// Same definitions, different main process.
    pub fn with_main(&self, main: Term) -> Result<Spec, SpecError> {
        let spec = Spec {
            main,
            ..self.clone()
        };
        if !spec.main.is_parallel() {
            return Err(SpecError::Category(spec.main.to_string()));
        }
        spec.check_actions(&spec.main)?;
        spec.check_closed(&spec.main)?;
        Ok(spec)
    }

    /// Adds (or replaces) definitions and revalidates.
    pub fn with_defs(
        &self,
        extra: impl IntoIterator<Item = (String, Term)>,
    ) -> Result<Spec, SpecError> {
        let mut spec = self.clone();
        spec.defs.extend(extra);
        spec.validate()?;
        Ok(spec)
    }

    /// Parses a term in the context of this specification (for CLI queries).
    pub fn parse_term(&self, text: &str) -> Result<Term, crate::error::ParseError> {
        parse::parse_term_with(text, &self.high)
    }
}

impl fmt::Display for Spec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.high.is_empty() {
            let names: Vec<&str> = self.high.iter().map(String::as_str).collect();
            writeln!(f, "high {}", names.join(", "))?;
        }
        for (name, body) in &self.defs {
            writeln!(f, "{name} := {body}")?;
        }
        writeln!(f, "main := {}", self.main)
    }
}
