//! A typing system characterizing rooted DNI up to reordering of summands.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::equivalence::{branching_bisim, markings_equiv, rooted_partition};
use crate::lts::dec;
use crate::net::build_term_net;
use crate::syntax::{initials, normalize_sum, restrict_syntactic, summands, Action, Spec, Term};

/// The rules of the typing system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// `(0, I)`.
    Nil,
    /// A sum whose summands start with low or silent actions.
    LowSum,
    /// Parallel composition.
    Par,
    /// `h.p + q` with `r(p)` and `r(q)` rooted branching team equivalent.
    HighSum,
    /// `μ.p` with `μ` low or silent.
    Prefix,
    /// `h.p` with `p` a deadlock place.
    HighDeadlock,
    /// `h.p` with `p` starting with high actions only.
    HighPrefix,
    /// A constant already scanned.
    ScannedConstant,
    /// A constant whose body is typed.
    UnfoldConstant,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Nil => "nil",
            Rule::LowSum => "low-sum",
            Rule::Par => "par",
            Rule::HighSum => "high-sum",
            Rule::Prefix => "prefix",
            Rule::HighDeadlock => "high-deadlock",
            Rule::HighPrefix => "high-prefix",
            Rule::ScannedConstant => "scanned-constant",
            Rule::UnfoldConstant => "unfold-constant",
        }
    }
}

/// A derivation tree: the rule applied at a node, the (possibly reordered)
/// term it types, and the derivations of its premises.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Derivation {
    pub rule: Rule,
    pub term: String,
    pub premises: Vec<Derivation>,
}

impl Derivation {
    fn leaf(rule: Rule, term: &Term) -> Derivation {
        Derivation {
            rule,
            term: term.to_string(),
            premises: Vec::new(),
        }
    }

    fn render(&self, depth: usize, out: &mut String) {
        let _ = writeln!(out, "{:indent$}{} {}", "", self.rule.name(), self.term, indent = 2 * depth);
        for p in &self.premises {
            p.render(depth + 1, out);
        }
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(Derivation::size).sum::<usize>()
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.render(0, &mut s);
        f.write_str(&s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Typed {
        derivation: Derivation,
        /// The main process with summands in the order used by the derivation.
        reordered: Term,
        /// Constant bodies in the order used by the derivation.
        reordered_defs: BTreeMap<String, Term>,
    },
    Untyped {
        reason: String,
        subterm: Term,
    },
}

/// The judgement `(term, scanned):dni` and how it was decided.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypingJudgment {
    pub term: Term,
    pub scanned: BTreeSet<String>,
    pub outcome: Outcome,
}

impl TypingJudgment {
    pub fn is_typed(&self) -> bool {
        matches!(self.outcome, Outcome::Typed { .. })
    }

    pub fn derivation(&self) -> Option<&Derivation> {
        match &self.outcome {
            Outcome::Typed { derivation, .. } => Some(derivation),
            Outcome::Untyped { .. } => None,
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            term: String,
            typed: bool,
            #[serde(skip_serializing_if = "Option::is_none")]
            derivation: Option<&'a Derivation>,
            #[serde(skip_serializing_if = "Option::is_none")]
            reordered: Option<String>,
            #[serde(skip_serializing_if = "Option::is_none")]
            reordered_defs: Option<BTreeMap<&'a str, String>>,
            #[serde(skip_serializing_if = "Option::is_none")]
            reason: Option<&'a str>,
            #[serde(skip_serializing_if = "Option::is_none")]
            subterm: Option<String>,
        }
        let mut doc = Doc {
            term: self.term.to_string(),
            typed: self.is_typed(),
            derivation: None,
            reordered: None,
            reordered_defs: None,
            reason: None,
            subterm: None,
        };
        match &self.outcome {
            Outcome::Typed {
                derivation,
                reordered,
                reordered_defs,
            } => {
                doc.derivation = Some(derivation);
                doc.reordered = Some(reordered.to_string());
                doc.reordered_defs = Some(
                    reordered_defs
                        .iter()
                        .map(|(c, t)| (c.as_str(), t.to_string()))
                        .collect(),
                );
            }
            Outcome::Untyped { reason, subterm } => {
                doc.reason = Some(reason);
                doc.subterm = Some(subterm.to_string());
            }
        }
        serde_json::to_string_pretty(&doc).expect("judgement serializes")
    }
}

#[derive(Clone, Debug)]
struct Failure {
    reason: String,
    subterm: Term,
}

fn fail(reason: impl Into<String>, subterm: &Term) -> Failure {
    Failure {
        reason: reason.into(),
        subterm: subterm.clone(),
    }
}

type Typed = Result<(Derivation, Term), Failure>;

struct Checker<'a> {
    spec: &'a Spec,
    memo: HashMap<(Term, BTreeSet<String>), Typed>,
    equations: HashMap<(Term, Term), bool>,
    bodies: BTreeMap<String, Term>,
}

impl Checker<'_> {
    fn check(&mut self, t: &Term, scanned: &BTreeSet<String>) -> Typed {
        let key = (t.clone(), scanned.clone());
        if let Some(r) = self.memo.get(&key) {
            return r.clone();
        }
        let r = self.check_uncached(t, scanned);
        self.memo.insert(key, r.clone());
        r
    }

    fn check_uncached(&mut self, t: &Term, scanned: &BTreeSet<String>) -> Typed {
        match t {
            Term::Nil => Ok((Derivation::leaf(Rule::Nil, t), Term::Nil)),
            Term::Par(l, r) => {
                let (dl, tl) = self.check(l, scanned)?;
                let (dr, tr) = self.check(r, scanned)?;
                let term = Term::par(tl, tr);
                Ok((node(Rule::Par, &term, vec![dl, dr]), term))
            }
            Term::Const(c) if scanned.contains(c) => {
                Ok((Derivation::leaf(Rule::ScannedConstant, t), t.clone()))
            }
            Term::Const(c) => {
                let body = normalize_sum(self.spec.body(c).expect("constant is defined"));
                let mut inner = scanned.clone();
                inner.insert(c.clone());
                let (d, reordered) = self.check(&body, &inner)?;
                self.bodies.entry(c.clone()).or_insert(reordered);
                Ok((node(Rule::UnfoldConstant, t, vec![d]), t.clone()))
            }
            Term::Prefix(..) | Term::Sum(..) => self.check_sum(t, scanned),
        }
    }

    /// A guarded term, seen as the list of its summands.
    fn check_sum(&mut self, t: &Term, scanned: &BTreeSet<String>) -> Typed {
        let parts: Vec<Term> = summands(t)
            .into_iter()
            .filter(|s| !s.is_nil())
            .cloned()
            .collect();
        if parts.is_empty() {
            let d = node(
                Rule::LowSum,
                t,
                vec![Derivation::leaf(Rule::Nil, &Term::Nil); 2],
            );
            return Ok((d, t.clone()));
        }
        if let [single] = &parts[..] {
            return self.check_prefix(single, scanned);
        }
        let high: Vec<usize> = (0..parts.len())
            .filter(|&i| matches!(&parts[i], Term::Prefix(a, _) if a.is_high()))
            .collect();
        if high.is_empty() {
            let mut premises = Vec::new();
            let mut terms = Vec::new();
            for s in &parts {
                let (d, r) = self.check_prefix(s, scanned)?;
                premises.push(d);
                terms.push(r);
            }
            let term = Term::sum_of(terms).expect("at least two summands");
            return Ok((node(Rule::LowSum, &term, premises), term));
        }
        let mut first_failure = None;
        for &i in &high {
            let Term::Prefix(h, p) = &parts[i] else {
                unreachable!()
            };
            let rest = Term::sum_of(
                parts
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, s)| s.clone()),
            )
            .expect("at least one other summand");
            match self.check_high_sum(h, p, &rest, scanned) {
                Ok(r) => return Ok(r),
                Err(e) => {
                    first_failure.get_or_insert(e);
                }
            }
        }
        Err(first_failure.expect("some high summand was tried"))
    }

    fn check_high_sum(&mut self, h: &Action, p: &Term, q: &Term, scanned: &BTreeSet<String>) -> Typed {
        let whole = Term::sum(Term::prefix(h.clone(), p.clone()), q.clone());
        if p.is_nil() {
            return Err(fail(
                format!("{h}.0 leaves θ after the high action"),
                &whole,
            ));
        }
        let (dp, tp) = self.check(p, scanned)?;
        let (dq, tq) = self.check(q, scanned)?;
        if !self.equation(p, q) {
            return Err(fail(
                format!("r({p}) and r({q}) are not rooted branching team equivalent"),
                &whole,
            ));
        }
        let term = Term::sum(Term::prefix(h.clone(), tp), tq);
        let prefix = node(Rule::HighSum, &term, vec![dp, dq]);
        Ok((prefix, term))
    }

    fn equation(&mut self, p: &Term, q: &Term) -> bool {
        let key = (p.clone(), q.clone());
        if let Some(&b) = self.equations.get(&key) {
            return b;
        }
        let b = decide_equational(p, q, self.spec);
        self.equations.insert(key, b);
        b
    }

    /// A single prefixed summand.
    fn check_prefix(&mut self, t: &Term, scanned: &BTreeSet<String>) -> Typed {
        let Term::Prefix(a, p) = t else {
            return self.check(t, scanned);
        };
        if !a.is_high() {
            let (d, r) = self.check(p, scanned)?;
            let term = Term::prefix(a.clone(), r);
            return Ok((node(Rule::Prefix, &term, vec![d]), term));
        }
        if is_deadlock_place(p, self.spec) {
            return Ok((Derivation::leaf(Rule::HighDeadlock, t), t.clone()));
        }
        let init = initials(p, self.spec);
        if !init.is_empty() && init.iter().all(Action::is_high) {
            let (d, r) = self.check(p, scanned)?;
            let term = Term::prefix(a.clone(), r);
            return Ok((node(Rule::HighPrefix, &term, vec![d]), term));
        }
        let reason = if p.is_nil() {
            format!("{a}.0 leaves θ after the high action")
        } else {
            format!("no rule for high-level prefixing applies: {p} can start with a low or silent action")
        };
        Err(fail(reason, t))
    }
}

fn node(rule: Rule, term: &Term, premises: Vec<Derivation>) -> Derivation {
    Derivation {
        rule,
        term: term.to_string(),
        premises,
    }
}

/// Tries to derive `(main, ∅):dni`. Sums are normalized and, when they have
/// high-prefixed summands, every choice of head summand is tried.
pub fn type_check(spec: &Spec) -> TypingJudgment {
    type_check_term(spec.main(), spec)
}

/// Like [`type_check`] for an arbitrary process of `spec`.
pub fn type_check_term(t: &Term, spec: &Spec) -> TypingJudgment {
    let mut c = Checker {
        spec,
        memo: HashMap::new(),
        equations: HashMap::new(),
        bodies: BTreeMap::new(),
    };
    let normalized = normalize_sum(t);
    let outcome = match c.check(&normalized, &BTreeSet::new()) {
        Ok((derivation, reordered)) => Outcome::Typed {
            derivation,
            reordered,
            reordered_defs: c.bodies,
        },
        Err(f) => Outcome::Untyped {
            reason: f.reason,
            subterm: f.subterm,
        },
    };
    TypingJudgment {
        term: t.clone(),
        scanned: BTreeSet::new(),
        outcome,
    }
}

/// Decides `E ⊢ r(p) = r(q)` semantically: restricts both terms and checks
/// rooted branching team equivalence of their initial markings in the union
/// of their nets.
pub fn decide_equational(p: &Term, q: &Term, spec: &Spec) -> bool {
    let (rp, s1) = restrict_syntactic(p, spec);
    let (rq, s2) = restrict_syntactic(q, &s1);
    equivalent_terms(&rp, &rq, &s2, true)
}

/// `p ≈⊕ q` (or `p ≈_c⊕ q` when `rooted`) for parallel terms of `spec`.
pub fn equivalent_terms(p: &Term, q: &Term, spec: &Spec, rooted: bool) -> bool {
    let net = build_term_net(&Term::par(p.clone(), q.clone()), spec);
    let mp = net.marking_of(p).expect("components of p are marked places");
    let mq = net.marking_of(q).expect("components of q are marked places");
    let partition = branching_bisim(&net);
    if rooted {
        markings_equiv(&rooted_partition(&net, &partition), &mp, &mq)
    } else {
        markings_equiv(&partition, &mp, &mq)
    }
}

/// `E ⊢ p = 0 + 0`: `p` denotes a single place with no transitions.
pub fn is_deadlock_place(p: &Term, spec: &Spec) -> bool {
    let m = dec(p);
    if m.size() != 1 {
        return false;
    }
    let net = build_term_net(p, spec);
    let place = net.marking_of(p).expect("p is a marked place");
    let stuck = place.support().all(|&s| net.outgoing(s).next().is_none());
    stuck
}
