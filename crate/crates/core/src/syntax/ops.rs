use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use super::{Action, Spec, Term};
use crate::lts::lts_step;

/// All actions occurring in `t` and in the bodies of the constants it uses,
/// transitively.
pub fn sort(t: &Term, spec: &Spec) -> BTreeSet<Action> {
    let mut out = t.actions();
    let mut seen = BTreeSet::new();
    let mut todo: Vec<String> = t.constants().into_iter().collect();
    while let Some(c) = todo.pop() {
        if !seen.insert(c.clone()) {
            continue;
        }
        if let Some(body) = spec.body(&c) {
            out.extend(body.actions());
            todo.extend(body.constants());
        }
    }
    out
}

/// Initial actions `In(t)`.
///
/// Constant bodies are guarded, so unfolding a constant can only meet
/// another constant behind a prefix, which stops the recursion.
pub fn initials(t: &Term, spec: &Spec) -> BTreeSet<Action> {
    fn go(t: &Term, spec: &Spec, unfoldings: usize, out: &mut BTreeSet<Action>) {
        assert!(unfoldings <= 1, "constant unfolded twice while computing In()");
        match t {
            Term::Nil => {}
            Term::Prefix(a, _) => {
                out.insert(a.clone());
            }
            Term::Sum(l, r) | Term::Par(l, r) => {
                go(l, spec, unfoldings, out);
                go(r, spec, unfoldings, out);
            }
            Term::Const(c) => {
                if let Some(body) = spec.body(c) {
                    go(body, spec, unfoldings + 1, out);
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    go(t, spec, 0, &mut out);
    out
}

struct Restrictor<'a> {
    source: &'a Spec,
    defs: BTreeMap<String, Term>,
    memo: BTreeMap<String, String>,
    pending: Vec<String>,
}

impl Restrictor<'_> {
    fn primed(&mut self, c: &str) -> String {
        if let Some(p) = self.memo.get(c) {
            return p.clone();
        }
        let base = format!("{c}'");
        let mut name = base.clone();
        let mut n = 1;
        while self.defs.contains_key(&name) {
            name = format!("{base}{n}");
            n += 1;
        }
        assert!(!self.source.defs.contains_key(&name));
        // placeholder until the body is restricted; reserves the name
        self.defs.insert(name.clone(), Term::Nil);
        self.memo.insert(c.to_string(), name.clone());
        self.pending.push(c.to_string());
        name
    }

    fn term(&mut self, t: &Term) -> Term {
        match t {
            Term::Nil => Term::Nil,
            Term::Prefix(Action::High(_), _) => Term::stuck(),
            Term::Prefix(a, b) => Term::prefix(a.clone(), self.term(b)),
            Term::Sum(l, r) => Term::sum(self.term(l), self.term(r)),
            Term::Par(l, r) => Term::par(self.term(l), self.term(r)),
            Term::Const(c) => Term::Const(self.primed(c)),
        }
    }
}

/// The restriction function `r(t)`: high prefixes become the deadlock `0 + 0`
/// and every reachable constant `C` gets a primed copy `C'` whose body is the
/// restricted body of `C`.
///
/// Returns `r(t)` together with a specification extended by the primed
/// definitions, whose main process is `r(t)`. The source-to-primed mapping is
/// memoized in the returned specification, so restricting again in that
/// specification reuses the same primed constants.
pub fn restrict_syntactic(t: &Term, spec: &Spec) -> (Term, Spec) {
    let mut r = Restrictor {
        source: spec,
        defs: spec.defs.clone(),
        memo: spec.restricted.clone(),
        pending: Vec::new(),
    };
    let restricted = r.term(t);
    while let Some(c) = r.pending.pop() {
        let body = spec
            .body(&c)
            .expect("restricted constant must be defined")
            .clone();
        let new_body = r.term(&body);
        let name = r.memo[&c].clone();
        r.defs.insert(name, new_body);
    }
    let out = Spec::from_parts_unchecked(spec.high.clone(), r.defs, restricted.clone(), r.memo);
    (restricted, out)
}

/// `og(C)`: `C` cannot reach itself through a nonempty sequence of silent
/// LTS steps.
pub fn is_observationally_guarded(c: &str, spec: &Spec) -> bool {
    let start = Term::constant(c);
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    for (a, next) in lts_step(&start, spec) {
        if a.is_tau() && seen.insert(next.clone()) {
            queue.push_back(next);
        }
    }
    while let Some(t) = queue.pop_front() {
        if t == start {
            return false;
        }
        for (a, next) in lts_step(&t, spec) {
            if a.is_tau() && seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    true
}

/// The summands of a (possibly nested) sum, left to right. A term that is
/// not a sum is its own single summand.
pub fn summands(t: &Term) -> Vec<&Term> {
    let mut out = Vec::new();
    let mut stack = vec![t];
    while let Some(t) = stack.pop() {
        match t {
            Term::Sum(l, r) => {
                stack.push(r);
                stack.push(l);
            }
            other => out.push(other),
        }
    }
    out
}

/// Canonical representative modulo associativity, commutativity, identity
/// and idempotence of choice, applied everywhere in the term.
///
/// Sums are flattened, summands sorted by their printed form, duplicates
/// merged and `0` summands dropped while a non-`0` summand remains. A sum
/// of `0`s collapses to `0 + 0`, never to `0`.
pub fn normalize_sum(t: &Term) -> Term {
    match t {
        Term::Nil | Term::Const(_) => t.clone(),
        Term::Prefix(a, b) => Term::prefix(a.clone(), normalize_sum(b)),
        Term::Par(l, r) => Term::par(normalize_sum(l), normalize_sum(r)),
        Term::Sum(..) => {
            let mut parts: Vec<(String, Term)> = summands(t)
                .into_iter()
                .filter(|s| !s.is_nil())
                .map(|s| {
                    let n = normalize_sum(s);
                    (n.to_string(), n)
                })
                .collect();
            parts.sort_by(|a, b| a.0.cmp(&b.0));
            parts.dedup_by(|a, b| a.0 == b.0);
            Term::sum_of(parts.into_iter().map(|(_, t)| t)).unwrap_or_else(Term::stuck)
        }
    }
}

/// Canonical parallel form: components normalized and sorted, `0`
/// components dropped unless nothing else remains.
pub fn normalize_parallel(t: &Term) -> Term {
    let mut parts: Vec<(String, Term)> = t
        .components()
        .into_iter()
        .filter(|c| !c.is_nil())
        .map(|c| {
            let n = normalize_sum(c);
            (n.to_string(), n)
        })
        .collect();
    parts.sort_by(|a, b| a.0.cmp(&b.0));
    Term::par_of(parts.into_iter().map(|(_, t)| t)).unwrap_or(Term::Nil)
}
