//! Interleaving semantics: the structural operational rules and the
//! decomposition of terms into markings.

use std::collections::{HashMap, VecDeque};

use crate::error::NetError;
use crate::multiset::Multiset;
use crate::syntax::{Action, Spec, Term};

/// One-step transitions of `t` by the rules Pref, Cons, Sum₁, Sum₂, Par₁, Par₂.
/// Duplicate derivations of the same `(label, target)` are reported once.
pub fn lts_step(t: &Term, spec: &Spec) -> Vec<(Action, Term)> {
    let mut out = Vec::new();
    step_into(t, spec, &mut out);
    let mut seen = std::collections::HashSet::new();
    out.retain(|e| seen.insert(e.clone()));
    out
}

fn step_into(t: &Term, spec: &Spec, out: &mut Vec<(Action, Term)>) {
    match t {
        Term::Nil => {}
        Term::Prefix(a, p) => out.push((a.clone(), (**p).clone())),
        Term::Sum(l, r) => {
            step_into(l, spec, out);
            step_into(r, spec, out);
        }
        Term::Const(c) => {
            if let Some(body) = spec.body(c) {
                step_into(body, spec, out);
            }
        }
        Term::Par(l, r) => {
            let mut left = Vec::new();
            step_into(l, spec, &mut left);
            out.extend(
                left.into_iter()
                    .map(|(a, l2)| (a, Term::par(l2, (**r).clone()))),
            );
            let mut right = Vec::new();
            step_into(r, spec, &mut right);
            out.extend(
                right
                    .into_iter()
                    .map(|(a, r2)| (a, Term::par((**l).clone(), r2))),
            );
        }
    }
}

/// The decomposition `dec(t)` of a parallel term into its multiset of
/// sequential components; `0` contributes nothing.
pub fn dec(t: &Term) -> Multiset<Term> {
    let mut m = Multiset::empty();
    for c in t.components() {
        if !c.is_nil() {
            m.insert(c.clone(), 1);
        }
    }
    m
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub source: usize,
    pub label: Action,
    pub target: usize,
}

/// A finite labeled transition system with named states.
#[derive(Clone, Debug, Default)]
pub struct Lts {
    names: Vec<String>,
    terms: Vec<Term>,
    edges: Vec<Edge>,
    out: Vec<Vec<usize>>,
    initial: usize,
}

impl Lts {
    /// Builds an LTS from explicit state names and edges.
    pub fn from_parts(names: Vec<String>, edges: Vec<Edge>, initial: usize) -> Lts {
        let mut out = vec![Vec::new(); names.len()];
        for (i, e) in edges.iter().enumerate() {
            out[e.source].push(i);
        }
        Lts {
            names,
            terms: Vec::new(),
            edges,
            out,
            initial,
        }
    }

    /// Explores the states reachable from `t`, breadth first.
    pub fn explore(t: &Term, spec: &Spec, limit: usize) -> Result<Lts, NetError> {
        let mut index: HashMap<Term, usize> = HashMap::new();
        let mut terms = vec![t.clone()];
        index.insert(t.clone(), 0);
        let mut edges = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let here = terms[i].clone();
            for (label, next) in lts_step(&here, spec) {
                let target = match index.get(&next) {
                    Some(&j) => j,
                    None => {
                        if terms.len() >= limit {
                            return Err(NetError::StateLimit(limit));
                        }
                        let j = terms.len();
                        index.insert(next.clone(), j);
                        terms.push(next);
                        queue.push_back(j);
                        j
                    }
                };
                edges.push(Edge {
                    source: i,
                    label,
                    target,
                });
            }
        }
        let names = terms.iter().map(Term::to_string).collect();
        let mut lts = Lts::from_parts(names, edges, 0);
        lts.terms = terms;
        Ok(lts)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn name(&self, state: usize) -> &str {
        &self.names[state]
    }

    /// The process term of a state, when the LTS was built by [`Lts::explore`].
    pub fn term(&self, state: usize) -> Option<&Term> {
        self.terms.get(state)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn outgoing(&self, state: usize) -> impl Iterator<Item = &Edge> {
        self.out[state].iter().map(move |&i| &self.edges[i])
    }

    pub fn state_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Same states, only the edges whose label satisfies `keep`.
    pub fn filter_edges(&self, keep: impl Fn(&Action) -> bool) -> Lts {
        let edges = self
            .edges
            .iter()
            .filter(|e| keep(&e.label))
            .cloned()
            .collect();
        let mut lts = Lts::from_parts(self.names.clone(), edges, self.initial);
        lts.terms = self.terms.clone();
        lts
    }

    /// Disjoint union; states of `other` are shifted by `self.len()`.
    pub fn disjoint_union(&self, other: &Lts) -> Lts {
        let shift = self.len();
        let mut names = self.names.clone();
        names.extend(other.names.iter().cloned());
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().map(|e| Edge {
            source: e.source + shift,
            label: e.label.clone(),
            target: e.target + shift,
        }));
        Lts::from_parts(names, edges, self.initial)
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph lts {\n  rankdir=TB;\n  node [shape=circle];\n");
        for (i, n) in self.names.iter().enumerate() {
            let style = if i == self.initial { ", penwidth=2" } else { "" };
            s.push_str(&format!("  s{i} [label=\"{}\"{style}];\n", escape(n)));
        }
        for e in &self.edges {
            s.push_str(&format!(
                "  s{} -> s{} [label=\"{}\"];\n",
                e.source, e.target, e.label
            ));
        }
        s.push_str("}\n");
        s
    }
}

pub(crate) fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_spec;

    fn steps(t: &Term, spec: &Spec) -> Vec<String> {
        lts_step(t, spec)
            .into_iter()
            .map(|(a, p)| format!("{a} -> {p}"))
            .collect()
    }

    #[test]
    fn prefix_rule() {
        let s = parse_spec("main := a.b.0").unwrap();
        assert_eq!(steps(s.main(), &s), ["a -> b.0"]);
        assert!(lts_step(&Term::Nil, &s).is_empty());
    }

    #[test]
    fn parallel_with_constants() {
        let s = parse_spec("high h\nC := h.B\nB := l.B\nmain := C | B").unwrap();
        assert_eq!(steps(s.main(), &s), ["h -> B | B", "l -> C | B"]);
    }

    #[test]
    fn decomposition() {
        assert!(dec(&Term::Nil).is_empty());
        let stuck = Term::stuck();
        assert_eq!(dec(&stuck), Multiset::singleton(stuck.clone()));
        let s = parse_spec("Q := a.Q\nR := b.R\nmain := (Q | R) | (Q | R)").unwrap();
        let m = dec(s.main());
        assert_eq!(m.count(&Term::constant("Q")), 2);
        assert_eq!(m.count(&Term::constant("R")), 2);
        assert_eq!(m.support().count(), 2);
    }

    #[test]
    fn explore_respects_limit() {
        let s = parse_spec("A := a.B\nB := b.A\nmain := A | A | A").unwrap();
        let lts = Lts::explore(s.main(), &s, 100).unwrap();
        assert_eq!(lts.len(), 8);
        assert_eq!(
            Lts::explore(s.main(), &s, 5).unwrap_err(),
            NetError::StateLimit(5)
        );
    }
}
