#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use cfm_core::equivalence::{strong_bisim_lts, Partition};
use cfm_core::net::{build_net, Marking};
use cfm_core::syntax::{is_observationally_guarded, Action, Spec, Term};
use cfm_core::Lts;
use rand::seq::SliceRandom;
use rand::Rng;

pub const PARALLEL: &str = "high h\nC := h.B\nB := l.B\nmain := C | B";
pub const BRANCHING: &str = "high h\nC := h.(a.D + a.b.0) + a.D\nD := tau.b.0 + c.0\nmain := C";

pub fn spec(text: &str) -> Spec {
    cfm_core::parse_spec(text).unwrap_or_else(|e| panic!("{text}: {e}"))
}

/// Ten-state sequential component `Q0` with low and high steps around a
/// ring, and `copies` of it in parallel.
pub fn ring_spec(copies: usize) -> Spec {
    let mut text = String::from("high h\n");
    for i in 0..10 {
        let j = (i + 1) % 10;
        text.push_str(&format!("Q{i} := l.Q{j} + h.Q{j}\n"));
    }
    let main = vec!["Q0"; copies].join(" | ");
    text.push_str(&format!("main := {main}\n"));
    spec(&text)
}

/// Replaces each element of `m` by a random member of its class.
pub fn shuffle_within_classes<R: Rng>(rng: &mut R, p: &Partition, m: &Marking) -> Marking {
    m.elements()
        .map(|&s| {
            let class = &p.classes()[p.class_of(s)];
            *class.choose(rng).unwrap()
        })
        .collect()
}

pub fn random_marking<R: Rng>(rng: &mut R, places: usize, max: usize) -> Marking {
    if places == 0 {
        return Marking::empty();
    }
    let k = rng.gen_range(0..=max);
    (0..k).map(|_| rng.gen_range(0..places)).collect()
}

/// Checks that the marking graph of `⟦main⟧` from `dec(main)` and the LTS
/// of `main` are strongly bisimilar, state by state through `dec`.
/// `Ok(None)` when either exceeds `limit` states.
pub fn semantics_agree(s: &Spec, limit: usize) -> Result<Option<usize>, String> {
    let net = build_net(s);
    let Ok(lts) = Lts::explore(s.main(), s, limit) else {
        return Ok(None);
    };
    let Ok((graph, markings)) = net.marking_graph(net.initial(), limit) else {
        return Ok(None);
    };
    let union = lts.disjoint_union(&graph);
    let class = strong_bisim_lts(&union);
    let index: BTreeMap<&Marking, usize> =
        markings.iter().enumerate().map(|(i, m)| (m, i)).collect();
    for state in 0..lts.len() {
        let t = lts.term(state).unwrap();
        let m = net
            .marking_of(t)
            .ok_or_else(|| format!("dec({t}) is not a marking of the net"))?;
        let &j = index
            .get(&m)
            .ok_or_else(|| format!("dec({t}) is not reachable in the net"))?;
        if class[state] != class[lts.len() + j] {
            return Err(format!("{t} and its marking are not strongly bisimilar"));
        }
    }
    let covered: BTreeSet<usize> = (0..lts.len())
        .map(|i| index[&net.marking_of(lts.term(i).unwrap()).unwrap()])
        .collect();
    if covered.len() != markings.len() {
        return Err("the net reaches markings that are not states of the LTS".into());
    }
    Ok(Some(lts.len()))
}

/// Replaces every occurrence of the constant `var` by `by`.
pub fn substitute(t: &Term, var: &str, by: &Term) -> Term {
    match t {
        Term::Nil => Term::Nil,
        Term::Const(c) if c == var => by.clone(),
        Term::Const(_) => t.clone(),
        Term::Prefix(a, b) => Term::prefix(a.clone(), substitute(b, var, by)),
        Term::Sum(l, r) => Term::sum(substitute(l, var, by), substitute(r, var, by)),
        Term::Par(l, r) => Term::par(substitute(l, var, by), substitute(r, var, by)),
    }
}

/// Random terms over `a`, `b`, `tau`, with constants (and the variable
/// `X`, written as a constant) allowed in sequential positions.
pub struct AxiomGen<'a, R> {
    pub rng: &'a mut R,
    pub leaves: Vec<String>,
}

pub const VAR: &str = "X";

impl<R: Rng> AxiomGen<'_, R> {
    pub fn action(&mut self) -> Action {
        match self.rng.gen_range(0..3) {
            0 => Action::Low("a".into()),
            1 => Action::Low("b".into()),
            _ => Action::Tau,
        }
    }

    pub fn guarded(&mut self, depth: usize) -> Term {
        if depth == 0 {
            return Term::Nil;
        }
        match self.rng.gen_range(0..10) {
            0..=1 => Term::Nil,
            2..=6 => {
                let a = self.action();
                Term::prefix(a, self.sequential(depth - 1))
            }
            _ => Term::sum(self.guarded(depth - 1), self.guarded(depth - 1)),
        }
    }

    pub fn nonzero(&mut self, depth: usize) -> Term {
        loop {
            let t = self.guarded(depth.max(1));
            if !t.is_nil() {
                return t;
            }
        }
    }

    pub fn sequential(&mut self, depth: usize) -> Term {
        if !self.leaves.is_empty() && (depth == 0 || self.rng.gen_bool(0.3)) {
            let i = self.rng.gen_range(0..self.leaves.len());
            return Term::constant(self.leaves[i].clone());
        }
        self.guarded(depth)
    }

    pub fn parallel(&mut self, depth: usize) -> Term {
        let k = self.rng.gen_range(1..=2);
        Term::par_of((0..k).map(|_| self.sequential(depth))).unwrap()
    }
}

pub const AXIOMS: [&str; 15] = [
    "A1", "A2", "A3", "A4", "B", "R1", "R2", "R3", "U1", "U2", "U3", "U4", "P1", "P2", "P3",
];

/// A randomized instance of an axiom: the environment and the two sides.
pub struct Instance {
    pub spec: Spec,
    pub left: Term,
    pub right: Term,
}

/// Builds one instance of `axiom`. Recursive schemas get fresh constants
/// `C`, `D`, `E` over a random environment `E0`, `E1`; side conditions are
/// enforced by resampling. Sides in sequential position are sometimes
/// wrapped in a random context `μ.[ ] + s`.
pub fn instance<R: Rng>(rng: &mut R, axiom: &str) -> Instance {
    loop {
        if let Some(i) = try_instance(rng, axiom) {
            return i;
        }
    }
}

fn try_instance<R: Rng>(rng: &mut R, axiom: &str) -> Option<Instance> {
    let env_size = rng.gen_range(0..=2);
    let env: Vec<String> = (0..env_size).map(|i| format!("E{i}")).collect();
    let mut defs: BTreeMap<String, Term> = BTreeMap::new();
    {
        let mut g = AxiomGen {
            rng: &mut *rng,
            leaves: env.clone(),
        };
        for name in &env {
            let d = g.rng.gen_range(1..=3);
            defs.insert(name.clone(), g.guarded(d));
        }
    }
    let mut open_leaves = env.clone();
    open_leaves.push(VAR.into());
    let depth = 3;
    let tau = |t: Term| Term::prefix(Action::Tau, t);
    let x = Term::constant(VAR);

    let mut closed = AxiomGen {
        rng: &mut *rng,
        leaves: env.clone(),
    };
    let (left, right) = match axiom {
        "A1" => {
            let (a, b, c) = (closed.guarded(depth), closed.guarded(depth), closed.guarded(depth));
            (
                Term::sum(a.clone(), Term::sum(b.clone(), c.clone())),
                Term::sum(Term::sum(a, b), c),
            )
        }
        "A2" => {
            let (a, b) = (closed.guarded(depth), closed.guarded(depth));
            (Term::sum(a.clone(), b.clone()), Term::sum(b, a))
        }
        "A3" => {
            let a = closed.nonzero(depth);
            (Term::sum(a.clone(), Term::Nil), a)
        }
        "A4" => {
            let a = closed.nonzero(depth);
            (Term::sum(a.clone(), a.clone()), a)
        }
        "B" => {
            let mu = closed.action();
            let (a, b) = (closed.guarded(depth), closed.guarded(depth));
            let inner = Term::sum(tau(Term::sum(a.clone(), b.clone())), a.clone());
            (Term::prefix(mu.clone(), inner), Term::prefix(mu, Term::sum(a, b)))
        }
        "P1" | "P2" | "P3" => {
            let (a, b, c) = (closed.parallel(2), closed.parallel(2), closed.parallel(2));
            let pair = match axiom {
                "P1" => (
                    Term::par(a.clone(), Term::par(b.clone(), c.clone())),
                    Term::par(Term::par(a, b), c),
                ),
                "P2" => (Term::par(a.clone(), b.clone()), Term::par(b, a)),
                _ => (Term::par(a.clone(), Term::Nil), a),
            };
            let spec = Spec::new(BTreeSet::new(), defs, Term::Nil).ok()?;
            return Some(Instance {
                spec,
                left: pair.0,
                right: pair.1,
            });
        }
        "R1" => {
            defs.insert("C".into(), Term::Nil);
            (Term::constant("C"), Term::stuck())
        }
        "R2" => {
            let mut leaves = env.clone();
            leaves.push("C".into());
            let mut g = AxiomGen {
                rng: &mut *rng,
                leaves,
            };
            let p = g.nonzero(depth);
            defs.insert("C".into(), p.clone());
            (Term::constant("C"), p)
        }
        _ => {
            let mut g = AxiomGen {
                rng: &mut *rng,
                leaves: open_leaves,
            };
            let (c_body, d_body): (Term, Term) = match axiom {
                "R3" => {
                    let p = g.nonzero(depth);
                    (p.clone(), p)
                }
                "U1" => {
                    let p = g.guarded(depth);
                    (
                        Term::sum(tau(x.clone()), p.clone()),
                        Term::sum(tau(Term::sum(p.clone(), Term::Nil)), p),
                    )
                }
                "U2" => {
                    let (p, r) = (g.guarded(depth), g.guarded(depth));
                    (
                        Term::sum(tau(Term::sum(tau(x.clone()), p.clone())), r.clone()),
                        Term::sum(tau(Term::sum(p, r.clone())), r),
                    )
                }
                "U3" => {
                    let (p, r) = (g.guarded(depth), g.guarded(depth));
                    // x occurs unguarded in q: reachable through silent prefixes only
                    let rest = g.guarded(2);
                    let q = if g.rng.gen_bool(0.5) {
                        Term::sum(tau(x.clone()), rest)
                    } else {
                        Term::sum(tau(Term::sum(tau(x.clone()), rest)), g.guarded(2))
                    };
                    (
                        Term::sum(tau(Term::sum(tau(q.clone()), p.clone())), r.clone()),
                        Term::sum(tau(Term::sum(q, p)), r),
                    )
                }
                "U4" => {
                    let (p, q, r) = (g.guarded(depth), g.guarded(depth), g.guarded(depth));
                    (
                        Term::sum(
                            Term::sum(
                                tau(Term::sum(tau(x.clone()), p.clone())),
                                tau(Term::sum(tau(x.clone()), q.clone())),
                            ),
                            r.clone(),
                        ),
                        Term::sum(tau(Term::sum(Term::sum(tau(x.clone()), p), q)), r),
                    )
                }
                other => panic!("unknown axiom {other}"),
            };
            defs.insert("C".into(), substitute(&c_body, VAR, &Term::constant("C")));
            defs.insert("D".into(), substitute(&d_body, VAR, &Term::constant("D")));
            if axiom == "R3" {
                let probe = Spec::new(BTreeSet::new(), defs.clone(), Term::Nil).ok()?;
                if !is_observationally_guarded("C", &probe) {
                    return None;
                }
                let twice = substitute(&c_body, VAR, &c_body);
                defs.insert("E".into(), substitute(&twice, VAR, &Term::constant("E")));
                // the two solutions of q = p{q/x} are checked on alternate draws
                if rng.gen_bool(0.5) {
                    let spec = Spec::new(BTreeSet::new(), defs, Term::Nil).ok()?;
                    return Some(wrap(rng, spec, Term::constant("C"), Term::constant("E")));
                }
            }
            (Term::constant("C"), Term::constant("D"))
        }
    };
    let spec = Spec::new(BTreeSet::new(), defs, Term::Nil).ok()?;
    Some(wrap(rng, spec, left, right))
}

fn wrap<R: Rng>(rng: &mut R, spec: Spec, left: Term, right: Term) -> Instance {
    if !rng.gen_bool(0.3) {
        return Instance { spec, left, right };
    }
    let leaves: Vec<String> = spec.defs().keys().cloned().collect();
    let mut g = AxiomGen { rng, leaves };
    let mu = g.action();
    let s = g.guarded(2);
    let ctx = |t: Term| Term::sum(Term::prefix(mu.clone(), t), s.clone());
    Instance {
        spec,
        left: ctx(left),
        right: ctx(right),
    }
}
