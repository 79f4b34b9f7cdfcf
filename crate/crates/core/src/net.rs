//! Finite-state-machine Petri nets and the net semantics of CFM.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::NetError;
use crate::lts::{dec, escape, lts_step, Edge, Lts};
use crate::multiset::Multiset;
use crate::syntax::{Action, Spec, Term};

pub type PlaceId = usize;

/// A marking: a finite multiset of places.
pub type Marking = Multiset<PlaceId>;

/// A transition with a singleton pre-set and a singleton-or-empty post-set.
/// `post == None` means the token is consumed (`t• = θ`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub pre: PlaceId,
    pub label: Action,
    pub post: Option<PlaceId>,
}

/// A finite-state-machine net system `N(m₀)`.
///
/// Places are identified by name and stored sorted by name; transitions are
/// stored sorted and without duplicates, so two nets built from the same
/// data compare equal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Net {
    places: Vec<String>,
    index: HashMap<String, PlaceId>,
    transitions: Vec<Transition>,
    out: Vec<Vec<usize>>,
    initial: Marking,
}

impl Net {
    /// Builds a net from named places, transitions and initial marking.
    pub fn new<P, T, M>(places: P, transitions: T, initial: M) -> Result<Net, NetError>
    where
        P: IntoIterator<Item = String>,
        T: IntoIterator<Item = (String, Action, Option<String>)>,
        M: IntoIterator<Item = (String, usize)>,
    {
        let names: BTreeSet<String> = places.into_iter().collect();
        let places: Vec<String> = names.into_iter().collect();
        let index: HashMap<String, PlaceId> = places
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| NetError::Malformed(format!("unknown place {name}")))
        };
        let mut ts = BTreeSet::new();
        for (pre, label, post) in transitions {
            let post = match post {
                Some(p) => Some(lookup(&p)?),
                None => None,
            };
            ts.insert(Transition {
                pre: lookup(&pre)?,
                label,
                post,
            });
        }
        let mut m = Marking::empty();
        for (name, count) in initial {
            m.insert(lookup(&name)?, count);
        }
        let transitions: Vec<Transition> = ts.into_iter().collect();
        let mut out = vec![Vec::new(); places.len()];
        for (i, t) in transitions.iter().enumerate() {
            out[t.pre].push(i);
        }
        Ok(Net {
            places,
            index,
            transitions,
            out,
            initial: m,
        })
    }

    pub fn num_places(&self) -> usize {
        self.places.len()
    }

    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn place_name(&self, p: PlaceId) -> &str {
        &self.places[p]
    }

    pub fn place_id(&self, name: &str) -> Option<PlaceId> {
        self.index.get(name).copied()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Indices of the transitions whose pre-set is `p`.
    pub fn outgoing(&self, p: PlaceId) -> impl Iterator<Item = &Transition> {
        self.out[p].iter().map(move |&i| &self.transitions[i])
    }

    pub fn initial(&self) -> &Marking {
        &self.initial
    }

    /// The labels used by some transition.
    pub fn labels(&self) -> BTreeSet<Action> {
        self.transitions.iter().map(|t| t.label.clone()).collect()
    }

    /// Same places and transitions, different initial marking.
    pub fn with_initial(&self, initial: Marking) -> Net {
        Net {
            initial,
            ..self.clone()
        }
    }

    /// Named form of a marking, e.g. for reports.
    pub fn marking_names(&self, m: &Marking) -> Multiset<String> {
        m.map(|&p| self.places[p].clone())
    }

    pub fn format_marking(&self, m: &Marking) -> String {
        self.marking_names(m).to_string()
    }

    pub fn format_transition(&self, t: &Transition) -> String {
        let post = t.post.map_or("θ", |p| &self.places[p]);
        format!("({}, {}, {})", self.places[t.pre], t.label, post)
    }

    /// The marking `dec(t)`, if all its components are places of this net.
    pub fn marking_of(&self, t: &Term) -> Option<Marking> {
        let mut m = Marking::empty();
        for (c, n) in dec(t).iter() {
            m.insert(self.place_id(&c.to_string())?, n);
        }
        Some(m)
    }

    pub fn is_enabled(&self, m: &Marking, t: &Transition) -> bool {
        m.contains(&t.pre)
    }

    /// Indices of the transitions enabled at `m`.
    pub fn enabled(&self, m: &Marking) -> Vec<usize> {
        m.support().flat_map(|&p| self.out[p].iter().copied()).collect()
    }

    /// Fires transition `t` (an index) at `m`: `(m ⊖ •t) ⊕ t•`.
    pub fn fire(&self, m: &Marking, t: usize) -> Result<Marking, NetError> {
        let tr = &self.transitions[t];
        if !m.contains(&tr.pre) {
            return Err(NetError::NotEnabled(t));
        }
        Ok(fire_unchecked(m, tr))
    }

    /// All markings reachable from `m0`, in breadth-first order.
    pub fn reach(&self, m0: &Marking) -> Vec<Marking> {
        self.reach_bounded(m0, usize::MAX)
            .expect("unbounded exploration cannot hit the limit")
    }

    /// Like [`Net::reach`], failing once more than `limit` markings are found.
    pub fn reach_bounded(&self, m0: &Marking, limit: usize) -> Result<Vec<Marking>, NetError> {
        let mut seen: HashSet<Marking> = HashSet::from([m0.clone()]);
        let mut order = vec![m0.clone()];
        let mut next = 0;
        while next < order.len() {
            let m = order[next].clone();
            next += 1;
            for t in self.enabled(&m) {
                let m2 = fire_unchecked(&m, &self.transitions[t]);
                if !seen.contains(&m2) {
                    if order.len() >= limit {
                        return Err(NetError::StateLimit(limit));
                    }
                    seen.insert(m2.clone());
                    order.push(m2);
                }
            }
        }
        Ok(order)
    }

    /// The reachability graph from `m0` as an LTS whose states are markings.
    pub fn marking_graph(&self, m0: &Marking, limit: usize) -> Result<(Lts, Vec<Marking>), NetError> {
        let markings = self.reach_bounded(m0, limit)?;
        let index: HashMap<&Marking, usize> =
            markings.iter().enumerate().map(|(i, m)| (m, i)).collect();
        let mut edges = Vec::new();
        for (i, m) in markings.iter().enumerate() {
            for t in self.enabled(m) {
                let tr = &self.transitions[t];
                let m2 = fire_unchecked(m, tr);
                edges.push(Edge {
                    source: i,
                    label: tr.label.clone(),
                    target: index[&m2],
                });
            }
        }
        let names = markings.iter().map(|m| self.format_marking(m)).collect();
        Ok((Lts::from_parts(names, edges, 0), markings))
    }

    /// `{m | s ⇒ε m}`: `s` itself plus everything reachable through silent
    /// transitions; `None` stands for θ.
    pub fn silent_closure(&self, s: PlaceId) -> BTreeSet<Option<PlaceId>> {
        let mut out = BTreeSet::from([Some(s)]);
        let mut stack = vec![s];
        while let Some(p) = stack.pop() {
            for t in self.outgoing(p) {
                if t.label.is_tau() && out.insert(t.post) {
                    if let Some(q) = t.post {
                        stack.push(q);
                    }
                }
            }
        }
        out
    }

    /// Places that can carry a token in some marking reachable from `m0`.
    pub fn reachable_places(&self, m0: &Marking) -> BTreeSet<PlaceId> {
        let mut seen: BTreeSet<PlaceId> = m0.support().copied().collect();
        let mut stack: Vec<PlaceId> = seen.iter().copied().collect();
        while let Some(p) = stack.pop() {
            for t in self.outgoing(p) {
                if let Some(q) = t.post {
                    if seen.insert(q) {
                        stack.push(q);
                    }
                }
            }
        }
        seen
    }

    /// The dynamically reduced net: only places reachable from the initial
    /// marking and the transitions leaving them.
    pub fn reduce(&self) -> Net {
        let keep = self.reachable_places(&self.initial);
        let name = |p: PlaceId| self.places[p].clone();
        Net::new(
            keep.iter().map(|&p| name(p)),
            self.transitions
                .iter()
                .filter(|t| keep.contains(&t.pre))
                .map(|t| (name(t.pre), t.label.clone(), t.post.map(name))),
            self.initial.iter().map(|(&p, n)| (name(p), n)),
        )
        .expect("reduction keeps transitions between kept places")
    }

    pub fn is_dynamically_reduced(&self) -> bool {
        self.reachable_places(&self.initial).len() == self.places.len()
    }

    /// Union of two nets; places with the same name are identified and the
    /// initial markings are added.
    pub fn union(&self, other: &Net) -> Net {
        let named = |n: &Net| -> Vec<(String, Action, Option<String>)> {
            n.transitions
                .iter()
                .map(|t| {
                    (
                        n.places[t.pre].clone(),
                        t.label.clone(),
                        t.post.map(|p| n.places[p].clone()),
                    )
                })
                .collect()
        };
        let initial = self.marking_names(&self.initial).union(&other.marking_names(&other.initial));
        Net::new(
            self.places.iter().chain(other.places.iter()).cloned(),
            named(self).into_iter().chain(named(other)),
            initial.iter().map(|(n, c)| (n.clone(), c)),
        )
        .expect("union of well-formed nets")
    }

    pub fn to_json(&self) -> String {
        let doc = NetJson {
            places: self.places.clone(),
            transitions: self
                .transitions
                .iter()
                .map(|t| TransitionJson {
                    pre: t.pre,
                    label: t.label.name().to_string(),
                    post: t.post,
                })
                .collect(),
            initial: self
                .initial
                .iter()
                .map(|(&place, count)| TokenJson { place, count })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("net serializes")
    }

    /// Reads a net written by [`Net::to_json`]; labels in `high` are high.
    pub fn from_json(text: &str, high: &BTreeSet<String>) -> Result<Net, NetError> {
        let doc: NetJson =
            serde_json::from_str(text).map_err(|e| NetError::Malformed(e.to_string()))?;
        let name = |i: usize| {
            doc.places
                .get(i)
                .cloned()
                .ok_or_else(|| NetError::Malformed(format!("place index {i} out of range")))
        };
        let mut ts = Vec::new();
        for t in &doc.transitions {
            let post = match t.post {
                Some(p) => Some(name(p)?),
                None => None,
            };
            ts.push((name(t.pre)?, Action::classify(&t.label, high), post));
        }
        let mut init = Vec::new();
        for tok in &doc.initial {
            init.push((name(tok.place)?, tok.count));
        }
        if doc.places.iter().collect::<BTreeSet<_>>().len() != doc.places.len() {
            return Err(NetError::Malformed("duplicate place name".into()));
        }
        Net::new(doc.places.clone(), ts, init)
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph net {\n  rankdir=TB;\n");
        for (i, name) in self.places.iter().enumerate() {
            let tokens = self.initial.count(&i);
            let label = if tokens > 0 {
                format!("{}\\n{tokens}", escape(name))
            } else {
                escape(name)
            };
            let _ = writeln!(s, "  p{i} [shape=circle, label=\"{label}\"];");
        }
        for (i, t) in self.transitions.iter().enumerate() {
            let _ = writeln!(s, "  t{i} [shape=box, label=\"{}\"];", escape(t.label.name()));
            let _ = writeln!(s, "  p{} -> t{i};", t.pre);
            if let Some(q) = t.post {
                let _ = writeln!(s, "  t{i} -> p{q};");
            }
        }
        s.push_str("}\n");
        s
    }
}

fn fire_unchecked(m: &Marking, t: &Transition) -> Marking {
    let mut out = m.clone();
    out.remove(&t.pre, 1);
    if let Some(q) = t.post {
        out.insert(q, 1);
    }
    out
}

#[derive(Serialize, Deserialize)]
struct NetJson {
    places: Vec<String>,
    transitions: Vec<TransitionJson>,
    initial: Vec<TokenJson>,
}

#[derive(Serialize, Deserialize)]
struct TransitionJson {
    pre: usize,
    label: String,
    post: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct TokenJson {
    place: usize,
    count: usize,
}

/// Suffix appended to place names by [`restrict_net`].
pub const RESTRICTED_SUFFIX: &str = "\\H";

/// The net of `p∖H`: every place `s` renamed `s∖H`, high transitions
/// removed. All places are kept, including those that become unreachable,
/// so that `•t∖H` can be looked up for every high transition `t`.
pub fn restrict_net(n: &Net, high: &BTreeSet<String>) -> Net {
    let rename = |p: PlaceId| format!("{}{RESTRICTED_SUFFIX}", n.places[p]);
    let is_high = |a: &Action| a.is_high() || high.contains(a.name());
    Net::new(
        (0..n.places.len()).map(rename),
        n.transitions
            .iter()
            .filter(|t| !is_high(&t.label))
            .map(|t| (rename(t.pre), t.label.clone(), t.post.map(rename))),
        n.initial.iter().map(|(&p, c)| (rename(p), c)),
    )
    .expect("renaming is injective")
}

/// Maps a place of `n` to its copy in `restrict_net(n, _)`.
pub fn restricted_place(n: &Net, restricted: &Net, p: PlaceId) -> PlaceId {
    let name = format!("{}{RESTRICTED_SUFFIX}", n.place_name(p));
    restricted
        .place_id(&name)
        .expect("restricted net has a copy of every place")
}

/// Maps a marking of `n` to the corresponding marking of its restriction.
pub fn restricted_marking(n: &Net, restricted: &Net, m: &Marking) -> Marking {
    m.map(|&p| restricted_place(n, restricted, p))
}

type Triple = (Term, Action, Option<Term>);

#[derive(Clone, Default)]
struct Subnet {
    places: BTreeSet<Term>,
    transitions: BTreeSet<Triple>,
}

impl Subnet {
    fn absorb(&mut self, other: &Subnet) {
        self.places.extend(other.places.iter().cloned());
        self.transitions.extend(other.transitions.iter().cloned());
    }

    /// The "otherwise" clause: drop `p` and its outgoing transitions unless
    /// some transition produces `p`.
    fn without_unproduced(&self, p: &Term) -> Subnet {
        let produced = self
            .transitions
            .iter()
            .any(|(_, _, post)| post.as_ref() == Some(p));
        if produced {
            return self.clone();
        }
        let mut out = self.clone();
        out.places.remove(p);
        out.transitions.retain(|(pre, _, _)| pre != p);
        out
    }

    fn initial_moves<'a>(&'a self, p: &'a Term) -> impl Iterator<Item = (Action, Option<Term>)> + 'a {
        self.transitions
            .iter()
            .filter(move |(pre, _, _)| pre == p)
            .map(|(_, a, post)| (a.clone(), post.clone()))
    }
}

struct Denotation<'a> {
    spec: &'a Spec,
    memo: HashMap<(Term, BTreeSet<String>), Subnet>,
}

impl Denotation<'_> {
    fn net(&mut self, t: &Term, scanned: &BTreeSet<String>) -> Subnet {
        let key = (t.clone(), scanned.clone());
        if let Some(n) = self.memo.get(&key) {
            return n.clone();
        }
        let out = match t {
            Term::Nil => Subnet::default(),
            Term::Prefix(a, p) => {
                let mut n = self.net(p, scanned);
                n.places.insert(t.clone());
                let post = (!p.is_nil()).then(|| (**p).clone());
                n.transitions.insert((t.clone(), a.clone(), post));
                n
            }
            Term::Sum(p1, p2) => {
                let mut n = Subnet::default();
                n.places.insert(t.clone());
                for p in [p1, p2] {
                    let sub = self.net(p, scanned);
                    for (a, post) in sub.initial_moves(p) {
                        n.transitions.insert((t.clone(), a, post));
                    }
                    n.absorb(&sub.without_unproduced(p));
                }
                n
            }
            Term::Const(c) if scanned.contains(c) => Subnet {
                places: BTreeSet::from([t.clone()]),
                transitions: BTreeSet::new(),
            },
            Term::Const(c) => {
                let body = self
                    .spec
                    .body(c)
                    .expect("constants of a valid spec are defined")
                    .clone();
                let mut inner = scanned.clone();
                inner.insert(c.clone());
                let sub = self.net(&body, &inner);
                let mut n = Subnet::default();
                n.places.insert(t.clone());
                for (a, post) in sub.initial_moves(&body) {
                    n.transitions.insert((t.clone(), a, post));
                }
                n.absorb(&sub.without_unproduced(&body));
                n
            }
            Term::Par(p1, p2) => {
                let mut n = self.net(p1, scanned);
                n.absorb(&self.net(p2, scanned));
                n
            }
        };
        self.memo.insert(key, out.clone());
        out
    }
}

fn finish(places: BTreeSet<Term>, transitions: BTreeSet<Triple>, t: &Term) -> Net {
    let mut names: BTreeSet<String> = places.iter().map(Term::to_string).collect();
    let initial: Vec<(String, usize)> = dec(t).iter().map(|(c, n)| (c.to_string(), n)).collect();
    names.extend(initial.iter().map(|(n, _)| n.clone()));
    let net = Net::new(
        names,
        transitions
            .into_iter()
            .map(|(pre, a, post)| (pre.to_string(), a, post.map(|p| p.to_string()))),
        initial,
    )
    .expect("every transition endpoint is a place");
    net.reduce()
}

/// `⟦t⟧_∅` by the denotational rules, with `dec(t)` as initial marking,
/// followed by a reachability reduction.
pub fn build_term_net(t: &Term, spec: &Spec) -> Net {
    let mut d = Denotation {
        spec,
        memo: HashMap::new(),
    };
    let sub = d.net(t, &BTreeSet::new());
    finish(sub.places, sub.transitions, t)
}

/// The net semantics of the main process of `spec`.
pub fn build_net(spec: &Spec) -> Net {
    build_term_net(spec.main(), spec)
}

/// The same net obtained by exploring the operational rules from each
/// component of `dec(t)`: every reachable sequential term is a place and
/// every LTS step of a sequential term is a transition.
pub fn build_net_operational(t: &Term, spec: &Spec) -> Net {
    let mut places: BTreeSet<Term> = BTreeSet::new();
    let mut transitions = BTreeSet::new();
    let mut queue: VecDeque<Term> = dec(t).support().cloned().collect();
    places.extend(queue.iter().cloned());
    while let Some(q) = queue.pop_front() {
        for (a, next) in lts_step(&q, spec) {
            let post = (!next.is_nil()).then_some(next);
            if let Some(p) = &post {
                if places.insert(p.clone()) {
                    queue.push_back(p.clone());
                }
            }
            transitions.insert((q.clone(), a, post));
        }
    }
    finish(places, transitions, t)
}
