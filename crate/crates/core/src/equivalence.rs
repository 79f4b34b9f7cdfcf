//! Branching and rooted branching bisimilarity on the places of an FSM net,
//! their additive closures on markings, and strong bisimilarity on LTSs.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::error::EquivalenceError;
use crate::lts::Lts;
use crate::net::{Marking, Net, PlaceId};
use crate::syntax::Action;

/// An equivalence relation over the places of a net plus the empty marking
/// θ. Element `i < n` is place `i`; element `n` is θ, always alone in its
/// class. Class ids are numbered in order of their smallest element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    class_of: Vec<usize>,
    classes: Vec<Vec<usize>>,
}

impl Partition {
    /// Canonical partition from arbitrary block keys, one per element.
    pub fn from_keys<K: std::hash::Hash + Eq>(keys: &[K]) -> Partition {
        let mut ids: HashMap<&K, usize> = HashMap::new();
        let mut class_of = Vec::with_capacity(keys.len());
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for (i, k) in keys.iter().enumerate() {
            let next = classes.len();
            let c = *ids.entry(k).or_insert(next);
            if c == classes.len() {
                classes.push(Vec::new());
            }
            classes[c].push(i);
            class_of.push(c);
        }
        Partition { class_of, classes }
    }

    /// Number of places (θ excluded).
    pub fn num_places(&self) -> usize {
        self.class_of.len() - 1
    }

    /// Universe index of θ.
    pub fn theta(&self) -> usize {
        self.num_places()
    }

    pub fn class_of(&self, element: usize) -> usize {
        self.class_of[element]
    }

    /// Class of a place, or of θ for `None`.
    pub fn class(&self, m: Option<PlaceId>) -> usize {
        self.class_of[m.unwrap_or(self.theta())]
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn related(&self, a: PlaceId, b: PlaceId) -> bool {
        self.class_of[a] == self.class_of[b]
    }

    /// Place classes by name (θ omitted), sorted.
    pub fn named_classes(&self, net: &Net) -> Vec<Vec<String>> {
        let theta = self.theta();
        let mut out: Vec<Vec<String>> = self
            .classes
            .iter()
            .filter(|c| c[0] != theta)
            .map(|c| {
                let mut names: Vec<String> =
                    c.iter().map(|&p| net.place_name(p).to_string()).collect();
                names.sort();
                names
            })
            .collect();
        out.sort();
        out
    }

    pub fn to_json(&self, net: &Net) -> String {
        #[derive(Serialize)]
        struct Doc {
            classes: Vec<Vec<String>>,
        }
        serde_json::to_string_pretty(&Doc {
            classes: self.named_classes(net),
        })
        .expect("partition serializes")
    }
}

/// The coarsest branching bisimulation on the places of `net`.
pub fn branching_bisim(net: &Net) -> Partition {
    refine_branching(net).0
}

/// Signature refinement, also returning the class map after every round.
fn refine_branching(net: &Net) -> (Partition, Vec<Vec<usize>>) {
    let n = net.num_places();
    let theta = n;
    let mut block: Vec<usize> = (0..=n).map(|i| usize::from(i == theta)).collect();
    let mut history = vec![block.clone()];
    let mut count = if n == 0 { 1 } else { 2 };
    loop {
        let mut keys: Vec<(usize, Vec<(Action, usize)>)> = Vec::with_capacity(n + 1);
        for s in 0..n {
            keys.push((block[s], branching_signature(net, &block, s)));
        }
        keys.push((block[theta], Vec::new()));
        let next = Partition::from_keys(&keys);
        let new_count = next.num_classes();
        block = next.class_of.clone();
        if new_count == count {
            return (next, history);
        }
        history.push(block.clone());
        count = new_count;
    }
}

/// `{(ℓ, [m]) | s ⇒ s' -ℓ-> m}` where the silent prefix stays inside the
/// block of `s` and inert silent steps are left out.
fn branching_signature(net: &Net, block: &[usize], s: PlaceId) -> Vec<(Action, usize)> {
    let theta = net.num_places();
    let b = block[s];
    let mut seen = vec![s];
    let mut stack = vec![s];
    let mut sig = BTreeSet::new();
    while let Some(p) = stack.pop() {
        for t in net.outgoing(p) {
            let target = block[t.post.unwrap_or(theta)];
            if t.label.is_tau() && target == b {
                let q = t.post.expect("θ has its own block");
                if !seen.contains(&q) {
                    seen.push(q);
                    stack.push(q);
                }
            } else {
                sig.insert((t.label.clone(), target));
            }
        }
    }
    sig.into_iter().collect()
}

fn rooted_signature(net: &Net, p: &Partition, s: PlaceId) -> BTreeSet<(Action, usize)> {
    net.outgoing(s)
        .map(|t| (t.label.clone(), p.class(t.post)))
        .collect()
}

/// `q1 ≈_c q2`, given `p = branching_bisim(net)`: initial moves matched by
/// equally labeled initial moves reaching θ on both sides or ≈-related places.
pub fn rooted_pairs(net: &Net, p: &Partition, q1: PlaceId, q2: PlaceId) -> bool {
    rooted_signature(net, p, q1) == rooted_signature(net, p, q2)
}

/// The partition induced by `≈_c`.
pub fn rooted_partition(net: &Net, p: &Partition) -> Partition {
    let n = net.num_places();
    let mut keys: Vec<Option<BTreeSet<(Action, usize)>>> =
        (0..n).map(|s| Some(rooted_signature(net, p, s))).collect();
    keys.push(None);
    Partition::from_keys(&keys)
}

/// `m1 R⊕ m2` for the equivalence `R` given as a partition: equal sizes and
/// equal multisets of classes.
pub fn markings_equiv(p: &Partition, m1: &Marking, m2: &Marking) -> bool {
    m1.size() == m2.size() && class_multiset(p, m1) == class_multiset(p, m2)
}

fn class_multiset(p: &Partition, m: &Marking) -> Vec<usize> {
    let mut v: Vec<usize> = m.elements().map(|&s| p.class_of(s)).collect();
    v.sort_unstable();
    v
}

/// Largest size accepted by [`naive_branching_fixpoint`].
pub const NAIVE_LIMIT: usize = 200;

/// Branching bisimilarity computed directly from the definition: start from
/// the full relation on places and delete pairs violating the transfer
/// clauses, with explicit silent closures, until nothing changes.
pub fn naive_branching_fixpoint(net: &Net) -> Result<Partition, EquivalenceError> {
    let n = net.num_places();
    if n > NAIVE_LIMIT {
        return Err(EquivalenceError::TooLarge {
            places: n,
            limit: NAIVE_LIMIT,
        });
    }
    let closures: Vec<Vec<Option<PlaceId>>> = (0..n)
        .map(|s| net.silent_closure(s).into_iter().collect())
        .collect();
    let mut rel = vec![vec![true; n]; n];
    loop {
        let mut changed = false;
        for s1 in 0..n {
            for s2 in 0..n {
                if rel[s1][s2]
                    && !(transfers(net, &closures, &rel, s1, s2, false)
                        && transfers(net, &closures, &rel, s2, s1, true))
                {
                    rel[s1][s2] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut keys: Vec<Option<Vec<bool>>> = rel.into_iter().map(Some).collect();
    keys.push(None);
    Ok(Partition::from_keys(&keys))
}

/// Every move of `a` is answered from `b`. With `flip`, `a` is the right
/// element of the pair and relation lookups are mirrored.
fn transfers(
    net: &Net,
    closures: &[Vec<Option<PlaceId>>],
    rel: &[Vec<bool>],
    a: PlaceId,
    b: PlaceId,
    flip: bool,
) -> bool {
    let r = |x: PlaceId, y: PlaceId| if flip { rel[y][x] } else { rel[x][y] };
    net.outgoing(a).all(|t| {
        let silent_answer = t.label.is_tau()
            && t.post.is_some_and(|m1| {
                closures[b]
                    .iter()
                    .flatten()
                    .any(|&m2| r(a, m2) && r(m1, m2))
            });
        silent_answer
            || closures[b].iter().flatten().any(|&s| {
                r(a, s)
                    && net.outgoing(s).any(|u| {
                        u.label == t.label
                            && match (t.post, u.post) {
                                (None, None) => true,
                                (Some(m1), Some(m2)) => r(m1, m2),
                                _ => false,
                            }
                    })
            })
    })
}

/// The coarsest strong bisimulation on the states of `g`, as a class id per
/// state.
pub fn strong_bisim_lts(g: &Lts) -> Vec<usize> {
    let n = g.len();
    let mut block = vec![0usize; n];
    let mut count = 1;
    loop {
        let keys: Vec<(usize, BTreeSet<(&Action, usize)>)> = (0..n)
            .map(|s| {
                let sig = g.outgoing(s).map(|e| (&e.label, block[e.target])).collect();
                (block[s], sig)
            })
            .collect();
        let next = Partition::from_keys(&keys);
        block = next.class_of;
        if next.classes.len() == count {
            return block;
        }
        count = next.classes.len();
    }
}

/// A best-effort explanation of why two elements (`None` for θ) are not
/// branching bisimilar: a sequence of labels the first can perform, with
/// silent steps, that the second cannot match. Empty when they are related.
pub fn distinguishing_path(net: &Net, a: Option<PlaceId>, b: Option<PlaceId>) -> Vec<Action> {
    let (_, history) = refine_branching(net);
    let theta = net.num_places();
    let (mut x, mut y) = (a.unwrap_or(theta), b.unwrap_or(theta));
    let mut path = Vec::new();
    let split = |x: usize, y: usize| history.iter().position(|blk| blk[x] != blk[y]);
    while let Some(k) = split(x, y) {
        if k == 0 || x == theta || y == theta {
            break;
        }
        let prev = &history[k - 1];
        let sx = branching_signature(net, prev, x);
        let sy = branching_signature(net, prev, y);
        let (from, other, sig_other, swapped) = match sx.iter().find(|e| !sy.contains(e)) {
            Some(_) => (x, y, sy, false),
            None => (y, x, sx, true),
        };
        let Some((label, target, _)) = moves(net, prev, from)
            .into_iter()
            .find(|(l, _, c)| !sig_other.contains(&(l.clone(), *c)))
        else {
            break;
        };
        path.push(label.clone());
        let answers: Vec<usize> = moves(net, prev, other)
            .into_iter()
            .filter(|(l, _, _)| *l == label)
            .map(|(_, t, _)| t)
            .collect();
        let best = answers
            .into_iter()
            .max_by_key(|&t| split(target, t).unwrap_or(usize::MAX));
        match best {
            Some(t) if split(target, t).is_some() => {
                (x, y) = if swapped { (t, target) } else { (target, t) };
            }
            _ => break,
        }
    }
    path
}

/// Visible or block-changing moves `(label, target element, target block)`
/// of `s` after silent steps inside its block.
fn moves(net: &Net, block: &[usize], s: PlaceId) -> Vec<(Action, usize, usize)> {
    let theta = net.num_places();
    let mut seen = vec![s];
    let mut stack = vec![s];
    let mut out = Vec::new();
    while let Some(p) = stack.pop() {
        for t in net.outgoing(p) {
            let target = t.post.unwrap_or(theta);
            if t.label.is_tau() && block[target] == block[s] {
                if !seen.contains(&target) {
                    seen.push(target);
                    stack.push(target);
                }
            } else {
                out.push((t.label.clone(), target, block[target]));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn act(name: &str) -> Action {
        if name == "tau" {
            Action::Tau
        } else {
            Action::Low(name.into())
        }
    }

    /// A net from `pre label post` triples; `_` is θ.
    fn net(spec: &[(&str, &str, &str)], extra: &[&str]) -> Net {
        let mut places: BTreeSet<String> = extra.iter().map(|s| s.to_string()).collect();
        for (a, _, b) in spec {
            places.insert(a.to_string());
            if *b != "_" {
                places.insert(b.to_string());
            }
        }
        Net::new(
            places,
            spec.iter().map(|(a, l, b)| {
                (a.to_string(), act(l), (*b != "_").then(|| b.to_string()))
            }),
            [],
        )
        .unwrap()
    }

    fn same(n: &Net, p: &Partition, a: &str, b: &str) -> bool {
        p.related(n.place_id(a).unwrap(), n.place_id(b).unwrap())
    }

    fn choice_net() -> Net {
        net(
            &[
                ("s1", "a", "s2"),
                ("s2", "b", "_"),
                ("s2", "c", "_"),
                ("s3", "a", "s4"),
                ("s3", "a", "s5"),
                ("s4", "b", "_"),
                ("s5", "c", "_"),
                ("s6", "a", "s7"),
                ("s8", "a", "_"),
            ],
            &[],
        )
    }

    fn silent_step_net() -> Net {
        net(
            &[
                ("s1", "tau", "s2"),
                ("s1", "b", "_"),
                ("s2", "a", "s3"),
                ("s4", "a", "s5"),
                ("s4", "b", "_"),
                ("s4", "tau", "s6"),
                ("s6", "a", "s7"),
            ],
            &[],
        )
    }

    #[test]
    fn timing_of_choice_and_termination() {
        let n = choice_net();
        let p = branching_bisim(&n);
        assert!(!same(&n, &p, "s1", "s3"));
        assert!(!same(&n, &p, "s2", "s4"));
        assert!(!same(&n, &p, "s2", "s5"));
        assert!(!same(&n, &p, "s6", "s8"));
        assert_eq!(p, naive_branching_fixpoint(&n).unwrap());
    }

    #[test]
    fn silent_step_distinctions() {
        let n = silent_step_net();
        let p = branching_bisim(&n);
        assert!(!same(&n, &p, "s1", "s4"));
        assert!(!same(&n, &p, "s1", "s2"));
        assert!(!same(&n, &p, "s2", "s4"));
        assert!(same(&n, &p, "s3", "s5"));
        assert_eq!(p, naive_branching_fixpoint(&n).unwrap());
    }

    #[test]
    fn inert_tau_is_absorbed() {
        let n = net(&[("x", "tau", "y"), ("y", "a", "_"), ("z", "a", "_")], &[]);
        let p = branching_bisim(&n);
        assert!(same(&n, &p, "x", "y") && same(&n, &p, "y", "z"));
        let x = n.place_id("x").unwrap();
        let z = n.place_id("z").unwrap();
        assert!(!rooted_pairs(&n, &p, x, z));
        assert!(rooted_pairs(&n, &p, x, x));
        assert_eq!(p.class(None), p.num_classes() - 1);
    }

    #[test]
    fn deadlock_differs_from_silent_loop_only_when_rooted() {
        let n = net(&[("loop", "tau", "loop")], &["stuck"]);
        let p = branching_bisim(&n);
        assert!(same(&n, &p, "loop", "stuck"));
        let (l, s) = (n.place_id("loop").unwrap(), n.place_id("stuck").unwrap());
        assert!(!rooted_pairs(&n, &p, s, l));
        assert!(!same(&n, &rooted_partition(&n, &p), "loop", "stuck"));
    }

    #[test]
    fn marking_lifting() {
        let n = net(&[("b", "l", "b"), ("c", "h", "b")], &[]);
        let p = branching_bisim(&n);
        let (b, c) = (n.place_id("b").unwrap(), n.place_id("c").unwrap());
        assert!(markings_equiv(&p, &Marking::empty(), &Marking::empty()));
        assert!(!markings_equiv(&p, &Marking::singleton(c), &Marking::singleton(b)));
        let m: Marking = [b, c].into_iter().collect();
        assert!(markings_equiv(&p, &m, &[c, b].into_iter().collect()));
        assert!(!markings_equiv(&p, &m, &Marking::singleton(b)));
    }

    #[test]
    fn strong_bisimulation_on_lts() {
        use crate::lts::Edge;
        let e = |s, l: &str, t| Edge {
            source: s,
            label: act(l),
            target: t,
        };
        let g = Lts::from_parts(
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![e(0, "l", 0), e(1, "l", 2), e(2, "l", 1), e(3, "tau", 3)],
            0,
        );
        let c = strong_bisim_lts(&g);
        assert_eq!(c[0], c[1]);
        assert_eq!(c[1], c[2]);
        assert_ne!(c[0], c[3]);
    }

    #[test]
    fn distinguishing_paths() {
        let n = choice_net();
        let id = |s| n.place_id(s);
        let path = distinguishing_path(&n, id("s1"), id("s3"));
        assert_eq!(path.first(), Some(&act("a")));
        assert!(distinguishing_path(&n, id("s1"), id("s1")).is_empty());
        assert_eq!(distinguishing_path(&n, id("s6"), id("s8")), [act("a")]);
    }

    #[test]
    fn naive_limit() {
        let places: Vec<String> = (0..=NAIVE_LIMIT).map(|i| format!("p{i}")).collect();
        let n = Net::new(places, [], []).unwrap();
        assert!(naive_branching_fixpoint(&n).is_err());
        assert_eq!(branching_bisim(&n).num_classes(), 2);
    }

    #[test]
    fn json_export() {
        let n = silent_step_net();
        let text = branching_bisim(&n).to_json(&n);
        assert!(text.contains("\"classes\""));
        assert!(text.contains("\"s3\""));
    }
}
