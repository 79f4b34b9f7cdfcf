//! Distributed non-interference: the marking-level definition, the
//! structural check on high transitions, its per-component version, the
//! rooted variant, and interleaving SBNDC for comparison.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::equivalence::{
    branching_bisim, markings_equiv, rooted_pairs, strong_bisim_lts, Partition,
};
use crate::error::NetError;
use crate::lts::{dec, Lts};
use crate::net::{build_net, restrict_net, restricted_marking, restricted_place, Marking, Net, Transition};
use crate::syntax::{Spec, Term};

/// Default cap on the number of explored markings or LTS states.
pub const DEFAULT_STATE_LIMIT: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HighTransition {
    pub pre: String,
    pub label: String,
    /// `None` when the transition empties its place (post-set θ).
    pub post: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub high_transition: HighTransition,
    /// The marking (place name to count) at which the transition fired.
    pub context_marking: Option<BTreeMap<String, usize>>,
    pub reason: String,
}

/// Outcome of a security check; `secure` holds exactly when there are no
/// witnesses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub secure: bool,
    pub witnesses: Vec<Witness>,
}

impl Verdict {
    pub fn from_witnesses(witnesses: Vec<Witness>) -> Verdict {
        Verdict {
            secure: witnesses.is_empty(),
            witnesses,
        }
    }
}

fn high_transition(net: &Net, t: &Transition) -> HighTransition {
    HighTransition {
        pre: net.place_name(t.pre).to_string(),
        label: t.label.to_string(),
        post: t.post.map(|p| net.place_name(p).to_string()),
    }
}

/// The net of the main process, its restriction and `≈` on the latter.
struct Analysis {
    net: Net,
    restricted: Net,
    partition: Partition,
}

impl Analysis {
    fn new(spec: &Spec) -> Analysis {
        let net = build_net(spec);
        let restricted = restrict_net(&net, spec.high_actions());
        let partition = branching_bisim(&restricted);
        Analysis {
            net,
            restricted,
            partition,
        }
    }

    fn high_transitions(&self) -> impl Iterator<Item = (usize, &Transition)> {
        self.net
            .transitions()
            .iter()
            .enumerate()
            .filter(|(_, t)| t.label.is_high())
    }

    fn structural(&self, rooted: bool) -> Vec<Witness> {
        let relation = if rooted { "rooted branching" } else { "branching" };
        let mut out = Vec::new();
        for (_, t) in self.high_transitions() {
            let pre = restricted_place(&self.net, &self.restricted, t.pre);
            let pre_name = self.restricted.place_name(pre);
            let reason = match t.post {
                None => Some(format!(
                    "{pre_name} is a place but the transition leaves θ; only θ is related to θ"
                )),
                Some(q) => {
                    let post = restricted_place(&self.net, &self.restricted, q);
                    let ok = if rooted {
                        rooted_pairs(&self.restricted, &self.partition, pre, post)
                    } else {
                        self.partition.related(pre, post)
                    };
                    (!ok).then(|| {
                        format!(
                            "{pre_name} and {} are not {relation} bisimilar",
                            self.restricted.place_name(post)
                        )
                    })
                }
            };
            if let Some(reason) = reason {
                out.push(Witness {
                    high_transition: high_transition(&self.net, t),
                    context_marking: None,
                    reason,
                });
            }
        }
        out
    }
}

/// DNI by its definition on markings: every high firing `m1 -h-> m2`
/// between markings reachable from `dec(main)` must satisfy
/// `m1∖H ≈⊕ m2∖H`. Each failing transition is reported once, with the
/// first context (in breadth-first order) where it fails.
pub fn dni_definitional(spec: &Spec, limit: usize) -> Result<Verdict, NetError> {
    let a = Analysis::new(spec);
    let reach = a.net.reach_bounded(a.net.initial(), limit)?;
    let mut failed: BTreeSet<usize> = BTreeSet::new();
    let mut out = Vec::new();
    for m1 in &reach {
        for (i, t) in a.high_transitions() {
            if failed.contains(&i) || !a.net.is_enabled(m1, t) {
                continue;
            }
            let m2 = a.net.fire(m1, i)?;
            let r1 = restricted_marking(&a.net, &a.restricted, m1);
            let r2 = restricted_marking(&a.net, &a.restricted, &m2);
            if !markings_equiv(&a.partition, &r1, &r2) {
                failed.insert(i);
                let reason = if r1.size() != r2.size() {
                    format!(
                        "markings of different size: {} vs {}",
                        a.restricted.format_marking(&r1),
                        a.restricted.format_marking(&r2)
                    )
                } else {
                    format!(
                        "{} and {} are not branching team equivalent",
                        a.restricted.format_marking(&r1),
                        a.restricted.format_marking(&r2)
                    )
                };
                out.push((
                    i,
                    Witness {
                        high_transition: high_transition(&a.net, t),
                        context_marking: Some(named(&a.net, m1)),
                        reason,
                    },
                ));
            }
        }
    }
    out.sort_by_key(|(i, _)| *i);
    Ok(Verdict::from_witnesses(out.into_iter().map(|(_, w)| w).collect()))
}

fn named(net: &Net, m: &Marking) -> BTreeMap<String, usize> {
    net.marking_names(m)
        .iter()
        .map(|(n, c)| (n.clone(), c))
        .collect()
}

/// DNI by the structural characterization: one branching bisimilarity
/// computation on the restricted net, then `•t∖H ≈ t•∖H` for every high
/// transition `t`.
pub fn dni_structural(spec: &Spec) -> Verdict {
    Verdict::from_witnesses(Analysis::new(spec).structural(false))
}

/// The rooted variant: `•t∖H ≈_c t•∖H` for every high transition.
pub fn rooted_dni(spec: &Spec) -> Verdict {
    Verdict::from_witnesses(Analysis::new(spec).structural(true))
}

/// The structural check run separately, and in parallel, on each distinct
/// sequential component of the main process.
pub fn component_checks(spec: &Spec) -> Vec<(Term, Verdict)> {
    let components: Vec<Term> = dec(spec.main()).support().cloned().collect();
    components
        .into_par_iter()
        .map(|c| {
            let sub = spec
                .with_main(c.clone())
                .expect("a component of a valid main process is a valid process");
            let verdict = dni_structural(&sub);
            (c, verdict)
        })
        .collect()
}

/// DNI as the conjunction of the component checks. Witnesses are merged;
/// a transition shared by several components is reported once.
pub fn dni_compositional(spec: &Spec) -> Verdict {
    let mut seen = Vec::new();
    for (_, v) in component_checks(spec) {
        for w in v.witnesses {
            if !seen.contains(&w) {
                seen.push(w);
            }
        }
    }
    Verdict::from_witnesses(seen)
}

/// Interleaving SBNDC: on the LTS of the main process, every high step
/// `p' -h-> p''` must relate `p'∖H` and `p''∖H` by strong bisimilarity,
/// where restriction prunes the high edges.
pub fn sbndc_interleaving(spec: &Spec, limit: usize) -> Result<Verdict, NetError> {
    let lts = Lts::explore(spec.main(), spec, limit)?;
    let pruned = lts.filter_edges(|a| !a.is_high());
    let class = strong_bisim_lts(&pruned);
    let mut out = Vec::new();
    for e in lts.edges() {
        if e.label.is_high() && class[e.source] != class[e.target] {
            out.push(Witness {
                high_transition: HighTransition {
                    pre: lts.name(e.source).to_string(),
                    label: e.label.to_string(),
                    post: Some(lts.name(e.target).to_string()),
                },
                context_marking: None,
                reason: format!(
                    "({})\\H and ({})\\H are not strongly bisimilar",
                    lts.name(e.source),
                    lts.name(e.target)
                ),
            });
        }
    }
    Ok(Verdict::from_witnesses(out))
}
