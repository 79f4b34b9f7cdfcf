//! Random specifications and nets for testing and for the command line.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::net::Net;
use crate::syntax::{Action, Spec, Term};

pub const LOW: [&str; 3] = ["a", "b", "l"];
pub const HIGH: [&str; 2] = ["h", "k"];

/// Size bounds for [`random_spec`].
#[derive(Clone, Copy, Debug)]
pub struct SpecShape {
    pub max_constants: usize,
    pub max_depth: usize,
    pub max_components: usize,
}

impl Default for SpecShape {
    fn default() -> Self {
        SpecShape {
            max_constants: 6,
            max_depth: 5,
            max_components: 4,
        }
    }
}

struct TermGen<'a, R> {
    rng: &'a mut R,
    constants: &'a [String],
}

impl<R: Rng> TermGen<'_, R> {
    fn action(&mut self) -> Action {
        match self.rng.gen_range(0..10) {
            0..=1 => Action::Tau,
            2..=3 => Action::High(HIGH[self.rng.gen_range(0..HIGH.len())].into()),
            _ => Action::Low(LOW[self.rng.gen_range(0..LOW.len())].into()),
        }
    }

    /// Category `s`.
    fn guarded(&mut self, depth: usize) -> Term {
        if depth == 0 {
            return Term::Nil;
        }
        match self.rng.gen_range(0..10) {
            0 => Term::Nil,
            1..=6 => {
                let a = self.action();
                Term::prefix(a, self.sequential(depth - 1))
            }
            _ => Term::sum(self.guarded(depth - 1), self.guarded(depth - 1)),
        }
    }

    /// Category `q`.
    fn sequential(&mut self, depth: usize) -> Term {
        if !self.constants.is_empty() && (depth == 0 || self.rng.gen_bool(0.4)) {
            let i = self.rng.gen_range(0..self.constants.len());
            return Term::constant(self.constants[i].clone());
        }
        self.guarded(depth)
    }
}

/// A random valid specification with low actions `a, b, l`, high actions
/// `h, k` and `tau`.
pub fn random_spec<R: Rng>(rng: &mut R, shape: SpecShape) -> Spec {
    let n = rng.gen_range(0..=shape.max_constants);
    let names: Vec<String> = (0..n).map(|i| ((b'A' + i as u8) as char).to_string()).collect();
    let mut defs = BTreeMap::new();
    for name in &names {
        let depth = rng.gen_range(1..=shape.max_depth);
        let mut g = TermGen {
            rng: &mut *rng,
            constants: &names,
        };
        defs.insert(name.clone(), g.guarded(depth));
    }
    let components = rng.gen_range(1..=shape.max_components);
    let mut g = TermGen {
        rng: &mut *rng,
        constants: &names,
    };
    let parts: Vec<Term> = (0..components)
        .map(|_| {
            let depth = g.rng.gen_range(1..=shape.max_depth);
            g.sequential(depth)
        })
        .collect();
    let main = Term::par_of(parts).expect("at least one component");
    let high = HIGH.iter().map(|h| h.to_string()).collect();
    Spec::new(high, defs, main).expect("generated terms respect the categories")
}

/// [`random_spec`] with default bounds from a seed.
pub fn spec_from_seed(seed: u64) -> Spec {
    random_spec(&mut ChaCha8Rng::seed_from_u64(seed), SpecShape::default())
}

/// A random sequential term over `constants` of the given depth.
pub fn random_guarded<R: Rng>(rng: &mut R, constants: &[String], depth: usize) -> Term {
    TermGen { rng, constants }.guarded(depth)
}

/// Size bounds for [`random_net`].
#[derive(Clone, Copy, Debug)]
pub struct NetShape {
    pub max_places: usize,
    pub max_transitions: usize,
    /// Upper bound on the fraction of silent transitions.
    pub max_tau_density: f64,
}

impl Default for NetShape {
    fn default() -> Self {
        NetShape {
            max_places: 50,
            max_transitions: 120,
            max_tau_density: 0.4,
        }
    }
}

/// A random FSM net over labels `a, b, c, tau`, places `p0, p1, ...`, one
/// token on `p0`. The net is not reduced.
pub fn random_net<R: Rng>(rng: &mut R, shape: NetShape) -> Net {
    let n = rng.gen_range(1..=shape.max_places);
    let m = rng.gen_range(0..=shape.max_transitions.min(3 * n));
    let density = rng.gen_range(0.0..=shape.max_tau_density);
    let name = |i: usize| format!("p{i}");
    let labels = ["a", "b", "c"];
    let mut ts = BTreeSet::new();
    for _ in 0..m {
        let pre = rng.gen_range(0..n);
        let label = if rng.gen_bool(density) {
            Action::Tau
        } else {
            Action::Low(labels[rng.gen_range(0..labels.len())].into())
        };
        let post = (!rng.gen_bool(0.1)).then(|| name(rng.gen_range(0..n)));
        ts.insert((name(pre), label, post));
    }
    Net::new((0..n).map(name), ts, [(name(0), 1)]).expect("places exist")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs_are_valid_and_deterministic() {
        for seed in 0..200 {
            let s = spec_from_seed(seed);
            s.validate().unwrap();
            assert_eq!(s, spec_from_seed(seed));
            assert!(s.defs().len() <= 6);
            assert!(s.main().components().len() <= 4);
            let reparsed = crate::syntax::parse_spec(&s.to_string()).unwrap();
            assert_eq!(reparsed, s);
        }
    }

    #[test]
    fn nets_respect_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n = random_net(&mut rng, NetShape::default());
            assert!(n.num_places() <= 50);
            assert!(n.transitions().len() <= 120);
        }
    }
}
