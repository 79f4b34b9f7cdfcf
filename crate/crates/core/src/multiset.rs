//! Finite multisets, used for markings.

use std::collections::BTreeMap;
use std::fmt;

/// A finite multiset. Zero counts are never stored, so two multisets are
/// equal exactly when they have the same multiplicities.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Multiset<T: Ord>(BTreeMap<T, usize>);

impl<T: Ord> Default for Multiset<T> {
    fn default() -> Self {
        Multiset(BTreeMap::new())
    }
}

impl<T: Ord + Clone> Multiset<T> {
    /// The empty multiset θ.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn singleton(x: T) -> Self {
        let mut m = Self::empty();
        m.insert(x, 1);
        m
    }

    pub fn insert(&mut self, x: T, count: usize) {
        if count > 0 {
            *self.0.entry(x).or_insert(0) += count;
        }
    }

    /// Removes up to `count` copies of `x`.
    pub fn remove(&mut self, x: &T, count: usize) {
        if let Some(c) = self.0.get_mut(x) {
            if *c <= count {
                self.0.remove(x);
            } else {
                *c -= count;
            }
        }
    }

    /// Multiplicity `m(x)`.
    pub fn count(&self, x: &T) -> usize {
        self.0.get(x).copied().unwrap_or(0)
    }

    pub fn contains(&self, x: &T) -> bool {
        self.0.contains_key(x)
    }

    /// `|m|`, the total number of elements.
    pub fn size(&self) -> usize {
        self.0.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `m ⊕ m'`.
    pub fn union(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (x, &c) in &other.0 {
            out.insert(x.clone(), c);
        }
        out
    }

    /// `m ⊖ m'`, truncated at zero.
    pub fn difference(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (x, &c) in &other.0 {
            out.remove(x, c);
        }
        out
    }

    /// Scalar product `j · m`.
    pub fn scale(&self, j: usize) -> Self {
        if j == 0 {
            return Self::empty();
        }
        Multiset(self.0.iter().map(|(x, &c)| (x.clone(), c * j)).collect())
    }

    /// `m ⊆ m'`.
    pub fn is_subset(&self, other: &Self) -> bool {
        self.0.iter().all(|(x, &c)| other.count(x) >= c)
    }

    /// Support set `dom(m)` in ascending order.
    pub fn support(&self) -> impl Iterator<Item = &T> {
        self.0.keys()
    }

    /// `(element, multiplicity)` pairs in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = (&T, usize)> {
        self.0.iter().map(|(x, &c)| (x, c))
    }

    /// Every element repeated by its multiplicity, in ascending order.
    pub fn elements(&self) -> impl Iterator<Item = &T> {
        self.0
            .iter()
            .flat_map(|(x, &c)| std::iter::repeat_n(x, c))
    }

    /// Applies `f` element-wise, merging elements that collide.
    pub fn map<U: Ord + Clone>(&self, mut f: impl FnMut(&T) -> U) -> Multiset<U> {
        let mut out = Multiset::empty();
        for (x, &c) in &self.0 {
            out.insert(f(x), c);
        }
        out
    }
}

impl<T: Ord + Clone> FromIterator<T> for Multiset<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut m = Multiset::empty();
        for x in iter {
            m.insert(x, 1);
        }
        m
    }
}

impl<T: Ord + fmt::Debug> fmt::Debug for Multiset<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.0.iter()).finish()
    }
}

impl<T: Ord + fmt::Display> fmt::Display for Multiset<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("θ");
        }
        for (i, (x, c)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ⊕ ")?;
            }
            if *c == 1 {
                write!(f, "{x}")?;
            } else {
                write!(f, "{c}·{x}")?;
            }
        }
        Ok(())
    }
}
