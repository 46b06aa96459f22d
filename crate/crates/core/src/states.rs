//! State space and bitmask state sets.
//!
//! States live in a fixed, ordered list; every subset of the space is a
//! `u64` bitmask over those indices. Mask value order doubles as the
//! canonical tie-breaking order wherever a deterministic choice is needed.

use serde::{Deserialize, Serialize};
use std::fmt;

pub const MAX_STATES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OutcomeId(pub usize);

/// Subset of the state space as a bitmask over state indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct StateSet(pub u64);

impl StateSet {
    pub fn empty() -> Self {
        StateSet(0)
    }

    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_STATES);
        if n == 64 {
            StateSet(u64::MAX)
        } else {
            StateSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(s: StateId) -> Self {
        StateSet(1u64 << s.0)
    }

    pub fn contains(&self, s: StateId) -> bool {
        self.0 & (1u64 << s.0) != 0
    }

    pub fn insert(&mut self, s: StateId) {
        self.0 |= 1u64 << s.0;
    }

    pub fn remove(&mut self, s: StateId) {
        self.0 &= !(1u64 << s.0);
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset_of(&self, other: &StateSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersect(&self, other: &StateSet) -> StateSet {
        StateSet(self.0 & other.0)
    }

    pub fn union(&self, other: &StateSet) -> StateSet {
        StateSet(self.0 | other.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = StateId> + '_ {
        let bits = self.0;
        (0..64).filter_map(move |i| {
            if bits & (1u64 << i) != 0 {
                Some(StateId(i))
            } else {
                None
            }
        })
    }
}

impl FromIterator<StateId> for StateSet {
    fn from_iter<T: IntoIterator<Item = StateId>>(iter: T) -> Self {
        let mut set = StateSet::empty();
        for s in iter {
            set.insert(s);
        }
        set
    }
}

/// Ordered list of distinct state labels. Index order is fixed and used for
/// all tie-breaking downstream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    labels: Vec<String>,
}

impl StateSpace {
    pub fn new(labels: Vec<String>) -> Result<Self, StateSpaceError> {
        if labels.is_empty() {
            return Err(StateSpaceError::Empty);
        }
        if labels.len() > MAX_STATES {
            return Err(StateSpaceError::TooLarge(labels.len()));
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(StateSpaceError::Duplicate(a.clone()));
            }
        }
        Ok(StateSpace { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, s: StateId) -> &str {
        &self.labels[s.0]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn find(&self, label: &str) -> Option<StateId> {
        self.labels.iter().position(|l| l == label).map(StateId)
    }

    pub fn ids(&self) -> impl Iterator<Item = StateId> {
        (0..self.labels.len()).map(StateId)
    }

    pub fn full_set(&self) -> StateSet {
        StateSet::full(self.labels.len())
    }

    pub fn set_labels(&self, set: &StateSet) -> Vec<String> {
        set.iter().map(|s| self.labels[s.0].clone()).collect()
    }

    /// Canonical text form of a subset: `{a,b}` with members in index order.
    pub fn set_name(&self, set: &StateSet) -> String {
        let mut out = String::from("{");
        let mut first = true;
        for s in set.iter() {
            if !first {
                out.push(',');
            }
            out.push_str(&self.labels[s.0]);
            first = false;
        }
        out.push('}');
        out
    }
}

impl fmt::Display for StateSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.set_name(&self.full_set()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StateSpaceError {
    #[error("state space must be nonempty")]
    Empty,
    #[error("state space of {0} states exceeds the supported maximum of 64")]
    TooLarge(usize),
    #[error("duplicate state label {0:?}")]
    Duplicate(String),
}
