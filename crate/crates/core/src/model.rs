//! Trajectories, transitions and the transition multiset algebra.
//!
//! A trajectory is the ordered list of agents that handled one task
//! instance. Every consecutive pair of agents is a [`Transition`]; the bag of
//! those pairs, with multiplicity, is a [`TransitionMultiset`]. All
//! conformance metrics and diagnostics are computed on these bags.

use std::collections::btree_map::{self, BTreeMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Identifier of one agent in a workflow.
///
/// Restricted to ASCII letters, digits, `_` and `-` so that ids survive every
/// file format unescaped.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AgentId(String);

impl AgentId {
    pub fn new(name: impl Into<String>) -> Result<Self, Error> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::InvalidAgentId {
                name,
                reason: "agent id is empty",
            });
        }
        if !name
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
        {
            return Err(Error::InvalidAgentId {
                name,
                reason: "agent id may only contain ASCII letters, digits, '_' and '-'",
            });
        }
        Ok(Self(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for AgentId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<AgentId> for String {
    fn from(id: AgentId) -> Self {
        id.0
    }
}

impl FromStr for AgentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Ordered, non-empty sequence of agents. Revisits are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<AgentId>", into = "Vec<AgentId>")]
pub struct Trajectory(Vec<AgentId>);

impl Trajectory {
    pub fn new(steps: Vec<AgentId>) -> Result<Self, Error> {
        if steps.is_empty() {
            return Err(Error::EmptyTrajectory);
        }
        Ok(Self(steps))
    }

    /// Builds a trajectory from string names, validating each id.
    pub fn from_names<I, S>(names: I) -> Result<Self, Error>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let steps = names
            .into_iter()
            .map(AgentId::new)
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(steps)
    }

    pub fn steps(&self) -> &[AgentId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; kept for API symmetry with slices.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> &AgentId {
        &self.0[0]
    }

    /// Consecutive pairs in trajectory order.
    pub fn pairs(&self) -> impl Iterator<Item = Transition> + '_ {
        self.0
            .windows(2)
            .map(|w| Transition::new(w[0].clone(), w[1].clone()))
    }

    pub fn transitions(&self) -> TransitionMultiset {
        transitions(self)
    }
}

impl TryFrom<Vec<AgentId>> for Trajectory {
    type Error = Error;

    fn try_from(steps: Vec<AgentId>) -> Result<Self, Self::Error> {
        Self::new(steps)
    }
}

impl From<Trajectory> for Vec<AgentId> {
    fn from(t: Trajectory) -> Self {
        t.0
    }
}

impl fmt::Display for Trajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, step) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" -> ")?;
            }
            write!(f, "{step}")?;
        }
        Ok(())
    }
}

/// An ordered handoff `from -> to`. `(A, B)` and `(B, A)` are distinct.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub from: AgentId,
    pub to: AgentId,
}

impl Transition {
    pub fn new(from: AgentId, to: AgentId) -> Self {
        Self { from, to }
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.from, self.to)
    }
}

/// Bag of transitions with multiplicity.
///
/// Stored counts are always at least 1, so two multisets are equal exactly
/// when they hold the same transitions with the same counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TransitionMultiset {
    counts: BTreeMap<Transition, usize>,
}

impl TransitionMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, t: Transition) {
        self.insert_n(t, 1);
    }

    pub fn insert_n(&mut self, t: Transition, n: usize) {
        if n > 0 {
            *self.counts.entry(t).or_insert(0) += n;
        }
    }

    pub fn count(&self, t: &Transition) -> usize {
        self.counts.get(t).copied().unwrap_or(0)
    }

    /// Number of distinct transitions.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Cardinality with multiplicity.
    pub fn total_size(&self) -> usize {
        self.counts.values().sum()
    }

    /// Per-transition minimum of the two counts.
    pub fn intersect(&self, other: &Self) -> Self {
        let (small, large) = if self.counts.len() <= other.counts.len() {
            (self, other)
        } else {
            (other, self)
        };
        let counts = small
            .counts
            .iter()
            .filter_map(|(t, &n)| {
                let m = n.min(large.count(t));
                (m > 0).then(|| (t.clone(), m))
            })
            .collect();
        Self { counts }
    }

    /// Per-transition saturating difference `max(0, a - b)`.
    pub fn subtract(&self, other: &Self) -> Self {
        let counts = self
            .counts
            .iter()
            .filter_map(|(t, &n)| {
                let m = n.saturating_sub(other.count(t));
                (m > 0).then(|| (t.clone(), m))
            })
            .collect();
        Self { counts }
    }

    /// Iterates `(transition, count)` in transition order.
    pub fn iter(&self) -> btree_map::Iter<'_, Transition, usize> {
        self.counts.iter()
    }
}

impl FromIterator<Transition> for TransitionMultiset {
    fn from_iter<I: IntoIterator<Item = Transition>>(iter: I) -> Self {
        let mut ms = Self::new();
        for t in iter {
            ms.insert(t);
        }
        ms
    }
}

impl<'a> IntoIterator for &'a TransitionMultiset {
    type Item = (&'a Transition, &'a usize);
    type IntoIter = btree_map::Iter<'a, Transition, usize>;

    fn into_iter(self) -> Self::IntoIter {
        self.counts.iter()
    }
}

impl fmt::Display for TransitionMultiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (t, n)) in self.counts.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}:{n}")?;
        }
        f.write_str("}")
    }
}

/// Transition multiset of a trajectory. A single-step trajectory yields `{}`.
pub fn transitions(t: &Trajectory) -> TransitionMultiset {
    t.pairs().collect()
}

pub fn intersect(a: &TransitionMultiset, b: &TransitionMultiset) -> TransitionMultiset {
    a.intersect(b)
}

pub fn subtract(a: &TransitionMultiset, b: &TransitionMultiset) -> TransitionMultiset {
    a.subtract(b)
}

pub fn total_size(a: &TransitionMultiset) -> usize {
    a.total_size()
}
