//! Unwinding relations: synthesis by partition refinement and rule checking.
//!
//! All checks use the greatest relations satisfying the observation and step
//! rules, so a failed local rule on them means it fails on every candidate
//! family.

mod mixed;
mod post;
mod pre;
mod strict;
mod witness;

use std::collections::HashMap;
use std::hash::Hash;

use thiserror::Error;

use crate::model::{Machine, StateId, UserId};

pub use mixed::{check_mixed, check_user, Hints};
pub use post::{
    check_post, compute_post_family, cut, is_leftmost_exact, sc, suffix_closure, PostFamily,
    PostScope, SuffixSet, DEFAULT_SUFFIX_CAP,
};
pub use pre::check_pre;
pub use strict::check_strict;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnwindingError {
    #[error("{method} unwinding does not apply: {reason}")]
    Unsupported {
        method: &'static str,
        reason: String,
    },
    #[error("{found} channel suffixes toward `{user}` exceed the cap of {cap}")]
    TooManySuffixes {
        user: String,
        found: usize,
        cap: usize,
    },
}

/// An equivalence over machine states, as a class number per state.
///
/// Classes are numbered by first occurrence in state order, so equal
/// relations have equal representations.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EquivRelation {
    class_of: Vec<u32>,
    num_classes: usize,
}

impl EquivRelation {
    /// Groups states by key.
    pub fn from_keys<K: Hash + Eq>(keys: impl IntoIterator<Item = K>) -> Self {
        let mut ids: HashMap<K, u32> = HashMap::new();
        let class_of: Vec<u32> = keys
            .into_iter()
            .map(|k| {
                let n = ids.len() as u32;
                *ids.entry(k).or_insert(n)
            })
            .collect();
        EquivRelation {
            num_classes: ids.len(),
            class_of,
        }
    }

    pub fn full(n: usize) -> Self {
        EquivRelation {
            class_of: vec![0; n],
            num_classes: usize::from(n > 0),
        }
    }

    pub fn identity(n: usize) -> Self {
        EquivRelation {
            class_of: (0..n as u32).collect(),
            num_classes: n,
        }
    }

    pub fn num_states(&self) -> usize {
        self.class_of.len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    #[inline]
    pub fn class_of(&self, s: StateId) -> u32 {
        self.class_of[s.index()]
    }

    #[inline]
    pub fn related(&self, s: StateId, t: StateId) -> bool {
        self.class_of(s) == self.class_of(t)
    }

    /// Members of each class, classes in numbering order.
    pub fn classes(&self) -> Vec<Vec<StateId>> {
        let mut out = vec![Vec::new(); self.num_classes];
        for (s, &c) in self.class_of.iter().enumerate() {
            out[c as usize].push(StateId::from_index(s));
        }
        out
    }

    /// `self ⊆ other` as sets of pairs.
    pub fn is_finer_than(&self, other: &EquivRelation) -> bool {
        let mut image: Vec<Option<u32>> = vec![None; self.num_classes];
        self.class_of.iter().zip(&other.class_of).all(|(&c, &d)| {
            let slot = &mut image[c as usize];
            match slot {
                Some(x) => *x == d,
                None => {
                    *slot = Some(d);
                    true
                }
            }
        })
    }
}

/// Coarsest refinement of `init` that is stable under every action, with
/// successors compared in `target(a)` for each action. Used with
/// `target = self` for bisimulation.
pub(crate) fn refine_stable(m: &Machine, init: EquivRelation) -> EquivRelation {
    let sig = m.signature();
    let mut rel = init;
    loop {
        let next = EquivRelation::from_keys(m.states().map(|s| {
            let mut key = Vec::with_capacity(sig.num_actions() + 1);
            key.push(rel.class_of(s));
            key.extend(sig.actions().map(|a| rel.class_of(m.step(s, a))));
            key
        }));
        if next.num_classes() == rel.num_classes() {
            return next;
        }
        rel = next;
    }
}

/// Observation-equality for `u`.
pub fn obs_relation(m: &Machine, u: UserId) -> EquivRelation {
    EquivRelation::from_keys(m.states().map(|s| m.obs(u, s)))
}

/// The greatest relation that respects `obs_u` and is closed under steps:
/// `s ∼ t` iff `obs_u(s•α) = obs_u(t•α)` for every `α`.
pub fn coarsest_obs_bisim(m: &Machine, u: UserId) -> EquivRelation {
    refine_stable(m, obs_relation(m, u))
}
