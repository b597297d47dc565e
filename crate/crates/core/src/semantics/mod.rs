//! Purge functions and everything defined in terms of them.
//!
//! [`purge`] follows the definition literally, deciding every position with
//! [`eval_condition`] on the raw prefix and suffix. [`CompiledPolicy`] makes
//! the same decisions with automata and is what the enumerations use.

mod compiled;
mod consistency;
mod intransitive;

use crate::model::{ActionId, Machine, Signature, UserId};
use crate::policy::{eval_condition, Policy};

pub use compiled::{CompiledPolicy, PurgeScratch, UserPurger};
pub use consistency::{
    left_consistent_bounded, left_consistent_bounded_with, right_consistent_bounded,
    right_consistent_bounded_with, Consistency, ConsistencyError, ConsistencyWitness, Side,
};
pub use intransitive::{
    contains_chain, encode_intransitive, induced_interference, ipurge, InterferenceRelation,
    RelationError,
};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PurgeResult {
    pub kept: Vec<ActionId>,
    pub removed_positions: Vec<usize>,
}

/// `purge_Π(α, u)`: removes position `i` when the assertion controlling
/// `part(a_i)` toward `u` fires on the raw prefix and suffix around it.
pub fn purge(policy: &Policy, sig: &Signature, alpha: &[ActionId], u: UserId) -> PurgeResult {
    let mut out = PurgeResult::default();
    for (i, &a) in alpha.iter().enumerate() {
        let removed = policy
            .lookup(sig.part(a), u)
            .is_some_and(|t| eval_condition(t, &alpha[..i], a, &alpha[i + 1..], sig));
        if removed {
            out.removed_positions.push(i);
        } else {
            out.kept.push(a);
        }
    }
    out
}

/// `obs_u(s0 • α) = obs_u(s0 • purge_Π(α, u))`.
pub fn is_secure_def(m: &Machine, policy: &Policy, alpha: &[ActionId], u: UserId) -> bool {
    let purged = purge(policy, m.signature(), alpha, u).kept;
    m.obs(u, m.run(alpha)) == m.obs(u, m.run(&purged))
}
