//! Concrete traces backing INSECURE answers.

use crate::automata::{build_product, check_safety};
use crate::model::{ActionId, Machine, UserId};
use crate::oracle::Oracle;
use crate::par::Exec;
use crate::policy::Policy;
use crate::semantics::is_secure_def;

/// Words the fallback search may enumerate.
const SEARCH_LIMIT: usize = 2_000_000;

/// Shortest violating trace from the product machine; policies toward `u`
/// must be strict or pre-conditional.
pub(crate) fn from_product(m: &Machine, policy: &Policy, u: UserId) -> Option<Vec<ActionId>> {
    let product = build_product(m, policy, u).ok()?;
    check_safety(&product).witness
}

/// The first candidate that really violates the definition, else the least
/// violation found by bounded enumeration.
pub(crate) fn confirm_or_search(
    m: &Machine,
    policy: &Policy,
    u: UserId,
    candidates: impl IntoIterator<Item = Vec<ActionId>>,
) -> Option<Vec<ActionId>> {
    for c in candidates {
        if !is_secure_def(m, policy, &c, u) {
            return Some(c);
        }
    }
    let k = m.signature().num_actions().max(1);
    let mut bound = 0;
    let mut words = 1usize;
    let mut layer = 1usize;
    while bound < 16 {
        layer = layer.saturating_mul(k);
        if words.saturating_add(layer) > SEARCH_LIMIT {
            break;
        }
        words += layer;
        bound += 1;
    }
    let oracle = Oracle::new(m, policy, bound, Exec::default(), SEARCH_LIMIT).ok()?;
    oracle.first_violation(&[u]).map(|w| w.trace)
}
