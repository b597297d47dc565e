//! Test-side reference implementations, kept independent of the enumeration
//! machinery in the library.

#![allow(dead_code)]

use condni::model::{ActionId, Machine, UserId};
use condni::policy::Policy;
use condni::semantics::purge;

/// Every word over `n` actions of length at most `max_len`, shortest first,
/// then lexicographic.
pub fn words(n: usize, max_len: usize) -> Vec<Vec<ActionId>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * n);
        for w in &layer {
            for a in 0..n {
                let mut v: Vec<ActionId> = w.clone();
                v.push(ActionId::from_index(a));
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// First `(word, user)` in (length, word, user) order whose observation
/// changes under purging, using the literal purge definition.
pub fn naive_first_violation(
    m: &Machine,
    policy: &Policy,
    max_len: usize,
) -> Option<(UserId, Vec<ActionId>)> {
    let sig = m.signature();
    for w in words(sig.num_actions(), max_len) {
        for u in sig.users() {
            let kept = purge(policy, sig, &w, u).kept;
            if m.obs(u, m.run(&w)) != m.obs(u, m.run(&kept)) {
                return Some((u, w));
            }
        }
    }
    None
}
