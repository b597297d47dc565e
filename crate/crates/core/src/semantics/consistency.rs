//! Bounded checks of left- and right-consistency.
//!
//! Both equations are checked for every split `α·α′` of every word up to the
//! bound. Purge results are memoized per user as a table from word index to
//! the index of the purged word, so each equation costs a few lookups.

use thiserror::Error;

use crate::model::{ActionId, Signature, UserId};
use crate::par::Exec;
use crate::policy::Policy;
use crate::words::{WordSpace, WordSpaceError, DEFAULT_WORD_LIMIT};

use super::{CompiledPolicy, PurgeScratch, UserPurger};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// `purge(purge(α)·α′) = purge(α·α′)`.
    Left,
    /// `purge(α·purge(α′)) = purge(α·α′)`.
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyWitness {
    pub user: UserId,
    pub alpha: Vec<ActionId>,
    pub alpha_post: Vec<ActionId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Consistency {
    pub side: Side,
    pub bound: usize,
    pub holds: bool,
    /// Least failing instance in the order (total length, word, split, user).
    pub witness: Option<ConsistencyWitness>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConsistencyError {
    #[error("no counterexample up to length {searched}, but length {bound} is beyond the enumeration limit: {source}")]
    TooLarge {
        searched: usize,
        bound: usize,
        source: WordSpaceError,
    },
}

pub fn left_consistent_bounded(
    policy: &Policy,
    sig: &Signature,
    max_len: usize,
) -> Result<Consistency, ConsistencyError> {
    left_consistent_bounded_with(policy, sig, max_len, Exec::default(), DEFAULT_WORD_LIMIT)
}

pub fn right_consistent_bounded(
    policy: &Policy,
    sig: &Signature,
    max_len: usize,
) -> Result<Consistency, ConsistencyError> {
    right_consistent_bounded_with(policy, sig, max_len, Exec::default(), DEFAULT_WORD_LIMIT)
}

pub fn left_consistent_bounded_with(
    policy: &Policy,
    sig: &Signature,
    max_len: usize,
    exec: Exec,
    limit: usize,
) -> Result<Consistency, ConsistencyError> {
    check(Side::Left, policy, sig, max_len, exec, limit)
}

pub fn right_consistent_bounded_with(
    policy: &Policy,
    sig: &Signature,
    max_len: usize,
    exec: Exec,
    limit: usize,
) -> Result<Consistency, ConsistencyError> {
    check(Side::Right, policy, sig, max_len, exec, limit)
}

/// Index of the purged word for every word index, filled length by length.
fn extend_table(
    ws: &WordSpace,
    sig: &Signature,
    purger: &UserPurger,
    table: &mut Vec<u32>,
    n: usize,
    exec: Exec,
) {
    let k = ws.num_actions();
    let chunk = exec.map_range(ws.len_range(n), |idx| {
        let mut word = Vec::with_capacity(n);
        ws.decode_into(idx, &mut word);
        let (mut len, mut value) = (0usize, 0usize);
        purger.purge_with(&word, sig, &mut PurgeScratch::default(), |a| {
            len += 1;
            value = value * k + a.index();
        });
        ws.from_value(len, value) as u32
    });
    table.extend(chunk);
}

fn check(
    side: Side,
    policy: &Policy,
    sig: &Signature,
    max_len: usize,
    exec: Exec,
    limit: usize,
) -> Result<Consistency, ConsistencyError> {
    let k = sig.num_actions();
    let (ws, overflow) = match WordSpace::new(k, max_len, limit) {
        Ok(ws) => (ws, None),
        Err(e) => {
            let feasible = (0..max_len)
                .rev()
                .find_map(|n| WordSpace::new(k, n, limit).ok())
                .expect("the empty word always fits");
            (feasible, Some(e))
        }
    };
    let compiled = CompiledPolicy::new(policy, sig);
    let users: Vec<UserId> = sig
        .users()
        .filter(|&u| !compiled.user(u).is_identity())
        .collect();
    let mut tables: Vec<Vec<u32>> = vec![Vec::new(); users.len()];
    for n in 0..=ws.max_len() {
        for (t, &u) in tables.iter_mut().zip(&users) {
            extend_table(&ws, sig, compiled.user(u), t, n, exec);
        }
        let fails = |idx: usize| -> Option<(usize, usize)> {
            let word = ws.word(idx);
            for split in 0..=n {
                let a = ws.index(&word[..split]);
                let b = ws.index(&word[split..]);
                for (ui, t) in tables.iter().enumerate() {
                    let whole = t[idx];
                    let other = match side {
                        Side::Left => t[ws.concat(t[a] as usize, b)],
                        Side::Right => t[ws.concat(a, t[b] as usize)],
                    };
                    if other != whole {
                        return Some((split, ui));
                    }
                }
            }
            None
        };
        if let Some(idx) = exec.find_first(ws.len_range(n), |i| fails(i).is_some()) {
            let (split, ui) = fails(idx).expect("found above");
            let word = ws.word(idx);
            log::debug!("{side:?}-consistency fails at length {n}");
            return Ok(Consistency {
                side,
                bound: max_len,
                holds: false,
                witness: Some(ConsistencyWitness {
                    user: users[ui],
                    alpha: word[..split].to_vec(),
                    alpha_post: word[split..].to_vec(),
                }),
            });
        }
    }
    if let Some(source) = overflow {
        return Err(ConsistencyError::TooLarge {
            searched: ws.max_len(),
            bound: max_len,
            source,
        });
    }
    Ok(Consistency {
        side,
        bound: max_len,
        holds: true,
        witness: None,
    })
}
