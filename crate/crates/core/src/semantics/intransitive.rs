//! Intransitive noninterference: interference relations, `ipurge`, and the
//! encoding of a relation as a post-conditional policy.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{ActionId, Signature, UserId};
use crate::policy::{Assertion, Channel, ChannelKind, Condition, PartSet, Policy, Token};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelationError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown user `{name}`")]
    UnknownUser { line: usize, name: String },
    #[error("relation is not reflexive at user `{0}`")]
    NotReflexive(String),
    #[error("relation has {found} users, signature has {expected}")]
    Size { found: usize, expected: usize },
    #[error("the encoding needs one partition block per user; `{0}` spans several")]
    NotPerUser(String),
}

/// A reflexive relation `⇝` over users.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InterferenceRelation {
    n: usize,
    pairs: Vec<bool>,
}

impl InterferenceRelation {
    /// The identity relation on `n` users.
    pub fn identity(n: usize) -> Self {
        let mut pairs = vec![false; n * n];
        for i in 0..n {
            pairs[i * n + i] = true;
        }
        InterferenceRelation { n, pairs }
    }

    pub fn total(n: usize) -> Self {
        InterferenceRelation {
            n,
            pairs: vec![true; n * n],
        }
    }

    /// Builds a relation from a row-major matrix, which must be reflexive.
    pub fn from_matrix(n: usize, pairs: Vec<bool>, sig: &Signature) -> Result<Self, RelationError> {
        if pairs.len() != n * n || n != sig.num_users() {
            return Err(RelationError::Size {
                found: n,
                expected: sig.num_users(),
            });
        }
        if let Some(u) = (0..n).find(|&i| !pairs[i * n + i]) {
            return Err(RelationError::NotReflexive(
                sig.user_name(UserId::from_index(u)).to_string(),
            ));
        }
        Ok(InterferenceRelation { n, pairs })
    }

    /// Parses `u -> v` lines (`#` comments); reflexive pairs are implied.
    pub fn parse(text: &str, sig: &Signature) -> Result<Self, RelationError> {
        let mut rel = InterferenceRelation::identity(sig.num_users());
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (l, r) = body.split_once("->").ok_or_else(|| RelationError::Syntax {
                line,
                message: format!("expected `user -> user`, found `{body}`"),
            })?;
            let lookup = |name: &str| {
                sig.user(name.trim())
                    .ok_or_else(|| RelationError::UnknownUser {
                        line,
                        name: name.trim().to_string(),
                    })
            };
            let r = r.trim().trim_end_matches(';');
            rel.insert(lookup(l)?, lookup(r)?);
        }
        Ok(rel)
    }

    pub fn num_users(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, u: UserId, v: UserId) {
        self.pairs[u.index() * self.n + v.index()] = true;
    }

    #[inline]
    pub fn contains(&self, u: UserId, v: UserId) -> bool {
        self.pairs[u.index() * self.n + v.index()]
    }

    /// Non-reflexive pairs in user order.
    pub fn pairs(&self) -> Vec<(UserId, UserId)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for v in 0..self.n {
                if u != v && self.pairs[u * self.n + v] {
                    out.push((UserId::from_index(u), UserId::from_index(v)));
                }
            }
        }
        out
    }

    pub fn to_text(&self, sig: &Signature) -> String {
        let mut out = String::new();
        for (u, v) in self.pairs() {
            let _ = writeln!(out, "{} -> {}", sig.user_name(u), sig.user_name(v));
        }
        out
    }
}

/// `ipurge(α, u)`: keeps `a_i` iff the rest of the trace carries an
/// interference chain from `dom(a_i)` to `u`.
pub fn ipurge(
    rel: &InterferenceRelation,
    sig: &Signature,
    alpha: &[ActionId],
    u: UserId,
) -> Vec<ActionId> {
    let n = rel.num_users();
    // reach[x]: the suffix processed so far holds a chain from x to u.
    let mut reach: Vec<bool> = (0..n)
        .map(|x| rel.contains(UserId::from_index(x), u))
        .collect();
    let mut kept = Vec::new();
    for &a in alpha.iter().rev() {
        let d = sig.dom(a);
        if reach[d.index()] {
            kept.push(a);
            for (x, r) in reach.iter_mut().enumerate() {
                if rel.contains(UserId::from_index(x), d) {
                    *r = true;
                }
            }
        }
    }
    kept.reverse();
    kept
}

/// Whether `alpha` has a subsequence `b_1…b_m` with
/// `from ⇝ dom(b_1) ⇝ … ⇝ dom(b_m) ⇝ to` (`m = 0` allowed). Plain search
/// over subsequences, kept independent of [`ipurge`].
pub fn contains_chain(
    rel: &InterferenceRelation,
    sig: &Signature,
    alpha: &[ActionId],
    from: UserId,
    to: UserId,
) -> bool {
    fn go(
        rel: &InterferenceRelation,
        sig: &Signature,
        alpha: &[ActionId],
        cur: UserId,
        to: UserId,
    ) -> bool {
        if rel.contains(cur, to) {
            return true;
        }
        alpha.iter().enumerate().any(|(i, &b)| {
            let d = sig.dom(b);
            rel.contains(cur, d) && d != cur && go(rel, sig, &alpha[i + 1..], d, to)
        })
    }
    go(rel, sig, alpha, from, to)
}

/// Repetition-free chains `v_1…v_n` over users other than `u` and `v` with
/// `u ⇝ v_1 ⇝ … ⇝ v_n ⇝ v`, restricted to users that own actions.
fn chains(rel: &InterferenceRelation, sig: &Signature, u: UserId, v: UserId) -> Vec<Vec<UserId>> {
    let active: Vec<bool> = sig
        .users()
        .map(|x| sig.user_actions(x).next().is_some())
        .collect();
    let mut out = Vec::new();
    let mut path = Vec::new();
    fn extend(
        rel: &InterferenceRelation,
        active: &[bool],
        u: UserId,
        v: UserId,
        cur: UserId,
        path: &mut Vec<UserId>,
        out: &mut Vec<Vec<UserId>>,
    ) {
        if rel.contains(cur, v) {
            out.push(path.clone());
        }
        for x in (0..rel.num_users()).map(UserId::from_index) {
            if x != u && x != v && active[x.index()] && !path.contains(&x) && rel.contains(cur, x) {
                path.push(x);
                extend(rel, active, u, v, x, path, out);
                path.pop();
            }
        }
    }
    extend(rel, &active, u, v, u, &mut path, &mut out);
    out
}

fn is_subsequence(short: &[UserId], long: &[UserId]) -> bool {
    let mut it = long.iter();
    short.iter().all(|x| it.any(|y| y == x))
}

/// Subsequence-minimal chains, sorted by length then user order.
fn condense(mut all: Vec<Vec<UserId>>) -> Vec<Vec<UserId>> {
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    all.dedup();
    let mut out: Vec<Vec<UserId>> = Vec::new();
    for c in all {
        if !out.iter().any(|m| is_subsequence(m, &c)) {
            out.push(c);
        }
    }
    out
}

/// Encodes `⇝` as a policy whose purge coincides with `ipurge`.
///
/// The signature must have one partition block per user (see
/// [`Signature::per_user_partitions`]). Pairs with no chain at all become
/// strict assertions; pairs whose minimal chains are all nonempty become a
/// post assertion with one `<>A_v1 … <>A_vn` channel per chain; pairs with a
/// direct edge need no assertion.
pub fn encode_intransitive(
    rel: &InterferenceRelation,
    sig: &Signature,
) -> Result<Policy, RelationError> {
    if rel.num_users() != sig.num_users() {
        return Err(RelationError::Size {
            found: rel.num_users(),
            expected: sig.num_users(),
        });
    }
    if let Some(u) = sig.users().find(|&u| !rel.contains(u, u)) {
        return Err(RelationError::NotReflexive(sig.user_name(u).to_string()));
    }
    let mut block_of: Vec<Option<_>> = vec![None; sig.num_users()];
    for p in sig.parts() {
        let d = sig.part_dom(p);
        if block_of[d.index()].replace(p).is_some() {
            return Err(RelationError::NotPerUser(sig.user_name(d).to_string()));
        }
    }
    let mut assertions = Vec::new();
    for u in sig.users() {
        let Some(pu) = block_of[u.index()] else {
            continue;
        };
        for v in sig.users().filter(|&v| v != u) {
            let cond = condense(chains(rel, sig, u, v));
            if cond.is_empty() {
                assertions.push(Assertion::strict(pu, v));
            } else if cond.iter().any(|c| c.is_empty()) {
                continue;
            } else {
                let channels = cond
                    .iter()
                    .map(|c| {
                        let tokens = c
                            .iter()
                            .map(|x| {
                                Token::GapSet(PartSet::from([
                                    block_of[x.index()].expect("chains use active users")
                                ]))
                            })
                            .collect();
                        Channel::new(ChannelKind::Post, tokens)
                            .expect("gap-set channels are valid post channels")
                    })
                    .collect();
                assertions
                    .push(Assertion::new(pu, v, Condition::Post(channels)).expect("post channels"));
            }
        }
    }
    Ok(Policy::new(sig, assertions).expect("one assertion per pair"))
}

/// `u ⇝ v` iff some action of `u` lies outside every block strictly denied
/// toward `v`. Conditional assertions do not block. Reflexive pairs are
/// always included.
pub fn induced_interference(policy: &Policy, sig: &Signature) -> InterferenceRelation {
    let mut rel = InterferenceRelation::identity(sig.num_users());
    for u in sig.users() {
        for v in sig.users() {
            let open = sig.user_actions(u).any(|a| {
                !matches!(policy.lookup(sig.part(a), v), Some(t) if t.condition == Condition::Strict)
            });
            if open {
                rel.insert(u, v);
            }
        }
    }
    rel
}
