//! Bounded brute-force checking by trace enumeration.
//!
//! Every word up to the bound is run on the machine once (states are
//! tabulated by extending the parent word); for each user the purged word is
//! computed and its state looked up in the same table.

mod differential;
mod random;

use thiserror::Error;

use crate::model::{Machine, StateId, UserId};
use crate::par::Exec;
use crate::policy::Policy;
use crate::semantics::{CompiledPolicy, PurgeScratch};
use crate::verdict::{Method, Verdict, Witness};
use crate::words::{WordSpace, WordSpaceError, DEFAULT_WORD_LIMIT};

pub use differential::{
    differential, differential_with, Differential, DifferentialOptions, MethodRun,
};
pub use random::{
    random_encoded_post_instance, random_instance, random_left_consistent_pre_instance,
    random_relation, Instance, Limits,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Words(#[from] WordSpaceError),
}

/// Reusable enumeration state for one machine, policy and bound.
pub struct Oracle<'a> {
    machine: &'a Machine,
    compiled: CompiledPolicy,
    ws: WordSpace,
    states: Vec<StateId>,
    exec: Exec,
}

impl<'a> Oracle<'a> {
    pub fn new(
        machine: &'a Machine,
        policy: &Policy,
        max_len: usize,
        exec: Exec,
        limit: usize,
    ) -> Result<Self, OracleError> {
        let sig = machine.signature();
        let ws = WordSpace::new(sig.num_actions(), max_len, limit)?;
        let mut states = Vec::with_capacity(ws.total());
        states.push(machine.initial());
        for n in 1..=max_len {
            let prev = &states;
            let layer = exec.map_range(ws.len_range(n), |idx| {
                let (p, a) = ws.split_last(idx).expect("nonempty word");
                machine.step(prev[p], a)
            });
            states.extend(layer);
        }
        Ok(Oracle {
            machine,
            compiled: CompiledPolicy::new(policy, sig),
            ws,
            states,
            exec,
        })
    }

    pub fn bound(&self) -> usize {
        self.ws.max_len()
    }

    fn violates(
        &self,
        idx: usize,
        u: UserId,
        word: &mut Vec<crate::model::ActionId>,
        scratch: &mut PurgeScratch,
    ) -> bool {
        let m = self.machine;
        let sig = m.signature();
        let k = self.ws.num_actions();
        self.ws.decode_into(idx, word);
        let (mut len, mut value) = (0usize, 0usize);
        self.compiled.user(u).purge_with(word, sig, scratch, |a| {
            len += 1;
            value = value * k + a.index();
        });
        let purged = self.states[self.ws.from_value(len, value)];
        m.obs(u, self.states[idx]) != m.obs(u, purged)
    }

    /// Least violation over `users` in the order (length, word, user).
    pub fn first_violation(&self, users: &[UserId]) -> Option<Witness> {
        let users: Vec<UserId> = users
            .iter()
            .copied()
            .filter(|&u| !self.compiled.user(u).is_identity())
            .collect();
        if users.is_empty() {
            return None;
        }
        for n in 0..=self.ws.max_len() {
            let hit = self.exec.find_first_with(
                self.ws.len_range(n),
                || (Vec::new(), PurgeScratch::default()),
                |(word, scratch), idx| users.iter().any(|&u| self.violates(idx, u, word, scratch)),
            );
            if let Some(idx) = hit {
                let mut word = Vec::new();
                let mut scratch = PurgeScratch::default();
                let user = *users
                    .iter()
                    .find(|&&u| self.violates(idx, u, &mut word, &mut scratch))
                    .expect("violation found above");
                return Some(Witness {
                    user,
                    trace: self.ws.word(idx),
                });
            }
        }
        None
    }

    pub fn check(&self, users: &[UserId]) -> Verdict {
        let v = match self.first_violation(users) {
            Some(w) => Verdict::insecure(Method::Oracle, w),
            None => Verdict::secure(Method::Oracle).with_note(format!(
                "no violation among traces up to length {}",
                self.bound()
            )),
        };
        v.with_bound(self.bound())
    }
}

/// Checks every user on every trace of length at most `max_len`.
pub fn oracle_check(m: &Machine, policy: &Policy, max_len: usize) -> Result<Verdict, OracleError> {
    oracle_check_with(m, policy, max_len, Exec::default(), DEFAULT_WORD_LIMIT)
}

pub fn oracle_check_with(
    m: &Machine,
    policy: &Policy,
    max_len: usize,
    exec: Exec,
    limit: usize,
) -> Result<Verdict, OracleError> {
    let users: Vec<UserId> = m.signature().users().collect();
    Ok(Oracle::new(m, policy, max_len, exec, limit)?.check(&users))
}

/// Same as [`oracle_check`] restricted to one user.
pub fn oracle_check_user(
    m: &Machine,
    policy: &Policy,
    u: UserId,
    max_len: usize,
) -> Result<Verdict, OracleError> {
    Ok(Oracle::new(m, policy, max_len, Exec::default(), DEFAULT_WORD_LIMIT)?.check(&[u]))
}
