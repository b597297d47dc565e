use crate::automata::{channel_to_dfa, condition_dfa, Dfa};
use crate::model::{ActionId, Signature, UserId};
use crate::policy::{ChannelKind, Condition, Policy};

#[derive(Debug, Clone)]
enum Rule {
    Always,
    /// Index into the pre automata, run along the history.
    Pre(usize),
    /// Automaton for `[[chs]]·A*`, run along the future.
    Post(Dfa),
}

/// Purge decisions for one user, driven by automata.
#[derive(Debug, Clone)]
pub struct UserPurger {
    by_part: Vec<Option<Rule>>,
    pre: Vec<Dfa>,
}

/// Reusable buffers for [`UserPurger::purge_with`].
#[derive(Debug, Clone, Default)]
pub struct PurgeScratch {
    states: Vec<u32>,
}

impl UserPurger {
    fn new(policy: &Policy, sig: &Signature, u: UserId) -> Self {
        let mut by_part = vec![None; sig.num_parts()];
        let mut pre = Vec::new();
        for t in policy.toward(u) {
            let rule = match &t.condition {
                Condition::Strict => Rule::Always,
                Condition::Post(chs) => Rule::Post(
                    channel_to_dfa(chs, ChannelKind::Post, sig)
                        .expect("post assertions hold post channels"),
                ),
                _ => {
                    pre.push(condition_dfa(t, sig).expect("pre condition"));
                    Rule::Pre(pre.len() - 1)
                }
            };
            by_part[t.controlled.index()] = Some(rule);
        }
        UserPurger { by_part, pre }
    }

    /// No assertion targets the user, so purging is the identity.
    pub fn is_identity(&self) -> bool {
        self.by_part.iter().all(Option::is_none)
    }

    /// Calls `keep` with every action that survives purging, in order.
    pub fn purge_with(
        &self,
        word: &[ActionId],
        sig: &Signature,
        scratch: &mut PurgeScratch,
        mut keep: impl FnMut(ActionId),
    ) {
        scratch.states.clear();
        scratch.states.extend(self.pre.iter().map(Dfa::initial));
        for (i, &a) in word.iter().enumerate() {
            let removed = match &self.by_part[sig.part(a).index()] {
                None => false,
                Some(Rule::Always) => true,
                Some(Rule::Pre(k)) => self.pre[*k].is_final(scratch.states[*k]),
                Some(Rule::Post(d)) => {
                    // The language is closed under extension, so the first
                    // accepting prefix settles it.
                    let mut q = d.initial();
                    let mut hit = d.is_final(q);
                    for &b in &word[i + 1..] {
                        if hit {
                            break;
                        }
                        q = d.next(q, b);
                        hit = d.is_final(q);
                    }
                    !hit
                }
            };
            if !removed {
                keep(a);
            }
            for (q, d) in scratch.states.iter_mut().zip(&self.pre) {
                *q = d.next(*q, a);
            }
        }
    }

    pub fn purge(&self, word: &[ActionId], sig: &Signature) -> Vec<ActionId> {
        let mut out = Vec::with_capacity(word.len());
        self.purge_with(word, sig, &mut PurgeScratch::default(), |a| out.push(a));
        out
    }
}

/// A policy with every condition compiled, one purger per user.
#[derive(Debug, Clone)]
pub struct CompiledPolicy {
    users: Vec<UserPurger>,
}

impl CompiledPolicy {
    pub fn new(policy: &Policy, sig: &Signature) -> Self {
        CompiledPolicy {
            users: sig
                .users()
                .map(|u| UserPurger::new(policy, sig, u))
                .collect(),
        }
    }

    pub fn user(&self, u: UserId) -> &UserPurger {
        &self.users[u.index()]
    }

    pub fn purge(&self, word: &[ActionId], sig: &Signature, u: UserId) -> Vec<ActionId> {
        self.user(u).purge(word, sig)
    }
}
